//! Combinatorial allocators: single-path waterfilling, its one-pass
//! approximation and the adaptive multi-path waterfiller.

mod bottleneck;
mod filling;
mod subdemand;

use serde::{Deserialize, Serialize};

pub use bottleneck::{is_bandwidth_bottlenecked, BottleneckVerdict, Witness};
pub use filling::{approx_waterfill, single_path_waterfill};
pub use subdemand::{build_subdemands, Subdemand, SubdemandMatrix, ThetaState};

use crate::error::{Error, Result};
use crate::model::{Problem, ProblemIndex};
use crate::report::{AllocatorReport, ThetaTrace};

/// Largest multiplier change at which the adaptive waterfiller stops.
pub const THETA_TOLERANCE: f64 = 1e-6;

/// Which waterfiller runs inside each adaptive iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InnerWaterfill {
    Exact,
    Approx,
}

impl InnerWaterfill {
    pub fn run(self, gamma: &SubdemandMatrix, capacities: &[f64]) -> Result<Vec<f64>> {
        match self {
            InnerWaterfill::Exact => single_path_waterfill(gamma, capacities),
            InnerWaterfill::Approx => approx_waterfill(gamma, capacities),
        }
    }
}

/// Subdemand rates for fixed multipliers, in problem flow order.
pub fn waterfill_with_theta(
    problem: &Problem,
    index: &ProblemIndex,
    theta: &ThetaState,
    inner: InnerWaterfill,
) -> Result<Vec<f64>> {
    let (gamma, caps) = subdemand::build_with_index(problem, index, theta)?;
    inner.run(&gamma, &caps)
}

/// One waterfilling pass with every demand split evenly over its paths.
pub fn waterfill_once(problem: &Problem, inner: InnerWaterfill) -> Result<AllocatorReport> {
    let index = problem.index()?;
    let rates = waterfill_with_theta(problem, &index, &ThetaState::uniform(&index), inner)?;
    let name = match inner {
        InnerWaterfill::Exact => "waterfill",
        InnerWaterfill::Approx => "approx-waterfill",
    };
    let mut report = AllocatorReport::from_flows(name, problem, &index, &rates);
    report.iterations = 1;
    report.config = serde_json::json!({ "allocator": name });
    Ok(report)
}

/// Adaptive waterfiller: reweights each demand's paths by the share of its
/// rate they carried in the previous round until no weight moves by more
/// than [`THETA_TOLERANCE`] or `max_iterations` rounds have run.
pub fn adaptive_waterfill(problem: &Problem, max_iterations: usize, inner: InnerWaterfill) -> Result<AllocatorReport> {
    adaptive_waterfill_until(problem, max_iterations, inner, THETA_TOLERANCE)
}

/// [`adaptive_waterfill`] with its own stopping threshold on `max |Δθ|`.
pub fn adaptive_waterfill_until(
    problem: &Problem,
    max_iterations: usize,
    inner: InnerWaterfill,
    theta_tolerance: f64,
) -> Result<AllocatorReport> {
    if !(theta_tolerance >= 0.0 && theta_tolerance.is_finite()) {
        return Err(Error::Config(format!("theta tolerance must be non-negative, got {theta_tolerance}")));
    }
    let index = problem.index()?;
    let mut theta = ThetaState::uniform(&index);
    let mut trace = ThetaTrace {
        subdemands: index
            .flows
            .iter()
            .map(|fl| {
                (
                    problem.demands[fl.demand].id.clone(),
                    problem.paths[fl.path].id.clone(),
                )
            })
            .collect(),
        theta: Vec::new(),
        rates: Vec::new(),
    };
    let mut rates = vec![0.0; index.flows.len()];
    let mut converged = false;
    for _ in 0..max_iterations.max(1) {
        rates = waterfill_with_theta(problem, &index, &theta, inner)?;
        trace.theta.push(theta.theta.clone());
        trace.rates.push(rates.clone());
        let next = ThetaState::from_rates(&index, &rates, &theta);
        let change = next
            .theta
            .iter()
            .zip(&theta.theta)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        theta = next;
        if change <= theta_tolerance {
            converged = true;
            break;
        }
    }
    let mut report = AllocatorReport::from_flows("adaptive-waterfill", problem, &index, &rates);
    report.iterations = trace.rates.len();
    report.converged = Some(converged);
    report.config = serde_json::json!({
        "allocator": "adaptive-waterfill",
        "iterations": max_iterations,
        "inner": inner,
        "theta_tolerance": theta_tolerance,
    });
    report.theta_trace = Some(trace);
    Ok(report)
}
