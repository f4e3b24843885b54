//! Optimization-based allocators and a JSON-configurable registry over every
//! allocator in the crate.

mod binner;
mod equi;
mod exact;
mod oneshot;
mod sorting;
mod swan;

use serde::{Deserialize, Serialize};

pub use binner::{
    equi_depth_multibin, geo_binner, prefix_violations, repair_bins, BinConfig, PrefixViolation,
    DEFAULT_BIN_EPSILON,
};
pub use equi::{
    compute_equi_boundaries, equi_depth_elastic, equi_depth_multibin_auto, merge_degenerate, EquiDepthConfig,
    EquiPartition, Slack, DEFAULT_AW_ITERATIONS, DEFAULT_EQUI_BINS, DEFAULT_EQUI_EPSILON,
};
pub use exact::exact_sequential_max_min;
pub use oneshot::{default_one_shot_epsilon, one_shot_exact};
pub use sorting::{build_sorting_network, SortingNetwork};
pub use swan::{approx_sequence_bins, swan_sequence, SequenceConfig};

use crate::error::{Error, Result};
use crate::lp::SolveSession;
use crate::model::Problem;
use crate::report::AllocatorReport;
use crate::waterfill::{adaptive_waterfill_until, waterfill_once, InnerWaterfill, THETA_TOLERANCE};

/// Smallest objective weight any ε-weighted LP may use.
pub const PRECISION_FLOOR: f64 = 1e-12;

pub const DEFAULT_ALPHA: f64 = 2.0;

/// Allocator choice plus optional parameters. Missing parameters take the
/// documented defaults; the effective values are echoed in the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "allocator", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AllocatorConfig {
    Exact,
    Oneshot {
        #[serde(default)]
        epsilon: Option<f64>,
    },
    Swan {
        #[serde(default)]
        u: Option<f64>,
        #[serde(default)]
        alpha: Option<f64>,
        #[serde(default)]
        max_iterations: Option<usize>,
    },
    ApproxBins {
        #[serde(default)]
        u: Option<f64>,
        #[serde(default)]
        alpha: Option<f64>,
        #[serde(default)]
        max_iterations: Option<usize>,
    },
    Gb {
        #[serde(default)]
        u: Option<f64>,
        #[serde(default)]
        alpha: Option<f64>,
        #[serde(default)]
        bins: Option<usize>,
        #[serde(default)]
        epsilon: Option<f64>,
    },
    EbElastic {
        #[serde(default)]
        bins: Option<usize>,
        #[serde(default)]
        epsilon: Option<f64>,
        #[serde(default)]
        slack: Option<f64>,
        #[serde(default)]
        iterations: Option<usize>,
        #[serde(default)]
        inner: Option<InnerWaterfill>,
    },
    EbMultibin {
        #[serde(default)]
        bins: Option<usize>,
        #[serde(default)]
        epsilon: Option<f64>,
        #[serde(default)]
        iterations: Option<usize>,
        #[serde(default)]
        inner: Option<InnerWaterfill>,
    },
    Waterfill,
    ApproxWaterfill,
    AdaptiveWaterfill {
        #[serde(default)]
        iterations: Option<usize>,
        #[serde(default)]
        inner: Option<InnerWaterfill>,
        #[serde(default)]
        theta_tolerance: Option<f64>,
    },
}

impl AllocatorConfig {
    pub const NAMES: [&'static str; 10] = [
        "exact",
        "oneshot",
        "swan",
        "approx-bins",
        "gb",
        "eb-elastic",
        "eb-multibin",
        "waterfill",
        "approx-waterfill",
        "adaptive-waterfill",
    ];

    /// Configuration with every parameter defaulted.
    pub fn from_name(name: &str) -> Result<Self> {
        serde_json::from_value(serde_json::json!({ "allocator": name })).map_err(|_| {
            Error::Config(format!(
                "unknown allocator `{name}`; expected one of {}",
                Self::NAMES.join(", ")
            ))
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|source| Error::Json {
            context: "allocator config".into(),
            source,
        })?;
        Self::from_value(value)
    }

    /// Parses a JSON object. Keys the chosen allocator does not take are
    /// rejected, including on parameterless allocators.
    pub fn from_value(value: serde_json::Value) -> Result<Self> {
        let cfg: Self = serde_json::from_value(value.clone()).map_err(|e| Error::Config(e.to_string()))?;
        let known = serde_json::to_value(&cfg).expect("config serializes");
        if let (Some(given), Some(known)) = (value.as_object(), known.as_object()) {
            if let Some(key) = given.keys().find(|k| !known.contains_key(*k)) {
                return Err(Error::Config(format!("`{key}` does not apply to allocator `{}`", cfg.name())));
            }
        }
        Ok(cfg)
    }

    pub fn name(&self) -> &'static str {
        match self {
            AllocatorConfig::Exact => "exact",
            AllocatorConfig::Oneshot { .. } => "oneshot",
            AllocatorConfig::Swan { .. } => "swan",
            AllocatorConfig::ApproxBins { .. } => "approx-bins",
            AllocatorConfig::Gb { .. } => "gb",
            AllocatorConfig::EbElastic { .. } => "eb-elastic",
            AllocatorConfig::EbMultibin { .. } => "eb-multibin",
            AllocatorConfig::Waterfill => "waterfill",
            AllocatorConfig::ApproxWaterfill => "approx-waterfill",
            AllocatorConfig::AdaptiveWaterfill { .. } => "adaptive-waterfill",
        }
    }

    pub fn run(&self, problem: &Problem, session: &SolveSession) -> Result<AllocatorReport> {
        match self {
            AllocatorConfig::Exact => exact_sequential_max_min(problem, session),
            AllocatorConfig::Oneshot { epsilon } => one_shot_exact(problem, *epsilon, session),
            AllocatorConfig::Swan { u, alpha, max_iterations } => {
                swan_sequence(problem, sequence_config(problem, *u, *alpha, *max_iterations)?, session)
            }
            AllocatorConfig::ApproxBins { u, alpha, max_iterations } => {
                approx_sequence_bins(problem, sequence_config(problem, *u, *alpha, *max_iterations)?, session)
            }
            AllocatorConfig::Gb { u, alpha, bins, epsilon } => {
                let cfg = BinConfig::for_problem(problem, alpha.unwrap_or(DEFAULT_ALPHA), *u, *bins, *epsilon)?;
                geo_binner(problem, &cfg, session)
            }
            AllocatorConfig::EbElastic { bins, epsilon, slack, iterations, inner } => {
                let cfg = equi_config(problem, *bins, *epsilon, *slack, *iterations, *inner);
                equi_depth_elastic(problem, &cfg, session)
            }
            AllocatorConfig::EbMultibin { bins, epsilon, iterations, inner } => {
                let cfg = equi_config(problem, *bins, *epsilon, None, *iterations, *inner);
                equi_depth_multibin_auto(problem, &cfg, session)
            }
            AllocatorConfig::Waterfill => waterfill_once(problem, InnerWaterfill::Exact),
            AllocatorConfig::ApproxWaterfill => waterfill_once(problem, InnerWaterfill::Approx),
            AllocatorConfig::AdaptiveWaterfill { iterations, inner, theta_tolerance } => adaptive_waterfill_until(
                problem,
                iterations.unwrap_or(DEFAULT_AW_ITERATIONS),
                inner.unwrap_or(InnerWaterfill::Approx),
                theta_tolerance.unwrap_or(THETA_TOLERANCE),
            ),
        }
    }
}

/// SWAN parameters; a missing `U` matches the geometric binner's default so
/// the two are comparable out of the box.
fn sequence_config(
    problem: &Problem,
    u: Option<f64>,
    alpha: Option<f64>,
    max_iterations: Option<usize>,
) -> Result<SequenceConfig> {
    let alpha = alpha.unwrap_or(DEFAULT_ALPHA);
    let u = match u {
        Some(u) => u,
        None => BinConfig::for_problem(problem, alpha, None, None, None)?.u,
    };
    Ok(SequenceConfig { u, alpha, max_iterations })
}

fn equi_config(
    problem: &Problem,
    bins: Option<usize>,
    epsilon: Option<f64>,
    slack: Option<f64>,
    iterations: Option<usize>,
    inner: Option<InnerWaterfill>,
) -> EquiDepthConfig {
    let base = EquiDepthConfig::for_problem(problem);
    EquiDepthConfig {
        num_bins: bins.unwrap_or(base.num_bins),
        epsilon: epsilon.unwrap_or(base.epsilon),
        slack: slack.map_or(base.slack, Slack::Uniform),
        aw_iterations: iterations.unwrap_or(base.aw_iterations),
        inner: inner.unwrap_or(base.inner),
    }
}
