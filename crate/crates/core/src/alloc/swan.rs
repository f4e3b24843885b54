use std::collections::BTreeMap;

use serde_json::json;

use crate::error::{Error, Result};
use crate::lp::{build_feasible_alloc, Relation, SolveSession};
use crate::model::Problem;
use crate::report::{AllocatorReport, BinBreakdown};

/// Parameters shared by the two LP sequences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequenceConfig {
    /// Cap of the first iteration, in ratio units.
    pub u: f64,
    pub alpha: f64,
    /// Stops after this many iterations even if demands are still growing.
    pub max_iterations: Option<usize>,
}

impl SequenceConfig {
    pub fn new(u: f64, alpha: f64) -> Self {
        SequenceConfig { u, alpha, max_iterations: None }
    }

    fn validate(&self) -> Result<()> {
        if !(self.u > 0.0 && self.u.is_finite()) {
            return Err(Error::Config(format!("U must be positive, got {}", self.u)));
        }
        if !(self.alpha > 1.0 && self.alpha.is_finite()) {
            return Err(Error::Config(format!("alpha must exceed 1, got {}", self.alpha)));
        }
        if self.max_iterations == Some(0) {
            return Err(Error::Config("max_iterations must be positive".into()));
        }
        Ok(())
    }

    fn cap(&self, b: usize) -> f64 {
        self.u * self.alpha.powi(b as i32 - 1)
    }

    /// Iterations needed before the cap exceeds every reachable ratio.
    fn natural_limit(&self, bound: f64) -> usize {
        let mut b = 1;
        while self.cap(b) < bound * (1.0 + 1e-12) {
            b += 1;
        }
        b + 1
    }

    fn json(&self) -> serde_json::Value {
        json!({ "u": self.u, "alpha": self.alpha, "max_iterations": self.max_iterations })
    }
}

fn freeze_tol(cap: f64) -> f64 {
    1e-8 * cap.max(1e-300)
}

/// Geometric sequence of LPs with growing per-demand caps.
///
/// Iteration `b` maximizes the sum of ratios with every unfrozen demand
/// capped at `U α^(b-1)` and kept at or above its previous ratio. A demand
/// that ends an iteration below its cap is frozen at that ratio for the rest
/// of the run.
pub fn swan_sequence(problem: &Problem, cfg: SequenceConfig, session: &SolveSession) -> Result<AllocatorReport> {
    cfg.validate()?;
    let index = problem.index()?;
    let start = session.solve_count();
    let n = problem.demands.len();
    let limit = cfg
        .max_iterations
        .unwrap_or_else(|| cfg.natural_limit(problem.max_ratio_bound(&index)));
    let mut prev = vec![0.0_f64; n];
    let mut frozen = vec![false; n];
    let mut flows = vec![0.0; index.flows.len()];
    let mut b = 0;
    while b < limit && frozen.iter().any(|f| !f) {
        b += 1;
        let cap = cfg.cap(b);
        let mut fa = build_feasible_alloc(&format!("swan-{b}"), problem, &index);
        for (k, d) in problem.demands.iter().enumerate() {
            let total = fa.total_vars[k];
            let floor = d.weight * (prev[k] - 1e-10 * prev[k].max(1.0)).max(0.0);
            let ceiling = if frozen[k] { prev[k] } else { cap };
            fa.lp.set_bounds(total, floor, d.weight * ceiling);
            fa.lp.add_objective_term(total, 1.0 / d.weight);
        }
        let sol = session.solve_optimal(&fa.lp)?;
        for (k, d) in problem.demands.iter().enumerate() {
            let ratio = sol.value(fa.total_vars[k]) / d.weight;
            if !frozen[k] {
                prev[k] = ratio;
                if ratio < cap - freeze_tol(cap) {
                    frozen[k] = true;
                }
            }
        }
        flows = fa.flow_values(&sol.values);
    }

    let mut report = AllocatorReport::from_flows("swan", problem, &index, &flows);
    report.lp_solves = session.solve_count() - start;
    report.iterations = b;
    report.converged = Some(frozen.iter().all(|&f| f));
    report.config = cfg.json();
    Ok(report)
}

/// The same sequence written over per-bin variables: bin 1 has width `U`,
/// bin `b > 1` has width `U (α^(b-1) - α^(b-2))`. Bins from earlier
/// iterations are fixed, and a demand may only fill bin `b` if its earlier
/// bins are full.
pub fn approx_sequence_bins(problem: &Problem, cfg: SequenceConfig, session: &SolveSession) -> Result<AllocatorReport> {
    cfg.validate()?;
    let index = problem.index()?;
    let start = session.solve_count();
    let n = problem.demands.len();
    let limit = cfg
        .max_iterations
        .unwrap_or_else(|| cfg.natural_limit(problem.max_ratio_bound(&index)));
    let mut bins: Vec<Vec<f64>> = vec![Vec::new(); n];
    let mut caps: Vec<f64> = Vec::new();
    let mut frozen = vec![false; n];
    let mut flows = vec![0.0; index.flows.len()];
    let mut b = 0;
    while b < limit && frozen.iter().any(|f| !f) {
        b += 1;
        let width = if b == 1 { cfg.u } else { cfg.cap(b) - cfg.cap(b - 1) };
        caps.push(width);
        let mut fa = build_feasible_alloc(&format!("approx-bins-{b}"), problem, &index);
        let mut current = Vec::with_capacity(n);
        for (k, d) in problem.demands.iter().enumerate() {
            let mut terms = vec![(fa.total_vars[k], 1.0 / d.weight)];
            for (j, &v) in bins[k].iter().enumerate() {
                let x = fa.lp.add_var(format!("x[{},{}]", d.id, j + 1), v, v);
                terms.push((x, -1.0));
            }
            let open = !frozen[k];
            let x = fa.lp.add_var(format!("x[{},{b}]", d.id), 0.0, if open { width } else { 0.0 });
            terms.push((x, -1.0));
            fa.lp.add_constraint(format!("bins[{}]", d.id), terms, Relation::Eq, 0.0);
            fa.lp.add_objective_term(x, 1.0);
            current.push(x);
        }
        let sol = session.solve_optimal(&fa.lp)?;
        for k in 0..n {
            let v = sol.value(current[k]).clamp(0.0, width);
            if !frozen[k] && v < width - freeze_tol(cfg.cap(b)) {
                frozen[k] = true;
            }
            bins[k].push(v);
        }
        flows = fa.flow_values(&sol.values);
    }

    let mut report = AllocatorReport::from_flows("approx-bins", problem, &index, &flows);
    report.lp_solves = session.solve_count() - start;
    report.iterations = b;
    report.converged = Some(frozen.iter().all(|&f| f));
    report.config = cfg.json();
    report.bins = Some(BinBreakdown {
        caps,
        per_demand: problem
            .demands
            .iter()
            .zip(bins)
            .map(|(d, v)| (d.id.clone(), v))
            .collect::<BTreeMap<_, _>>(),
        repaired: 0,
    });
    Ok(report)
}
