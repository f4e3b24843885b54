use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::lp::{build_feasible_alloc, Relation, SolveSession};
use crate::model::Problem;
use crate::report::{AllocatorReport, BinBreakdown};

use super::PRECISION_FLOOR;

/// Geometric bin layout: bin 1 is `[0, U]`, bin `b` ends at `U α^(b-1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinConfig {
    pub u: f64,
    pub alpha: f64,
    pub num_bins: usize,
    pub epsilon: f64,
}

/// Default objective weight ratio between consecutive bins.
pub const DEFAULT_BIN_EPSILON: f64 = 1e-6;

impl BinConfig {
    /// Checks every invariant except coverage, which needs a problem.
    pub fn new(u: f64, alpha: f64, num_bins: usize, epsilon: f64) -> Result<Self> {
        let cfg = BinConfig { u, alpha, num_bins, epsilon };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Fills in missing parameters for `problem`.
    ///
    /// With `u` given, the bin count is the smallest that covers the largest
    /// reachable ratio. With only `num_bins`, `U` is chosen so the last bin
    /// ends exactly at that ratio. With neither, `U` is
    /// [`Problem::fair_ratio_lower_bound`] and the bins cover the range from
    /// there. A missing epsilon is the smallest the guard allows, but never
    /// below [`DEFAULT_BIN_EPSILON`].
    pub fn for_problem(
        problem: &Problem,
        alpha: f64,
        u: Option<f64>,
        num_bins: Option<usize>,
        epsilon: Option<f64>,
    ) -> Result<Self> {
        let index = problem.index()?;
        let top = problem.max_ratio_bound(&index);
        if !(alpha > 1.0 && alpha.is_finite()) {
            return Err(Error::Config(format!("alpha must exceed 1, got {alpha}")));
        }
        if !(top > 0.0 && top.is_finite()) {
            return Err(Error::Config(format!("no demand can receive a positive rate (bound {top})")));
        }
        let (u, num_bins) = match (u, num_bins) {
            (Some(u), Some(n)) => (u, n),
            (Some(u), None) => (u, bins_to_cover(top, u, alpha)),
            (None, Some(n)) => (top / alpha.powi(n as i32 - 1), n),
            (None, None) => {
                let lower = problem.fair_ratio_lower_bound(&index);
                if lower > 0.0 && lower < top {
                    (lower, bins_to_cover(top, lower, alpha))
                } else {
                    let n = max_bins(epsilon.unwrap_or(DEFAULT_BIN_EPSILON));
                    (top / alpha.powi(n as i32 - 1), n)
                }
            }
        };
        let epsilon = epsilon.unwrap_or_else(|| default_epsilon(num_bins));
        BinConfig::new(u, alpha, num_bins, epsilon)
    }

    fn validate(&self) -> Result<()> {
        if !(self.u > 0.0 && self.u.is_finite()) {
            return Err(Error::Config(format!("U must be positive, got {}", self.u)));
        }
        if !(self.alpha > 1.0 && self.alpha.is_finite()) {
            return Err(Error::Config(format!("alpha must exceed 1, got {}", self.alpha)));
        }
        if self.num_bins == 0 {
            return Err(Error::Config("at least one bin is required".into()));
        }
        check_epsilon(self.epsilon, self.num_bins)
    }

    /// Bin widths.
    pub fn caps(&self) -> Vec<f64> {
        (1..=self.num_bins)
            .map(|b| match b {
                1 => self.u,
                _ => self.u * (self.alpha.powi(b as i32 - 1) - self.alpha.powi(b as i32 - 2)),
            })
            .collect()
    }

    /// Upper end of the last bin.
    pub fn top(&self) -> f64 {
        self.u * self.alpha.powi(self.num_bins as i32 - 1)
    }
}

fn bins_to_cover(top: f64, u: f64, alpha: f64) -> usize {
    if top <= u {
        return 1;
    }
    ((top / u).ln() / alpha.ln() - 1e-9).ceil() as usize + 1
}

/// `DEFAULT_BIN_EPSILON`, raised just enough for `bins` to pass the guard.
fn default_epsilon(bins: usize) -> f64 {
    if bins <= 1 {
        return DEFAULT_BIN_EPSILON;
    }
    let smallest = PRECISION_FLOOR.powf(1.0 / (bins - 1) as f64);
    DEFAULT_BIN_EPSILON.max(smallest)
}

/// Largest bin count whose smallest weight `ε^(N-1)` stays above the floor.
fn max_bins(epsilon: f64) -> usize {
    (PRECISION_FLOOR.ln() / epsilon.ln() + 1e-9).floor() as usize + 1
}

pub(crate) fn check_epsilon(epsilon: f64, bins: usize) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Config(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    let smallest = epsilon.powi(bins as i32 - 1);
    if smallest < PRECISION_FLOOR * (1.0 - 1e-9) {
        return Err(Error::Config(format!(
            "epsilon^{} = {smallest:e} is below {PRECISION_FLOOR:e}; use fewer bins, a larger alpha or a larger epsilon",
            bins - 1
        )));
    }
    Ok(())
}

/// Geometric binner: one LP over per-bin ratio variables, bin `b` weighted
/// by `ε^(b-1)`.
pub fn geo_binner(problem: &Problem, cfg: &BinConfig, session: &SolveSession) -> Result<AllocatorReport> {
    cfg.validate()?;
    let index = problem.index()?;
    let top = problem.max_ratio_bound(&index);
    if cfg.top() < top * (1.0 - 1e-9) {
        return Err(Error::Config(format!(
            "bins end at {} but a demand can reach ratio {top}; raise U, alpha or the bin count",
            cfg.top()
        )));
    }
    let mut report = solve_bins(problem, "gb", &cfg.caps(), cfg.epsilon, session)?;
    report.config = json!(cfg);
    Ok(report)
}

/// Multi-bin LP with caps taken from explicit boundaries `ℓ_1 < ℓ_2 < ...`.
/// Demands cannot exceed the last boundary.
pub fn equi_depth_multibin(
    problem: &Problem,
    boundaries: &[f64],
    epsilon: f64,
    session: &SolveSession,
) -> Result<AllocatorReport> {
    if boundaries.is_empty() {
        return Err(Error::Config("at least one bin boundary is required".into()));
    }
    if !(boundaries[0] > 0.0) || boundaries.iter().any(|b| !b.is_finite()) {
        return Err(Error::Config(format!("boundaries must be positive and finite: {boundaries:?}")));
    }
    if let Some(w) = boundaries.windows(2).find(|w| w[1] <= w[0]) {
        return Err(Error::Config(format!(
            "boundaries must be strictly increasing; found {} then {}",
            w[0], w[1]
        )));
    }
    check_epsilon(epsilon, boundaries.len())?;
    let caps: Vec<f64> = boundaries
        .iter()
        .enumerate()
        .map(|(i, &b)| if i == 0 { b } else { b - boundaries[i - 1] })
        .collect();
    let mut report = solve_bins(problem, "eb-multibin", &caps, epsilon, session)?;
    report.config = json!({ "boundaries": boundaries, "epsilon": epsilon });
    Ok(report)
}

fn solve_bins(
    problem: &Problem,
    name: &str,
    caps: &[f64],
    epsilon: f64,
    session: &SolveSession,
) -> Result<AllocatorReport> {
    let index = problem.index()?;
    let start = session.solve_count();
    let mut fa = build_feasible_alloc(name, problem, &index);
    let mut vars = Vec::with_capacity(problem.demands.len());
    for (k, d) in problem.demands.iter().enumerate() {
        let mut terms = vec![(fa.total_vars[k], 1.0 / d.weight)];
        let mut mine = Vec::with_capacity(caps.len());
        let mut weight = 1.0;
        for (b, &cap) in caps.iter().enumerate() {
            let x = fa.lp.add_var(format!("x[{},{}]", d.id, b + 1), 0.0, cap);
            fa.lp.add_objective_term(x, weight);
            terms.push((x, -1.0));
            mine.push(x);
            weight *= epsilon;
        }
        fa.lp.add_constraint(format!("bins[{}]", d.id), terms, Relation::Eq, 0.0);
        vars.push(mine);
    }
    let sol = session.solve_optimal(&fa.lp)?;

    let mut per_demand = BTreeMap::new();
    let mut repaired = 0;
    for (d, mine) in problem.demands.iter().zip(&vars) {
        let raw: Vec<f64> = mine.iter().map(|&x| sol.value(x).max(0.0)).collect();
        let (bins, changed) = repair_bins(&raw, caps);
        repaired += changed as usize;
        per_demand.insert(d.id.clone(), bins);
    }
    let mut report = AllocatorReport::from_flows(name, problem, &index, &fa.flow_values(&sol.values));
    report.lp_solves = session.solve_count() - start;
    report.iterations = 1;
    report.objective = Some(sol.objective);
    report.bins = Some(BinBreakdown {
        caps: caps.to_vec(),
        per_demand,
        repaired,
    });
    Ok(report)
}

/// Refills a demand's bins lowest-first from their total. The total and
/// therefore the allocation are unchanged; returns whether any bin moved.
pub fn repair_bins(bins: &[f64], caps: &[f64]) -> (Vec<f64>, bool) {
    let mut left: f64 = bins.iter().sum();
    let mut out = Vec::with_capacity(bins.len());
    for (i, &cap) in caps.iter().enumerate() {
        let v = if i + 1 == caps.len() { left.max(0.0) } else { left.clamp(0.0, cap) };
        out.push(v);
        left -= v;
    }
    let changed = out.iter().zip(bins).any(|(a, b)| (a - b).abs() > 1e-12 * a.abs().max(1.0));
    (out, changed)
}

/// One bin-prefix violation: demand `demand` has `value` in bin `bin` while
/// an earlier bin `short` is below its cap.
#[derive(Debug, Clone, PartialEq)]
pub struct PrefixViolation {
    pub demand: String,
    pub bin: usize,
    pub value: f64,
    pub short: usize,
    pub shortfall: f64,
}

/// Every demand with more than `tol` in a bin must have all earlier bins
/// within `tol` of their caps.
pub fn prefix_violations(breakdown: &BinBreakdown, tol: f64) -> Vec<PrefixViolation> {
    let mut out = Vec::new();
    for (id, bins) in &breakdown.per_demand {
        for (b, &v) in bins.iter().enumerate() {
            if v <= tol {
                continue;
            }
            for j in 0..b {
                let shortfall = breakdown.caps[j] - bins[j];
                if shortfall > tol {
                    out.push(PrefixViolation {
                        demand: id.clone(),
                        bin: b + 1,
                        value: v,
                        short: j + 1,
                        shortfall,
                    });
                }
            }
        }
    }
    out
}
