use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::lp::{build_feasible_alloc, Relation, SolveSession};
use crate::model::Problem;
use crate::report::AllocatorReport;
use crate::waterfill::{adaptive_waterfill, InnerWaterfill};

use super::binner::{check_epsilon, equi_depth_multibin};

/// Demands grouped by estimated rate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquiPartition {
    /// `ℓ_b`: largest estimated rate in group `b`.
    pub boundaries: Vec<f64>,
    pub groups: Vec<Vec<String>>,
}

/// Sorts demands by `(rate, id)` and cuts them into contiguous groups of
/// `ceil(n / num_bins)`; the last group may be smaller, so fewer than
/// `num_bins` groups can come out.
pub fn compute_equi_boundaries(rates: &BTreeMap<String, f64>, num_bins: usize) -> Result<EquiPartition> {
    if rates.is_empty() {
        return Err(Error::Config("no demand rates to partition".into()));
    }
    if num_bins == 0 || num_bins > rates.len() {
        return Err(Error::Config(format!(
            "bin count {num_bins} must lie in 1..={}",
            rates.len()
        )));
    }
    let mut order: Vec<(&String, f64)> = rates.iter().map(|(k, &v)| (k, v)).collect();
    order.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(b.0)));
    let size = rates.len().div_ceil(num_bins);
    let mut boundaries = Vec::new();
    let mut groups = Vec::new();
    for chunk in order.chunks(size) {
        boundaries.push(chunk.last().map(|c| c.1).unwrap_or(0.0));
        groups.push(chunk.iter().map(|c| c.0.clone()).collect());
    }
    Ok(EquiPartition { boundaries, groups })
}

/// Drops boundaries that are not strictly above their predecessor by a
/// relative `1e-9`, and any nonpositive leading boundaries.
pub fn merge_degenerate(boundaries: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::with_capacity(boundaries.len());
    for &b in boundaries {
        let floor = out.last().copied().unwrap_or(0.0);
        if b > floor + 1e-9 * b.abs().max(1e-300) {
            out.push(b);
        }
    }
    out
}

/// Per-group slack on the upper side of the elastic bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Slack {
    /// 5% of each group's estimated-rate span, at least `1e-6` of the
    /// largest capacity.
    Default,
    Uniform(f64),
    PerBin(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquiDepthConfig {
    pub num_bins: usize,
    pub epsilon: f64,
    pub slack: Slack,
    pub aw_iterations: usize,
    pub inner: InnerWaterfill,
}

/// Default number of demand groups, capped by the demand count.
pub const DEFAULT_EQUI_BINS: usize = 8;
pub const DEFAULT_EQUI_EPSILON: f64 = 0.1;
pub const DEFAULT_AW_ITERATIONS: usize = 10;

impl EquiDepthConfig {
    pub fn for_problem(problem: &Problem) -> Self {
        EquiDepthConfig {
            num_bins: DEFAULT_EQUI_BINS.min(problem.demands.len()).max(1),
            epsilon: DEFAULT_EQUI_EPSILON,
            slack: Slack::Default,
            aw_iterations: DEFAULT_AW_ITERATIONS,
            inner: InnerWaterfill::Approx,
        }
    }

    fn slacks(&self, problem: &Problem, partition: &EquiPartition, rates: &BTreeMap<String, f64>) -> Result<Vec<f64>> {
        let g = partition.groups.len();
        let s = match &self.slack {
            Slack::Default => {
                let floor = 1e-6 * problem.max_capacity();
                partition
                    .groups
                    .iter()
                    .map(|grp| {
                        let (lo, hi) = grp.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), id| {
                            (lo.min(rates[id]), hi.max(rates[id]))
                        });
                        (0.05 * (hi - lo)).max(floor)
                    })
                    .collect()
            }
            Slack::Uniform(s) => vec![*s; g],
            Slack::PerBin(v) => {
                if v.len() < g {
                    return Err(Error::Config(format!("{} slack values for {g} bins", v.len())));
                }
                v[..g].to_vec()
            }
        };
        if let Some(bad) = s.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
            return Err(Error::Config(format!("slack must be nonnegative, got {bad}")));
        }
        Ok(s)
    }
}

fn aw_ratios(problem: &Problem, cfg: &EquiDepthConfig) -> Result<BTreeMap<String, f64>> {
    let aw = adaptive_waterfill(problem, cfg.aw_iterations, cfg.inner)?;
    Ok(aw.ratios(problem))
}

/// Equi-depth binner with elastic boundaries.
///
/// Adaptive waterfilling orders the demands; each of the resulting groups
/// gets one bin whose boundary `ℓ_b` is an LP variable. A demand in group
/// `b` must stay within `[ℓ_(b-1), ℓ_b + s_b]` in ratio units, and group `b`
/// is weighted by `ε^(b-1)`.
pub fn equi_depth_elastic(problem: &Problem, cfg: &EquiDepthConfig, session: &SolveSession) -> Result<AllocatorReport> {
    let index = problem.index()?;
    check_epsilon(cfg.epsilon, cfg.num_bins)?;
    let rates = aw_ratios(problem, cfg)?;
    let partition = compute_equi_boundaries(&rates, cfg.num_bins)?;
    let slack = cfg.slacks(problem, &partition, &rates)?;
    let position: BTreeMap<&str, usize> = problem
        .demands
        .iter()
        .enumerate()
        .map(|(k, d)| (d.id.as_str(), k))
        .collect();

    let start = session.solve_count();
    let mut fa = build_feasible_alloc("eb-elastic", problem, &index);
    let g = partition.groups.len();
    let ells: Vec<_> = (0..g)
        .map(|b| fa.lp.add_var(format!("l[{}]", b + 1), 0.0, f64::INFINITY))
        .collect();
    let mut weight = 1.0;
    for (b, group) in partition.groups.iter().enumerate() {
        for id in group {
            let k = position[id.as_str()];
            let d = &problem.demands[k];
            let total = fa.total_vars[k];
            // f_k / w_k <= l_b + s_b, written as f_k - w_k l_b <= w_k s_b
            if b + 1 < g {
                fa.lp.add_constraint(
                    format!("upper[{id}]"),
                    [(total, 1.0), (ells[b], -d.weight)],
                    Relation::Le,
                    d.weight * slack[b],
                );
            }
            if b > 0 {
                fa.lp.add_constraint(
                    format!("lower[{id}]"),
                    [(total, 1.0), (ells[b - 1], -d.weight)],
                    Relation::Ge,
                    0.0,
                );
            }
            fa.lp.add_objective_term(total, weight / d.weight);
        }
        weight *= cfg.epsilon;
    }
    let sol = session.solve_optimal(&fa.lp)?;

    let mut report = AllocatorReport::from_flows("eb-elastic", problem, &index, &fa.flow_values(&sol.values));
    report.lp_solves = session.solve_count() - start;
    report.iterations = 1;
    report.objective = Some(sol.objective);
    report.config = json!({
        "num_bins": cfg.num_bins,
        "epsilon": cfg.epsilon,
        "slack": slack,
        "aw_iterations": cfg.aw_iterations,
        "inner": cfg.inner,
        "groups": partition.groups,
        "estimated_boundaries": partition.boundaries,
        "boundaries": ells.iter().map(|&l| sol.value(l)).collect::<Vec<_>>(),
    });
    Ok(report)
}

/// Equi-depth binner with fixed boundaries from adaptive waterfilling.
///
/// Boundaries are the groups' largest estimated rates after degenerate
/// merging; if the largest reachable ratio lies above the last one it is
/// appended as a final boundary so no demand is capped below its reach.
pub fn equi_depth_multibin_auto(problem: &Problem, cfg: &EquiDepthConfig, session: &SolveSession) -> Result<AllocatorReport> {
    let index = problem.index()?;
    let rates = aw_ratios(problem, cfg)?;
    let partition = compute_equi_boundaries(&rates, cfg.num_bins)?;
    let mut boundaries = merge_degenerate(&partition.boundaries);
    let top = problem.max_ratio_bound(&index);
    if boundaries.last().is_none_or(|&b| top > b * (1.0 + 1e-9)) {
        boundaries.push(top);
    }
    if boundaries.is_empty() {
        return Err(Error::Config("no demand can receive a positive rate".into()));
    }
    let mut report = equi_depth_multibin(problem, &boundaries, cfg.epsilon, session)?;
    report.allocator = "eb-multibin".into();
    report.config = json!({
        "num_bins": cfg.num_bins,
        "epsilon": cfg.epsilon,
        "aw_iterations": cfg.aw_iterations,
        "inner": cfg.inner,
        "boundaries": boundaries,
    });
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Demand, Path, Resource, Volume};

    fn rates(v: &[(&str, f64)]) -> BTreeMap<String, f64> {
        v.iter().map(|&(k, r)| (k.to_string(), r)).collect()
    }

    #[test]
    fn four_demands_two_bins() {
        let p = compute_equi_boundaries(&rates(&[("a", 1.0), ("b", 2.0), ("c", 3.0), ("d", 4.0)]), 2).unwrap();
        assert_eq!(p.groups, vec![vec!["a", "b"], vec!["c", "d"]]);
        assert_eq!(p.boundaries, vec![2.0, 4.0]);
    }

    #[test]
    fn equal_rates_merge() {
        let p = compute_equi_boundaries(&rates(&[("a", 1.0), ("b", 1.0), ("c", 1.0)]), 3).unwrap();
        assert_eq!(p.boundaries, vec![1.0, 1.0, 1.0]);
        assert_eq!(merge_degenerate(&p.boundaries), vec![1.0]);
        assert_eq!(merge_degenerate(&[0.0, 2.0, 2.0, 3.0]), vec![2.0, 3.0]);
    }

    #[test]
    fn six_by_three_and_errors() {
        let r = rates(&[("a", 6.0), ("b", 5.0), ("c", 4.0), ("d", 3.0), ("e", 2.0), ("f", 1.0)]);
        let p = compute_equi_boundaries(&r, 3).unwrap();
        assert!(p.groups.iter().all(|g| g.len() == 2));
        assert_eq!(p.groups[0], vec!["f", "e"]);
        assert!(compute_equi_boundaries(&BTreeMap::new(), 1).is_err());
        assert!(compute_equi_boundaries(&r, 7).is_err());
    }

    fn one_link(cap: f64, n: usize) -> Problem {
        Problem {
            resources: vec![Resource { id: "e".into(), capacity: cap }],
            paths: vec![Path { id: "p".into(), resources: vec!["e".into()] }],
            demands: (0..n)
                .map(|i| Demand::new(format!("d{i}"), Volume::Unbounded, &["p"]))
                .collect(),
        }
    }

    #[test]
    fn symmetric_link() {
        let p = one_link(10.0, 2);
        let cfg = EquiDepthConfig::for_problem(&p);
        let r = equi_depth_elastic(&p, &cfg, &SolveSession::default()).unwrap();
        // The default slack lets the first group overshoot by at most 1e-5.
        assert!((r.totals["d0"] - 5.0).abs() < 1e-5, "{:?}", r.totals);
        assert!((r.totals["d1"] - 5.0).abs() < 1e-5);
        assert_eq!(r.lp_solves, 1);
    }

    #[test]
    fn single_bin_maximizes_total() {
        let p = one_link(10.0, 3);
        let cfg = EquiDepthConfig { num_bins: 1, ..EquiDepthConfig::for_problem(&p) };
        let r = equi_depth_elastic(&p, &cfg, &SolveSession::default()).unwrap();
        assert!((r.totals.values().sum::<f64>() - 10.0).abs() < 1e-9);
    }
}
