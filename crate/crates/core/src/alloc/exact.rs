use serde_json::json;

use crate::error::{Error, Result};
use crate::lp::{build_feasible_alloc, FeasibleAllocLp, Relation, SolveSession, VarId};
use crate::model::{Problem, ProblemIndex};
use crate::report::AllocatorReport;

/// Absolute slack a probe may exceed the level by and still count as frozen.
const FREEZE_TOL: f64 = 1e-7;

/// Weighted max-min fair allocation by a sequence of LPs.
///
/// Each round maximizes the common level `t` that every unfrozen demand's
/// ratio `f_k / w_k` must reach, with frozen demands pinned at their level.
/// A demand is then frozen when a probe LP, maximizing its own ratio with
/// every other unfrozen demand held at `t`, cannot push it above `t`.
/// Demands visibly above `t` in any solution seen during the round are not
/// probed.
pub fn exact_sequential_max_min(problem: &Problem, session: &SolveSession) -> Result<AllocatorReport> {
    let index = problem.index()?;
    let start = session.solve_count();
    let n = problem.demands.len();
    let mut frozen: Vec<Option<f64>> = vec![None; n];
    let mut rounds = 0;
    let mut flows;
    loop {
        rounds += 1;
        let (fa, t_var) = level_lp(problem, &index, &frozen, None, rounds);
        let sol = session.solve_optimal(&fa.lp)?;
        let t = sol.value(t_var);
        let tol = FREEZE_TOL * t.max(1.0);
        flows = fa.flow_values(&sol.values);

        let ratio = |values: &[f64], k: usize| values[fa.total_vars[k].0] / problem.demands[k].weight;
        let mut grows: Vec<bool> = (0..n)
            .map(|k| frozen[k].is_none() && ratio(&sol.values, k) > t + tol)
            .collect();
        let mut newly = Vec::new();
        for k in 0..n {
            if frozen[k].is_some() || grows[k] {
                continue;
            }
            let (pfa, _) = level_lp(problem, &index, &frozen, Some((k, t)), rounds);
            let ps = session.solve_optimal(&pfa.lp)?;
            for (j, g) in grows.iter_mut().enumerate() {
                if frozen[j].is_none() && ps.values[pfa.total_vars[j].0] / problem.demands[j].weight > t + tol {
                    *g = true;
                }
            }
            if !grows[k] {
                newly.push(k);
            }
        }
        if newly.is_empty() {
            return Err(Error::Config(format!(
                "exact sequential round {rounds} froze no demand at level {t}"
            )));
        }
        for k in newly {
            frozen[k] = Some(t);
        }
        if frozen.iter().all(Option::is_some) {
            break;
        }
    }

    let mut report = AllocatorReport::from_flows("exact", problem, &index, &flows);
    report.lp_solves = session.solve_count() - start;
    report.iterations = rounds;
    report.config = json!({ "freeze_tol": FREEZE_TOL });
    Ok(report)
}

/// Round LP. Without `probe` it maximizes the level variable; with
/// `probe = Some((k, t))` the level is fixed at `t` and demand `k`'s ratio
/// is maximized instead.
fn level_lp(
    problem: &Problem,
    index: &ProblemIndex,
    frozen: &[Option<f64>],
    probe: Option<(usize, f64)>,
    round: usize,
) -> (FeasibleAllocLp, VarId) {
    let name = match probe {
        None => format!("exact-round{round}"),
        Some((k, _)) => format!("exact-round{round}-probe-{}", problem.demands[k].id),
    };
    let mut fa = build_feasible_alloc(&name, problem, index);
    let t_var = fa.lp.add_var("t", 0.0, f64::INFINITY);
    for (k, d) in problem.demands.iter().enumerate() {
        let total = fa.total_vars[k];
        match (frozen[k], probe) {
            (Some(level), _) => {
                let pin = 1e-10 * level.max(1.0);
                fa.lp.set_bounds(total, d.weight * (level - pin).max(0.0), d.weight * level);
            }
            (None, None) => {
                fa.lp.add_constraint(
                    format!("level[{}]", d.id),
                    [(total, 1.0), (t_var, -d.weight)],
                    Relation::Ge,
                    0.0,
                );
            }
            (None, Some((_, t))) => {
                let floor = (t - 1e-10 * t.max(1.0)).max(0.0);
                fa.lp.set_bounds(total, d.weight * floor, f64::INFINITY);
            }
        }
    }
    match probe {
        None => fa.lp.set_objective([(t_var, 1.0)]),
        Some((k, _)) => {
            fa.lp.set_bounds(t_var, 0.0, 0.0);
            fa.lp.set_objective([(fa.total_vars[k], 1.0 / problem.demands[k].weight)]);
        }
    }
    (fa, t_var)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{worked_example, Demand, Path, Resource, Volume};

    fn one_link(cap: f64, weights: &[f64]) -> Problem {
        Problem {
            resources: vec![Resource { id: "e".into(), capacity: cap }],
            paths: vec![Path { id: "p".into(), resources: vec!["e".into()] }],
            demands: weights
                .iter()
                .enumerate()
                .map(|(i, &w)| Demand::new(format!("d{i}"), Volume::Unbounded, &["p"]).with_weight(w))
                .collect(),
        }
    }

    #[test]
    fn symmetric_split() {
        let r = exact_sequential_max_min(&one_link(10.0, &[1.0, 1.0]), &SolveSession::default()).unwrap();
        assert!((r.totals["d0"] - 5.0).abs() < 1e-9);
        assert!((r.totals["d1"] - 5.0).abs() < 1e-9);
    }

    #[test]
    fn weighted_split() {
        let r = exact_sequential_max_min(&one_link(9.0, &[2.0, 1.0]), &SolveSession::default()).unwrap();
        assert!((r.totals["d0"] - 6.0).abs() < 1e-9);
        assert!((r.totals["d1"] - 3.0).abs() < 1e-9);
    }

    #[test]
    fn worked_example_limit() {
        let r = exact_sequential_max_min(&worked_example(), &SolveSession::default()).unwrap();
        assert!((r.totals["d1"] - 0.75).abs() < 1e-9);
        assert!((r.totals["d2"] - 0.75).abs() < 1e-9);
        assert_eq!(r.lp_solves, 1 + 2);
    }

    #[test]
    fn volume_caps_freeze_early() {
        let mut p = one_link(10.0, &[1.0, 1.0]);
        p.demands[0].volume = Volume::Bounded(2.0);
        let r = exact_sequential_max_min(&p, &SolveSession::default()).unwrap();
        assert!((r.totals["d0"] - 2.0).abs() < 1e-9);
        assert!((r.totals["d1"] - 8.0).abs() < 1e-9);
        assert_eq!(r.iterations, 2);
    }
}
