use serde_json::json;

use crate::error::{Error, Result};
use crate::lp::{build_feasible_alloc, Relation, SolveSession, VarId};
use crate::model::Problem;
use crate::report::AllocatorReport;

use super::sorting::build_sorting_network;
use super::PRECISION_FLOOR;

/// Default ε for `n` demands: the largest power keeping `ε^(n-1)` at the
/// precision floor, between 1e-6 and 0.1.
pub fn default_one_shot_epsilon(n: usize) -> f64 {
    if n <= 1 {
        return 0.1;
    }
    PRECISION_FLOOR.powf(1.0 / (n - 1) as f64).clamp(1e-6, 0.1)
}

/// Max-min fairness in a single LP.
///
/// The demand ratios `f_k / w_k` are routed through a sorting network whose
/// comparators are relaxed to `lo <= x`, `lo <= y`, `hi = x + y - lo`. The
/// sorted outputs `t_1 <= ... <= t_n` are weighted by `ε^(i-1)`, which pushes
/// every `lo` to the true minimum at the optimum.
pub fn one_shot_exact(problem: &Problem, epsilon: Option<f64>, session: &SolveSession) -> Result<AllocatorReport> {
    let index = problem.index()?;
    let n = problem.demands.len();
    let eps = epsilon.unwrap_or_else(|| default_one_shot_epsilon(n));
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Config(format!("one-shot epsilon must lie in (0, 1), got {eps}")));
    }
    if n > 1 && eps.powi(n as i32 - 1) < PRECISION_FLOOR * (1.0 - 1e-9) {
        return Err(Error::Config(format!(
            "one-shot weights underflow: epsilon^{} = {:e} < {PRECISION_FLOOR:e}; use the geometric binner for {n} demands",
            n - 1,
            eps.powi(n as i32 - 1)
        )));
    }
    let start = session.solve_count();
    let mut fa = build_feasible_alloc("one-shot", problem, &index);
    let mut wires: Vec<VarId> = Vec::with_capacity(n);
    for (k, d) in problem.demands.iter().enumerate() {
        let r = fa.lp.add_var(format!("ratio[{}]", d.id), 0.0, f64::INFINITY);
        fa.lp.add_constraint(
            format!("ratio[{}]", d.id),
            [(r, d.weight), (fa.total_vars[k], -1.0)],
            Relation::Eq,
            0.0,
        );
        wires.push(r);
    }
    let network = build_sorting_network(n);
    let mut comparators = Vec::with_capacity(network.comparators.len());
    for (c, &(i, j)) in network.comparators.iter().enumerate() {
        let (x, y) = (wires[i], wires[j]);
        let lo = fa.lp.add_var(format!("lo{c}"), 0.0, f64::INFINITY);
        let hi = fa.lp.add_var(format!("hi{c}"), 0.0, f64::INFINITY);
        fa.lp.add_constraint(format!("lo{c}<=x"), [(lo, 1.0), (x, -1.0)], Relation::Le, 0.0);
        fa.lp.add_constraint(format!("lo{c}<=y"), [(lo, 1.0), (y, -1.0)], Relation::Le, 0.0);
        fa.lp.add_constraint(
            format!("hi{c}"),
            [(hi, 1.0), (x, -1.0), (y, -1.0), (lo, 1.0)],
            Relation::Eq,
            0.0,
        );
        comparators.push((x, y, lo));
        wires[i] = lo;
        wires[j] = hi;
    }
    let mut weight = 1.0;
    for &w in &wires {
        fa.lp.add_objective_term(w, weight);
        weight *= eps;
    }
    let sol = session.solve_optimal(&fa.lp)?;

    let sorted: Vec<f64> = wires.iter().map(|&w| sol.value(w)).collect();
    let scale = sorted.iter().fold(1.0_f64, |a, &b| a.max(b.abs()));
    let unsorted = sorted.windows(2).map(|w| w[0] - w[1]).fold(0.0_f64, f64::max);
    let loose = comparators
        .iter()
        .map(|&(x, y, lo)| sol.value(x).min(sol.value(y)) - sol.value(lo))
        .fold(0.0_f64, f64::max);

    let mut report = AllocatorReport::from_flows("oneshot", problem, &index, &fa.flow_values(&sol.values));
    report.lp_solves = session.solve_count() - start;
    report.iterations = 1;
    report.objective = Some(sol.objective);
    report.config = json!({ "epsilon": eps, "comparators": network.comparators.len() });
    if unsorted > 1e-7 * scale || loose > 1e-7 * scale {
        report.notes.push(format!(
            "relaxed network not tight: order violation {unsorted:e}, comparator gap {loose:e}"
        ));
    }
    Ok(report)
}
