use crate::model::{Problem, ProblemIndex, Volume};

use super::{LinearProgram, Relation, VarId};

/// The shared feasibility fragment every optimization allocator starts from.
#[derive(Debug, Clone)]
pub struct FeasibleAllocLp {
    pub lp: LinearProgram,
    /// One variable per (demand, path) flow, in [`ProblemIndex::flows`] order.
    pub flow_vars: Vec<VarId>,
    /// One total-allocation variable `f_k = sum_p q_k^p f_k^p` per demand.
    pub total_vars: Vec<VarId>,
}

impl FeasibleAllocLp {
    /// Flow-indexed rates read back from a solution vector.
    pub fn flow_values(&self, values: &[f64]) -> Vec<f64> {
        self.flow_vars.iter().map(|v| values[v.0].max(0.0)).collect()
    }
}

/// Builds rate variables, helper totals, volume rows for bounded demands and
/// one capacity row per resource. Nonnegativity is expressed as bounds. No
/// objective is set.
pub fn build_feasible_alloc(name: &str, problem: &Problem, index: &ProblemIndex) -> FeasibleAllocLp {
    let mut lp = LinearProgram::new(name);
    let flow_vars: Vec<VarId> = index
        .flows
        .iter()
        .map(|fl| {
            lp.add_var(
                format!(
                    "f[{},{}]",
                    problem.demands[fl.demand].id, problem.paths[fl.path].id
                ),
                0.0,
                f64::INFINITY,
            )
        })
        .collect();
    let total_vars: Vec<VarId> = problem
        .demands
        .iter()
        .map(|d| lp.add_var(format!("f[{}]", d.id), 0.0, f64::INFINITY))
        .collect();

    for (k, d) in problem.demands.iter().enumerate() {
        let terms = index.demand_flows[k]
            .iter()
            .map(|&fi| (flow_vars[fi], -d.utility_of(&problem.paths[index.flows[fi].path].id)))
            .chain([(total_vars[k], 1.0)]);
        lp.add_constraint(format!("total[{}]", d.id), terms, Relation::Eq, 0.0);
    }
    for (k, d) in problem.demands.iter().enumerate() {
        if let Volume::Bounded(v) = d.volume {
            let terms = index.demand_flows[k].iter().map(|&fi| (flow_vars[fi], 1.0));
            lp.add_constraint(format!("volume[{}]", d.id), terms, Relation::Le, v);
        }
    }
    let mut rows: Vec<Vec<(VarId, f64)>> = vec![Vec::new(); problem.resources.len()];
    for (fi, fl) in index.flows.iter().enumerate() {
        let d = &problem.demands[fl.demand];
        for &e in &index.path_resources[fl.path] {
            rows[e].push((flow_vars[fi], d.consumption_of(&problem.resources[e].id)));
        }
    }
    for (e, terms) in rows.into_iter().enumerate() {
        let r = &problem.resources[e];
        lp.add_constraint(format!("capacity[{}]", r.id), terms, Relation::Le, r.capacity);
    }
    FeasibleAllocLp {
        lp,
        flow_vars,
        total_vars,
    }
}
