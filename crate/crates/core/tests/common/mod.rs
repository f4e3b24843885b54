//! Random instances and independent reference computations shared by the
//! integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use fairalloc::{Demand, Path, Problem, Resource, Volume};
use microlp::{ComparisonOp, OptimizationDirection, Variable};
use rand::seq::index::sample;
use rand::Rng;

#[derive(Debug, Clone, Copy)]
pub struct Shape {
    pub max_demands: usize,
    pub max_edges: usize,
    pub max_paths: usize,
    pub weights: bool,
    pub volumes: bool,
}

/// Random instance with unit utility and consumption. Capacities, volumes
/// and weights are continuous so exact ties are unlikely.
pub fn random_problem<R: Rng>(rng: &mut R, shape: Shape) -> Problem {
    let m = rng.gen_range(1..=shape.max_edges);
    let n = rng.gen_range(2..=shape.max_demands);
    let resources: Vec<Resource> = (0..m)
        .map(|e| Resource { id: format!("e{e}"), capacity: rng.gen_range(1.0..10.0) })
        .collect();
    let mut paths = Vec::new();
    let mut demands = Vec::new();
    for k in 0..n {
        let count = rng.gen_range(1..=shape.max_paths);
        let mut ids = Vec::new();
        for p in 0..count {
            let len = rng.gen_range(1..=m.min(3));
            let id = format!("p{k}.{p}");
            paths.push(Path {
                id: id.clone(),
                resources: sample(rng, m, len).into_iter().map(|e| format!("e{e}")).collect(),
            });
            ids.push(id);
        }
        let volume = if shape.volumes && rng.gen_bool(0.5) {
            Volume::Bounded(rng.gen_range(0.5..8.0))
        } else {
            Volume::Unbounded
        };
        let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
        let weight = if shape.weights { rng.gen_range(0.5..3.0) } else { 1.0 };
        demands.push(Demand::new(format!("d{k}"), volume, &refs).with_weight(weight));
    }
    Problem { resources, paths, demands }
}

/// Feasible-allocation LP built directly with microlp: one variable per
/// (demand, path), a total per demand, volume and capacity rows.
pub struct RefLp {
    pub lp: microlp::Problem,
    pub flows: Vec<(usize, String, Variable)>,
    pub totals: Vec<Variable>,
}

impl RefLp {
    /// `bounds[k]` bounds demand k's ratio; `ratio_obj[k]` weights it in the
    /// objective (maximized).
    pub fn new(problem: &Problem, bounds: &[(f64, f64)], ratio_obj: &[f64]) -> Self {
        let mut lp = microlp::Problem::new(OptimizationDirection::Maximize);
        let mut flows = Vec::new();
        let mut totals = Vec::new();
        let mut load: BTreeMap<&str, Vec<(Variable, f64)>> = BTreeMap::new();
        for (k, d) in problem.demands.iter().enumerate() {
            let t = lp.add_var(ratio_obj[k] / d.weight, (d.weight * bounds[k].0, d.weight * bounds[k].1));
            let mut row = vec![(t, -1.0)];
            let mut vol = Vec::new();
            for pid in &d.paths {
                let f = lp.add_var(0.0, (0.0, f64::INFINITY));
                row.push((f, d.utility_of(pid)));
                vol.push((f, 1.0));
                let path = problem.paths.iter().find(|p| &p.id == pid).unwrap();
                for e in &path.resources {
                    load.entry(e.as_str()).or_default().push((f, d.consumption_of(e)));
                }
                flows.push((k, pid.clone(), f));
            }
            lp.add_constraint(row.as_slice(), ComparisonOp::Eq, 0.0);
            if let Volume::Bounded(v) = d.volume {
                lp.add_constraint(vol.as_slice(), ComparisonOp::Le, v);
            }
            totals.push(t);
        }
        for r in &problem.resources {
            if let Some(row) = load.get(r.id.as_str()) {
                lp.add_constraint(row.as_slice(), ComparisonOp::Le, r.capacity);
            }
        }
        RefLp { lp, flows, totals }
    }
}

/// Outcome of replaying the SWAN stage sequence with an independent solver.
pub struct SwanReplay {
    pub ratios: Vec<f64>,
    pub stages: usize,
    /// Largest spread of any demand's ratio over a stage's optimal face.
    pub max_spread: f64,
}

/// Replays the stage sequence: stage `b` maximizes the sum of ratios with
/// unfrozen demands in `[previous, U α^(b-1)]` and frozen ones pinned. After
/// each stage, the per-demand range over the optimal face is measured; the
/// stage's own optimum is carried forward.
pub fn swan_replay(problem: &Problem, u: f64, alpha: f64, max_stages: usize) -> SwanReplay {
    let n = problem.demands.len();
    let mut prev = vec![0.0; n];
    let mut frozen = vec![false; n];
    let mut max_spread: f64 = 0.0;
    let mut stages = 0;
    while stages < max_stages && frozen.iter().any(|f| !f) {
        stages += 1;
        let cap = u * alpha.powi(stages as i32 - 1);
        let bounds: Vec<(f64, f64)> =
            (0..n).map(|k| if frozen[k] { (prev[k], prev[k]) } else { (prev[k], cap) }).collect();
        let ones = vec![1.0; n];
        let base = RefLp::new(problem, &bounds, &ones);
        let sol = base.lp.solve().expect("stage LP");
        let opt = sol.objective();
        let next: Vec<f64> = (0..n).map(|k| sol[base.totals[k]] / problem.demands[k].weight).collect();
        for k in (0..n).filter(|&k| !frozen[k]) {
            let mut range = [0.0; 2];
            for (i, dir) in [1.0, -1.0].into_iter().enumerate() {
                let mut obj = vec![0.0; n];
                obj[k] = dir;
                let mut r = RefLp::new(problem, &bounds, &obj);
                let row: Vec<(Variable, f64)> = r
                    .totals
                    .iter()
                    .zip(&problem.demands)
                    .map(|(&t, d)| (t, 1.0 / d.weight))
                    .collect();
                r.lp.add_constraint(row.as_slice(), ComparisonOp::Ge, opt - 1e-9 * (1.0 + opt));
                let sol = r.lp.solve().expect("range LP");
                range[i] = sol[r.totals[k]] / problem.demands[k].weight;
            }
            max_spread = max_spread.max(range[0] - range[1]);
        }
        for k in 0..n {
            if !frozen[k] && next[k] < cap - 1e-8 * cap {
                frozen[k] = true;
            }
        }
        prev = next;
    }
    SwanReplay { ratios: prev, stages, max_spread }
}

/// Progressive filling on single-path demands: every unfrozen demand's rate
/// grows by `step · w` per round; a link that cannot take another round
/// freezes all its demands.
pub fn progressive_filling(capacity: &[f64], demands: &[(f64, Vec<usize>)], step: f64) -> Vec<f64> {
    let mut rate = vec![0.0; demands.len()];
    let mut frozen: Vec<bool> = demands.iter().map(|(w, _)| *w <= 0.0).collect();
    let mut load = vec![0.0; capacity.len()];
    while frozen.iter().any(|f| !f) {
        let mut extra = vec![0.0; capacity.len()];
        for (k, (w, links)) in demands.iter().enumerate() {
            if !frozen[k] {
                for &e in links {
                    extra[e] += step * w;
                }
            }
        }
        let full: Vec<bool> = (0..capacity.len()).map(|e| load[e] + extra[e] > capacity[e]).collect();
        let mut moved = false;
        for (k, (w, links)) in demands.iter().enumerate() {
            if frozen[k] {
                continue;
            }
            if links.iter().any(|&e| full[e]) {
                frozen[k] = true;
            } else {
                rate[k] += step * w;
                for &e in links {
                    load[e] += step * w;
                }
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
    rate
}
