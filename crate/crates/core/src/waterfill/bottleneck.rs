use serde::Serialize;

use crate::error::Result;
use crate::model::{demand_totals, Allocation, Problem, Volume};

/// A subdemand that has no saturated link on which its demand is at least as
/// well off as every other demand sharing the link.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub demand: String,
    pub path: String,
    /// First saturated link on the path, if any.
    pub link: Option<String>,
    /// A demand on `link` with a larger ratio.
    pub other: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BottleneckVerdict {
    pub bottlenecked: bool,
    pub witness: Option<Witness>,
}

/// Checks that every nonzero subdemand crosses a saturated link where its
/// demand's ratio `f_k / w_k` is within `tol` of the largest ratio among the
/// demands with a nonzero subdemand on that link.
///
/// A link counts as saturated when its load is within `max(tol, 1e-6 c_e)`
/// of capacity. A bounded demand whose volume is used up is saturated on its
/// own virtual edge.
pub fn is_bandwidth_bottlenecked(problem: &Problem, alloc: &Allocation, tol: f64) -> Result<BottleneckVerdict> {
    let index = problem.index()?;
    let flows = alloc.to_flows(problem, &index)?;
    let totals = demand_totals(problem, &index, &flows);
    let ratio: Vec<f64> = totals
        .iter()
        .zip(&problem.demands)
        .map(|(t, d)| t / d.weight)
        .collect();

    let mut load = vec![0.0; problem.resources.len()];
    let mut users: Vec<Vec<usize>> = vec![Vec::new(); problem.resources.len()];
    let mut sent = vec![0.0; problem.demands.len()];
    for (fi, fl) in index.flows.iter().enumerate() {
        let rate = flows[fi];
        sent[fl.demand] += rate;
        let d = &problem.demands[fl.demand];
        for &e in &index.path_resources[fl.path] {
            load[e] += d.consumption_of(&problem.resources[e].id) * rate;
            if rate > tol && !users[e].contains(&fl.demand) {
                users[e].push(fl.demand);
            }
        }
    }
    let saturated = |e: usize| {
        let c = problem.resources[e].capacity;
        load[e] >= c - tol.max(1e-6 * c)
    };

    // A path is acceptable for demand k when it crosses a saturated link on
    // which no sharing demand has a larger ratio.
    let check = |k: usize, path: usize| -> (bool, Option<(usize, usize)>) {
        let mut first = None;
        for &e in index.path_resources[path].iter().filter(|&&e| saturated(e)) {
            match users[e].iter().find(|&&j| ratio[j] > ratio[k] + tol) {
                None => return (true, None),
                Some(&j) => {
                    first.get_or_insert((e, j));
                }
            }
        }
        (false, first)
    };
    let fail = |k: usize, path: usize, first: Option<(usize, usize)>| BottleneckVerdict {
        bottlenecked: false,
        witness: Some(Witness {
            demand: problem.demands[k].id.clone(),
            path: problem.paths[path].id.clone(),
            link: first.map(|(e, _)| problem.resources[e].id.clone()),
            other: first.map(|(_, j)| problem.demands[j].id.clone()),
        }),
    };

    for (k, d) in problem.demands.iter().enumerate() {
        if let Volume::Bounded(v) = d.volume {
            if sent[k] >= v - tol.max(1e-6 * v) {
                continue;
            }
        }
        let live: Vec<usize> = index.demand_flows[k]
            .iter()
            .copied()
            .filter(|&fi| flows[fi] > tol)
            .collect();
        if live.is_empty() {
            // A demand left with nothing must be blocked on one of its paths.
            let paths = &index.demand_paths[k];
            let mut first = None;
            let mut ok = false;
            for &p in paths {
                let (good, f) = check(k, p);
                if good {
                    ok = true;
                    break;
                }
                first = first.or(f);
            }
            if !ok {
                return Ok(fail(k, paths[0], first));
            }
            continue;
        }
        for fi in live {
            let path = index.flows[fi].path;
            let (good, first) = check(k, path);
            if !good {
                return Ok(fail(k, path, first));
            }
        }
    }
    Ok(BottleneckVerdict {
        bottlenecked: true,
        witness: None,
    })
}
