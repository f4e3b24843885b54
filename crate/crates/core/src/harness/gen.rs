//! Random capacitated topologies with synthetic traffic matrices.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Demand, Path, Problem, Resource, Volume};

use super::ksp::k_shortest_paths;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrafficModel {
    Poisson,
    Uniform,
    Bimodal,
    Gravity,
}

impl std::str::FromStr for TrafficModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "poisson" => Ok(TrafficModel::Poisson),
            "uniform" => Ok(TrafficModel::Uniform),
            "bimodal" => Ok(TrafficModel::Bimodal),
            "gravity" => Ok(TrafficModel::Gravity),
            _ => Err(Error::Config(format!(
                "unknown traffic model `{s}`; expected poisson, uniform, bimodal or gravity"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrafficSpec {
    pub model: TrafficModel,
    /// Multiplies every sampled volume.
    pub scale_factor: f64,
    pub seed: u64,
}

/// Link capacities are drawn from these values.
pub const LINK_CAPACITIES: [f64; 3] = [10.0, 20.0, 40.0];

/// Poisson rate of the unscaled volume, which is divided by it so every
/// model has unit mean.
const POISSON_LAMBDA: f64 = 4.0;
/// Bimodal mixture: 80% around `m`, 20% around `8 m`, mean 1.
const BIMODAL_LOW_SHARE: f64 = 0.8;
const BIMODAL_RATIO: f64 = 8.0;

/// One volume sample of a random traffic model. Gravity volumes are not
/// random and are produced by [`generate_problem`] directly.
pub fn sample_volume<R: Rng>(model: TrafficModel, scale: f64, rng: &mut R) -> f64 {
    let base = match model {
        TrafficModel::Poisson => Poisson::new(POISSON_LAMBDA).unwrap().sample(rng) / POISSON_LAMBDA,
        TrafficModel::Uniform => rng.gen_range(0.0..2.0),
        TrafficModel::Bimodal => {
            let low = 1.0 / (BIMODAL_LOW_SHARE + (1.0 - BIMODAL_LOW_SHARE) * BIMODAL_RATIO);
            let mean = if rng.gen_bool(BIMODAL_LOW_SHARE) { low } else { low * BIMODAL_RATIO };
            Normal::new(mean, mean / 4.0).unwrap().sample(rng).max(0.0)
        }
        TrafficModel::Gravity => 1.0,
    };
    scale * base
}

/// Random connected graph with `edges` bidirectional links over `nodes`
/// nodes, one demand per ordered node pair with a positive volume, and up to
/// `k` shortest paths per demand.
///
/// Each link direction is a separate resource `l:u-v`.
pub fn generate_problem(nodes: usize, edges: usize, traffic: TrafficSpec, k: usize) -> Result<Problem> {
    if nodes < 2 {
        return Err(Error::Generator(format!("need at least 2 nodes, got {nodes}")));
    }
    let max_edges = nodes * (nodes - 1) / 2;
    if edges < nodes - 1 || edges > max_edges {
        return Err(Error::Generator(format!(
            "{edges} edges cannot form a connected simple graph on {nodes} nodes (need {} to {max_edges})",
            nodes - 1
        )));
    }
    if k == 0 {
        return Err(Error::Generator("paths per pair must be at least 1".into()));
    }
    if !(traffic.scale_factor > 0.0 && traffic.scale_factor.is_finite()) {
        return Err(Error::Generator(format!("scale factor must be positive, got {}", traffic.scale_factor)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(traffic.seed);

    // Random spanning tree, then extra edges.
    let mut order: Vec<usize> = (0..nodes).collect();
    order.shuffle(&mut rng);
    let mut present = vec![vec![false; nodes]; nodes];
    let mut links: Vec<(usize, usize)> = Vec::with_capacity(edges);
    let add = |a: usize, b: usize, present: &mut Vec<Vec<bool>>, links: &mut Vec<(usize, usize)>| {
        present[a][b] = true;
        present[b][a] = true;
        links.push((a.min(b), a.max(b)));
    };
    for i in 1..nodes {
        let parent = order[rng.gen_range(0..i)];
        add(order[i], parent, &mut present, &mut links);
    }
    let mut missing: Vec<(usize, usize)> = (0..nodes)
        .flat_map(|a| (a + 1..nodes).map(move |b| (a, b)))
        .filter(|&(a, b)| !present[a][b])
        .collect();
    missing.shuffle(&mut rng);
    for &(a, b) in missing.iter().take(edges - links.len()) {
        add(a, b, &mut present, &mut links);
    }
    links.sort_unstable();

    let mut adj = vec![Vec::new(); nodes];
    let mut resources = Vec::with_capacity(2 * edges);
    for &(a, b) in &links {
        let cap = LINK_CAPACITIES[rng.gen_range(0..LINK_CAPACITIES.len())];
        for (u, v) in [(a, b), (b, a)] {
            adj[u].push(v);
            resources.push(Resource { id: link_id(u, v), capacity: cap });
        }
    }
    for heads in &mut adj {
        heads.sort_unstable();
    }

    let degree: Vec<f64> = adj.iter().map(|h| h.len() as f64).collect();
    let pair_mass: f64 = (0..nodes)
        .flat_map(|i| (0..nodes).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| degree[i] * degree[j])
        .sum();
    let pairs = (nodes * (nodes - 1)) as f64;

    let mut paths = Vec::new();
    let mut demands = Vec::new();
    for i in 0..nodes {
        for j in (0..nodes).filter(|&j| j != i) {
            let volume = match traffic.model {
                TrafficModel::Gravity => traffic.scale_factor * pairs * degree[i] * degree[j] / pair_mass,
                m => sample_volume(m, traffic.scale_factor, &mut rng),
            };
            if volume <= 0.0 {
                continue;
            }
            let mut ids = Vec::new();
            for (r, nodes_on) in k_shortest_paths(&adj, i, j, k).into_iter().enumerate() {
                let id = format!("p:{i}-{j}:{r}");
                paths.push(Path {
                    id: id.clone(),
                    resources: nodes_on.windows(2).map(|w| link_id(w[0], w[1])).collect(),
                });
                ids.push(id);
            }
            let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
            demands.push(Demand::new(format!("d:{i}-{j}"), Volume::Bounded(volume), &refs));
        }
    }
    Ok(Problem { resources, paths, demands })
}

fn link_id(u: usize, v: usize) -> String {
    format!("l:{u}-{v}")
}
