//! POP-style partitioning: every partition gets an equal share of every
//! resource and a random subset of the demands.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Allocation, Demand, Problem, Volume};

/// Which bounded demands are spread over all partitions instead of being
/// placed in one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClientSplit {
    None,
    /// Volumes strictly above this quantile of the bounded volumes.
    Quantile(f64),
    /// Volumes strictly above this multiple of the mean bounded volume.
    MeanMultiple(f64),
}

impl Default for ClientSplit {
    fn default() -> Self {
        ClientSplit::Quantile(0.75)
    }
}

impl ClientSplit {
    fn threshold(self, volumes: &[f64]) -> Result<f64> {
        if volumes.is_empty() {
            return Ok(f64::INFINITY);
        }
        match self {
            ClientSplit::None => Ok(f64::INFINITY),
            ClientSplit::Quantile(q) => {
                if !(0.0..=1.0).contains(&q) {
                    return Err(Error::Config(format!("split quantile must lie in [0, 1], got {q}")));
                }
                let mut v = volumes.to_vec();
                v.sort_by(f64::total_cmp);
                // Linear interpolation between order statistics.
                let pos = q * (v.len() - 1) as f64;
                let lo = pos.floor() as usize;
                let hi = pos.ceil() as usize;
                Ok(v[lo] + (v[hi] - v[lo]) * (pos - lo as f64))
            }
            ClientSplit::MeanMultiple(m) => {
                if !(m >= 0.0) {
                    return Err(Error::Config(format!("split multiple must be nonnegative, got {m}")));
                }
                Ok(m * volumes.iter().sum::<f64>() / volumes.len() as f64)
            }
        }
    }
}

/// Splits `problem` into `k` partitions. Resource capacities become `c / k`
/// in every partition; unsplit demands land in a uniformly random partition
/// and split demands appear in all of them with volume `d / k`, under their
/// original ids. Demand order is preserved within each partition.
pub fn pop_partition(problem: &Problem, k: usize, split: ClientSplit, seed: u64) -> Result<Vec<Problem>> {
    if k == 0 {
        return Err(Error::Config("number of partitions must be at least 1".into()));
    }
    problem.index()?;
    let bounded: Vec<f64> = problem.demands.iter().filter_map(|d| d.volume.bound()).collect();
    let threshold = split.threshold(&bounded)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut parts: Vec<Vec<Demand>> = vec![Vec::new(); k];
    for d in &problem.demands {
        match d.volume {
            Volume::Bounded(v) if v > threshold && k > 1 => {
                for part in &mut parts {
                    let mut piece = d.clone();
                    piece.volume = Volume::Bounded(v / k as f64);
                    part.push(piece);
                }
            }
            _ => parts[rng.gen_range(0..k)].push(d.clone()),
        }
    }
    let resources: Vec<_> = problem
        .resources
        .iter()
        .map(|r| {
            let mut r = r.clone();
            r.capacity /= k as f64;
            r
        })
        .collect();
    Ok(parts
        .into_iter()
        .map(|demands| {
            let used: BTreeSet<&String> = demands.iter().flat_map(|d| &d.paths).collect();
            let paths = problem.paths.iter().filter(|p| used.contains(&p.id)).cloned().collect();
            Problem {
                resources: resources.clone(),
                paths,
                demands,
            }
        })
        .collect())
}

/// Sums per-partition allocations into one allocation of the original
/// problem.
pub fn merge_allocations(parts: &[Allocation]) -> Allocation {
    parts.iter().fold(Allocation::new(), |acc, a| acc.add(a))
}
