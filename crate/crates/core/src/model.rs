//! Capacitated resource model: resources, paths (groups of resources that
//! are consumed together) and demands that may be served over several paths.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resource {
    pub id: String,
    pub capacity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub id: String,
    pub resources: Vec<String>,
}

/// Requested volume of a demand. `Unbounded` is kept explicit instead of a
/// large sentinel float so no LP ever carries a huge right-hand side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Volume {
    Bounded(f64),
    Unbounded,
}

impl Volume {
    pub fn bound(self) -> Option<f64> {
        match self {
            Volume::Bounded(v) => Some(v),
            Volume::Unbounded => None,
        }
    }

    pub fn is_bounded(self) -> bool {
        matches!(self, Volume::Bounded(_))
    }

    /// Volume as a float, `+inf` when unbounded.
    pub fn as_f64(self) -> f64 {
        self.bound().unwrap_or(f64::INFINITY)
    }
}

impl Serialize for Volume {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.bound().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Volume {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Ok(match Option::<f64>::deserialize(d)? {
            Some(v) => Volume::Bounded(v),
            None => Volume::Unbounded,
        })
    }
}

fn default_weight() -> f64 {
    1.0
}

fn unbounded() -> Volume {
    Volume::Unbounded
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Demand {
    pub id: String,
    #[serde(default = "unbounded")]
    pub volume: Volume,
    #[serde(default = "default_weight")]
    pub weight: f64,
    pub paths: Vec<String>,
    /// Per-path utility `q`; missing entries mean 1.
    #[serde(default)]
    pub utility: BTreeMap<String, f64>,
    /// Per-resource consumption `r`; missing entries mean 1.
    #[serde(default)]
    pub consumption: BTreeMap<String, f64>,
}

impl Demand {
    pub fn new(id: impl Into<String>, volume: Volume, paths: &[&str]) -> Self {
        Demand {
            id: id.into(),
            volume,
            weight: 1.0,
            paths: paths.iter().map(|p| p.to_string()).collect(),
            utility: BTreeMap::new(),
            consumption: BTreeMap::new(),
        }
    }

    pub fn with_weight(mut self, weight: f64) -> Self {
        self.weight = weight;
        self
    }

    pub fn utility_of(&self, path: &str) -> f64 {
        self.utility.get(path).copied().unwrap_or(1.0)
    }

    pub fn consumption_of(&self, resource: &str) -> f64 {
        self.consumption.get(resource).copied().unwrap_or(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Problem {
    pub resources: Vec<Resource>,
    pub paths: Vec<Path>,
    pub demands: Vec<Demand>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub entity: String,
    pub rule: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.entity, self.rule)
    }
}

/// Checks every structural invariant of a problem. Violations are returned as
/// data; an empty list means the problem is well formed.
pub fn validate_problem(problem: &Problem) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |entity: String, rule: &str| {
        out.push(Violation {
            entity,
            rule: rule.to_string(),
        })
    };

    if problem.resources.is_empty() {
        push("problem".into(), "at least one resource is required");
    }
    if problem.paths.is_empty() {
        push("problem".into(), "at least one path is required");
    }
    if problem.demands.is_empty() {
        push("problem".into(), "at least one demand is required");
    }

    let mut resource_ids = BTreeSet::new();
    for r in &problem.resources {
        if !resource_ids.insert(r.id.as_str()) {
            push(format!("resource {}", r.id), "duplicate resource id");
        }
        if !r.capacity.is_finite() {
            push(format!("resource {}", r.id), "capacity must be finite");
        } else if r.capacity < 0.0 {
            push(format!("resource {}", r.id), "capacity must be nonnegative");
        }
    }

    let mut path_resources: HashMap<&str, &[String]> = HashMap::new();
    for p in &problem.paths {
        if path_resources.insert(p.id.as_str(), &p.resources).is_some() {
            push(format!("path {}", p.id), "duplicate path id");
        }
        if p.resources.is_empty() {
            push(format!("path {}", p.id), "path must contain at least one resource");
        }
        let mut seen = BTreeSet::new();
        for r in &p.resources {
            if !resource_ids.contains(r.as_str()) {
                push(format!("path {}/{}", p.id, r), "unknown resource");
            }
            if !seen.insert(r.as_str()) {
                push(format!("path {}/{}", p.id, r), "resource repeated within path");
            }
        }
    }

    let mut demand_ids = BTreeSet::new();
    for d in &problem.demands {
        let who = format!("demand {}", d.id);
        if !demand_ids.insert(d.id.as_str()) {
            push(who.clone(), "duplicate demand id");
        }
        if !(d.weight.is_finite() && d.weight > 0.0) {
            push(who.clone(), "weight must be positive and finite");
        }
        if let Volume::Bounded(v) = d.volume {
            if !(v.is_finite() && v > 0.0) {
                push(who.clone(), "volume must be positive and finite (use null for unbounded)");
            }
        }
        if d.paths.is_empty() {
            push(who.clone(), "demand must have at least one path");
        }
        let mut seen = BTreeSet::new();
        let mut reachable = BTreeSet::new();
        for p in &d.paths {
            if !seen.insert(p.as_str()) {
                push(format!("{who}/{p}"), "path listed twice");
            }
            match path_resources.get(p.as_str()) {
                Some(rs) => reachable.extend(rs.iter().map(String::as_str)),
                None => push(format!("{who}/{p}"), "unknown path"),
            }
        }
        for (p, q) in &d.utility {
            if !seen.contains(p.as_str()) {
                push(format!("{who}/{p}"), "utility given for a path the demand does not use");
            }
            if !(q.is_finite() && *q > 0.0) {
                push(format!("{who}/{p}"), "utility must be positive and finite");
            }
        }
        for (r, c) in &d.consumption {
            if !reachable.contains(r.as_str()) {
                push(format!("{who}/{r}"), "consumption given for a resource not on the demand's paths");
            }
            if !(c.is_finite() && *c > 0.0) {
                push(format!("{who}/{r}"), "consumption must be positive and finite");
            }
        }
    }
    out
}

/// Integer view of a validated problem used by every allocator.
#[derive(Debug, Clone)]
pub struct ProblemIndex {
    pub resource_of: HashMap<String, usize>,
    pub path_of: HashMap<String, usize>,
    /// Resource indices of each path.
    pub path_resources: Vec<Vec<usize>>,
    /// Path indices of each demand.
    pub demand_paths: Vec<Vec<usize>>,
    /// Every (demand, path) pair in demand-major order.
    pub flows: Vec<Flow>,
    /// Flow indices belonging to each demand.
    pub demand_flows: Vec<Vec<usize>>,
}

/// One (demand, path) pair of a problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Flow {
    pub demand: usize,
    pub path: usize,
}

impl Problem {
    /// Validates and builds the integer index; fails with every violation
    /// listed when the problem is malformed.
    pub fn index(&self) -> Result<ProblemIndex> {
        let violations = validate_problem(self);
        if !violations.is_empty() {
            let msg = violations
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join("; ");
            return Err(Error::InvalidProblem(msg));
        }
        let resource_of: HashMap<String, usize> = self
            .resources
            .iter()
            .enumerate()
            .map(|(i, r)| (r.id.clone(), i))
            .collect();
        let path_of: HashMap<String, usize> = self
            .paths
            .iter()
            .enumerate()
            .map(|(i, p)| (p.id.clone(), i))
            .collect();
        let path_resources = self
            .paths
            .iter()
            .map(|p| p.resources.iter().map(|r| resource_of[r]).collect())
            .collect();
        let demand_paths: Vec<Vec<usize>> = self
            .demands
            .iter()
            .map(|d| d.paths.iter().map(|p| path_of[p]).collect())
            .collect();
        let mut flows = Vec::new();
        let mut demand_flows = Vec::with_capacity(demand_paths.len());
        for (k, paths) in demand_paths.iter().enumerate() {
            let mut mine = Vec::with_capacity(paths.len());
            for &p in paths {
                mine.push(flows.len());
                flows.push(Flow { demand: k, path: p });
            }
            demand_flows.push(mine);
        }
        Ok(ProblemIndex {
            resource_of,
            path_of,
            path_resources,
            demand_paths,
            flows,
            demand_flows,
        })
    }

    pub fn max_capacity(&self) -> f64 {
        self.resources
            .iter()
            .map(|r| r.capacity)
            .fold(0.0, f64::max)
    }

    pub fn total_capacity(&self) -> f64 {
        self.resources.iter().map(|r| r.capacity).sum()
    }

    /// Default absolute feasibility tolerance: `1e-6 * max capacity`.
    pub fn default_tolerance(&self) -> f64 {
        1e-6 * self.max_capacity().max(f64::MIN_POSITIVE)
    }

    pub fn demand(&self, id: &str) -> Option<&Demand> {
        self.demands.iter().find(|d| d.id == id)
    }

    /// Upper bound on the weighted ratio `f_k / w_k` any feasible allocation
    /// can give demand `k`: each path is limited by its tightest resource and
    /// the demand by its volume.
    pub fn ratio_bound(&self, index: &ProblemIndex, k: usize) -> f64 {
        let d = &self.demands[k];
        let mut by_paths = 0.0;
        let mut best_q: f64 = 0.0;
        for &p in &index.demand_paths[k] {
            let path = &self.paths[p];
            let q = d.utility_of(&path.id);
            best_q = best_q.max(q);
            let limit = index.path_resources[p]
                .iter()
                .map(|&e| {
                    let r = &self.resources[e];
                    r.capacity / d.consumption_of(&r.id)
                })
                .fold(f64::INFINITY, f64::min);
            by_paths += q * limit;
        }
        let by_volume = d.volume.as_f64() * best_q;
        by_paths.min(by_volume) / d.weight
    }

    /// Smallest ratio guaranteed to every demand that can be served at all.
    ///
    /// Each demand takes its best single path at `w_k min_e c_e / W_e`, where
    /// `W_e` sums `w_j r_je` over every demand with a path through `e`. That
    /// allocation is feasible, so the max-min fair ratio of each demand is at
    /// least this value. Returns 0 when no demand can be served.
    pub fn fair_ratio_lower_bound(&self, index: &ProblemIndex) -> f64 {
        let mut load = vec![0.0; self.resources.len()];
        for (k, d) in self.demands.iter().enumerate() {
            let mut used: Vec<usize> = index.demand_paths[k]
                .iter()
                .flat_map(|&p| index.path_resources[p].iter().copied())
                .collect();
            used.sort_unstable();
            used.dedup();
            for e in used {
                load[e] += d.weight * d.consumption_of(&self.resources[e].id);
            }
        }
        let mut lower = f64::INFINITY;
        for (k, d) in self.demands.iter().enumerate() {
            let mut best: f64 = 0.0;
            for &p in &index.demand_paths[k] {
                let q = d.utility_of(&self.paths[p].id);
                let share = index.path_resources[p]
                    .iter()
                    .map(|&e| self.resources[e].capacity / load[e])
                    .fold(f64::INFINITY, f64::min);
                let rate = (d.weight * share).min(d.volume.as_f64());
                best = best.max(q * rate / d.weight);
            }
            if best > 0.0 {
                lower = lower.min(best);
            }
        }
        if lower.is_finite() {
            lower
        } else {
            0.0
        }
    }

    /// Largest [`Problem::ratio_bound`] over all demands.
    pub fn max_ratio_bound(&self, index: &ProblemIndex) -> f64 {
        (0..self.demands.len())
            .map(|k| self.ratio_bound(index, k))
            .fold(0.0, f64::max)
    }
}

/// Per-(demand, path) rates.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Allocation {
    pub rates: BTreeMap<(String, String), f64>,
}

#[derive(Serialize, Deserialize)]
struct RateEntry {
    demand: String,
    path: String,
    rate: f64,
}

impl Serialize for Allocation {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let entries: Vec<RateEntry> = self
            .rates
            .iter()
            .map(|((d, p), r)| RateEntry {
                demand: d.clone(),
                path: p.clone(),
                rate: *r,
            })
            .collect();
        entries.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Allocation {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let entries = Vec::<RateEntry>::deserialize(d)?;
        Ok(Allocation {
            rates: entries
                .into_iter()
                .map(|e| ((e.demand, e.path), e.rate))
                .collect(),
        })
    }
}

impl Allocation {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds an allocation from a flow-indexed rate vector.
    pub fn from_flows(problem: &Problem, index: &ProblemIndex, values: &[f64]) -> Self {
        let rates = index
            .flows
            .iter()
            .zip(values)
            .map(|(fl, &v)| {
                (
                    (
                        problem.demands[fl.demand].id.clone(),
                        problem.paths[fl.path].id.clone(),
                    ),
                    v,
                )
            })
            .collect();
        Allocation { rates }
    }

    /// Flow-indexed rate vector; missing keys read as zero.
    pub fn to_flows(&self, problem: &Problem, index: &ProblemIndex) -> Result<Vec<f64>> {
        self.check_keys(problem, index)?;
        Ok(index
            .flows
            .iter()
            .map(|fl| {
                let key = (
                    problem.demands[fl.demand].id.clone(),
                    problem.paths[fl.path].id.clone(),
                );
                self.rates.get(&key).copied().unwrap_or(0.0)
            })
            .collect())
    }

    pub fn set(&mut self, demand: &str, path: &str, rate: f64) {
        self.rates.insert((demand.to_string(), path.to_string()), rate);
    }

    pub fn get(&self, demand: &str, path: &str) -> f64 {
        self.rates
            .get(&(demand.to_string(), path.to_string()))
            .copied()
            .unwrap_or(0.0)
    }

    fn check_keys(&self, problem: &Problem, index: &ProblemIndex) -> Result<()> {
        let demand_of: HashMap<&str, usize> = problem
            .demands
            .iter()
            .enumerate()
            .map(|(i, d)| (d.id.as_str(), i))
            .collect();
        for (d, p) in self.rates.keys() {
            let ok = match (demand_of.get(d.as_str()), index.path_of.get(p)) {
                (Some(&k), Some(&pi)) => index.demand_paths[k].contains(&pi),
                _ => false,
            };
            if !ok {
                return Err(Error::UnknownKey {
                    demand: d.clone(),
                    path: p.clone(),
                });
            }
        }
        Ok(())
    }

    /// Componentwise sum of two allocations.
    pub fn add(&self, other: &Allocation) -> Allocation {
        let mut rates = self.rates.clone();
        for (k, v) in &other.rates {
            *rates.entry(k.clone()).or_insert(0.0) += v;
        }
        Allocation { rates }
    }
}

/// Per-demand totals `f_k = sum_p q_k^p f_k^p`, keyed by demand id.
pub fn total_allocation(problem: &Problem, alloc: &Allocation) -> Result<BTreeMap<String, f64>> {
    let index = problem.index()?;
    let flows = alloc.to_flows(problem, &index)?;
    let totals = demand_totals(problem, &index, &flows);
    Ok(problem
        .demands
        .iter()
        .zip(totals)
        .map(|(d, t)| (d.id.clone(), t))
        .collect())
}

/// Flow-indexed totals in demand order (no key validation).
pub(crate) fn demand_totals(problem: &Problem, index: &ProblemIndex, flows: &[f64]) -> Vec<f64> {
    let mut totals = vec![0.0; problem.demands.len()];
    for (fi, fl) in index.flows.iter().enumerate() {
        let d = &problem.demands[fl.demand];
        totals[fl.demand] += d.utility_of(&problem.paths[fl.path].id) * flows[fi];
    }
    totals
}

#[derive(Debug, Clone, Serialize)]
pub struct Feasibility {
    pub feasible: bool,
    /// `d_k - sum_p f_k^p` for bounded demands.
    pub volume_slack: BTreeMap<String, f64>,
    /// `c_e - load_e` for every resource.
    pub capacity_slack: BTreeMap<String, f64>,
    /// Most negative single rate (0 when none is negative).
    pub min_rate: f64,
}

impl Feasibility {
    pub fn worst_capacity_slack(&self) -> f64 {
        self.capacity_slack.values().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Checks an allocation against volume, capacity and sign constraints with an
/// absolute tolerance.
pub fn check_feasible(problem: &Problem, alloc: &Allocation, tol: f64) -> Result<Feasibility> {
    let index = problem.index()?;
    let flows = alloc.to_flows(problem, &index)?;
    Ok(check_feasible_flows(problem, &index, &flows, tol))
}

pub(crate) fn check_feasible_flows(
    problem: &Problem,
    index: &ProblemIndex,
    flows: &[f64],
    tol: f64,
) -> Feasibility {
    let mut sent = vec![0.0; problem.demands.len()];
    let mut load = vec![0.0; problem.resources.len()];
    let mut min_rate: f64 = 0.0;
    for (fi, fl) in index.flows.iter().enumerate() {
        let rate = flows[fi];
        min_rate = min_rate.min(rate);
        sent[fl.demand] += rate;
        let d = &problem.demands[fl.demand];
        for &e in &index.path_resources[fl.path] {
            load[e] += d.consumption_of(&problem.resources[e].id) * rate;
        }
    }
    let mut feasible = min_rate >= -tol;
    let mut volume_slack = BTreeMap::new();
    for (k, d) in problem.demands.iter().enumerate() {
        if let Volume::Bounded(v) = d.volume {
            let slack = v - sent[k];
            feasible &= slack >= -tol;
            volume_slack.insert(d.id.clone(), slack);
        }
    }
    let mut capacity_slack = BTreeMap::new();
    for (e, r) in problem.resources.iter().enumerate() {
        let slack = r.capacity - load[e];
        feasible &= slack >= -tol;
        capacity_slack.insert(r.id.clone(), slack);
    }
    Feasibility {
        feasible,
        volume_slack,
        capacity_slack,
        min_rate,
    }
}

/// Id of the virtual resource that carries demand `demand`'s volume.
pub fn virtual_resource_id(demand: &str) -> String {
    format!("virtual:{demand}")
}

/// Id of the copy of `path` that demand `demand` uses after expansion.
pub fn virtual_path_id(path: &str, demand: &str) -> String {
    format!("{path}@{demand}")
}

/// Appends a fresh resource of capacity `d_k` to every path of each bounded
/// demand. Paths of bounded demands are copied per demand (see
/// [`virtual_path_id`]) so a shared path never carries another demand's
/// virtual resource. Unbounded demands keep their original paths.
pub fn expand_virtual_edges(problem: &Problem) -> Result<Problem> {
    let index = problem.index()?;
    let mut out = problem.clone();
    let mut taken: BTreeSet<String> = problem.resources.iter().map(|r| r.id.clone()).collect();
    let mut taken_paths: BTreeSet<String> = problem.paths.iter().map(|p| p.id.clone()).collect();

    for (k, d) in problem.demands.iter().enumerate() {
        let Volume::Bounded(v) = d.volume else {
            continue;
        };
        let mut vid = virtual_resource_id(&d.id);
        while taken.contains(&vid) {
            vid.push('\'');
        }
        taken.insert(vid.clone());
        out.resources.push(Resource {
            id: vid.clone(),
            capacity: v,
        });
        let demand = &mut out.demands[k];
        let mut new_paths = Vec::with_capacity(d.paths.len());
        let mut new_utility = BTreeMap::new();
        for &p in &index.demand_paths[k] {
            let orig = &problem.paths[p];
            let mut pid = virtual_path_id(&orig.id, &d.id);
            while taken_paths.contains(&pid) {
                pid.push('\'');
            }
            taken_paths.insert(pid.clone());
            let mut resources = orig.resources.clone();
            resources.push(vid.clone());
            out.paths.push(Path {
                id: pid.clone(),
                resources,
            });
            if let Some(q) = d.utility.get(&orig.id) {
                new_utility.insert(pid.clone(), *q);
            }
            new_paths.push(pid);
        }
        demand.paths = new_paths;
        demand.utility = new_utility;
    }
    // Drop originals that no demand references any more.
    let keep: BTreeSet<String> = out
        .demands
        .iter()
        .flat_map(|d| d.paths.iter().cloned())
        .collect();
    out.paths.retain(|p| keep.contains(&p.id));
    Ok(out)
}


#[cfg(test)]
pub(crate) use tests::two_by_two as worked_example;
