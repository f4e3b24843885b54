use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{virtual_resource_id, Problem, ProblemIndex, Volume};

/// One single-path slice of a demand.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Subdemand {
    pub demand: String,
    pub path: String,
    /// `w_k θ_k^p`, the column's entry on every row it touches.
    pub weight: f64,
    /// `(row, consumption)` for each resource on the path plus the demand's
    /// virtual edge when it is bounded.
    pub rows: Vec<(usize, f64)>,
}

/// Sparse weighted routing matrix `Γ[e, k_p] = w_k θ_k^p 1{e ∈ p}`, stored by
/// column.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubdemandMatrix {
    /// Resource ids; virtual edges follow the real resources.
    pub rows: Vec<String>,
    pub columns: Vec<Subdemand>,
}

impl SubdemandMatrix {
    /// Builds a matrix from `(weight, row indices)` columns with unit
    /// consumption, mostly for tests.
    pub fn from_columns(num_rows: usize, columns: &[(f64, Vec<usize>)]) -> Self {
        SubdemandMatrix {
            rows: (0..num_rows).map(|i| format!("e{i}")).collect(),
            columns: columns
                .iter()
                .enumerate()
                .map(|(i, (w, rows))| Subdemand {
                    demand: format!("d{i}"),
                    path: format!("p{i}"),
                    weight: *w,
                    rows: rows.iter().map(|&r| (r, 1.0)).collect(),
                })
                .collect(),
        }
    }

    pub fn gamma(&self, row: usize, col: usize) -> f64 {
        let c = &self.columns[col];
        if c.rows.iter().any(|&(r, _)| r == row) {
            c.weight
        } else {
            0.0
        }
    }

    pub fn dense(&self) -> Vec<Vec<f64>> {
        (0..self.rows.len())
            .map(|e| (0..self.columns.len()).map(|k| self.gamma(e, k)).collect())
            .collect()
    }

    /// Columns touching each row.
    pub(crate) fn row_columns(&self) -> Vec<Vec<(usize, f64)>> {
        let mut out = vec![Vec::new(); self.rows.len()];
        for (k, c) in self.columns.iter().enumerate() {
            for &(e, r) in &c.rows {
                out[e].push((k, r));
            }
        }
        out
    }

    pub(crate) fn check(&self, capacities: &[f64]) -> Result<()> {
        if capacities.len() != self.rows.len() {
            return Err(Error::Waterfill(format!(
                "{} capacities for {} rows",
                capacities.len(),
                self.rows.len()
            )));
        }
        if let Some((e, c)) = capacities.iter().enumerate().find(|(_, c)| !(c.is_finite() && **c >= 0.0)) {
            return Err(Error::Waterfill(format!("capacity of {} is {c}", self.rows[e])));
        }
        for c in &self.columns {
            if c.rows.is_empty() {
                return Err(Error::Waterfill(format!(
                    "subdemand ({}, {}) uses no resource",
                    c.demand, c.path
                )));
            }
            if !(c.weight.is_finite() && c.weight >= 0.0) {
                return Err(Error::Waterfill(format!(
                    "subdemand ({}, {}) has weight {}",
                    c.demand, c.path, c.weight
                )));
            }
            if let Some(&(e, _)) = c.rows.iter().find(|&&(e, _)| e >= self.rows.len()) {
                return Err(Error::Waterfill(format!("row {e} out of range")));
            }
        }
        Ok(())
    }
}

/// Path weight multipliers, one per flow of the problem index.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThetaState {
    pub theta: Vec<f64>,
    pub iteration: usize,
}

impl ThetaState {
    /// `1 / |P_k|` on every path.
    pub fn uniform(index: &ProblemIndex) -> Self {
        let mut theta = vec![0.0; index.flows.len()];
        for flows in &index.demand_flows {
            for &f in flows {
                theta[f] = 1.0 / flows.len() as f64;
            }
        }
        ThetaState { theta, iteration: 0 }
    }

    /// Multipliers proportional to the given flow rates; demands with zero
    /// total keep `fallback`.
    pub fn from_rates(index: &ProblemIndex, rates: &[f64], fallback: &ThetaState) -> Self {
        let mut theta = fallback.theta.clone();
        for flows in &index.demand_flows {
            let total: f64 = flows.iter().map(|&f| rates[f]).sum();
            if total > 0.0 {
                for &f in flows {
                    theta[f] = rates[f] / total;
                }
            }
        }
        ThetaState {
            theta,
            iteration: fallback.iteration + 1,
        }
    }

    pub fn validate(&self, index: &ProblemIndex) -> Result<()> {
        if self.theta.len() != index.flows.len() {
            return Err(Error::Waterfill(format!(
                "{} multipliers for {} subdemands",
                self.theta.len(),
                index.flows.len()
            )));
        }
        for (k, flows) in index.demand_flows.iter().enumerate() {
            if flows.iter().any(|&f| !(self.theta[f] >= 0.0)) {
                return Err(Error::Waterfill(format!("negative multiplier for demand {k}")));
            }
            let sum: f64 = flows.iter().map(|&f| self.theta[f]).sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::Waterfill(format!("multipliers of demand {k} sum to {sum}")));
            }
        }
        Ok(())
    }
}

/// Subdemand matrix and capacities, virtual edges included.
pub fn build_subdemands(problem: &Problem, theta: &ThetaState) -> Result<(SubdemandMatrix, Vec<f64>)> {
    let index = problem.index()?;
    build_with_index(problem, &index, theta)
}

pub(crate) fn build_with_index(
    problem: &Problem,
    index: &ProblemIndex,
    theta: &ThetaState,
) -> Result<(SubdemandMatrix, Vec<f64>)> {
    theta.validate(index)?;
    let mut rows: Vec<String> = problem.resources.iter().map(|r| r.id.clone()).collect();
    let mut caps: Vec<f64> = problem.resources.iter().map(|r| r.capacity).collect();
    let mut virtual_row = vec![None; problem.demands.len()];
    for (k, d) in problem.demands.iter().enumerate() {
        if let Volume::Bounded(v) = d.volume {
            virtual_row[k] = Some(rows.len());
            rows.push(virtual_resource_id(&d.id));
            caps.push(v);
        }
    }
    let columns = index
        .flows
        .iter()
        .enumerate()
        .map(|(f, fl)| {
            let d = &problem.demands[fl.demand];
            let mut col_rows: Vec<(usize, f64)> = index.path_resources[fl.path]
                .iter()
                .map(|&e| (e, d.consumption_of(&problem.resources[e].id)))
                .collect();
            if let Some(v) = virtual_row[fl.demand] {
                col_rows.push((v, 1.0));
            }
            Subdemand {
                demand: d.id.clone(),
                path: problem.paths[fl.path].id.clone(),
                weight: d.weight * theta.theta[f],
                rows: col_rows,
            }
        })
        .collect();
    Ok((SubdemandMatrix { rows, columns }, caps))
}
