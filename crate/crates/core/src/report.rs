use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::Result;
use crate::model::{demand_totals, Allocation, Problem, ProblemIndex};

/// Per-demand, per-bin allocation of a binning allocator, in ratio units
/// (`f_k / w_k`).
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct BinBreakdown {
    /// Width of each bin.
    pub caps: Vec<f64>,
    pub per_demand: BTreeMap<String, Vec<f64>>,
    /// Demands whose bins were reordered by degeneracy repair.
    pub repaired: usize,
}

/// Weight multipliers and subdemand rates of every adaptive-waterfill
/// iteration.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ThetaTrace {
    /// (demand id, path id) of each subdemand column.
    pub subdemands: Vec<(String, String)>,
    /// `theta[t][i]`: multiplier of subdemand `i` used in iteration `t + 1`.
    pub theta: Vec<Vec<f64>>,
    /// `rates[t][i]`: rate of subdemand `i` computed in iteration `t + 1`.
    pub rates: Vec<Vec<f64>>,
}

impl ThetaTrace {
    /// CSV with one row per iteration and a `theta:` and `rate:` column per
    /// subdemand.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["iteration".to_string()];
        header.extend(self.subdemands.iter().map(|(d, p)| format!("theta:{d}/{p}")));
        header.extend(self.subdemands.iter().map(|(d, p)| format!("rate:{d}/{p}")));
        w.write_record(&header)?;
        for (t, (theta, rates)) in self.theta.iter().zip(&self.rates).enumerate() {
            let mut row = vec![(t + 1).to_string()];
            row.extend(theta.iter().map(|v| v.to_string()));
            row.extend(rates.iter().map(|v| v.to_string()));
            w.write_record(&row)?;
        }
        let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Outcome of running one allocator on one problem.
#[derive(Debug, Clone, Serialize)]
pub struct AllocatorReport {
    pub allocator: String,
    pub allocation: Allocation,
    /// `f_k` per demand.
    pub totals: BTreeMap<String, f64>,
    pub lp_solves: usize,
    pub iterations: usize,
    /// Set by iterative combinatorial allocators.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub objective: Option<f64>,
    /// Effective configuration, defaults included.
    pub config: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bins: Option<BinBreakdown>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_trace: Option<ThetaTrace>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl AllocatorReport {
    pub(crate) fn from_flows(
        allocator: &str,
        problem: &Problem,
        index: &ProblemIndex,
        flows: &[f64],
    ) -> Self {
        let totals = demand_totals(problem, index, flows);
        AllocatorReport {
            allocator: allocator.to_string(),
            allocation: Allocation::from_flows(problem, index, flows),
            totals: problem
                .demands
                .iter()
                .zip(totals)
                .map(|(d, t)| (d.id.clone(), t))
                .collect(),
            lp_solves: 0,
            iterations: 0,
            converged: None,
            objective: None,
            config: serde_json::Value::Null,
            bins: None,
            theta_trace: None,
            notes: Vec::new(),
        }
    }

    /// `f_k / w_k` per demand.
    pub fn ratios(&self, problem: &Problem) -> BTreeMap<String, f64> {
        problem
            .demands
            .iter()
            .map(|d| (d.id.clone(), self.totals.get(&d.id).copied().unwrap_or(0.0) / d.weight))
            .collect()
    }

    /// Totals in problem demand order.
    pub fn total_vec(&self, problem: &Problem) -> Vec<f64> {
        problem
            .demands
            .iter()
            .map(|d| self.totals.get(&d.id).copied().unwrap_or(0.0))
            .collect()
    }
}
