//! Fairness and efficiency of an allocation against a reference.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::Problem;

/// Per-demand `q_ϑ` values and their geometric mean.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QFairness {
    pub per_demand: BTreeMap<String, f64>,
    pub geomean: f64,
}

/// `q_k = min(max(f_k,ϑ)/max(f*_k,ϑ), max(f*_k,ϑ)/max(f_k,ϑ))` for each
/// demand, summarized by the geometric mean.
pub fn q_fairness(
    f: &BTreeMap<String, f64>,
    f_star: &BTreeMap<String, f64>,
    vartheta: f64,
) -> Result<QFairness> {
    if !(vartheta > 0.0) {
        return Err(Error::Metric(format!("vartheta must be positive, got {vartheta}")));
    }
    same_keys(f, f_star)?;
    let per_demand: BTreeMap<String, f64> = f
        .iter()
        .map(|(k, &v)| {
            let a = v.max(vartheta);
            let b = f_star[k].max(vartheta);
            (k.clone(), (a / b).min(b / a))
        })
        .collect();
    let geomean = if per_demand.is_empty() {
        1.0
    } else {
        (per_demand.values().map(|q| q.ln()).sum::<f64>() / per_demand.len() as f64).exp()
    };
    Ok(QFairness { per_demand, geomean })
}

/// `Σ f / Σ baseline`; 1 when both are zero.
pub fn efficiency(f: &BTreeMap<String, f64>, baseline: &BTreeMap<String, f64>) -> Result<f64> {
    same_keys(f, baseline)?;
    if f.values().chain(baseline.values()).any(|&v| v < 0.0) {
        return Err(Error::Metric("negative rate".into()));
    }
    let total: f64 = f.values().sum();
    let base: f64 = baseline.values().sum();
    match (base > 0.0, total > 0.0) {
        (true, _) => Ok(total / base),
        (false, false) => Ok(1.0),
        (false, true) => Err(Error::Metric("baseline allocates nothing".into())),
    }
}

/// `ϑ = 1e-4 · max_e c_e`.
pub fn default_vartheta(problem: &Problem) -> f64 {
    1e-4 * problem.max_capacity()
}

fn same_keys(a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>) -> Result<()> {
    if a.len() != b.len() || a.keys().zip(b.keys()).any(|(x, y)| x != y) {
        let only_a: Vec<&String> = a.keys().filter(|k| !b.contains_key(*k)).collect();
        let only_b: Vec<&String> = b.keys().filter(|k| !a.contains_key(*k)).collect();
        return Err(Error::MismatchedKeys(format!(
            "only in allocation: {only_a:?}; only in reference: {only_b:?}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub per_demand_q: BTreeMap<String, f64>,
    pub fairness_geomean: f64,
    pub efficiency_ratio: f64,
    pub total_rate: f64,
    pub baseline_total: f64,
    pub vartheta: f64,
}

impl MetricsReport {
    pub fn compute(
        f: &BTreeMap<String, f64>,
        baseline: &BTreeMap<String, f64>,
        vartheta: f64,
    ) -> Result<Self> {
        let q = q_fairness(f, baseline, vartheta)?;
        Ok(MetricsReport {
            per_demand_q: q.per_demand,
            fairness_geomean: q.geomean,
            efficiency_ratio: efficiency(f, baseline)?,
            total_rate: f.values().sum(),
            baseline_total: baseline.values().sum(),
            vartheta,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metrics serialize")
    }

    /// Header and one data row; per-demand values are left to the JSON form.
    pub fn to_csv_row(&self) -> String {
        format!(
            "fairness_geomean,efficiency,total_rate,baseline_total,vartheta\n{},{},{},{},{}\n",
            self.fairness_geomean, self.efficiency_ratio, self.total_rate, self.baseline_total, self.vartheta
        )
    }
}
