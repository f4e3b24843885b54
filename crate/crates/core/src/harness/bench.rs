//! Runs allocators over scenarios and scores them against an oracle.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alloc::AllocatorConfig;
use crate::error::{Error, Result};
use crate::lp::SolveSession;
use crate::metrics::{default_vartheta, MetricsReport};
use crate::model::Problem;

use super::io::load_problem;

pub const CSV_HEADER: [&str; 8] = [
    "scenario",
    "allocator",
    "fairness_geomean",
    "efficiency",
    "lp_solves",
    "iterations",
    "converged",
    "wall_ms",
];

/// One problem and the allocators to score on it.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub problem: Arc<Problem>,
    pub allocators: Vec<AllocatorConfig>,
    /// Reference totals; the oracle allocator runs when absent.
    pub golden: Option<BTreeMap<String, f64>>,
    pub labels: BTreeMap<String, String>,
}

/// Scenario file layout. Problems are inline or loaded from a path relative
/// to the file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub scenarios: Vec<ScenarioEntry>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioEntry {
    pub name: String,
    #[serde(default)]
    pub problem: Option<Problem>,
    #[serde(default)]
    pub problem_file: Option<PathBuf>,
    /// Allocator config objects, as accepted by [`AllocatorConfig::from_value`].
    pub allocators: Vec<serde_json::Value>,
    #[serde(default)]
    pub golden: Option<BTreeMap<String, f64>>,
    #[serde(default)]
    pub labels: BTreeMap<String, String>,
}

impl ScenarioFile {
    pub fn load(path: impl AsRef<Path>) -> Result<Vec<Scenario>> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: ScenarioFile = serde_json::from_str(&text).map_err(|source| Error::Json {
            context: path.display().to_string(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        file.scenarios
            .into_iter()
            .map(|e| {
                let problem = match (e.problem, e.problem_file) {
                    (Some(p), None) => {
                        p.index()?;
                        p
                    }
                    (None, Some(f)) => load_problem(base.join(f))?,
                    _ => {
                        return Err(Error::Config(format!(
                            "scenario `{}` needs exactly one of `problem` and `problem_file`",
                            e.name
                        )))
                    }
                };
                let allocators = e
                    .allocators
                    .into_iter()
                    .map(AllocatorConfig::from_value)
                    .collect::<Result<Vec<_>>>()?;
                Ok(Scenario {
                    name: e.name,
                    problem: Arc::new(problem),
                    allocators,
                    golden: e.golden,
                    labels: e.labels,
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub scenario: String,
    pub allocator: String,
    pub fairness_geomean: Option<f64>,
    pub efficiency: Option<f64>,
    pub lp_solves: Option<usize>,
    pub iterations: Option<usize>,
    pub converged: Option<bool>,
    pub wall_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Scores every allocator of every scenario against `oracle` (or the
/// scenario's golden totals). Scenarios run in parallel; rows come back in
/// input order. A failing allocator yields a row with `error` set.
pub fn run_benchmark(scenarios: &[Scenario], oracle: &AllocatorConfig) -> Vec<BenchRow> {
    scenarios
        .par_iter()
        .map(|s| run_scenario(s, oracle))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

fn run_scenario(s: &Scenario, oracle: &AllocatorConfig) -> Vec<BenchRow> {
    let failed = |allocator: &str, wall_ms: f64, e: String| BenchRow {
        scenario: s.name.clone(),
        allocator: allocator.to_string(),
        fairness_geomean: None,
        efficiency: None,
        lp_solves: None,
        iterations: None,
        converged: None,
        wall_ms,
        error: Some(e),
    };
    let reference = match &s.golden {
        Some(g) => g.clone(),
        None => match oracle.run(&s.problem, &SolveSession::default()) {
            Ok(r) => r.totals,
            Err(e) => {
                let msg = format!("oracle {}: {e}", oracle.name());
                return s.allocators.iter().map(|a| failed(a.name(), 0.0, msg.clone())).collect();
            }
        },
    };
    let vartheta = default_vartheta(&s.problem);
    s.allocators
        .iter()
        .map(|cfg| {
            let start = Instant::now();
            let result = cfg.run(&s.problem, &SolveSession::default());
            let wall_ms = start.elapsed().as_secs_f64() * 1e3;
            let report = match result {
                Ok(r) => r,
                Err(e) => return failed(cfg.name(), wall_ms, e.to_string()),
            };
            match MetricsReport::compute(&report.totals, &reference, vartheta) {
                Ok(m) => BenchRow {
                    scenario: s.name.clone(),
                    allocator: cfg.name().to_string(),
                    fairness_geomean: Some(m.fairness_geomean),
                    efficiency: Some(m.efficiency_ratio),
                    lp_solves: Some(report.lp_solves),
                    iterations: Some(report.iterations),
                    converged: report.converged,
                    wall_ms,
                    error: None,
                },
                Err(e) => failed(cfg.name(), wall_ms, e.to_string()),
            }
        })
        .collect()
}

/// Writes rows under [`CSV_HEADER`]. Missing values are empty cells; a row
/// whose allocator failed has `error` in the `converged` column.
pub fn write_csv<W: Write>(rows: &[BenchRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    let opt = |v: Option<String>| v.unwrap_or_default();
    for r in rows {
        let converged = match (&r.error, r.converged) {
            (Some(_), _) => "error".to_string(),
            (None, c) => opt(c.map(|c| c.to_string())),
        };
        w.write_record([
            r.scenario.clone(),
            r.allocator.clone(),
            opt(r.fairness_geomean.map(|v| v.to_string())),
            opt(r.efficiency.map(|v| v.to_string())),
            opt(r.lp_solves.map(|v| v.to_string())),
            opt(r.iterations.map(|v| v.to_string())),
            converged,
            format!("{:.3}", r.wall_ms),
        ])?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::worked_example;

    #[test]
    fn exact_against_itself() {
        let s = Scenario {
            name: "toy".into(),
            problem: Arc::new(worked_example()),
            allocators: vec![AllocatorConfig::Exact, AllocatorConfig::from_name("gb").unwrap()],
            golden: None,
            labels: BTreeMap::new(),
        };
        let rows = run_benchmark(&[s], &AllocatorConfig::Exact);
        assert_eq!(rows.len(), 2);
        assert!((rows[0].fairness_geomean.unwrap() - 1.0).abs() < 1e-9);
        assert!((rows[0].efficiency.unwrap() - 1.0).abs() < 1e-9);
        assert_eq!(rows[1].lp_solves, Some(1));
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("scenario,allocator,fairness_geomean,efficiency,lp_solves,iterations,converged,wall_ms\n"));
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn failures_become_rows() {
        let s = Scenario {
            name: "bad".into(),
            problem: Arc::new(worked_example()),
            allocators: vec![AllocatorConfig::Oneshot { epsilon: Some(1e-20) }],
            golden: None,
            labels: BTreeMap::new(),
        };
        let rows = run_benchmark(&[s], &AllocatorConfig::Exact);
        assert!(rows[0].error.is_some());
    }
}
