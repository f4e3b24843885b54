//! Backend-neutral linear programs.
//!
//! Every optimization-based allocator builds a [`LinearProgram`] and hands it
//! to a [`SolveSession`], which forwards to an [`LpBackend`] (the built-in
//! [`Simplex`] unless another backend is plugged in) and counts solves.

mod feasible;
mod format;
mod simplex;

use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};

pub use feasible::{build_feasible_alloc, FeasibleAllocLp};
pub use format::write_lp_format;
pub use simplex::{Simplex, SimplexOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub coeffs: Vec<(VarId, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

/// A maximization LP over bounded variables.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearProgram {
    pub name: String,
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    pub objective: Vec<(VarId, f64)>,
}

impl LinearProgram {
    pub fn new(name: impl Into<String>) -> Self {
        LinearProgram {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> VarId {
        self.variables.push(Variable {
            name: name.into(),
            lower,
            upper,
        });
        VarId(self.variables.len() - 1)
    }

    /// Adds a row; repeated variables in `coeffs` are summed.
    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        coeffs: impl IntoIterator<Item = (VarId, f64)>,
        relation: Relation,
        rhs: f64,
    ) -> usize {
        self.constraints.push(Constraint {
            name: name.into(),
            coeffs: merge_terms(coeffs),
            relation,
            rhs,
        });
        self.constraints.len() - 1
    }

    pub fn set_objective(&mut self, coeffs: impl IntoIterator<Item = (VarId, f64)>) {
        self.objective = merge_terms(coeffs);
    }

    pub fn add_objective_term(&mut self, var: VarId, coeff: f64) {
        let mut terms = std::mem::take(&mut self.objective);
        terms.push((var, coeff));
        self.objective = merge_terms(terms);
    }

    pub fn set_bounds(&mut self, var: VarId, lower: f64, upper: f64) {
        let v = &mut self.variables[var.0];
        v.lower = lower;
        v.upper = upper;
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    /// Structural checks: references, bound order, finite coefficients.
    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Error::MalformedLp {
            lp: self.name.clone(),
            reason,
        };
        for v in &self.variables {
            if v.lower.is_nan() || v.upper.is_nan() || v.lower > v.upper {
                return Err(bad(format!("variable {} has bounds [{}, {}]", v.name, v.lower, v.upper)));
            }
            if v.lower == f64::INFINITY || v.upper == f64::NEG_INFINITY {
                return Err(bad(format!("variable {} has an empty domain", v.name)));
            }
        }
        let n = self.variables.len();
        let check_terms = |terms: &[(VarId, f64)], what: &str| -> Result<()> {
            for &(v, c) in terms {
                if v.0 >= n {
                    return Err(bad(format!("{what} references undeclared variable #{}", v.0)));
                }
                if !c.is_finite() {
                    return Err(bad(format!("{what} has a non-finite coefficient")));
                }
            }
            Ok(())
        };
        for c in &self.constraints {
            check_terms(&c.coeffs, &format!("constraint {}", c.name))?;
            if !c.rhs.is_finite() {
                return Err(bad(format!("constraint {} has a non-finite rhs", c.name)));
            }
        }
        check_terms(&self.objective, "objective")
    }

    /// Largest violation of any row or bound by `values`.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (v, x) in self.variables.iter().zip(values) {
            worst = worst.max(v.lower - x).max(x - v.upper);
        }
        for c in &self.constraints {
            let lhs: f64 = c.coeffs.iter().map(|&(v, a)| a * values[v.0]).sum();
            let viol = match c.relation {
                Relation::Le => lhs - c.rhs,
                Relation::Ge => c.rhs - lhs,
                Relation::Eq => (lhs - c.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        worst
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective.iter().map(|&(v, c)| c * values[v.0]).sum()
    }
}

fn merge_terms(terms: impl IntoIterator<Item = (VarId, f64)>) -> Vec<(VarId, f64)> {
    let mut out: Vec<(VarId, f64)> = Vec::new();
    for (v, c) in terms {
        match out.iter_mut().find(|(w, _)| *w == v) {
            Some(slot) => slot.1 += c,
            None => out.push((v, c)),
        }
    }
    out.retain(|&(_, c)| c != 0.0);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub values: Vec<f64>,
    pub objective: f64,
}

impl LpSolution {
    pub fn value(&self, var: VarId) -> f64 {
        self.values[var.0]
    }

    pub fn value_by_name(&self, lp: &LinearProgram, name: &str) -> Option<f64> {
        lp.variables
            .iter()
            .position(|v| v.name == name)
            .map(|i| self.values[i])
    }

    /// Turns non-optimal statuses into errors naming the LP.
    pub fn into_optimal(self, lp: &LinearProgram) -> Result<LpSolution> {
        match self.status {
            LpStatus::Optimal => Ok(self),
            LpStatus::Infeasible => Err(Error::Infeasible { lp: lp.name.clone() }),
            LpStatus::Unbounded => Err(Error::Unbounded { lp: lp.name.clone() }),
        }
    }
}

/// Anything that can solve a [`LinearProgram`] to optimality.
pub trait LpBackend: Send + Sync {
    fn name(&self) -> &str;

    fn solve(&self, lp: &LinearProgram) -> Result<LpSolution>;
}

/// Counts LP solves and optionally dumps every LP to disk in CPLEX LP format.
pub struct SolveSession {
    backend: Arc<dyn LpBackend>,
    solves: AtomicUsize,
    dump_dir: Option<PathBuf>,
}

impl Default for SolveSession {
    fn default() -> Self {
        Self::new(Arc::new(Simplex::default()))
    }
}

impl SolveSession {
    pub fn new(backend: Arc<dyn LpBackend>) -> Self {
        SolveSession {
            backend,
            solves: AtomicUsize::new(0),
            dump_dir: None,
        }
    }

    pub fn with_dump_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.dump_dir = Some(dir.into());
        self
    }

    pub fn backend(&self) -> &dyn LpBackend {
        self.backend.as_ref()
    }

    /// Number of [`SolveSession::solve`] calls so far.
    pub fn solve_count(&self) -> usize {
        self.solves.load(Ordering::SeqCst)
    }

    pub fn solve(&self, lp: &LinearProgram) -> Result<LpSolution> {
        let n = self.solves.fetch_add(1, Ordering::SeqCst);
        if let Some(dir) = &self.dump_dir {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            let file = dir.join(format!("{n:05}-{}.lp", sanitize_file(&lp.name)));
            let mut text = String::new();
            write_lp_format(lp, &mut text).expect("formatting into a String");
            std::fs::write(&file, text).map_err(|e| Error::io(&file, e))?;
        }
        self.backend.solve(lp)
    }

    /// Solves and requires an optimal status.
    pub fn solve_optimal(&self, lp: &LinearProgram) -> Result<LpSolution> {
        self.solve(lp)?.into_optimal(lp)
    }
}

fn sanitize_file(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}
