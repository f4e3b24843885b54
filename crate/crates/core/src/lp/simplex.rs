//! Dense bounded-variable primal simplex.
//!
//! Two phases over a full tableau. Every column has lower bound 0 after the
//! variables are shifted; nonbasic columns sit at either bound. Pricing is
//! Dantzig's rule; after a run of degenerate pivots it switches to Bland's
//! smallest-index rule until the objective moves again, which rules out
//! cycling while keeping the common case fast. All choices are index-ordered
//! so identical inputs give identical pivots.

use crate::error::{Error, Result};

use super::{LinearProgram, LpBackend, LpSolution, LpStatus, Relation};

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    /// Smallest absolute pivot element accepted by the ratio test.
    pub pivot_tol: f64,
    /// Primal feasibility tolerance, relative to the largest right-hand side.
    pub primal_tol: f64,
    /// Optimality tolerance on reduced costs. `None` picks
    /// `clamp(0.01 * min |c_j|, 1e-14, 1e-9)` from the objective.
    pub dual_tol: Option<f64>,
    /// Pivot limit. `None` means `max(20_000, 50 * (rows + columns))`.
    pub max_iterations: Option<usize>,
    /// Degenerate pivots tolerated before switching to Bland's rule.
    pub degenerate_switch: usize,
    /// Reduced costs and basic values are recomputed this often.
    pub refresh_every: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            pivot_tol: 1e-9,
            primal_tol: 1e-9,
            dual_tol: None,
            max_iterations: None,
            degenerate_switch: 25,
            refresh_every: 50,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Simplex {
    pub options: SimplexOptions,
}

impl Simplex {
    pub fn new(options: SimplexOptions) -> Self {
        Simplex { options }
    }
}

impl LpBackend for Simplex {
    fn name(&self) -> &str {
        "builtin-simplex"
    }

    fn solve(&self, lp: &LinearProgram) -> Result<LpSolution> {
        lp.validate()?;
        let mut sf = StandardForm::build(lp);
        let mut tab = Tableau::new(&sf, &self.options, lp);
        let status = tab.run(&mut sf, lp)?;
        let values = sf.recover(&tab.column_values());
        let objective = lp.objective_value(&values);
        Ok(LpSolution {
            status,
            values,
            objective,
        })
    }
}

/// How an original variable maps onto shifted, nonnegative columns.
#[derive(Debug, Clone, Copy)]
enum Map {
    /// x = offset + y
    Up { col: usize, offset: f64 },
    /// x = offset - y
    Down { col: usize, offset: f64 },
    /// x = y+ - y-
    Free { pos: usize, neg: usize },
}

struct StandardForm {
    maps: Vec<Map>,
    /// Dense rows over all columns (structural, slack, artificial).
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    /// Initial basic column per row.
    basis: Vec<usize>,
    artificial_from: usize,
}

impl StandardForm {
    fn build(lp: &LinearProgram) -> Self {
        let mut maps = Vec::with_capacity(lp.variables.len());
        let mut upper = Vec::new();
        let mut cost = Vec::new();
        for v in &lp.variables {
            if v.lower.is_finite() {
                maps.push(Map::Up {
                    col: upper.len(),
                    offset: v.lower,
                });
                upper.push(v.upper - v.lower);
            } else if v.upper.is_finite() {
                maps.push(Map::Down {
                    col: upper.len(),
                    offset: v.upper,
                });
                upper.push(f64::INFINITY);
            } else {
                maps.push(Map::Free {
                    pos: upper.len(),
                    neg: upper.len() + 1,
                });
                upper.push(f64::INFINITY);
                upper.push(f64::INFINITY);
            }
        }
        let n_struct = upper.len();
        cost.resize(n_struct, 0.0);
        for &(v, c) in &lp.objective {
            match maps[v.0] {
                Map::Up { col, .. } => cost[col] += c,
                Map::Down { col, .. } => cost[col] -= c,
                Map::Free { pos, neg } => {
                    cost[pos] += c;
                    cost[neg] -= c;
                }
            }
        }

        let m = lp.constraints.len();
        let n_slack = lp
            .constraints
            .iter()
            .filter(|c| c.relation != Relation::Eq)
            .count();
        let mut rows = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        let mut slack_col = Vec::with_capacity(m);
        let mut next_slack = n_struct;
        for c in &lp.constraints {
            let mut row = vec![0.0; n_struct + n_slack];
            let mut b = c.rhs;
            for &(v, a) in &c.coeffs {
                match maps[v.0] {
                    Map::Up { col, offset } => {
                        row[col] += a;
                        b -= a * offset;
                    }
                    Map::Down { col, offset } => {
                        row[col] -= a;
                        b -= a * offset;
                    }
                    Map::Free { pos, neg } => {
                        row[pos] += a;
                        row[neg] -= a;
                    }
                }
            }
            match c.relation {
                Relation::Le => {
                    row[next_slack] = 1.0;
                    slack_col.push(Some(next_slack));
                    next_slack += 1;
                }
                Relation::Ge => {
                    row[next_slack] = -1.0;
                    slack_col.push(Some(next_slack));
                    next_slack += 1;
                }
                Relation::Eq => slack_col.push(None),
            }
            if b < 0.0 {
                row.iter_mut().for_each(|x| *x = -*x);
                b = -b;
            }
            rows.push(row);
            rhs.push(b);
        }
        upper.resize(n_struct + n_slack, f64::INFINITY);
        cost.resize(n_struct + n_slack, 0.0);

        // Rows whose slack has coefficient +1 start with the slack basic;
        // the rest get an artificial column.
        let artificial_from = n_struct + n_slack;
        let mut basis = Vec::with_capacity(m);
        let mut n_art = 0;
        for (i, row) in rows.iter().enumerate() {
            match slack_col[i] {
                Some(s) if row[s] > 0.0 => basis.push(s),
                _ => {
                    basis.push(artificial_from + n_art);
                    n_art += 1;
                }
            }
        }
        for (i, row) in rows.iter_mut().enumerate() {
            row.resize(artificial_from + n_art, 0.0);
            if basis[i] >= artificial_from {
                row[basis[i]] = 1.0;
            }
        }
        upper.resize(artificial_from + n_art, f64::INFINITY);
        cost.resize(artificial_from + n_art, 0.0);

        StandardForm {
            maps,
            rows,
            rhs,
            upper,
            cost,
            basis,
            artificial_from,
        }
    }

    fn recover(&self, cols: &[f64]) -> Vec<f64> {
        self.maps
            .iter()
            .map(|m| match *m {
                Map::Up { col, offset } => offset + cols[col],
                Map::Down { col, offset } => offset - cols[col],
                Map::Free { pos, neg } => cols[pos] - cols[neg],
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum State {
    Basic,
    Lower,
    Upper,
}

struct Tableau {
    m: usize,
    n: usize,
    /// Row-major `m x (n + 1)`; the last column is `B^-1 b`.
    t: Vec<f64>,
    basis: Vec<usize>,
    state: Vec<State>,
    upper: Vec<f64>,
    /// Current values of the basic variables, by row.
    beta: Vec<f64>,
    reduced: Vec<f64>,
    cost: Vec<f64>,
    opts: SimplexOptions,
    dual_tol: f64,
    feas_tol: f64,
    iterations: usize,
    limit: usize,
}

enum Step {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn new(sf: &StandardForm, opts: &SimplexOptions, lp: &LinearProgram) -> Self {
        let m = sf.rows.len();
        let n = sf.upper.len();
        let w = n + 1;
        let mut t = vec![0.0; m * w];
        for i in 0..m {
            t[i * w..i * w + n].copy_from_slice(&sf.rows[i]);
            t[i * w + n] = sf.rhs[i];
        }
        let mut state = vec![State::Lower; n];
        for &b in &sf.basis {
            state[b] = State::Basic;
        }
        let min_cost = lp
            .objective
            .iter()
            .map(|&(_, c)| c.abs())
            .filter(|c| *c > 0.0)
            .fold(f64::INFINITY, f64::min);
        let dual_tol = opts.dual_tol.unwrap_or_else(|| {
            if min_cost.is_finite() {
                (0.01 * min_cost).clamp(1e-14, 1e-9)
            } else {
                1e-9
            }
        });
        let max_rhs = sf.rhs.iter().fold(1.0_f64, |a, b| a.max(b.abs()));
        let limit = opts
            .max_iterations
            .unwrap_or_else(|| (50 * (m + n)).max(20_000));
        Tableau {
            m,
            n,
            t,
            basis: sf.basis.clone(),
            state,
            upper: sf.upper.clone(),
            beta: sf.rhs.clone(),
            reduced: vec![0.0; n],
            cost: vec![0.0; n],
            opts: *opts,
            dual_tol,
            feas_tol: opts.primal_tol * max_rhs,
            iterations: 0,
            limit,
        }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * (self.n + 1) + j]
    }

    fn run(&mut self, sf: &mut StandardForm, lp: &LinearProgram) -> Result<LpStatus> {
        let art = sf.artificial_from;
        if art < self.n {
            // Phase 1: maximize minus the sum of artificials.
            let mut c1 = vec![0.0; self.n];
            c1[art..].iter_mut().for_each(|c| *c = -1.0);
            self.set_cost(c1);
            let saved_tol = self.dual_tol;
            self.dual_tol = 1e-11;
            if let Step::Unbounded = self.optimize(lp)? {
                unreachable!("phase 1 objective is bounded above by 0");
            }
            self.dual_tol = saved_tol;
            self.refresh_values();
            let infeasibility: f64 = (0..self.m)
                .filter(|&i| self.basis[i] >= art)
                .map(|i| self.beta[i])
                .sum::<f64>()
                + (art..self.n)
                    .filter(|&j| self.state[j] == State::Upper)
                    .map(|j| self.upper[j])
                    .sum::<f64>();
            if infeasibility > self.feas_tol {
                return Ok(LpStatus::Infeasible);
            }
            for j in art..self.n {
                self.upper[j] = 0.0;
                if self.state[j] == State::Upper {
                    self.state[j] = State::Lower;
                }
            }
        }
        self.set_cost(sf.cost.clone());
        Ok(match self.optimize(lp)? {
            Step::Unbounded => LpStatus::Unbounded,
            _ => LpStatus::Optimal,
        })
    }

    fn set_cost(&mut self, cost: Vec<f64>) {
        self.cost = cost;
        self.refresh_reduced();
    }

    fn refresh_reduced(&mut self) {
        let mut d = self.cost.clone();
        for i in 0..self.m {
            let cb = self.cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.t[i * (self.n + 1)..i * (self.n + 1) + self.n];
                for (dj, &a) in d.iter_mut().zip(row) {
                    *dj -= cb * a;
                }
            }
        }
        for i in 0..self.m {
            d[self.basis[i]] = 0.0;
        }
        self.reduced = d;
    }

    /// Recomputes basic values from `B^-1 b` and the nonbasic columns at
    /// their upper bounds.
    fn refresh_values(&mut self) {
        let w = self.n + 1;
        for i in 0..self.m {
            let row = &self.t[i * w..(i + 1) * w];
            let mut v = row[self.n];
            for j in 0..self.n {
                if self.state[j] == State::Upper && row[j] != 0.0 {
                    v -= row[j] * self.upper[j];
                }
            }
            self.beta[i] = v;
        }
    }

    fn optimize(&mut self, lp: &LinearProgram) -> Result<Step> {
        let mut degenerate_run = 0usize;
        let mut since_refresh = 0usize;
        loop {
            if since_refresh >= self.opts.refresh_every {
                self.refresh_reduced();
                self.refresh_values();
                since_refresh = 0;
            }
            let bland = degenerate_run >= self.opts.degenerate_switch;
            let Some(q) = self.price(bland) else {
                // Confirm with fresh reduced costs before declaring optimality.
                if since_refresh > 0 {
                    self.refresh_reduced();
                    self.refresh_values();
                    since_refresh = 0;
                    if self.price(bland).is_some() {
                        continue;
                    }
                }
                return Ok(Step::Optimal);
            };
            self.iterations += 1;
            if self.iterations > self.limit {
                return Err(Error::IterationLimit {
                    lp: lp.name.clone(),
                    limit: self.limit,
                });
            }
            match self.step(q, bland) {
                None => return Ok(Step::Unbounded),
                Some(theta) => {
                    if theta > 1e-12 {
                        degenerate_run = 0;
                    } else {
                        degenerate_run += 1;
                    }
                }
            }
            since_refresh += 1;
        }
    }

    /// Entering column, or `None` at optimality.
    fn price(&self, bland: bool) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.n {
            let gain = match self.state[j] {
                State::Basic => continue,
                _ if self.upper[j] <= 0.0 => continue,
                State::Lower => self.reduced[j],
                State::Upper => -self.reduced[j],
            };
            if gain > self.dual_tol {
                if bland {
                    return Some(j);
                }
                if best.is_none_or(|(_, g)| gain > g) {
                    best = Some((j, gain));
                }
            }
        }
        best.map(|(j, _)| j)
    }

    /// Moves column `q` as far as the bounds allow. Returns the step length,
    /// or `None` when the direction is unbounded.
    fn step(&mut self, q: usize, bland: bool) -> Option<f64> {
        let sigma = if self.state[q] == State::Lower { 1.0 } else { -1.0 };
        let mut theta = self.upper[q];
        let mut leave: Option<(usize, bool)> = None; // (row, leaves at upper)
        let mut leave_mag = 0.0;
        for i in 0..self.m {
            let a = self.at(i, q);
            if a.abs() < self.opts.pivot_tol {
                continue;
            }
            let delta = sigma * a; // basic moves by -delta per unit step
            let b = self.basis[i];
            let (limit, to_upper) = if delta > 0.0 {
                (self.beta[i].max(0.0) / delta, false)
            } else {
                let u = self.upper[b];
                if !u.is_finite() {
                    continue;
                }
                ((u - self.beta[i]).max(0.0) / -delta, true)
            };
            let eps = 1e-12 * (1.0 + limit.abs());
            let take = if limit < theta - eps {
                true
            } else if limit <= theta + eps {
                match leave {
                    Some((r, _)) if bland => b < self.basis[r],
                    Some(_) => a.abs() > leave_mag,
                    None => false,
                }
            } else {
                false
            };
            if take {
                theta = theta.min(limit);
                leave = Some((i, to_upper));
                leave_mag = a.abs();
            }
        }
        if !theta.is_finite() {
            return None;
        }
        // Apply the move to basic values.
        for i in 0..self.m {
            let a = self.at(i, q);
            if a != 0.0 {
                self.beta[i] -= sigma * theta * a;
            }
        }
        let entering_value = if sigma > 0.0 { theta } else { self.upper[q] - theta };
        match leave {
            None => {
                // Bound flip.
                self.state[q] = if sigma > 0.0 { State::Upper } else { State::Lower };
            }
            Some((r, to_upper)) => {
                let out = self.basis[r];
                self.state[out] = if to_upper { State::Upper } else { State::Lower };
                self.pivot(r, q);
                self.beta[r] = entering_value;
            }
        }
        Some(theta)
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let w = self.n + 1;
        let piv = self.t[r * w + q];
        {
            let row = &mut self.t[r * w..(r + 1) * w];
            for x in row.iter_mut() {
                *x /= piv;
            }
            row[q] = 1.0;
        }
        let pivot_row: Vec<f64> = self.t[r * w..(r + 1) * w].to_vec();
        let nz: Vec<usize> = (0..w).filter(|&j| pivot_row[j] != 0.0).collect();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * w + q];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.t[i * w..(i + 1) * w];
            for &j in &nz {
                let v = row[j] - f * pivot_row[j];
                row[j] = if v.abs() < 1e-14 { 0.0 } else { v };
            }
            row[q] = 0.0;
        }
        let dq = self.reduced[q];
        if dq != 0.0 {
            for &j in &nz {
                if j < self.n {
                    self.reduced[j] -= dq * pivot_row[j];
                }
            }
        }
        self.reduced[q] = 0.0;
        self.basis[r] = q;
        self.state[q] = State::Basic;
    }

    fn column_values(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        for j in 0..self.n {
            if self.state[j] == State::Upper {
                x[j] = self.upper[j];
            }
        }
        for i in 0..self.m {
            x[self.basis[i]] = self.beta[i];
        }
        x
    }
}
