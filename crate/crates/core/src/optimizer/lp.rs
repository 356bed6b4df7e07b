//! Bounded-variable revised primal simplex for `max cᵀx  s.t.  Ax ≤ b,  l ≤ x ≤ u`.

use crate::error::{invalid, Error, Result};

const PIVOT_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-9;
const DEGENERATE_RUN: usize = 50;
const REFACTOR_EVERY: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct LpRow {
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub rows: Vec<LpRow>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LpProblem {
    pub fn new(n: usize) -> LpProblem {
        LpProblem { objective: vec![0.0; n], rows: Vec::new(), lower: vec![0.0; n], upper: vec![f64::INFINITY; n] }
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) {
        self.rows.push(LpRow { coeffs, rhs });
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.objective.len();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(invalid("bound vectors do not match the variable count"));
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(invalid("objective coefficients must be finite"));
        }
        for j in 0..n {
            if self.lower[j].is_nan() || self.upper[j].is_nan() || self.lower[j] > self.upper[j] {
                return Err(invalid(format!("variable {j} has bounds [{}, {}]", self.lower[j], self.upper[j])));
            }
            if self.lower[j] == f64::NEG_INFINITY && self.upper[j] == f64::INFINITY {
                return Err(invalid(format!("variable {j} is free; give it a finite bound")));
            }
        }
        for (i, r) in self.rows.iter().enumerate() {
            if !r.rhs.is_finite() {
                return Err(invalid(format!("row {i} has non-finite bound")));
            }
            for &(j, a) in &r.coeffs {
                if j >= n || !a.is_finite() {
                    return Err(invalid(format!("row {i} has an invalid coefficient")));
                }
            }
        }
        Ok(())
    }

    /// Largest violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for r in &self.rows {
            let lhs: f64 = r.coeffs.iter().map(|&(j, a)| a * x[j]).sum();
            worst = worst.max(lhs - r.rhs);
        }
        for j in 0..x.len() {
            worst = worst.max(self.lower[j] - x[j]).max(x[j] - self.upper[j]);
        }
        worst
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Row shadow prices (nonnegative at optimum).
    pub duals: Vec<f64>,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Structural,
    Slack,
    Artificial,
}

/// Simplex state kept between solves so a changed objective can restart
/// from the previous optimal basis.
#[derive(Debug, Clone)]
pub struct Simplex {
    n: usize,
    m: usize,
    /// Scaled structural columns.
    cols: Vec<Vec<(usize, f64)>>,
    row_scale: Vec<f64>,
    b: Vec<f64>,
    /// Artificial row for each artificial variable.
    art_rows: Vec<usize>,
    cost: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    x: Vec<f64>,
    basis: Vec<usize>,
    in_basis: Vec<Option<usize>>,
    /// Column-major `m x m`.
    binv: Vec<f64>,
    since_refactor: usize,
    iterations: usize,
    feasible: bool,
    problem: LpProblem,
}

impl Simplex {
    pub fn new(problem: &LpProblem) -> Result<Simplex> {
        problem.validate()?;
        let n = problem.objective.len();
        let m = problem.rows.len();
        let mut row_scale = vec![1.0; m];
        for (i, r) in problem.rows.iter().enumerate() {
            let big = r.coeffs.iter().fold(0.0f64, |acc, &(_, a)| acc.max(a.abs()));
            if big > 0.0 {
                row_scale[i] = 1.0 / big;
            }
        }
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (i, r) in problem.rows.iter().enumerate() {
            for &(j, a) in &r.coeffs {
                if a != 0.0 {
                    cols[j].push((i, a * row_scale[i]));
                }
            }
        }
        for c in &mut cols {
            c.sort_by_key(|e| e.0);
            // Merge duplicate entries for the same row.
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(c.len());
            for &(i, a) in c.iter() {
                match merged.last_mut() {
                    Some(last) if last.0 == i => last.1 += a,
                    _ => merged.push((i, a)),
                }
            }
            *c = merged;
        }
        let b: Vec<f64> = problem.rows.iter().zip(&row_scale).map(|(r, s)| r.rhs * s).collect();

        let mut lo = problem.lower.clone();
        let mut hi = problem.upper.clone();
        let mut x: Vec<f64> = (0..n).map(|j| if lo[j].is_finite() { lo[j] } else { hi[j] }).collect();
        lo.extend(std::iter::repeat_n(0.0, m));
        hi.extend(std::iter::repeat_n(f64::INFINITY, m));

        let mut resid = b.clone();
        for (j, col) in cols.iter().enumerate() {
            for &(i, a) in col {
                resid[i] -= a * x[j];
            }
        }
        let mut basis = Vec::with_capacity(m);
        let mut art_rows = Vec::new();
        let mut slack_vals = vec![0.0; m];
        for i in 0..m {
            if resid[i] >= 0.0 {
                slack_vals[i] = resid[i];
                basis.push(n + i);
            } else {
                art_rows.push(i);
                basis.push(n + m + art_rows.len() - 1);
            }
        }
        x.extend(slack_vals);
        for &i in &art_rows {
            lo.push(0.0);
            hi.push(f64::INFINITY);
            x.push(-resid[i]);
        }
        let total = n + m + art_rows.len();
        let mut in_basis = vec![None; total];
        for (r, &v) in basis.iter().enumerate() {
            in_basis[v] = Some(r);
        }
        let mut s = Simplex {
            n,
            m,
            cols,
            row_scale,
            b,
            art_rows,
            cost: vec![0.0; total],
            lo,
            hi,
            x,
            basis,
            in_basis,
            binv: Vec::new(),
            since_refactor: 0,
            iterations: 0,
            feasible: false,
            problem: problem.clone(),
        };
        s.refactor()?;
        Ok(s)
    }

    fn kind(&self, j: usize) -> Kind {
        if j < self.n {
            Kind::Structural
        } else if j < self.n + self.m {
            Kind::Slack
        } else {
            Kind::Artificial
        }
    }

    /// Calls `f(row, coeff)` for each nonzero of column `j`.
    fn for_col<F: FnMut(usize, f64)>(&self, j: usize, mut f: F) {
        match self.kind(j) {
            Kind::Structural => {
                for &(i, a) in &self.cols[j] {
                    f(i, a);
                }
            }
            Kind::Slack => f(j - self.n, 1.0),
            Kind::Artificial => f(self.art_rows[j - self.n - self.m], -1.0),
        }
    }

    fn ftran(&self, j: usize) -> Vec<f64> {
        let m = self.m;
        let mut alpha = vec![0.0; m];
        self.for_col(j, |i, a| {
            let col = &self.binv[i * m..(i + 1) * m];
            for (r, v) in alpha.iter_mut().enumerate() {
                *v += a * col[r];
            }
        });
        alpha
    }

    fn refactor(&mut self) -> Result<()> {
        let m = self.m;
        // Dense basis matrix, row-major, then Gauss-Jordan to its inverse.
        let mut a = vec![0.0; m * m];
        for (r, &j) in self.basis.iter().enumerate() {
            self.for_col(j, |i, v| a[i * m + r] = v);
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for c in 0..m {
            let (p, best) = (c..m)
                .map(|r| (r, a[r * m + c].abs()))
                .max_by(|x, y| x.1.total_cmp(&y.1))
                .unwrap_or((c, 0.0));
            if best < 1e-13 {
                return Err(Error::Internal("singular simplex basis".into()));
            }
            if p != c {
                for k in 0..m {
                    a.swap(p * m + k, c * m + k);
                    inv.swap(p * m + k, c * m + k);
                }
            }
            let d = a[c * m + c];
            for k in 0..m {
                a[c * m + k] /= d;
                inv[c * m + k] /= d;
            }
            for r in 0..m {
                if r != c {
                    let f = a[r * m + c];
                    if f != 0.0 {
                        for k in 0..m {
                            a[r * m + k] -= f * a[c * m + k];
                            inv[r * m + k] -= f * inv[c * m + k];
                        }
                    }
                }
            }
        }
        // Store column-major.
        let mut binv = vec![0.0; m * m];
        for r in 0..m {
            for i in 0..m {
                binv[i * m + r] = inv[r * m + i];
            }
        }
        self.binv = binv;
        self.since_refactor = 0;
        self.recompute_basics();
        Ok(())
    }

    fn recompute_basics(&mut self) {
        let m = self.m;
        let mut rhs = self.b.clone();
        for j in 0..self.x.len() {
            if self.in_basis[j].is_none() && self.x[j] != 0.0 {
                let v = self.x[j];
                self.for_col(j, |i, a| rhs[i] -= a * v);
            }
        }
        for r in 0..m {
            let mut s = 0.0;
            for (i, v) in rhs.iter().enumerate() {
                s += self.binv[i * m + r] * v;
            }
            let j = self.basis[r];
            self.x[j] = s;
        }
    }

    fn duals(&self) -> Vec<f64> {
        let m = self.m;
        (0..m)
            .map(|i| {
                let col = &self.binv[i * m..(i + 1) * m];
                self.basis.iter().enumerate().map(|(r, &j)| self.cost[j] * col[r]).sum()
            })
            .collect()
    }

    fn reduced_cost(&self, y: &[f64], j: usize) -> f64 {
        let mut d = self.cost[j];
        self.for_col(j, |i, a| d -= y[i] * a);
        d
    }

    /// Runs simplex iterations on the current cost vector until optimal.
    fn iterate(&mut self) -> Result<()> {
        let total = self.x.len();
        let limit = 50_000 + 50 * total;
        let mut degenerate = 0usize;
        loop {
            if self.iterations > limit {
                return Err(Error::Internal("simplex iteration limit reached".into()));
            }
            if self.since_refactor >= REFACTOR_EVERY {
                self.refactor()?;
            }
            let bland = degenerate >= DEGENERATE_RUN;
            let y = self.duals();
            let mut enter: Option<(usize, f64, f64)> = None;
            for j in 0..total {
                if self.in_basis[j].is_some() || self.lo[j] == self.hi[j] {
                    continue;
                }
                let d = self.reduced_cost(&y, j);
                let tol = 1e-10 * self.cost[j].abs().max(1.0);
                let dir = if d > tol && self.x[j] < self.hi[j] {
                    1.0
                } else if d < -tol && self.x[j] > self.lo[j] {
                    -1.0
                } else {
                    continue;
                };
                if bland {
                    enter = Some((j, d, dir));
                    break;
                }
                if enter.is_none_or(|e| d.abs() > e.1.abs()) {
                    enter = Some((j, d, dir));
                }
            }
            let Some((j, _, dir)) = enter else {
                return Ok(());
            };
            let alpha = self.ftran(j);
            let mut theta = self.hi[j] - self.lo[j];
            let mut leave: Option<(usize, f64)> = None;
            for (r, &ar) in alpha.iter().enumerate() {
                let delta = dir * ar;
                if delta.abs() <= PIVOT_TOL {
                    continue;
                }
                let bj = self.basis[r];
                let room = if delta > 0.0 { self.x[bj] - self.lo[bj] } else { self.hi[bj] - self.x[bj] };
                let ratio = (room.max(0.0)) / delta.abs();
                let better = match leave {
                    None => ratio < theta,
                    Some((lr, _)) => {
                        if ratio < theta - 1e-12 {
                            true
                        } else if ratio <= theta + 1e-12 {
                            if bland {
                                bj < self.basis[lr]
                            } else {
                                ar.abs() > alpha[lr].abs()
                            }
                        } else {
                            false
                        }
                    }
                };
                if better {
                    theta = ratio.min(theta);
                    leave = Some((r, ratio));
                }
            }
            if theta.is_infinite() {
                return Err(Error::Unbounded);
            }
            self.iterations += 1;
            if theta <= 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            for (r, &ar) in alpha.iter().enumerate() {
                let bj = self.basis[r];
                self.x[bj] -= dir * theta * ar;
            }
            match leave {
                None => {
                    // Bound flip.
                    self.x[j] = if dir > 0.0 { self.hi[j] } else { self.lo[j] };
                }
                Some((r, _)) => {
                    self.x[j] += dir * theta;
                    let out = self.basis[r];
                    let delta = dir * alpha[r];
                    self.x[out] = if delta > 0.0 { self.lo[out] } else { self.hi[out] };
                    self.basis[r] = j;
                    self.in_basis[out] = None;
                    self.in_basis[j] = Some(r);
                    self.pivot(r, &alpha);
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, alpha: &[f64]) {
        let m = self.m;
        let piv = alpha[r];
        for i in 0..m {
            let col = &mut self.binv[i * m..(i + 1) * m];
            let v = col[r] / piv;
            if v != 0.0 {
                for (rr, c) in col.iter_mut().enumerate() {
                    if rr != r {
                        *c -= alpha[rr] * v;
                    }
                }
            }
            col[r] = v;
        }
        self.since_refactor += 1;
    }

    fn phase_one(&mut self) -> Result<()> {
        if self.feasible {
            return Ok(());
        }
        let first_art = self.n + self.m;
        let total = self.x.len();
        for j in 0..total {
            self.cost[j] = if j >= first_art { -1.0 } else { 0.0 };
        }
        if total > first_art {
            self.iterate()?;
            self.refactor()?;
            let infeas: f64 = (first_art..total).map(|j| self.x[j].abs()).sum();
            if infeas > FEAS_TOL {
                return Err(Error::Infeasible);
            }
            for j in first_art..total {
                self.hi[j] = 0.0;
                self.lo[j] = 0.0;
                if self.in_basis[j].is_none() {
                    self.x[j] = 0.0;
                }
            }
        }
        self.feasible = true;
        Ok(())
    }

    pub fn set_objective(&mut self, c: &[f64]) -> Result<()> {
        if c.len() != self.n || c.iter().any(|v| !v.is_finite()) {
            return Err(invalid("objective has wrong length or non-finite entries"));
        }
        self.problem.objective = c.to_vec();
        Ok(())
    }

    /// Solves from the current basis.
    pub fn solve(&mut self) -> Result<LpSolution> {
        self.phase_one()?;
        for j in 0..self.x.len() {
            self.cost[j] = if j < self.n { self.problem.objective[j] } else { 0.0 };
        }
        self.iterate()?;
        self.refactor()?;
        // Drift after refactoring can expose a last improving column.
        self.iterate()?;
        let x: Vec<f64> = (0..self.n).map(|j| self.x[j].clamp(self.problem.lower[j], self.problem.upper[j])).collect();
        let viol = self.problem.max_violation(&x);
        if viol > FEAS_TOL * (1.0 + self.problem.rows.iter().map(|r| r.rhs.abs()).fold(0.0, f64::max)) {
            return Err(Error::Internal(format!("simplex solution violates constraints by {viol}")));
        }
        let duals = self.duals().iter().zip(&self.row_scale).map(|(y, s)| y * s).collect();
        Ok(LpSolution { objective: self.problem.value(&x), x, duals, iterations: self.iterations })
    }
}

pub fn lp_solve(problem: &LpProblem) -> Result<LpSolution> {
    Simplex::new(problem)?.solve()
}
