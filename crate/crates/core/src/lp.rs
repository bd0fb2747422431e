//! Dense two-phase simplex for small linear programs.
//!
//! Solves `maximize c·x` subject to rows `a·x {≤, =, ≥} b` and `x ≥ 0`.
//! Pivoting uses the most-negative reduced cost and switches to Bland's
//! rule after a run of degenerate pivots, which rules out cycling.

use thiserror::Error;

const EPS: f64 = 1e-11;
const DEGENERATE_RUN: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub cmp: Cmp,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearProgram {
    pub num_vars: usize,
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub x: Vec<f64>,
    pub value: f64,
    pub pivots: usize,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("linear program is infeasible (phase-one residual {0})")]
    Infeasible(f64),
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("simplex did not converge within {0} pivots")]
    IterationLimit(usize),
    #[error("constraint {row} has {found} coefficients, expected {expected}")]
    Shape {
        row: usize,
        found: usize,
        expected: usize,
    },
}

impl LinearProgram {
    pub fn new(num_vars: usize, objective: Vec<f64>) -> Self {
        Self {
            num_vars,
            objective,
            constraints: Vec::new(),
        }
    }

    pub fn push(&mut self, coeffs: Vec<f64>, cmp: Cmp, rhs: f64) {
        self.constraints.push(Constraint { coeffs, cmp, rhs });
    }

    pub fn solve(&self) -> Result<Solution, LpError> {
        Tableau::build(self)?.run(self)
    }
}

struct Tableau {
    rows: usize,
    cols: usize, // structural + slack + artificial, rhs stored separately
    a: Vec<f64>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    n_struct: usize,
    first_artificial: usize,
    pivots: usize,
    max_pivots: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Result<Self, LpError> {
        let n = lp.num_vars;
        for (row, c) in lp.constraints.iter().enumerate() {
            if c.coeffs.len() != n {
                return Err(LpError::Shape {
                    row,
                    found: c.coeffs.len(),
                    expected: n,
                });
            }
        }
        // Flip rows so every rhs is nonnegative.
        let rows: Vec<(Vec<f64>, Cmp, f64)> = lp
            .constraints
            .iter()
            .map(|c| {
                if c.rhs < 0.0 {
                    let cmp = match c.cmp {
                        Cmp::Le => Cmp::Ge,
                        Cmp::Ge => Cmp::Le,
                        Cmp::Eq => Cmp::Eq,
                    };
                    (c.coeffs.iter().map(|v| -v).collect(), cmp, -c.rhs)
                } else {
                    (c.coeffs.clone(), c.cmp, c.rhs)
                }
            })
            .collect();
        let m = rows.len();
        let n_slack = rows.iter().filter(|r| r.1 != Cmp::Eq).count();
        let n_art = rows.iter().filter(|r| r.1 != Cmp::Le).count();
        let cols = n + n_slack + n_art;
        let mut a = vec![0.0; m * cols];
        let mut rhs = vec![0.0; m];
        let mut basis = vec![0; m];
        let (mut s, mut art) = (n, n + n_slack);
        for (i, (coeffs, cmp, b)) in rows.into_iter().enumerate() {
            a[i * cols..i * cols + n].copy_from_slice(&coeffs);
            rhs[i] = b;
            match cmp {
                Cmp::Le => {
                    a[i * cols + s] = 1.0;
                    basis[i] = s;
                    s += 1;
                }
                Cmp::Ge => {
                    a[i * cols + s] = -1.0;
                    s += 1;
                    a[i * cols + art] = 1.0;
                    basis[i] = art;
                    art += 1;
                }
                Cmp::Eq => {
                    a[i * cols + art] = 1.0;
                    basis[i] = art;
                    art += 1;
                }
            }
        }
        Ok(Self {
            rows: m,
            cols,
            a,
            rhs,
            basis,
            n_struct: n,
            first_artificial: n + n_slack,
            pivots: 0,
            max_pivots: 50 * (m + cols) + 1000,
        })
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.cols + j]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let cols = self.cols;
        let p = self.at(r, c);
        for j in 0..cols {
            self.a[r * cols + j] /= p;
        }
        self.rhs[r] /= p;
        self.a[r * cols + c] = 1.0;
        let (pivot_row, pivot_rhs) = (self.a[r * cols..(r + 1) * cols].to_vec(), self.rhs[r]);
        for i in 0..self.rows {
            if i == r {
                continue;
            }
            let f = self.a[i * cols + c];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.a[i * cols..(i + 1) * cols];
            for (x, &pv) in row.iter_mut().zip(&pivot_row) {
                *x -= f * pv;
            }
            row[c] = 0.0;
            self.rhs[i] -= f * pivot_rhs;
            if self.rhs[i].abs() < EPS {
                self.rhs[i] = 0.0;
            }
        }
        self.basis[r] = c;
        self.pivots += 1;
    }

    /// Maximizes `cost·x` over the current feasible basis, with columns at
    /// or beyond `col_limit` never entering.
    fn optimize(&mut self, cost: &[f64], col_limit: usize) -> Result<(), LpError> {
        let mut degenerate = 0usize;
        loop {
            if self.pivots > self.max_pivots {
                return Err(LpError::IterationLimit(self.max_pivots));
            }
            // Reduced costs d_j = c_j - c_B · column_j.
            let mut entering = None;
            let mut best = EPS;
            let bland = degenerate >= DEGENERATE_RUN;
            let mut basic = vec![false; self.cols];
            for &b in &self.basis {
                basic[b] = true;
            }
            for j in 0..col_limit {
                if basic[j] {
                    continue;
                }
                let mut d = cost[j];
                for i in 0..self.rows {
                    let v = self.at(i, j);
                    if v != 0.0 {
                        d -= cost[self.basis[i]] * v;
                    }
                }
                if d > best {
                    entering = Some(j);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(c) = entering else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows {
                let v = self.at(i, c);
                if v > EPS {
                    let ratio = self.rhs[i] / v;
                    match leave {
                        Some((r, best_ratio))
                            if ratio > best_ratio + EPS
                                || (ratio > best_ratio - EPS && self.basis[i] > self.basis[r]) => {}
                        _ => leave = Some((i, ratio)),
                    }
                }
            }
            let Some((r, ratio)) = leave else {
                return Err(LpError::Unbounded);
            };
            degenerate = if ratio.abs() < EPS { degenerate + 1 } else { 0 };
            self.pivot(r, c);
        }
    }

    fn run(mut self, lp: &LinearProgram) -> Result<Solution, LpError> {
        if self.first_artificial < self.cols {
            let mut phase1 = vec![0.0; self.cols];
            for c in phase1.iter_mut().skip(self.first_artificial) {
                *c = -1.0;
            }
            self.optimize(&phase1, self.cols)?;
            let residual: f64 = (0..self.rows)
                .filter(|&i| self.basis[i] >= self.first_artificial)
                .map(|i| self.rhs[i])
                .sum();
            if residual > 1e-9 {
                return Err(LpError::Infeasible(residual));
            }
            // Drive zero-level artificials out of the basis where possible.
            for i in 0..self.rows {
                if self.basis[i] >= self.first_artificial {
                    if let Some(j) =
                        (0..self.first_artificial).find(|&j| self.at(i, j).abs() > 1e-9)
                    {
                        self.pivot(i, j);
                    }
                }
            }
        }
        let mut cost = vec![0.0; self.cols];
        cost[..self.n_struct].copy_from_slice(&lp.objective);
        // Redundant rows may keep an artificial basic at level zero; it
        // stays there because artificials are barred from entering and
        // its cost is zero.
        self.optimize(&cost, self.first_artificial)?;
        let mut x = vec![0.0; self.n_struct];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < self.n_struct {
                x[b] = self.rhs[i];
            }
        }
        let value = x.iter().zip(&lp.objective).map(|(a, b)| a * b).sum();
        Ok(Solution {
            x,
            value,
            pivots: self.pivots,
        })
    }
}
