//! Exact solution of two-player zero-sum matrix games.
//!
//! The row player maximizes. After shifting `B` so that every entry is at
//! least 1, the column player's problem becomes
//!
//! ```text
//! maximize  sum_j w_j   subject to  A w <= 1,  w >= 0
//! ```
//!
//! whose optimum is `1 / val(A)`. The row player's normalized strategy is
//! read off the slack reduced costs of the optimal tableau (the dual
//! solution), so one simplex run yields both strategies.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub const PIVOT_TOL: f64 = 1e-12;
pub const FEASIBILITY_TOL: f64 = 1e-10;
/// Largest accepted gap between the two players' guarantees.
pub const DUALITY_GAP_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixGameSolution {
    pub value: f64,
    pub row_strategy: Vec<f64>,
    pub col_strategy: Vec<f64>,
}

impl MatrixGameSolution {
    /// `(min_j (y^T B)_j, max_i (B z)_i)`: what the row strategy secures and
    /// what the column strategy concedes.
    pub fn guarantees(&self, payoff: &DMatrix<f64>) -> (f64, f64) {
        guarantees(payoff, &self.row_strategy, &self.col_strategy)
    }
}

/// Worst-case payoffs of a strategy pair: the row player's guaranteed
/// minimum and the column player's guaranteed maximum.
pub fn guarantees(payoff: &DMatrix<f64>, row: &[f64], col: &[f64]) -> (f64, f64) {
    let lower = (0..payoff.ncols())
        .map(|j| (0..payoff.nrows()).map(|i| row[i] * payoff[(i, j)]).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    let upper = (0..payoff.nrows())
        .map(|i| (0..payoff.ncols()).map(|j| payoff[(i, j)] * col[j]).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max);
    (lower, upper)
}

/// Value and one pair of optimal mixed strategies of the matrix game.
pub fn solve_matrix_game(payoff: &DMatrix<f64>) -> Result<MatrixGameSolution> {
    let (m, n) = payoff.shape();
    if m == 0 || n == 0 {
        return Err(Error::EmptyMatrix);
    }
    let mut min = f64::INFINITY;
    for i in 0..m {
        for j in 0..n {
            let b = payoff[(i, j)];
            if !b.is_finite() {
                return Err(Error::NonFinite { row: i, col: j });
            }
            min = min.min(b);
        }
    }
    if m == 1 || n == 1 {
        return Ok(solve_degenerate_shape(payoff));
    }

    let shift = 1.0 - min;
    let shifted = payoff.map(|b| b + shift);
    let (w, u) = Tableau::new(&shifted).solve()?;

    let total: f64 = w.iter().sum();
    if total <= PIVOT_TOL {
        return Err(Error::Simplex("degenerate optimum"));
    }
    let value = 1.0 / total - shift;
    Ok(MatrixGameSolution {
        value,
        row_strategy: normalize(u),
        col_strategy: normalize(w),
    })
}

// A single row or column: the lone player has no choice and the other
// plays a pure best reply (lowest index on ties).
fn solve_degenerate_shape(payoff: &DMatrix<f64>) -> MatrixGameSolution {
    let (m, n) = payoff.shape();
    let pick = |it: &mut dyn Iterator<Item = f64>, better: fn(f64, f64) -> bool| {
        let mut best = (0, f64::NAN);
        for (k, x) in it.enumerate() {
            if k == 0 || better(x, best.1) {
                best = (k, x);
            }
        }
        best
    };
    if m == 1 {
        let (j, value) = pick(&mut payoff.row(0).iter().copied(), |a, b| a < b);
        let mut col = vec![0.0; n];
        col[j] = 1.0;
        MatrixGameSolution {
            value,
            row_strategy: vec![1.0],
            col_strategy: col,
        }
    } else {
        let (i, value) = pick(&mut payoff.column(0).iter().copied(), |a, b| a > b);
        let mut row = vec![0.0; m];
        row[i] = 1.0;
        MatrixGameSolution {
            value,
            row_strategy: row,
            col_strategy: vec![1.0],
        }
    }
}

fn normalize(mut p: Vec<f64>) -> Vec<f64> {
    for x in p.iter_mut() {
        if *x < FEASIBILITY_TOL {
            *x = 0.0;
        }
    }
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= s);
    p
}

/// Dense tableau for `max 1'w s.t. A w <= 1, w >= 0` with slack basis.
/// Columns `0..n` are `w`, `n..n+m` are slacks; the last column is the rhs.
struct Tableau {
    m: usize,
    n: usize,
    rows: Vec<Vec<f64>>,
    /// Reduced costs, negated objective convention: entering while `< 0`.
    cost: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn new(a: &DMatrix<f64>) -> Self {
        let (m, n) = a.shape();
        let width = n + m + 1;
        let rows = (0..m)
            .map(|i| {
                let mut r = vec![0.0; width];
                for j in 0..n {
                    r[j] = a[(i, j)];
                }
                r[n + i] = 1.0;
                r[width - 1] = 1.0;
                r
            })
            .collect();
        let mut cost = vec![0.0; width];
        cost[..n].iter_mut().for_each(|c| *c = -1.0);
        Self {
            m,
            n,
            rows,
            cost,
            basis: (n..n + m).collect(),
        }
    }

    /// Runs the simplex with Bland's rule. Returns the primal `w` and the
    /// dual `u` (slack reduced costs).
    fn solve(mut self) -> Result<(Vec<f64>, Vec<f64>)> {
        let width = self.n + self.m + 1;
        let rhs = width - 1;
        // Bland's rule terminates in at most C(n+m, m) pivots; this is far above that in practice
        let max_pivots = 50 * (self.n + self.m) * (self.n + self.m) + 1000;
        for _ in 0..max_pivots {
            let Some(enter) = (0..rhs).find(|&j| self.cost[j] < -PIVOT_TOL) else {
                let mut w = vec![0.0; self.n];
                for (r, &b) in self.basis.iter().enumerate() {
                    if b < self.n {
                        w[b] = self.rows[r][rhs].max(0.0);
                    }
                }
                let u = (0..self.m).map(|i| self.cost[self.n + i].max(0.0)).collect();
                return Ok((w, u));
            };

            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.m {
                let coef = self.rows[r][enter];
                if coef > PIVOT_TOL {
                    let ratio = self.rows[r][rhs] / coef;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((lr, lratio)) => {
                            if ratio < lratio - PIVOT_TOL
                                || (ratio <= lratio + PIVOT_TOL && self.basis[r] < self.basis[lr])
                            {
                                Some((r, ratio))
                            } else {
                                Some((lr, lratio))
                            }
                        }
                    };
                }
            }
            let Some((pivot_row, _)) = leave else {
                return Err(Error::Simplex("unbounded"));
            };
            self.pivot(pivot_row, enter);
        }
        Err(Error::Simplex("pivot limit reached"))
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        self.rows[r].iter_mut().for_each(|x| *x /= p);
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r {
                let f = row[c];
                if f != 0.0 {
                    row.iter_mut().zip(&pivot_row).for_each(|(x, y)| *x -= f * y);
                }
            }
        }
        let f = self.cost[c];
        self.cost.iter_mut().zip(&pivot_row).for_each(|(x, y)| *x -= f * y);
        self.basis[r] = c;
    }
}
