//! Dense two-phase simplex for equality-form linear programs.
//!
//! Instances in this crate are a few hundred variables at most, so a dense
//! tableau with Bland's pivoting rule is the right trade: no cycling, no
//! pricing heuristics, and bit-for-bit reproducible runs. The entering
//! variable is always the lowest-index eligible column and ratio-test ties
//! go to the lowest-index basic variable.

use crate::{Error, Result};

const PIVOT_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-8;

/// `min c.x  s.t.  A x = b, x >= 0` with dense rows.
#[derive(Debug, Clone)]
pub struct StandardLp {
    pub num_vars: usize,
    pub rows: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
    pub objective: Vec<f64>,
}

impl StandardLp {
    /// Residual `max_i |A_i x - b_i|` of a candidate solution.
    pub fn residual(&self, x: &[f64]) -> f64 {
        self.rows
            .iter()
            .zip(&self.rhs)
            .map(|(row, &b)| {
                (row.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() - b).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Optimal basic feasible solution of a [`StandardLp`].
#[derive(Debug, Clone)]
pub struct SimplexOutcome {
    pub x: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

struct Tableau {
    // rows: m x (n_total + 1), last column is the rhs
    a: Vec<Vec<f64>>,
    // reduced cost row, length n_total + 1; last entry is -objective
    cost: Vec<f64>,
    basis: Vec<usize>,
    n_orig: usize,
    n_total: usize,
    pivots: usize,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) {
        let piv = self.a[row][col];
        for v in self.a[row].iter_mut() {
            *v /= piv;
        }
        for r in 0..self.a.len() {
            if r != row {
                let factor = self.a[r][col];
                if factor != 0.0 {
                    for k in 0..=self.n_total {
                        self.a[r][k] -= factor * self.a[row][k];
                    }
                }
            }
        }
        let factor = self.cost[col];
        if factor != 0.0 {
            for k in 0..=self.n_total {
                self.cost[k] -= factor * self.a[row][k];
            }
        }
        self.basis[row] = col;
        self.pivots += 1;
    }

    /// Bland's rule: enter the lowest-index column with negative reduced
    /// cost, leave on the minimum ratio with ties to the lowest-index basic
    /// variable. `allowed` restricts the entering columns.
    fn run<F: Fn(usize) -> bool>(&mut self, allowed: F, max_pivots: usize) -> Result<()> {
        loop {
            let entering = (0..self.n_total)
                .find(|&j| allowed(j) && self.cost[j] < -PIVOT_TOL);
            let Some(col) = entering else {
                return Ok(());
            };
            let mut leave: Option<usize> = None;
            let mut best_ratio = f64::INFINITY;
            for r in 0..self.a.len() {
                let coeff = self.a[r][col];
                if coeff > PIVOT_TOL {
                    let ratio = self.a[r][self.n_total] / coeff;
                    let better = match leave {
                        None => true,
                        Some(lr) => {
                            ratio < best_ratio - 1e-12
                                || (ratio <= best_ratio + 1e-12 && self.basis[r] < self.basis[lr])
                        }
                    };
                    if better {
                        leave = Some(r);
                        best_ratio = ratio.min(best_ratio);
                    }
                }
            }
            let Some(row) = leave else {
                return Err(Error::LpUnbounded);
            };
            self.pivot(row, col);
            if self.pivots > max_pivots {
                return Err(Error::NumericalAbort(format!(
                    "simplex exceeded {max_pivots} pivots"
                )));
            }
        }
    }
}

/// Solves the LP with the two-phase simplex method.
pub fn solve(lp: &StandardLp) -> Result<SimplexOutcome> {
    let m = lp.rows.len();
    let n = lp.num_vars;
    for (i, row) in lp.rows.iter().enumerate() {
        assert_eq!(row.len(), n, "constraint row {i} has wrong width");
    }
    assert_eq!(lp.rhs.len(), m);
    assert_eq!(lp.objective.len(), n);

    let n_total = n + m; // one artificial per row
    let mut a = vec![vec![0.0; n_total + 1]; m];
    for (i, row) in lp.rows.iter().enumerate() {
        let flip = if lp.rhs[i] < 0.0 { -1.0 } else { 1.0 };
        for (j, &v) in row.iter().enumerate() {
            a[i][j] = flip * v;
        }
        a[i][n + i] = 1.0;
        a[i][n_total] = flip * lp.rhs[i];
    }

    // Phase-1 reduced costs: artificials are basic with unit cost, so the
    // reduced cost of column j is -sum_i a_ij and the objective starts at
    // sum_i b_i.
    let mut cost = vec![0.0; n_total + 1];
    for j in 0..n {
        cost[j] = -(0..m).map(|i| a[i][j]).sum::<f64>();
    }
    cost[n_total] = -(0..m).map(|i| a[i][n_total]).sum::<f64>();

    let mut t = Tableau {
        a,
        cost,
        basis: (n..n_total).collect(),
        n_orig: n,
        n_total,
        pivots: 0,
    };
    let max_pivots = 1000 + 200 * (m + n) * (m + n).min(500);
    t.run(|_| true, max_pivots)?;

    let phase1_value = -t.cost[t.n_total];
    let scale = 1.0 + lp.rhs.iter().map(|b| b.abs()).fold(0.0, f64::max);
    if phase1_value > FEAS_TOL * scale {
        return Err(Error::LpInfeasible);
    }

    // Drive basic artificials out on any nonzero original column; rows with
    // none are redundant constraints and keep a zero-level artificial.
    for r in 0..m {
        if t.basis[r] >= t.n_orig {
            if let Some(col) = (0..t.n_orig).find(|&j| t.a[r][j].abs() > PIVOT_TOL) {
                t.pivot(r, col);
            }
        }
    }

    // Phase 2: rebuild reduced costs for the true objective.
    let mut cost = vec![0.0; n_total + 1];
    cost[..n].copy_from_slice(&lp.objective);
    for r in 0..m {
        let b = t.basis[r];
        if b < n {
            let cb = lp.objective[b];
            if cb != 0.0 {
                for k in 0..=n_total {
                    cost[k] -= cb * t.a[r][k];
                }
            }
        }
    }
    t.cost = cost;
    let n_orig = t.n_orig;
    t.run(|j| j < n_orig, max_pivots)?;

    let mut x = vec![0.0; n];
    for (r, &b) in t.basis.iter().enumerate() {
        if b < n {
            x[b] = t.a[r][n_total].max(0.0);
        }
    }
    let objective = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(SimplexOutcome {
        x,
        objective,
        pivots: t.pivots,
    })
}
