//! Dense two-phase primal simplex with Bland's anti-cycling rule.
//!
//! Solves `max cᵀx` subject to rows `aᵀx (≤ | = | ≥) b` and `x ≥ 0`. The
//! tableau is dense; it targets the small instances built by the assortment
//! LP (a few hundred columns at most).

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

const COST_EPS: f64 = 1e-11;
const PIVOT_EPS: f64 = 1e-11;
const RATIO_TIE: f64 = 1e-12;
const FEASIBILITY_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub kind: RowKind,
    pub rhs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

/// A linear program in maximization form over nonnegative variables.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

impl LinearProgram {
    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    /// Largest violation of any row or nonnegativity bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = x.iter().fold(0.0f64, |w, v| w.max(-v));
        for c in &self.constraints {
            let lhs: f64 = c.coeffs.iter().zip(x).map(|(a, v)| a * v).sum();
            let viol = match c.kind {
                RowKind::Le => lhs - c.rhs,
                RowKind::Ge => c.rhs - lhs,
                RowKind::Eq => (lhs - c.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        worst
    }

    pub fn objective_at(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    pub fn solve(&self) -> Result<SimplexSolution> {
        let n = self.n_vars();
        if n == 0 {
            return Err(Error::InvalidArgument("linear program has no variables"));
        }
        for c in &self.constraints {
            if c.coeffs.len() != n {
                return Err(Error::DimensionMismatch {
                    what: "constraint row",
                    expected: n,
                    actual: c.coeffs.len(),
                });
            }
            if !c.rhs.is_finite() || c.coeffs.iter().any(|a| !a.is_finite()) {
                return Err(Error::NonFinite("constraint coefficients"));
            }
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("objective coefficients"));
        }
        Tableau::build(self).run(&self.objective)
    }
}

struct Tableau {
    m: usize,
    n_struct: usize,
    /// Structural, then slack/surplus, then artificial columns.
    n_cols: usize,
    first_artificial: usize,
    width: usize,
    cells: Vec<f64>,
    basis: Vec<usize>,
    pivots: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let m = lp.constraints.len();
        let n_struct = lp.n_vars();
        // Flip rows with a negative right-hand side.
        let rows: Vec<(Vec<f64>, RowKind, f64)> = lp
            .constraints
            .iter()
            .map(|c| {
                if c.rhs < 0.0 {
                    let kind = match c.kind {
                        RowKind::Le => RowKind::Ge,
                        RowKind::Ge => RowKind::Le,
                        RowKind::Eq => RowKind::Eq,
                    };
                    (c.coeffs.iter().map(|a| -a).collect(), kind, -c.rhs)
                } else {
                    (c.coeffs.clone(), c.kind, c.rhs)
                }
            })
            .collect();
        let n_slack = rows.iter().filter(|r| r.1 != RowKind::Eq).count();
        let n_art = rows.iter().filter(|r| r.1 != RowKind::Le).count();
        let first_artificial = n_struct + n_slack;
        let n_cols = first_artificial + n_art;
        let width = n_cols + 1;
        let mut cells = vec![0.0; m * width];
        let mut basis = vec![0; m];
        let (mut slack, mut art) = (n_struct, first_artificial);
        for (i, (coeffs, kind, rhs)) in rows.into_iter().enumerate() {
            let row = &mut cells[i * width..(i + 1) * width];
            row[..n_struct].copy_from_slice(&coeffs);
            row[n_cols] = rhs;
            match kind {
                RowKind::Le => {
                    row[slack] = 1.0;
                    basis[i] = slack;
                    slack += 1;
                }
                RowKind::Ge => {
                    row[slack] = -1.0;
                    slack += 1;
                    row[art] = 1.0;
                    basis[i] = art;
                    art += 1;
                }
                RowKind::Eq => {
                    row[art] = 1.0;
                    basis[i] = art;
                    art += 1;
                }
            }
        }
        Self {
            m,
            n_struct,
            n_cols,
            first_artificial,
            width,
            cells,
            basis,
            pivots: 0,
        }
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.cells[i * self.width + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.n_cols)
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width;
        let p = self.cells[r * w + c];
        for v in &mut self.cells[r * w..(r + 1) * w] {
            *v /= p;
        }
        let pivot_row: Vec<f64> = self.cells[r * w..(r + 1) * w].to_vec();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.cells[i * w + c];
            if f != 0.0 {
                for (v, pr) in self.cells[i * w..(i + 1) * w].iter_mut().zip(&pivot_row) {
                    *v -= f * pr;
                }
                self.cells[i * w + c] = 0.0;
            }
        }
        self.basis[r] = c;
        self.pivots += 1;
    }

    /// Maximizes `cost · x` over columns `< limit` from the current basis.
    fn optimize(&mut self, cost: &[f64], limit: usize, max_pivots: usize) -> Result<LpStatus> {
        loop {
            if self.pivots >= max_pivots {
                return Err(Error::IterationLimit(max_pivots));
            }
            // Bland: lowest-index column with positive reduced profit.
            let entering = (0..limit).find(|&j| {
                if self.basis.contains(&j) {
                    return false;
                }
                let reduced = cost[j] - (0..self.m).map(|i| cost[self.basis[i]] * self.at(i, j)).sum::<f64>();
                reduced > COST_EPS
            });
            let Some(c) = entering else {
                return Ok(LpStatus::Optimal);
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.m {
                let a = self.at(i, c);
                if a <= PIVOT_EPS {
                    continue;
                }
                let ratio = self.rhs(i) / a;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((r, best)) => {
                        if ratio < best - RATIO_TIE
                            || (ratio <= best + RATIO_TIE && self.basis[i] < self.basis[r])
                        {
                            Some((i, ratio))
                        } else {
                            Some((r, best))
                        }
                    }
                };
            }
            let Some((r, _)) = leave else {
                return Ok(LpStatus::Unbounded);
            };
            self.pivot(r, c);
        }
    }

    fn run(mut self, objective: &[f64]) -> Result<SimplexSolution> {
        let max_pivots = 1000 + 50 * (self.m + self.n_cols);

        if self.first_artificial < self.n_cols {
            let mut phase1 = vec![0.0; self.n_cols];
            phase1[self.first_artificial..].iter_mut().for_each(|c| *c = -1.0);
            self.optimize(&phase1, self.n_cols, max_pivots)?;
            let infeasibility: f64 = (0..self.m)
                .filter(|&i| self.basis[i] >= self.first_artificial)
                .map(|i| self.rhs(i))
                .sum();
            if infeasibility > FEASIBILITY_EPS {
                return Ok(self.finish(LpStatus::Infeasible, objective));
            }
            // Drive zero-valued artificials out of the basis where possible;
            // rows with no usable pivot are redundant and stay put.
            for i in 0..self.m {
                if self.basis[i] >= self.first_artificial {
                    if let Some(c) = (0..self.first_artificial).find(|&j| self.at(i, j).abs() > PIVOT_EPS) {
                        self.pivot(i, c);
                    }
                }
            }
        }

        let mut cost = vec![0.0; self.n_cols];
        cost[..self.n_struct].copy_from_slice(objective);
        let status = self.optimize(&cost, self.first_artificial, max_pivots)?;
        Ok(self.finish(status, objective))
    }

    fn finish(&self, status: LpStatus, objective: &[f64]) -> SimplexSolution {
        let mut x = vec![0.0; self.n_struct];
        for i in 0..self.m {
            let b = self.basis[i];
            if b < self.n_struct {
                let v = self.rhs(i);
                x[b] = if v < 0.0 && v > -FEASIBILITY_EPS { 0.0 } else { v };
            }
        }
        let value = objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        SimplexSolution {
            status,
            x,
            objective: value,
            pivots: self.pivots,
        }
    }
}
