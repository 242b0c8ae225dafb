//! Dense two-phase simplex with Bland's rule for `max c·η s.t. Aη ≤ b`,
//! `η` free. Sized for the handful of constraints a d ≤ 3 polytope carries.

use crate::error::{Error, Result};

const PIVOT_EPS: f64 = 1e-11;
const FEAS_EPS: f64 = 1e-9;
const MAX_ITERS: usize = 50_000;

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub value: f64,
    pub argmax: Vec<f64>,
}

struct Tableau {
    rows: Vec<Vec<f64>>, // each row: coefficients followed by the rhs
    basis: Vec<usize>,
    n_cols: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.rows[i][self.n_cols]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        self.rows[r].iter_mut().for_each(|v| *v /= p);
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r {
                let f = row[c];
                if f != 0.0 {
                    for (v, pv) in row.iter_mut().zip(&pivot_row) {
                        *v -= f * pv;
                    }
                    row[c] = 0.0;
                }
            }
        }
        self.basis[r] = c;
    }

    /// Run primal simplex maximizing `cost·y` over allowed columns.
    fn optimize(&mut self, cost: &[f64], allowed: &[bool]) -> Result<()> {
        for _ in 0..MAX_ITERS {
            // Bland: smallest-index column with positive reduced cost.
            let entering = (0..self.n_cols).find(|&j| {
                allowed[j] && !self.basis.contains(&j) && {
                    let reduced = cost[j]
                        - self
                            .rows
                            .iter()
                            .zip(&self.basis)
                            .map(|(row, &b)| cost[b] * row[j])
                            .sum::<f64>();
                    reduced > PIVOT_EPS
                }
            });
            let Some(col) = entering else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][col];
                if a > PIVOT_EPS {
                    let ratio = self.rhs(i) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((k, best)) => {
                            if ratio < best - 1e-14
                                || (ratio <= best + 1e-14 && self.basis[i] < self.basis[k])
                            {
                                Some((i, ratio))
                            } else {
                                Some((k, best))
                            }
                        }
                    };
                }
            }
            match leave {
                None => return Err(Error::Unbounded),
                Some((r, _)) => self.pivot(r, col),
            }
        }
        Err(Error::IterationLimit)
    }
}

/// Maximize `c·η` subject to `Aη ≤ b`.
pub fn lp_maximize(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Result<LpSolution> {
    let m = a.len();
    let d = c.len();
    if b.len() != m {
        return Err(Error::InvalidInput(format!(
            "constraint matrix has {m} rows but b has {}",
            b.len()
        )));
    }
    if let Some(row) = a.iter().find(|r| r.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: row.len(),
        });
    }
    if a.iter().flatten().chain(b).chain(c).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite LP data".into()));
    }

    // Columns: η⁺ (d), η⁻ (d), slacks (m), artificials (one per row with b < 0).
    let needs_art: Vec<bool> = b.iter().map(|&bi| bi < 0.0).collect();
    let n_art = needs_art.iter().filter(|&&x| x).count();
    let n_cols = 2 * d + m + n_art;
    let art_start = 2 * d + m;
    let mut rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut next_art = art_start;
    for i in 0..m {
        let sign = if needs_art[i] { -1.0 } else { 1.0 };
        let mut row = vec![0.0; n_cols + 1];
        for j in 0..d {
            row[j] = sign * a[i][j];
            row[d + j] = -sign * a[i][j];
        }
        row[2 * d + i] = sign;
        row[n_cols] = sign * b[i];
        if needs_art[i] {
            row[next_art] = 1.0;
            basis.push(next_art);
            next_art += 1;
        } else {
            basis.push(2 * d + i);
        }
        rows.push(row);
    }
    let mut t = Tableau {
        rows,
        basis,
        n_cols,
    };

    if n_art > 0 {
        let cost: Vec<f64> = (0..n_cols)
            .map(|j| if j >= art_start { -1.0 } else { 0.0 })
            .collect();
        let allowed = vec![true; n_cols];
        t.optimize(&cost, &allowed)?;
        let infeasibility: f64 = t
            .basis
            .iter()
            .enumerate()
            .filter(|(_, &bv)| bv >= art_start)
            .map(|(i, _)| t.rhs(i))
            .sum();
        let scale = 1.0 + b.iter().fold(0.0_f64, |s, v| s.max(v.abs()));
        if infeasibility > FEAS_EPS * scale {
            return Err(Error::Infeasible);
        }
        // Drive zero-level artificials out of the basis or drop redundant rows.
        let mut i = 0;
        while i < t.rows.len() {
            if t.basis[i] >= art_start {
                match (0..art_start).find(|&j| t.rows[i][j].abs() > 1e-9) {
                    Some(j) => {
                        t.pivot(i, j);
                        i += 1;
                    }
                    None => {
                        t.rows.remove(i);
                        t.basis.remove(i);
                    }
                }
            } else {
                i += 1;
            }
        }
    }

    let mut cost = vec![0.0; n_cols];
    for j in 0..d {
        cost[j] = c[j];
        cost[d + j] = -c[j];
    }
    let allowed: Vec<bool> = (0..n_cols).map(|j| j < art_start).collect();
    t.optimize(&cost, &allowed)?;

    let mut y = vec![0.0; n_cols];
    for (i, &bv) in t.basis.iter().enumerate() {
        y[bv] = t.rhs(i);
    }
    let argmax: Vec<f64> = (0..d).map(|j| y[j] - y[d + j]).collect();
    let value = c.iter().zip(&argmax).map(|(a, b)| a * b).sum();
    Ok(LpSolution { value, argmax })
}

/// Whether `{η : Aη ≤ b}` is nonempty.
pub fn is_feasible(a: &[Vec<f64>], b: &[f64], dim: usize) -> Result<bool> {
    match lp_maximize(a, b, &vec![0.0; dim]) {
        Ok(_) => Ok(true),
        Err(Error::Infeasible) => Ok(false),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> (Vec<Vec<f64>>, Vec<f64>) {
        (
            vec![
                vec![1.0, 0.0],
                vec![-1.0, 0.0],
                vec![0.0, 1.0],
                vec![0.0, -1.0],
            ],
            vec![1.0, 0.0, 1.0, 0.0],
        )
    }

    #[test]
    fn square_objective() {
        let (a, b) = unit_square();
        let sol = lp_maximize(&a, &b, &[2.0, -1.0]).unwrap();
        assert!((sol.value - 2.0).abs() < 1e-12);
        assert!((sol.argmax[0] - 1.0).abs() < 1e-12 && sol.argmax[1].abs() < 1e-12);
    }

    #[test]
    fn zero_objective_returns_feasible_point() {
        let (a, b) = unit_square();
        let sol = lp_maximize(&a, &b, &[0.0, 0.0]).unwrap();
        assert_eq!(sol.value, 0.0);
        for (row, bi) in a.iter().zip(&b) {
            assert!(row[0] * sol.argmax[0] + row[1] * sol.argmax[1] <= bi + 1e-12);
        }
    }

    #[test]
    fn simplex_diagonal_facet() {
        let a = vec![vec![-1.0, 0.0], vec![0.0, -1.0], vec![1.0, 1.0]];
        let b = vec![0.0, 0.0, 1.0];
        let sol = lp_maximize(&a, &b, &[1.0, 1.0]).unwrap();
        assert!((sol.value - 1.0).abs() < 1e-12);
        assert!((sol.argmax[0] + sol.argmax[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let a = vec![vec![1.0], vec![-1.0]];
        assert_eq!(lp_maximize(&a, &[0.0, -1.0], &[1.0]), Err(Error::Infeasible));
        let half = vec![vec![-1.0]];
        assert_eq!(lp_maximize(&half, &[0.0], &[1.0]), Err(Error::Unbounded));
        // Unbounded region but bounded objective is fine.
        let sol = lp_maximize(&half, &[0.0], &[-1.0]).unwrap();
        assert!(sol.value.abs() < 1e-12);
    }

    #[test]
    fn degenerate_point_polytope() {
        // x ≥ 1/2, x ≤ 1/2, y ≥ 1/2, y ≤ 1/2
        let a = vec![
            vec![-1.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, -1.0],
            vec![0.0, 1.0],
        ];
        let b = vec![-0.5, 0.5, -0.5, 0.5];
        let sol = lp_maximize(&a, &b, &[1.0, 2.0]).unwrap();
        assert!((sol.value - 1.5).abs() < 1e-12);
    }
}
