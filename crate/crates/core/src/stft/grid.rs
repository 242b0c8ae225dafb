use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::error::{Error, Result};
use crate::geometry::MAX_DIM;
use crate::quadrature::trapezoid_weights;

/// Uniform time-frequency grid: every `x` axis spans `[x_min, x_max]` with
/// `x_steps` nodes, every `ξ` axis spans `[xi_min, xi_max]` with `xi_steps` nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dim: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub xi_min: f64,
    pub xi_max: f64,
    pub x_steps: usize,
    pub xi_steps: usize,
}

impl GridSpec {
    /// Default `d = 1` grid for a radius-1 window against test bumps inside
    /// `[-1, 1.5]`. The `ξ` step stays below the reciprocal of the joint support width.
    pub const DEFAULT_1D: GridSpec = GridSpec {
        dim: 1,
        x_min: -2.5,
        x_max: 2.5,
        xi_min: -48.0,
        xi_max: 48.0,
        x_steps: 101,
        xi_steps: 385,
    };

    pub fn symmetric(dim: usize, x_half: f64, xi_half: f64, x_steps: usize, xi_steps: usize) -> Result<Self> {
        GridSpec { dim, x_min: -x_half, x_max: x_half, xi_min: -xi_half, xi_max: xi_half, x_steps, xi_steps }
            .validated()
    }

    pub fn validated(self) -> Result<Self> {
        if self.dim == 0 || self.dim > MAX_DIM {
            return Err(Error::InvalidInput(format!("grid dimension {} outside 1..={MAX_DIM}", self.dim)));
        }
        let finite = [self.x_min, self.x_max, self.xi_min, self.xi_max].iter().all(|v| v.is_finite());
        if !finite || !(self.x_min < self.x_max) || !(self.xi_min < self.xi_max) {
            return Err(Error::InvalidInput("grid bounds must be finite and strictly increasing".into()));
        }
        if self.x_steps < 2 || self.xi_steps < 2 {
            return Err(Error::InvalidInput("grid needs at least 2 nodes per axis".into()));
        }
        let n = (self.x_steps as u128).pow(self.dim as u32) * (self.xi_steps as u128).pow(self.dim as u32);
        if n > 50_000_000 {
            return Err(Error::InvalidInput(format!("grid has {n} nodes, limit is 5e7")));
        }
        Ok(self)
    }

    pub fn x_step(&self) -> f64 {
        (self.x_max - self.x_min) / (self.x_steps - 1) as f64
    }

    pub fn xi_step(&self) -> f64 {
        (self.xi_max - self.xi_min) / (self.xi_steps - 1) as f64
    }

    pub fn len(&self) -> usize {
        self.x_steps.pow(self.dim as u32) * self.xi_steps.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn axis(&self, a: usize) -> (f64, f64, usize) {
        if a < self.dim {
            (self.x_min, self.x_max, self.x_steps)
        } else {
            (self.xi_min, self.xi_max, self.xi_steps)
        }
    }

    /// Per-axis node indices of node `j`; `x` axes first, last axis fastest.
    pub fn multi_index(&self, mut j: usize) -> Vec<usize> {
        let mut idx = vec![0; 2 * self.dim];
        for a in (0..2 * self.dim).rev() {
            let n = self.axis(a).2;
            idx[a] = j % n;
            j /= n;
        }
        idx
    }

    /// Coordinates `(x, ξ)` of node `j`.
    pub fn node(&self, j: usize) -> (Vec<f64>, Vec<f64>) {
        let idx = self.multi_index(j);
        let coord = |a: usize| {
            let (lo, hi, n) = self.axis(a);
            if idx[a] == n - 1 {
                hi
            } else {
                lo + (hi - lo) * idx[a] as f64 / (n - 1) as f64
            }
        };
        ((0..self.dim).map(coord).collect(), (self.dim..2 * self.dim).map(coord).collect())
    }

    /// True when node `j` lies on the boundary of the grid box.
    pub fn is_boundary(&self, j: usize) -> bool {
        self.multi_index(j)
            .iter()
            .enumerate()
            .any(|(a, &i)| i == 0 || i == self.axis(a).2 - 1)
    }

    /// Tensor trapezoid weights over all `2d` axes, in node order.
    pub fn trapezoid(&self) -> Vec<f64> {
        let wx = trapezoid_weights(self.x_min, self.x_max, self.x_steps);
        let wxi = trapezoid_weights(self.xi_min, self.xi_max, self.xi_steps);
        (0..self.len())
            .map(|j| {
                self.multi_index(j)
                    .iter()
                    .enumerate()
                    .map(|(a, &i)| if a < self.dim { wx[i] } else { wxi[i] })
                    .product()
            })
            .collect()
    }

    /// Same box, half the step.
    pub fn refined(&self) -> Self {
        GridSpec { x_steps: 2 * self.x_steps - 1, xi_steps: 2 * self.xi_steps - 1, ..*self }
    }

    /// Box doubled about its centre, same step.
    pub fn enlarged(&self) -> Self {
        let grow = |lo: f64, hi: f64| {
            let (c, h) = (0.5 * (lo + hi), hi - lo);
            (c - h, c + h)
        };
        let (x_min, x_max) = grow(self.x_min, self.x_max);
        let (xi_min, xi_max) = grow(self.xi_min, self.xi_max);
        GridSpec {
            x_min,
            x_max,
            xi_min,
            xi_max,
            x_steps: 2 * self.x_steps - 1,
            xi_steps: 2 * self.xi_steps - 1,
            ..*self
        }
    }

    /// Box doubled and step halved.
    pub fn doubled(&self) -> Self {
        self.enlarged().refined()
    }

    /// `count` windows, each the enlargement of the previous one.
    pub fn ladder(&self, count: usize) -> Vec<GridSpec> {
        let mut out = Vec::with_capacity(count);
        let mut g = *self;
        for _ in 0..count {
            out.push(g);
            g = g.enlarged();
        }
        out
    }
}

/// Complex samples of a function of `(x, ξ)` on a [`GridSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeFrequencyField {
    pub grid: GridSpec,
    pub values: Vec<Complex64>,
}

impl TimeFrequencyField {
    pub fn new(grid: GridSpec, values: Vec<Complex64>) -> Result<Self> {
        let grid = grid.validated()?;
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), got: values.len() });
        }
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::InvalidInput("field has non-finite values".into()));
        }
        Ok(TimeFrequencyField { grid, values })
    }

    pub fn zeros(grid: GridSpec) -> Result<Self> {
        let grid = grid.validated()?;
        Ok(TimeFrequencyField { values: vec![Complex64::new(0.0, 0.0); grid.len()], grid })
    }

    pub fn from_fn<F>(grid: GridSpec, f: F) -> Result<Self>
    where
        F: Fn(&[f64], &[f64]) -> Complex64,
    {
        let grid = grid.validated()?;
        let values = (0..grid.len())
            .map(|j| {
                let (x, xi) = grid.node(j);
                f(&x, &xi)
            })
            .collect();
        Self::new(grid, values)
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        TimeFrequencyField { grid: self.grid, values: self.values.iter().map(|v| v * c).collect() }
    }

    pub fn plus(&self, other: &TimeFrequencyField) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::InvalidInput("fields live on different grids".into()));
        }
        Ok(TimeFrequencyField {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    /// `Σ w_j |F_j|²` with tensor trapezoid weights.
    pub fn l2_norm_sq(&self) -> f64 {
        self.grid.trapezoid().iter().zip(&self.values).map(|(w, v)| w * v.norm_sqr()).sum()
    }

    /// One row per node: `x1.., xi1.., re, im, abs`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let d = self.grid.dim;
        let mut head: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
        head.extend((1..=d).map(|i| format!("xi{i}")));
        head.extend(["re", "im", "abs"].map(String::from));
        writeln!(out, "{}", head.join(","))?;
        for (j, v) in self.values.iter().enumerate() {
            let (x, xi) = self.grid.node(j);
            let mut row: Vec<String> = x.iter().chain(&xi).map(|c| format!("{c}")).collect();
            row.push(format!("{}", v.re));
            row.push(format!("{}", v.im));
            row.push(format!("{}", v.norm()));
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn node_order_and_weights() {
        let g = GridSpec { dim: 1, x_min: 0.0, x_max: 1.0, xi_min: -1.0, xi_max: 1.0, x_steps: 3, xi_steps: 5 };
        assert_eq!(g.len(), 15);
        assert_eq!(g.node(0), (vec![0.0], vec![-1.0]));
        assert_eq!(g.node(1), (vec![0.0], vec![-0.5]));
        assert_eq!(g.node(5), (vec![0.5], vec![-1.0]));
        let area: f64 = g.trapezoid().iter().sum();
        assert!((area - 2.0).abs() < 1e-14);
        assert!(g.is_boundary(0) && !g.is_boundary(7));
        let d = g.doubled();
        assert_eq!((d.x_min, d.x_max, d.x_steps), (-0.5, 1.5, 9));
        assert!((d.xi_step() - 0.5 * g.xi_step()).abs() < 1e-15);
    }

    #[test]
    fn csv_rows() {
        let g = GridSpec::symmetric(2, 1.0, 1.0, 2, 3).unwrap();
        let f = TimeFrequencyField::from_fn(g, |x, _| Complex64::new(x[0], 0.0)).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s.lines().count(), 1 + 36);
        assert!(s.starts_with("x1,x2,xi1,xi2,re,im,abs\n"));
    }
}
