//! Gauss–Legendre quadrature: fixed composite rules over boxes with panel
//! doubling, and a globally adaptive 1-d integrator for long radial ranges.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Composite Gauss–Legendre settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadSpec {
    /// Panels per window radius along each axis (at least 4).
    pub panels: usize,
    /// Gauss–Legendre points per panel.
    pub order: usize,
    pub rel_tol: f64,
    /// Number of panel doublings attempted before giving up.
    pub max_doublings: u32,
}

impl Default for QuadSpec {
    fn default() -> Self {
        QuadSpec {
            panels: 4,
            order: 12,
            rel_tol: 1e-10,
            max_doublings: 7,
        }
    }
}

impl QuadSpec {
    pub fn validate(&self) -> Result<()> {
        if self.panels < 4 {
            return Err(Error::InvalidInput(format!(
                "quadrature needs at least 4 panels, got {}",
                self.panels
            )));
        }
        if self.order < 2 || self.order > 64 {
            return Err(Error::InvalidInput(format!(
                "Gauss–Legendre order {} outside 2..=64",
                self.order
            )));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::InvalidInput("rel_tol must be positive".into()));
        }
        Ok(())
    }
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn cached_rule(n: usize) -> &'static (Vec<f64>, Vec<f64>) {
    static RULES: OnceLock<Vec<(Vec<f64>, Vec<f64>)>> = OnceLock::new();
    let rules = RULES.get_or_init(|| (0..=64).map(gauss_legendre).collect());
    &rules[n]
}

/// Composite nodes/weights for `panels` equal panels of `[lo, hi]`.
pub fn composite_rule(lo: f64, hi: f64, panels: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    let (gx, gw) = cached_rule(order);
    let h = (hi - lo) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * order);
    let mut weights = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let a = lo + h * p as f64;
        for (x, w) in gx.iter().zip(gw) {
            nodes.push(a + 0.5 * h * (x + 1.0));
            weights.push(0.5 * h * w);
        }
    }
    (nodes, weights)
}

/// Tensor composite rule over a box with per-axis panel counts.
fn box_sum<F>(f: &F, lo: &[f64], hi: &[f64], panels: &[usize], order: usize) -> (Complex64, f64)
where
    F: Fn(&[f64]) -> Complex64,
{
    let rules: Vec<_> = (0..lo.len())
        .map(|i| composite_rule(lo[i], hi[i], panels[i], order))
        .collect();
    let dim = lo.len();
    let mut idx = vec![0usize; dim];
    let mut point = vec![0.0; dim];
    let mut sum = Complex64::new(0.0, 0.0);
    let mut mass = 0.0;
    loop {
        let mut w = 1.0;
        for a in 0..dim {
            point[a] = rules[a].0[idx[a]];
            w *= rules[a].1[idx[a]];
        }
        let v = f(&point);
        sum += v * w;
        mass += v.norm() * w;
        let mut a = dim;
        loop {
            if a == 0 {
                return (sum, mass);
            }
            a -= 1;
            idx[a] += 1;
            if idx[a] < rules[a].0.len() {
                break;
            }
            idx[a] = 0;
        }
    }
}

/// Integrate `f` over the box `[lo, hi]` by composite Gauss–Legendre,
/// doubling panels on every axis until two successive estimates agree to
/// `spec.rel_tol` relative to the integrated modulus.
pub fn integrate_box<F>(
    f: F,
    lo: &[f64],
    hi: &[f64],
    initial_panels: &[usize],
    spec: &QuadSpec,
) -> Result<Complex64>
where
    F: Fn(&[f64]) -> Complex64,
{
    if lo.iter().zip(hi).any(|(a, b)| !(a < b)) {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let mut panels: Vec<usize> = initial_panels.iter().map(|&p| p.max(1)).collect();
    let (mut prev, _) = box_sum(&f, lo, hi, &panels, spec.order);
    let mut last_err = f64::INFINITY;
    for _ in 0..spec.max_doublings {
        panels.iter_mut().for_each(|p| *p *= 2);
        let (cur, mass) = box_sum(&f, lo, hi, &panels, spec.order);
        let err = (cur - prev).norm();
        if err <= spec.rel_tol * mass.max(f64::MIN_POSITIVE) || mass == 0.0 {
            return Ok(cur);
        }
        prev = cur;
        last_err = err;
    }
    Err(Error::QuadratureNonConvergence {
        estimate: prev.norm(),
        error: last_err,
    })
}

/// Uniform frequency axis `ξ_j = start + j·step`, `j < count`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreqAxis {
    pub start: f64,
    pub step: f64,
    pub count: usize,
}

impl FreqAxis {
    pub fn max_abs(&self) -> f64 {
        let end = self.start + self.step * (self.count.saturating_sub(1)) as f64;
        self.start.abs().max(end.abs())
    }
}

/// Contract axis `a` of a row-major array against `e^{-2πi ξ_j t_k}`.
fn contract(data: &[Complex64], shape: &[usize], a: usize, nodes: &[f64], freq: &FreqAxis) -> Vec<Complex64> {
    let outer: usize = shape[..a].iter().product();
    let inner: usize = shape[a + 1..].iter().product();
    let n = shape[a];
    let j_count = freq.count;
    let mut out = vec![Complex64::new(0.0, 0.0); outer * j_count * inner];
    for (k, &t) in nodes.iter().enumerate().take(n) {
        let p0 = Complex64::from_polar(1.0, -std::f64::consts::TAU * freq.start * t);
        let step = Complex64::from_polar(1.0, -std::f64::consts::TAU * freq.step * t);
        for o in 0..outer {
            let src = &data[(o * n + k) * inner..(o * n + k + 1) * inner];
            if src.iter().all(|v| *v == Complex64::new(0.0, 0.0)) {
                continue;
            }
            let mut p = p0;
            for j in 0..j_count {
                let dst = &mut out[(o * j_count + j) * inner..(o * j_count + j + 1) * inner];
                for (d, v) in dst.iter_mut().zip(src) {
                    *d += v * p;
                }
                p *= step;
            }
        }
    }
    out
}

fn fourier_sum<F>(f: &F, lo: &[f64], hi: &[f64], panels: &[usize], order: usize, axes: &[FreqAxis]) -> (Vec<Complex64>, f64)
where
    F: Fn(&[f64]) -> Complex64,
{
    let dim = lo.len();
    let rules: Vec<_> = (0..dim).map(|i| composite_rule(lo[i], hi[i], panels[i], order)).collect();
    let mut shape: Vec<usize> = rules.iter().map(|r| r.0.len()).collect();
    let total: usize = shape.iter().product();
    let mut data = Vec::with_capacity(total);
    let mut mass = 0.0;
    let mut point = vec![0.0; dim];
    for j in 0..total {
        let mut rem = j;
        let mut w = 1.0;
        for a in (0..dim).rev() {
            let i = rem % shape[a];
            rem /= shape[a];
            point[a] = rules[a].0[i];
            w *= rules[a].1[i];
        }
        let v = f(&point) * w;
        mass += v.norm();
        data.push(v);
    }
    for a in (0..dim).rev() {
        data = contract(&data, &shape, a, &rules[a].0, &axes[a]);
        shape[a] = axes[a].count;
    }
    (data, mass)
}

/// `∫ f(t) e^{-2πi ξ·t} dt` over the box for every `ξ` of the tensor frequency
/// grid (first axis slowest). The integrand is sampled once per rule; panels
/// double until the largest change over all frequencies is within
/// `spec.rel_tol` of `∫|f|`.
pub fn fourier_box<F>(
    f: F,
    lo: &[f64],
    hi: &[f64],
    initial_panels: &[usize],
    axes: &[FreqAxis],
    spec: &QuadSpec,
) -> Result<Vec<Complex64>>
where
    F: Fn(&[f64]) -> Complex64,
{
    let len: usize = axes.iter().map(|a| a.count).product();
    if lo.iter().zip(hi).any(|(a, b)| !(a < b)) {
        return Ok(vec![Complex64::new(0.0, 0.0); len]);
    }
    let mut panels: Vec<usize> = initial_panels.iter().map(|&p| p.max(1)).collect();
    let (mut prev, _) = fourier_sum(&f, lo, hi, &panels, spec.order, axes);
    let mut last_err = f64::INFINITY;
    for _ in 0..spec.max_doublings {
        panels.iter_mut().for_each(|p| *p *= 2);
        let (cur, mass) = fourier_sum(&f, lo, hi, &panels, spec.order, axes);
        let err = cur.iter().zip(&prev).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        if err <= spec.rel_tol * mass.max(f64::MIN_POSITIVE) || mass == 0.0 {
            return Ok(cur);
        }
        prev = cur;
        last_err = err;
    }
    Err(Error::QuadratureNonConvergence {
        estimate: prev.iter().map(|v| v.norm()).fold(0.0, f64::max),
        error: last_err,
    })
}

/// Globally adaptive Gauss–Legendre for a real integrand on `[a, b]`:
/// bisect the interval with the largest local error estimate until the total
/// estimate meets `max(rel_tol·|I|, abs_tol)`.
pub fn adaptive<F>(f: F, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    const ORDER: usize = 10;
    const MAX_INTERVALS: usize = 4000;
    let (gx, gw) = cached_rule(ORDER);
    let rule = |lo: f64, hi: f64| -> f64 {
        let c = 0.5 * (lo + hi);
        let h = 0.5 * (hi - lo);
        gx.iter().zip(gw).map(|(x, w)| w * f(c + h * x)).sum::<f64>() * h
    };
    let estimate = |lo: f64, hi: f64| -> (f64, f64) {
        let mid = 0.5 * (lo + hi);
        let whole = rule(lo, hi);
        let halves = rule(lo, mid) + rule(mid, hi);
        (halves, (halves - whole).abs())
    };
    // (lo, hi, value, error)
    let mut intervals: Vec<(f64, f64, f64, f64)> = Vec::new();
    let (v, e) = estimate(a, b);
    intervals.push((a, b, v, e));
    loop {
        let total: f64 = intervals.iter().map(|i| i.2).sum();
        let err: f64 = intervals.iter().map(|i| i.3).sum();
        if err <= (rel_tol * total.abs()).max(abs_tol) {
            return Ok(total);
        }
        if intervals.len() >= MAX_INTERVALS {
            return Err(Error::QuadratureNonConvergence {
                estimate: total,
                error: err,
            });
        }
        let worst = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let (lo, hi, _, _) = intervals.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = estimate(lo, mid);
        let (v2, e2) = estimate(mid, hi);
        intervals.push((lo, mid, v1, e1));
        intervals.push((mid, hi, v2, e2));
    }
}

/// Trapezoid weights for `n` equispaced nodes over `[lo, hi]`.
pub fn trapezoid_weights(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![0.0; n];
    }
    let h = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| if i == 0 || i == n - 1 { 0.5 * h } else { h })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(6);
        // Exact through degree 11.
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(10)).sum();
        assert!((s - 2.0 / 11.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn box_integral_of_gaussian() {
        let spec = QuadSpec::default();
        let v = integrate_box(
            |t| Complex64::new((-t[0] * t[0] - t[1] * t[1]).exp(), 0.0),
            &[-8.0, -8.0],
            &[8.0, 8.0],
            &[4, 4],
            &spec,
        )
        .unwrap();
        assert!((v.re - std::f64::consts::PI).abs() < 1e-10);
    }

    #[test]
    fn adaptive_handles_long_decades() {
        let v = adaptive(|r| 2.0 / (1.0 + r).powi(2), 0.0, 1e6, 1e-12, 1e-15).unwrap();
        assert!((v - 2.0 * (1.0 - 1.0 / (1.0 + 1e6))).abs() < 1e-10);
    }

    #[test]
    fn empty_box_is_zero() {
        let v = integrate_box(|_| Complex64::new(1.0, 0.0), &[1.0], &[0.0], &[4], &QuadSpec::default())
            .unwrap();
        assert_eq!(v, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn fourier_box_matches_closed_form() {
        // ∫_0^1 e^{-2πiξt} dt
        let axes = [FreqAxis { start: -3.0, step: 0.5, count: 13 }];
        let v = fourier_box(|_| Complex64::new(1.0, 0.0), &[0.0], &[1.0], &[8], &axes, &QuadSpec::default()).unwrap();
        for (j, got) in v.iter().enumerate() {
            let xi = -3.0 + 0.5 * j as f64;
            let want = if xi == 0.0 {
                Complex64::new(1.0, 0.0)
            } else {
                let z = Complex64::new(0.0, -std::f64::consts::TAU * xi);
                (z.exp() - 1.0) / z
            };
            assert!((got - want).norm() < 1e-12, "ξ = {xi}");
        }
        let axes2 = [FreqAxis { start: 0.0, step: 1.0, count: 2 }, FreqAxis { start: -1.0, step: 0.5, count: 3 }];
        let f = |t: &[f64]| Complex64::new((-(t[0] * t[0] + 2.0 * t[1] * t[1])).exp(), 0.0);
        let v = fourier_box(f, &[-6.0, -5.0], &[6.0, 5.0], &[8, 8], &axes2, &QuadSpec::default()).unwrap();
        let pi = std::f64::consts::PI;
        for (j, got) in v.iter().enumerate() {
            let (a, b) = (j / 3, j % 3);
            let (x1, x2) = (a as f64, -1.0 + 0.5 * b as f64);
            let want = pi.sqrt() * (-pi * pi * x1 * x1).exp() * (pi / 2.0).sqrt() * (-pi * pi * x2 * x2 / 2.0).exp();
            assert!((got.re - want).abs() < 1e-12 && got.im.abs() < 1e-12, "{j}: {got} vs {want}");
        }
    }
}
