use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use super::{Poly, Window};
use crate::error::{Error, Result};
use crate::linalg::{binomial, dot, multi_binomial, norm, order, sub_indices};

/// `e^{-46}` relative to the peak is treated as zero when truncating Gaussian tails.
const TAIL_LOG: f64 = 46.0;

/// A smooth function with computable derivatives and a box outside of which
/// it vanishes (or is negligible against `e^{growth |t|}`).
pub trait SmoothFn: Sync {
    fn dim(&self) -> usize;

    fn derivative(&self, alpha: &[u32], t: &[f64]) -> Complex64;

    fn value(&self, t: &[f64]) -> Complex64 {
        self.derivative(&vec![0; self.dim()], t)
    }

    fn support_box(&self, growth: f64) -> (Vec<f64>, Vec<f64>);

    /// Largest oscillation frequency, used to size quadrature panels.
    fn frequency(&self) -> f64 {
        0.0
    }

    /// Shortest feature length, used with `frequency` to size panels.
    fn length_scale(&self) -> f64 {
        f64::INFINITY
    }
}

impl SmoothFn for Window {
    fn dim(&self) -> usize {
        Window::dim(self)
    }

    fn derivative(&self, alpha: &[u32], t: &[f64]) -> Complex64 {
        Complex64::new(Window::derivative(self, alpha, t), 0.0)
    }

    fn value(&self, t: &[f64]) -> Complex64 {
        Complex64::new(Window::value(self, t), 0.0)
    }

    fn support_box(&self, _growth: f64) -> (Vec<f64>, Vec<f64>) {
        Window::support_box(self)
    }

    fn length_scale(&self) -> f64 {
        self.radius()
    }
}

/// `t ↦ e^{η·(t-x)} conj(ψ(t-x)) e^{-2πi ξ·t}`, the analysing atom of the STFT
/// (with `η = 0`) and the members of the bounded family of the exponential estimate.
#[derive(Debug, Clone)]
pub struct GaborAtom<'a> {
    pub window: &'a Window,
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
    pub tilt: Option<Vec<f64>>,
}

impl<'a> GaborAtom<'a> {
    pub fn new(window: &'a Window, x: &[f64], xi: &[f64]) -> Self {
        GaborAtom {
            window,
            x: x.to_vec(),
            xi: xi.to_vec(),
            tilt: None,
        }
    }

    pub fn tilted(mut self, eta: &[f64]) -> Self {
        self.tilt = Some(eta.to_vec());
        self
    }

    fn eta(&self, i: usize) -> f64 {
        self.tilt.as_ref().map_or(0.0, |e| e[i])
    }

    /// `|∂^α atom(t)|`, cheaper than the complex value.
    pub fn derivative_abs(&self, alpha: &[u32], t: &[f64]) -> f64 {
        let mut v = self.window.amplitude().abs();
        let mut expo = 0.0;
        for i in 0..t.len() {
            let s = t[i] - self.x[i];
            let z = Complex64::new(self.eta(i), -TAU * self.xi[i]);
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..=alpha[i] {
                let w = self.window.axis_derivative(i, j, s);
                if w != 0.0 {
                    acc += binomial(alpha[i], j) * w * z.powu(alpha[i] - j);
                }
            }
            v *= acc.norm();
            expo += self.eta(i) * s;
        }
        v * expo.exp()
    }
}

impl SmoothFn for GaborAtom<'_> {
    fn dim(&self) -> usize {
        self.x.len()
    }

    fn derivative(&self, alpha: &[u32], t: &[f64]) -> Complex64 {
        let mut v = Complex64::new(self.window.amplitude(), 0.0);
        let mut phase = Complex64::new(0.0, 0.0);
        for i in 0..t.len() {
            let s = t[i] - self.x[i];
            // conj(ψ) = ψ for the real bump
            let z = Complex64::new(self.eta(i), -TAU * self.xi[i]);
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..=alpha[i] {
                let w = self.window.axis_derivative(i, j, s);
                if w != 0.0 {
                    acc += binomial(alpha[i], j) * w * z.powu(alpha[i] - j);
                }
            }
            v *= acc;
            if v == Complex64::new(0.0, 0.0) {
                return v;
            }
            phase += Complex64::new(self.eta(i) * s, -TAU * self.xi[i] * t[i]);
        }
        v * phase.exp()
    }

    fn value(&self, t: &[f64]) -> Complex64 {
        let s: Vec<f64> = t.iter().zip(&self.x).map(|(a, b)| a - b).collect();
        let w = self.window.value(&s);
        if w == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let re: f64 = (0..t.len()).map(|i| self.eta(i) * s[i]).sum();
        let im = -TAU * dot(&self.xi, t);
        w * Complex64::new(re, im).exp()
    }

    fn support_box(&self, _growth: f64) -> (Vec<f64>, Vec<f64>) {
        let (lo, hi) = self.window.support_box();
        (
            lo.iter().zip(&self.x).map(|(a, b)| a + b).collect(),
            hi.iter().zip(&self.x).map(|(a, b)| a + b).collect(),
        )
    }

    fn frequency(&self) -> f64 {
        self.xi.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn length_scale(&self) -> f64 {
        self.window.radius()
    }
}

/// `t ↦ φ(x - t)`.
#[derive(Debug, Clone)]
pub struct ReflectedBump<'a> {
    pub window: &'a Window,
    pub x: Vec<f64>,
}

impl SmoothFn for ReflectedBump<'_> {
    fn dim(&self) -> usize {
        self.x.len()
    }

    fn derivative(&self, alpha: &[u32], t: &[f64]) -> Complex64 {
        let s: Vec<f64> = self.x.iter().zip(t).map(|(a, b)| a - b).collect();
        let sign = if order(alpha).is_multiple_of(2) { 1.0 } else { -1.0 };
        Complex64::new(sign * self.window.derivative(alpha, &s), 0.0)
    }

    fn support_box(&self, _growth: f64) -> (Vec<f64>, Vec<f64>) {
        let (lo, hi) = self.window.support_box();
        (
            hi.iter().zip(&self.x).map(|(h, x)| x - h).collect(),
            lo.iter().zip(&self.x).map(|(l, x)| x - l).collect(),
        )
    }

    fn length_scale(&self) -> f64 {
        self.window.radius()
    }
}

/// `scale · p(t-c) · e^{-σ|t-c|²} · e^{-η·t} · [bump(t)]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchwartzTestFunction {
    #[serde(default)]
    pub poly: Poly,
    /// Gaussian rate `σ ≥ 0`; zero requires a bump factor.
    #[serde(default)]
    pub sigma: f64,
    pub center: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tilt: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bump: Option<Window>,
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

impl SchwartzTestFunction {
    /// `e^{-σ|t-c|²}`.
    pub fn gaussian(sigma: f64, center: Vec<f64>) -> Result<Self> {
        SchwartzTestFunction {
            poly: Poly::default(),
            sigma,
            center,
            tilt: None,
            bump: None,
            scale: 1.0,
        }
        .validated()
    }

    /// The bump itself as a test function.
    pub fn bump(window: Window) -> Self {
        SchwartzTestFunction {
            poly: Poly::default(),
            sigma: 0.0,
            center: window.center().to_vec(),
            tilt: None,
            bump: Some(window),
            scale: 1.0,
        }
    }

    pub fn validated(self) -> Result<Self> {
        let d = self.center.len();
        if d == 0 || d > crate::geometry::MAX_DIM {
            return Err(Error::InvalidInput("test function dimension outside 1..=3".into()));
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::InvalidInput("Gaussian rate must be ≥ 0".into()));
        }
        if self.sigma == 0.0 && self.bump.is_none() {
            return Err(Error::InvalidInput("σ = 0 needs a compactly supported bump factor".into()));
        }
        if let Some(b) = &self.bump {
            if b.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, got: b.dim() });
            }
        }
        if let Some(t) = &self.tilt {
            if t.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: t.len() });
            }
        }
        if self.poly.arity() > d || !self.poly.is_finite() || !self.scale.is_finite() {
            return Err(Error::InvalidInput("invalid polynomial factor".into()));
        }
        Ok(self)
    }

    pub fn with_tilt(mut self, eta: &[f64]) -> Self {
        let t = self.tilt.get_or_insert_with(|| vec![0.0; eta.len()]);
        for (a, b) in t.iter_mut().zip(eta) {
            *a += b;
        }
        self
    }

    pub fn with_poly(mut self, poly: Poly) -> Self {
        self.poly = poly;
        self
    }

    pub fn scaled(mut self, s: f64) -> Self {
        self.scale *= s;
        self
    }

    fn tilt_at(&self, i: usize) -> f64 {
        self.tilt.as_ref().map_or(0.0, |t| t[i])
    }

    /// `d^k/ds^k` of `e^{-σ(s-c_i)² - η_i s} · bump_i(s)`, without amplitude.
    fn axis_factor(&self, i: usize, k: u32, s: f64) -> f64 {
        let u = s - self.center[i];
        let (sig, eta) = (self.sigma, self.tilt_at(i));
        let ln_e = -sig * u * u - eta * s;
        // E^{(j)} = P_j(u) E with P_{j+1} = P_j' + P_j (-2σu - η)
        let mut p: Vec<f64> = vec![1.0];
        let mut e_derivs = Vec::with_capacity(k as usize + 1);
        for j in 0..=k {
            e_derivs.push(p.iter().rev().fold(0.0, |acc, a| acc * u + a));
            if j == k {
                break;
            }
            let mut next = vec![0.0; p.len() + 1];
            for (m, &a) in p.iter().enumerate() {
                if m > 0 {
                    next[m - 1] += m as f64 * a;
                }
                next[m] -= eta * a;
                next[m + 1] -= 2.0 * sig * a;
            }
            p = next;
        }
        let e = ln_e.exp();
        match &self.bump {
            None => e_derivs[k as usize] * e,
            Some(b) => {
                let mut acc = 0.0;
                for j in 0..=k {
                    let bj = b.axis_derivative(i, k - j, s);
                    if bj != 0.0 {
                        acc += binomial(k, j) * e_derivs[j as usize] * bj;
                    }
                }
                acc * e
            }
        }
    }

    /// Real `∂^α` value.
    pub fn real_derivative(&self, alpha: &[u32], t: &[f64]) -> f64 {
        let u: Vec<f64> = t.iter().zip(&self.center).map(|(a, c)| a - c).collect();
        let amp = self.scale * self.bump.as_ref().map_or(1.0, |b| b.amplitude());
        let mut total = 0.0;
        for beta in sub_indices(alpha) {
            let pb = self.poly.derivative(&beta, &u);
            if pb == 0.0 {
                continue;
            }
            let mut rest = 1.0;
            for i in 0..t.len() {
                rest *= self.axis_factor(i, alpha[i] - beta[i], t[i]);
                if rest == 0.0 {
                    break;
                }
            }
            total += multi_binomial(alpha, &beta) * pb * rest;
        }
        amp * total
    }

    pub fn real_value(&self, t: &[f64]) -> f64 {
        let u: Vec<f64> = t.iter().zip(&self.center).map(|(a, c)| a - c).collect();
        let mut v = self.scale * self.poly.eval(&u);
        if let Some(b) = &self.bump {
            v *= b.value(t);
            if v == 0.0 {
                return 0.0;
            }
        }
        let eta_t: f64 = (0..t.len()).map(|i| self.tilt_at(i) * t[i]).sum();
        v * (-self.sigma * dot(&u, &u) - eta_t).exp()
    }

    /// Half-width `R` such that `|f(t)| e^{growth|t|}` is below `e^{-46}` of its
    /// bound's peak once `|t - c|_∞ ≥ R`.
    pub fn tail_radius(&self, growth: f64) -> f64 {
        let d = self.center.len() as f64;
        let deg = self.poly.degree() as f64;
        let lin = norm(self.tilt.as_deref().unwrap_or(&[])) + growth.abs();
        let c0 = norm(&self.center) * lin;
        // concave upper bound of ln|f| on the sphere |t - c| = s
        let bound = |s: f64| deg * (1.0 + s).ln() - self.sigma * s * s + lin * s + c0;
        let mut peak = f64::NEG_INFINITY;
        let mut s = 0.0;
        loop {
            let b = bound(s);
            peak = peak.max(b);
            if b < peak - TAIL_LOG && bound(s + 0.25) < b {
                return s.max(1.0) * d.sqrt().max(1.0);
            }
            s += 0.25;
        }
    }
}

impl SmoothFn for SchwartzTestFunction {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn derivative(&self, alpha: &[u32], t: &[f64]) -> Complex64 {
        Complex64::new(self.real_derivative(alpha, t), 0.0)
    }

    fn value(&self, t: &[f64]) -> Complex64 {
        Complex64::new(self.real_value(t), 0.0)
    }

    fn support_box(&self, growth: f64) -> (Vec<f64>, Vec<f64>) {
        if let Some(b) = &self.bump {
            return b.support_box();
        }
        let r = self.tail_radius(growth);
        (
            self.center.iter().map(|c| c - r).collect(),
            self.center.iter().map(|c| c + r).collect(),
        )
    }

    fn length_scale(&self) -> f64 {
        match &self.bump {
            Some(b) => b.radius(),
            None => self.sigma.sqrt().recip(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stft::Monomial;

    fn fd_check(f: &dyn SmoothFn, t: &[f64]) {
        let d = f.dim();
        let h = 1e-5;
        for i in 0..d {
            for k in 0..3u32 {
                let mut a = vec![0; d];
                a[i] = k;
                let mut b = a.clone();
                b[i] += 1;
                let (mut tp, mut tm) = (t.to_vec(), t.to_vec());
                tp[i] += h;
                tm[i] -= h;
                let fd = (f.derivative(&a, &tp) - f.derivative(&a, &tm)) / (2.0 * h);
                let exact = f.derivative(&b, t);
                assert!((fd - exact).norm() < 1e-6 * (1.0 + exact.norm()), "axis {i} order {k}: {fd} vs {exact}");
            }
        }
    }

    #[test]
    fn atom_derivatives() {
        let w = Window::new(1.0, 2).unwrap();
        let atom = GaborAtom::new(&w, &[0.2, -0.1], &[1.5, -0.5]).tilted(&[0.3, -0.7]);
        fd_check(&atom, &[0.1, 0.3]);
        let t = [0.4, -0.5];
        assert!((atom.value(&t) - atom.derivative(&[0, 0], &t)).norm() < 1e-15);
        assert!((atom.derivative(&[2, 1], &t).norm() - atom.derivative_abs(&[2, 1], &t)).abs() < 1e-12);
    }

    #[test]
    fn schwartz_derivatives() {
        let p = Poly::new(vec![
            Monomial { coeff: 1.0, powers: vec![1, 0] },
            Monomial { coeff: -0.5, powers: vec![0, 2] },
        ]);
        let f = SchwartzTestFunction::gaussian(0.8, vec![0.1, -0.2]).unwrap().with_poly(p).with_tilt(&[0.5, 1.0]);
        fd_check(&f, &[0.3, 0.4]);
        let bumped = SchwartzTestFunction {
            poly: Poly::default(),
            sigma: 0.0,
            center: vec![0.0, 0.0],
            tilt: Some(vec![1.0, -1.0]),
            bump: Some(Window::new(1.5, 2).unwrap()),
            scale: 2.0,
        }
        .validated()
        .unwrap();
        fd_check(&bumped, &[0.3, -0.4]);
        let t = [0.3, -0.4];
        assert!((bumped.real_value(&t) - bumped.real_derivative(&[0, 0], &t)).abs() < 1e-15);
    }

    #[test]
    fn reflected_bump() {
        let w = Window::new(0.5, 1).unwrap().centered_at(vec![0.1]).unwrap();
        let g = ReflectedBump { window: &w, x: vec![1.0] };
        fd_check(&g, &[0.8]);
        assert_eq!(g.support_box(0.0), (vec![0.4], vec![1.4]));
        assert!((g.value(&[0.9]).re - w.value(&[0.1])).abs() < 1e-15);
    }

    #[test]
    fn gaussian_tail_box() {
        let g = SchwartzTestFunction::gaussian(1.0, vec![0.0]).unwrap();
        let r = g.tail_radius(0.0);
        assert!(g.real_value(&[r]) < 1e-19 && r < 10.0);
        assert!(g.tail_radius(3.0) > r);
    }
}
