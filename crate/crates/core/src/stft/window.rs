use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::geometry::MAX_DIM;
use crate::linalg::multi_indices;
use crate::quadrature::adaptive;

/// Highest per-axis derivative order with tabulated sup norms.
pub const MAX_ORDER: usize = 8;
const SUP_GRID: usize = 4096;

struct ProfileTables {
    /// `Q_k` coefficients, lowest degree first.
    q: Vec<Vec<f64>>,
    /// `sup |φ^{(k)}|` over `(-1, 1)`.
    sup: Vec<f64>,
    /// `∫ φ(u)² du`.
    l2: f64,
}

fn poly_eval(c: &[f64], u: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, a| acc * u + a)
}

/// `Q_{k+1} = Q_k' (1-u²)² + 4k u Q_k (1-u²) - 2u Q_k`.
fn next_q(q: &[f64], k: usize) -> Vec<f64> {
    let mut out = vec![0.0; q.len() + 3];
    let kf = k as f64;
    for (j, &a) in q.iter().enumerate() {
        if j > 0 {
            // j a u^{j-1} (1 - 2u² + u⁴)
            let d = j as f64 * a;
            out[j - 1] += d;
            out[j + 1] -= 2.0 * d;
            out[j + 3] += d;
        }
        // 4k a u^{j+1} (1 - u²) - 2 a u^{j+1}
        out[j + 1] += (4.0 * kf - 2.0) * a;
        out[j + 3] -= 4.0 * kf * a;
    }
    while out.len() > 1 && *out.last().unwrap() == 0.0 {
        out.pop();
    }
    out
}

/// `φ^{(k)}(u)` for the profile `φ(u) = exp(-1/(1-u²))`.
pub fn profile_derivative(k: usize, u: f64) -> f64 {
    if u.abs() >= 1.0 {
        return 0.0;
    }
    let w = 1.0 - u * u;
    let q = &tables().q[k];
    poly_eval(q, u) * (-2.0 * k as f64 * w.ln() - 1.0 / w).exp()
}

fn profile_derivative_uncached(q: &[f64], k: usize, u: f64) -> f64 {
    if u.abs() >= 1.0 {
        return 0.0;
    }
    let w = 1.0 - u * u;
    poly_eval(q, u) * (-2.0 * k as f64 * w.ln() - 1.0 / w).exp()
}

fn tables() -> &'static ProfileTables {
    static TABLES: OnceLock<ProfileTables> = OnceLock::new();
    TABLES.get_or_init(|| {
        let mut q = vec![vec![1.0]];
        for k in 0..MAX_ORDER {
            let next = next_q(&q[k], k);
            q.push(next);
        }
        let sup = q
            .iter()
            .enumerate()
            .map(|(k, qk)| {
                let f = |u: f64| profile_derivative_uncached(qk, k, u).abs();
                let h = 2.0 / SUP_GRID as f64;
                let (mut best_u, mut best) = (0.0, f(0.0));
                for i in 1..SUP_GRID {
                    let u = -1.0 + i as f64 * h;
                    let v = f(u);
                    if v > best {
                        best = v;
                        best_u = u;
                    }
                }
                // golden-section refinement around the grid maximizer
                let (mut a, mut b) = ((best_u - h).max(-1.0), (best_u + h).min(1.0));
                let g = 0.5 * (5f64.sqrt() - 1.0);
                for _ in 0..80 {
                    let c = b - g * (b - a);
                    let d = a + g * (b - a);
                    if f(c) > f(d) {
                        b = d;
                    } else {
                        a = c;
                    }
                }
                best.max(f(0.5 * (a + b)))
            })
            .collect();
        let l2 = adaptive(|u| profile_derivative_uncached(&[1.0], 0, u).powi(2), -1.0, 1.0, 1e-14, 0.0)
            .expect("profile L2 integral");
        ProfileTables { q, sup, l2 }
    })
}

/// `sup |φ^{(k)}|` of the 1-d profile.
pub fn profile_sup(k: usize) -> f64 {
    tables().sup[k]
}

/// Tensor bump `ψ(t) = A ∏ φ((t_i - c_i)/r)`, supported in the closed box of
/// half-width `r` around `c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WindowSpec", into = "WindowSpec")]
pub struct Window {
    radius: f64,
    amplitude: f64,
    center: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    pub radius: f64,
    pub dim: usize,
    #[serde(default = "unit")]
    pub amplitude: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
}

fn unit() -> f64 {
    1.0
}

impl TryFrom<WindowSpec> for Window {
    type Error = Error;

    fn try_from(s: WindowSpec) -> Result<Self> {
        let w = Window::new(s.radius, s.dim)?.with_amplitude(s.amplitude)?;
        match s.center {
            Some(c) => w.centered_at(c),
            None => Ok(w),
        }
    }
}

impl From<Window> for WindowSpec {
    fn from(w: Window) -> Self {
        let centered = w.center.iter().all(|c| *c == 0.0);
        WindowSpec {
            radius: w.radius,
            dim: w.center.len(),
            amplitude: w.amplitude,
            center: (!centered).then_some(w.center),
        }
    }
}

impl Window {
    pub fn new(radius: f64, dim: usize) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidInput(format!("window radius {radius} must be positive")));
        }
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::InvalidInput(format!("dimension {dim} outside 1..={MAX_DIM}")));
        }
        Ok(Window {
            radius,
            amplitude: 1.0,
            center: vec![0.0; dim],
        })
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Result<Self> {
        if !amplitude.is_finite() {
            return Err(Error::InvalidInput("non-finite window amplitude".into()));
        }
        self.amplitude = amplitude;
        Ok(self)
    }

    pub fn centered_at(mut self, center: Vec<f64>) -> Result<Self> {
        if center.len() != self.center.len() {
            return Err(Error::DimensionMismatch {
                expected: self.center.len(),
                got: center.len(),
            });
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("non-finite window center".into()));
        }
        self.center = center;
        Ok(self)
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    /// Radius of a Euclidean ball containing the support box: `r√d`.
    pub fn support_radius(&self) -> f64 {
        self.radius * (self.dim() as f64).sqrt()
    }

    pub fn support_box(&self) -> (Vec<f64>, Vec<f64>) {
        (
            self.center.iter().map(|c| c - self.radius).collect(),
            self.center.iter().map(|c| c + self.radius).collect(),
        )
    }

    /// `d^k/ds^k φ((s - c_axis)/r)`, without the amplitude.
    pub fn axis_derivative(&self, axis: usize, k: u32, s: f64) -> f64 {
        let r = self.radius;
        profile_derivative(k as usize, (s - self.center[axis]) / r) * r.powi(-(k as i32))
    }

    pub fn value(&self, t: &[f64]) -> f64 {
        let mut v = self.amplitude;
        for (i, ti) in t.iter().enumerate() {
            let u = (ti - self.center[i]) / self.radius;
            if u.abs() >= 1.0 {
                return 0.0;
            }
            v *= (-1.0 / (1.0 - u * u)).exp();
        }
        v
    }

    pub fn derivative(&self, alpha: &[u32], t: &[f64]) -> f64 {
        let mut v = self.amplitude;
        for (i, ti) in t.iter().enumerate() {
            v *= self.axis_derivative(i, alpha[i], *ti);
            if v == 0.0 {
                break;
            }
        }
        v
    }

    /// `‖∂^α ψ‖_∞`.
    pub fn sup_norm(&self, alpha: &[u32]) -> f64 {
        alpha
            .iter()
            .map(|&k| profile_sup(k as usize) * self.radius.powi(-(k as i32)))
            .product::<f64>()
            * self.amplitude.abs()
    }

    /// `max_{|α| ≤ n} ‖∂^α ψ‖_∞`.
    pub fn max_sup_norm(&self, n: u32) -> f64 {
        (0..=n)
            .flat_map(|o| multi_indices(self.dim(), o))
            .map(|a| self.sup_norm(&a))
            .fold(0.0, f64::max)
    }

    /// `‖ψ‖²_{L²}`.
    pub fn l2_norm_sq(&self) -> f64 {
        self.amplitude.powi(2) * (self.radius * tables().l2).powi(self.dim() as i32)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recurrence_matches_finite_differences() {
        let h = 1e-5;
        for k in 0..5 {
            for &u in &[-0.7, -0.2, 0.1, 0.45, 0.8] {
                let fd = (profile_derivative(k, u + h) - profile_derivative(k, u - h)) / (2.0 * h);
                let exact = profile_derivative(k + 1, u);
                assert!((fd - exact).abs() < 1e-5 * (1.0 + exact.abs()), "k={k} u={u}");
            }
        }
    }

    #[test]
    fn profile_facts() {
        assert!((profile_sup(0) - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(profile_derivative(3, 1.0), 0.0);
        assert_eq!(profile_derivative(2, 0.99999999), 0.0);
        let w = Window::new(2.0, 2).unwrap();
        assert!((w.value(&[0.0, 0.0]) - (-2.0f64).exp()).abs() < 1e-15);
        assert!((w.sup_norm(&[1, 0]) - profile_sup(1) * profile_sup(0) / 2.0).abs() < 1e-15);
        assert!(w.max_sup_norm(2) >= w.max_sup_norm(1));
    }

    #[test]
    fn spec_roundtrip() {
        let w = Window::new(1.0, 1).unwrap().centered_at(vec![0.25]).unwrap();
        let s = serde_json::to_string(&w).unwrap();
        assert_eq!(s, r#"{"radius":1.0,"dim":1,"amplitude":1.0,"center":[0.25]}"#);
        let back: Window = serde_json::from_str(&s).unwrap();
        assert_eq!(back, w);
        assert!(serde_json::from_str::<Window>(r#"{"radius":-1.0,"dim":1}"#).is_err());
    }
}
