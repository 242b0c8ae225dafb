use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::norms::{derivative_sup, eta_samples, schwartz_norm};
use super::report::{BoundReport, BOUND_TOL};
use crate::error::{Error, Result};
use crate::geometry::directions::DEFAULT_SEED;
use crate::geometry::ConvexBody;
use crate::linalg::{dot, norm};
use crate::quadrature::{integrate_box, QuadSpec};
use crate::stft::{dual_stft, GaborAtom, GridSpec, SchwartzTestFunction, Window};
use crate::weights::{default_radii, nachbin_member, DecreasingWeightSystem, Verdict, Weight, Witness};

/// Sampling for the bounded-family estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lemma1Config {
    pub epsilon: f64,
    pub k: u32,
    pub n: u32,
    pub grid: GridSpec,
    pub eta_samples: usize,
    /// `t` points per axis for the inner Schwartz norm.
    pub t_points: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_tol() -> f64 {
    BOUND_TOL
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

impl Lemma1Config {
    pub fn default_for(dim: usize, k: u32, n: u32) -> Result<Self> {
        let (grid, etas, t_points) = match dim {
            1 => (GridSpec::symmetric(1, 4.0, 4.0, 17, 17)?, 20, 201),
            2 => (GridSpec::symmetric(2, 4.0, 4.0, 5, 5)?, 12, 25),
            _ => (GridSpec::symmetric(dim, 3.0, 3.0, 3, 3)?, 8, 9),
        };
        Ok(Lemma1Config {
            epsilon: 1.0,
            k,
            n,
            grid,
            eta_samples: etas,
            t_points,
            tol: BOUND_TOL,
            seed: DEFAULT_SEED,
        })
    }
}

/// `sup_{s ≥ 0} e^{-εs}(1+s)^k`.
pub fn exp_poly_sup(epsilon: f64, k: u32) -> f64 {
    let k = k as f64;
    if k / epsilon > 1.0 {
        (k / epsilon).powf(k) * (epsilon - k).exp()
    } else {
        1.0
    }
}

/// `sup_ξ v(ξ)(1+|ξ|)^n`, from the Nachbin witness of row `n` and the
/// sampled frequencies. Errors unless the row is bounded.
fn nachbin_sup(v: &Weight, n: u32, dim: usize, xis: &[Vec<f64>]) -> Result<f64> {
    let system = DecreasingWeightSystem::polynomial(n as usize, dim);
    let report = nachbin_member(v, &system, &default_radii())?;
    let row = report
        .row(n as usize)
        .ok_or_else(|| Error::NotNachbin(format!("no row for order {n}")))?;
    let c = match (&row.verdict, &row.witness) {
        (Verdict::Certified | Verdict::NumericallySupported, Some(Witness::Bound { c })) => *c,
        _ => return Err(Error::NotNachbin(format!("v(ξ)(1+|ξ|)^{n} is not bounded"))),
    };
    let sampled = xis
        .iter()
        .map(|xi| (v.ln_value(xi) + n as f64 * (1.0 + norm(xi)).ln()).exp())
        .fold(0.0, f64::max);
    Ok(c.max(sampled))
}

/// Product constant `e^{R r}(8πR)^n max_{|α|≤n}‖∂^αψ‖_∞ (1+r)^k` with
/// `R = max(1, max_{η∈K}|η|)` and `r` the radius of a ball around the origin holding `supp ψ`.
pub fn lemma1_constant(psi: &Window, k: &ConvexBody, kk: u32, n: u32) -> f64 {
    let big_r = k.circumradius_bound().max(1.0);
    let r = norm(psi.center()) + psi.radius() * (psi.dim() as f64).sqrt();
    (big_r * r).exp()
        * (8.0 * std::f64::consts::PI * big_r).powi(n as i32)
        * psi.max_sup_norm(n)
        * (1.0 + r).powi(kk as i32)
}

/// Samples `e^{-ε|x|} v(ξ) ‖e^{η·(t-x)} conj(M_ξ T_x ψ)‖_{S^n_k}` against the
/// product constant times the two weight suprema.
pub fn lemma1_suite(psi: &Window, k: &ConvexBody, v: &Weight, cfg: &Lemma1Config) -> Result<BoundReport> {
    let dim = psi.dim();
    if k.dim() != dim || cfg.grid.dim != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: k.dim().max(cfg.grid.dim) });
    }
    if !(cfg.epsilon > 0.0 && cfg.epsilon.is_finite()) {
        return Err(Error::InvalidInput("ε must be positive".into()));
    }
    if cfg.n as usize > crate::stft::MAX_ORDER {
        return Err(Error::InvalidInput(format!("order {} exceeds {}", cfg.n, crate::stft::MAX_ORDER)));
    }
    let grid = cfg.grid.validated()?;
    let nodes: Vec<(Vec<f64>, Vec<f64>)> = (0..grid.len()).map(|j| grid.node(j)).collect();
    let xis: Vec<Vec<f64>> = nodes.iter().map(|(_, xi)| xi.clone()).collect();
    let xi_sup = nachbin_sup(v, cfg.n, dim, &xis)?;
    let x_sup = exp_poly_sup(cfg.epsilon, cfg.k);
    let constant = lemma1_constant(psi, k, cfg.k, cfg.n);
    let rhs = constant * x_sup * xi_sup;
    let etas = eta_samples(k, cfg.eta_samples, cfg.seed);
    let (wlo, whi) = psi.support_box();
    let kf = cfg.k as f64;
    let samples: Vec<(Vec<f64>, f64, f64)> = nodes
        .par_iter()
        .flat_map_iter(|(x, xi)| {
            let lo: Vec<f64> = wlo.iter().zip(x).map(|(a, b)| a + b).collect();
            let hi: Vec<f64> = whi.iter().zip(x).map(|(a, b)| a + b).collect();
            let outer = (-cfg.epsilon * norm(x) + v.ln_value(xi)).exp();
            etas.iter()
                .map(|eta| {
                    let atom = GaborAtom::new(psi, x, xi).tilted(eta);
                    let inner = derivative_sup(
                        |a, t| atom.derivative_abs(a, t),
                        |t| kf * (1.0 + norm(t)).ln(),
                        &lo,
                        &hi,
                        cfg.n,
                        cfg.t_points,
                    )
                    .value;
                    let mut coords = x.clone();
                    coords.extend_from_slice(xi);
                    coords.extend_from_slice(eta);
                    (coords, outer * inner, rhs)
                })
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(BoundReport::from_samples(samples, constant, cfg.tol)
        .with_diagnostic(format!("x_sup={x_sup:e} xi_sup={xi_sup:e}")))
}

/// `C_{η,k,n,ψ} = 4^n(1+√d)^n max{1,|η|^n} max_{|α|≤n}‖∂^αψ‖_∞ ∫_{supp ψ} e^{-η·t}(1+|t|)^k dt`.
pub fn lemma2_constant(psi: &Window, eta: &[f64], k: u32, n: u32, quad: &QuadSpec) -> Result<f64> {
    if eta.len() != psi.dim() {
        return Err(Error::DimensionMismatch { expected: psi.dim(), got: eta.len() });
    }
    if n as usize > crate::stft::MAX_ORDER {
        return Err(Error::InvalidInput(format!("order {n} exceeds {}", crate::stft::MAX_ORDER)));
    }
    quad.validate()?;
    let d = psi.dim() as f64;
    let kf = k as f64;
    let integral = support_integral(psi, |t| -dot(eta, t) + kf * (1.0 + norm(t)).ln(), quad)?;
    Ok(4f64.powi(n as i32)
        * (1.0 + d.sqrt()).powi(n as i32)
        * norm(eta).powi(n as i32).max(1.0)
        * psi.max_sup_norm(n)
        * integral)
}

/// `∫_{supp ψ} e^{g(t)} dt` over the support box of `ψ`.
pub(crate) fn support_integral<G: Fn(&[f64]) -> f64>(psi: &Window, g: G, quad: &QuadSpec) -> Result<f64> {
    let (lo, hi) = psi.support_box();
    let panels = vec![quad.panels; lo.len()];
    Ok(integrate_box(|t| num_complex::Complex64::new(g(t).exp(), 0.0), &lo, &hi, &panels, quad)?.re)
}

/// Samples `|V_ψ̄(e^{-η·t}φ)(x,-ξ)|` against
/// `C_{η,k,n,ψ} e^{-η·x} ‖φ‖_{S^n_k} / ((1+|x|)^k (1+|ξ|)^n)` on every grid node.
#[allow(clippy::too_many_arguments)]
pub fn lemma2_suite(
    psi: &Window,
    eta: &[f64],
    k: u32,
    n: u32,
    phi: &SchwartzTestFunction,
    grid: &GridSpec,
    quad: &QuadSpec,
    tol: f64,
) -> Result<BoundReport> {
    let constant = lemma2_constant(psi, eta, k, n, quad)?;
    let phi_norm = schwartz_norm(phi, k, n)?;
    let field = dual_stft(&phi.clone().with_tilt(eta), psi, grid, quad)?;
    let grid = field.grid;
    let (kf, nf) = (k as f64, n as f64);
    let mut peak = 0.0f64;
    let mut edge = 0.0f64;
    let samples: Vec<(Vec<f64>, f64, f64)> = (0..grid.len())
        .map(|j| {
            let (x, xi) = grid.node(j);
            let lhs = field.values[j].norm();
            peak = peak.max(lhs);
            if grid.is_boundary(j) {
                edge = edge.max(lhs);
            }
            let ln_rhs = -dot(eta, &x) - kf * (1.0 + norm(&x)).ln() - nf * (1.0 + norm(&xi)).ln();
            let rhs = constant * phi_norm * ln_rhs.exp();
            let mut coords = x;
            coords.extend(xi);
            (coords, lhs, rhs)
        })
        .collect();
    let tail = if peak > 0.0 { edge / peak } else { 0.0 };
    Ok(BoundReport::from_samples(samples, constant, tol)
        .with_diagnostic(format!("schwartz_norm={phi_norm:e} boundary_fraction={tail:e}")))
}
