use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lemmas::support_integral;
use super::norms::{eta_samples, schwartz_norm, tf_weighted_norm};
use super::report::{BoundReport, BOUND_TOL};
use crate::error::{Error, Result};
use crate::geometry::directions::DEFAULT_SEED;
use crate::geometry::{contains, ConvexBody, OpenConvexRegion};
use crate::linalg::norm;
use crate::quadrature::QuadSpec;
use crate::stft::{adjoint_apply, convolve, pairing, stft, GaborAtom, GridSpec, SchwartzTestFunction, TestDistribution, TimeFrequencyField, Window};
use crate::trend::{classify_log, MembershipVerdict, Trend, TrendRow};
use crate::weights::{IncreasingWeightSystem, DecreasingWeightSystem, Weight};

/// Anything that can be sampled on a time-frequency grid.
pub trait FieldSource: Sync {
    fn field(&self, grid: &GridSpec) -> Result<TimeFrequencyField>;
}

/// `V_ψ f`.
pub struct StftSource<'a> {
    pub f: &'a TestDistribution,
    pub psi: &'a Window,
    pub quad: QuadSpec,
}

impl FieldSource for StftSource<'_> {
    fn field(&self, grid: &GridSpec) -> Result<TimeFrequencyField> {
        stft(self.f, self.psi, grid, &self.quad)
    }
}

/// A closed-form field.
pub struct FnSource<F>(pub F);

impl<F> FieldSource for FnSource<F>
where
    F: Fn(&[f64], &[f64]) -> Complex64 + Sync,
{
    fn field(&self, grid: &GridSpec) -> Result<TimeFrequencyField> {
        TimeFrequencyField::from_fn(*grid, &self.0)
    }
}

fn fields(source: &dyn FieldSource, ladder: &[GridSpec]) -> Result<Vec<TimeFrequencyField>> {
    if ladder.is_empty() {
        return Err(Error::InvalidInput("empty window ladder".into()));
    }
    ladder.iter().map(|g| source.field(g)).collect()
}

/// `ln sup |F| w(x) v(ξ)` on each field.
fn ln_sups(fields: &[TimeFrequencyField], w: &Weight, v: &Weight) -> Vec<f64> {
    fields
        .iter()
        .map(|f| {
            f.values
                .par_iter()
                .enumerate()
                .map(|(j, val)| {
                    let a = val.norm();
                    if a == 0.0 {
                        return f64::NEG_INFINITY;
                    }
                    let (x, xi) = f.grid.node(j);
                    a.ln() + w.ln_value(&x) + v.ln_value(&xi)
                })
                .reduce(|| f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

fn row(label: String, index: usize, witness: Option<usize>, ln: Vec<f64>) -> TrendRow {
    let trend = classify_log(&ln);
    TrendRow { label, index, witness, sups: ln.iter().map(|l| l.exp()).collect(), trend }
}

/// Trend of `sup |F(x,ξ)| e^{h_{-K}(x)} v(ξ)` along the ladder. No Γ check.
pub fn weighted_sup_ladder(source: &dyn FieldSource, k: &ConvexBody, v: &Weight, ladder: &[GridSpec]) -> Result<TrendRow> {
    let fs = fields(source, ladder)?;
    let sups = fs.iter().map(|f| tf_weighted_norm(f, k, v)).collect::<Result<Vec<_>>>()?;
    let ln = sups.iter().map(|s| s.ln()).collect();
    Ok(row("K".into(), 0, None, ln))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaConfig {
    /// Smallest window; the ladder doubles it.
    pub grid: GridSpec,
    pub windows: usize,
    pub n_max: usize,
    pub eta_samples: usize,
    #[serde(default)]
    pub quad: QuadSpec,
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

impl GammaConfig {
    pub fn default_1d(n_max: usize) -> Result<Self> {
        Ok(GammaConfig {
            grid: GridSpec::symmetric(1, 2.0, 4.0, 41, 33)?,
            windows: 3,
            n_max,
            eta_samples: 8,
            quad: QuadSpec::default(),
            tol: BOUND_TOL,
            seed: DEFAULT_SEED,
        })
    }

    pub fn ladder(&self) -> Result<Vec<GridSpec>> {
        if self.windows < 3 {
            return Err(Error::InvalidInput("a trend needs at least 3 windows".into()));
        }
        Ok(self.grid.validated()?.ladder(self.windows))
    }
}

/// Sampled weighted norm of `V_ψ f` against the continuity bound for one `K_N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaRow {
    pub n: usize,
    pub epsilon: f64,
    pub sampled_norm: f64,
    /// `e · p`, with `p` bounded below by the sampled family.
    pub bound: f64,
    pub report: BoundReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaReport {
    pub verdict: MembershipVerdict,
    pub bounds: Vec<GammaRow>,
}

impl GammaReport {
    pub fn passed(&self) -> bool {
        self.verdict.trend == Trend::Bounded && self.bounds.iter().all(|b| b.report.passed())
    }
}

fn unit(x: &[f64]) -> Vec<f64> {
    let r = norm(x);
    if r == 0.0 {
        vec![0.0; x.len()]
    } else {
        x.iter().map(|v| v / r).collect()
    }
}

/// Weighted sups of `V_ψ f` for every exhaustion body `K_N` of `Γ`, plus the
/// check `|V_ψ f| e^{h_{-K}} v ≤ e · p_{K_ε,B}(f)` on the smallest window, where `B` is
/// the family `e^{η·(t-x)} conj(M_ξ T_x ψ) e^{-ε|x|} v(ξ)`.
pub fn gamma_membership(
    f: &TestDistribution,
    gamma: &OpenConvexRegion,
    psi: &Window,
    v: &Weight,
    cfg: &GammaConfig,
) -> Result<GammaReport> {
    let dim = f.dim();
    if gamma.dim() != dim || psi.dim() != dim || cfg.grid.dim != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: gamma.dim() });
    }
    let ladder = cfg.ladder()?;
    let gamma_f = f.gamma_region()?;
    let start = gamma.min_exhaustion_index()?;
    if cfg.n_max < start {
        return Err(Error::ExhaustionIndexTooSmall { index: cfg.n_max, minimum: start });
    }
    let bodies: Vec<(usize, ConvexBody)> =
        (start..=cfg.n_max).map(|n| gamma.exhaust(n).map(|k| (n, k))).collect::<Result<_>>()?;
    for (n, k) in &bodies {
        if !gamma_f.strictly_contains(k) {
            return Err(Error::OutsideGamma(format!("K_{n} is not inside Γ(f)")));
        }
    }
    let source = StftSource { f, psi, quad: cfg.quad };
    let fs = fields(&source, &ladder)?;
    let mut rows = Vec::new();
    let mut bounds = Vec::new();
    for (n, k) in &bodies {
        let sups = fs.iter().map(|fl| tf_weighted_norm(fl, k, v)).collect::<Result<Vec<_>>>()?;
        rows.push(row(format!("K_{n}"), *n, None, sups.iter().map(|s| s.ln()).collect()));
        let margin = gamma_f.margin(k);
        let epsilon = (0.5 * margin).min(1.0);
        bounds.push(gamma_bound(f, psi, v, k, *n, epsilon, &fs[0], cfg)?);
    }
    Ok(GammaReport { verdict: MembershipVerdict::from_rows(rows), bounds })
}

fn gamma_bound(
    f: &TestDistribution,
    psi: &Window,
    v: &Weight,
    k: &ConvexBody,
    n: usize,
    epsilon: f64,
    field: &TimeFrequencyField,
    cfg: &GammaConfig,
) -> Result<GammaRow> {
    let k_eps = k.fatten(epsilon)?;
    let grid = field.grid;
    let flat = ConvexBody::reflected(k.clone()).flatten();
    let lattice = eta_samples(&k_eps, cfg.eta_samples, cfg.seed);
    // member of B at (η, x, ξ), paired with e^{-η·t} f
    let member = |eta: &[f64], x: &[f64], xi: &[f64]| -> Result<f64> {
        let g = f.reweight(eta)?;
        let atom = GaborAtom::new(psi, x, xi).tilted(eta);
        let p = pairing(&g, &atom, &cfg.quad)?.norm();
        Ok(p * (-epsilon * norm(x) + v.ln_value(xi)).exp())
    };
    let per_node = (0..grid.len())
        .into_par_iter()
        .map(|j| -> Result<(f64, f64, Vec<f64>)> {
            let (x, xi) = grid.node(j);
            let lhs = field.values[j].norm() * (flat.support(&x) + v.ln_value(&xi)).exp();
            // η_x maximizes -η·x over K; pushing it by ε along -x stays in K_ε
            let eta_x = k.support_point(&x.iter().map(|c| -c).collect::<Vec<_>>());
            let witness: Vec<f64> = eta_x.iter().zip(unit(&x)).map(|(e, u)| e - epsilon * u).collect();
            let mut p = member(&witness, &x, &xi)?;
            for eta in &lattice {
                p = p.max(member(eta, &x, &xi)?);
            }
            let mut coords = x;
            coords.extend(xi);
            Ok((lhs, p, coords))
        })
        .collect::<Result<Vec<_>>>()?;
    let p_low = per_node.iter().fold(0.0f64, |m, (_, p, _)| m.max(*p));
    let bound = std::f64::consts::E * p_low;
    let sampled_norm = per_node.iter().fold(0.0f64, |m, (l, _, _)| m.max(*l));
    let report = BoundReport::from_samples(per_node.into_iter().map(|(l, _, c)| (c, l, bound)), bound, cfg.tol);
    Ok(GammaRow { n, epsilon, sampled_norm, bound, report })
}

/// `C = ∫ e^{-ε|x|} dx · ∫ (1+|ξ|)^{-(d+1)} dξ` in closed form.
pub fn adjoint_constant(dim: usize, epsilon: f64) -> Result<f64> {
    use std::f64::consts::PI;
    if !(epsilon > 0.0) {
        return Err(Error::InvalidInput("ε must be positive".into()));
    }
    Ok(match dim {
        1 => (2.0 / epsilon) * 2.0,
        2 => (2.0 * PI / epsilon.powi(2)) * PI,
        3 => (8.0 * PI / epsilon.powi(3)) * (4.0 * PI / 3.0),
        _ => return Err(Error::InvalidInput(format!("dimension {dim} outside 1..=3"))),
    })
}

/// `v₀(ξ) = min_{n ≤ n_max} a_n (1+|ξ|)^{-n}` with
/// `a_n = 4^n(1+√d)^n max{1,R^n} max_{|α|≤n}‖∂^αψ‖_∞ ∫_{supp ψ} e^{h_{-K}(t)} dt · max_{φ∈B} ‖φ‖_{S^n_0}`,
/// which dominates `sup_{η∈K} C_{η,0,n,ψ} ‖φ‖_{S^n_0} (1+|ξ|)^{-n}`.
pub fn adjoint_weight(psi: &Window, k: &ConvexBody, family: &[SchwartzTestFunction], n_max: u32, quad: &QuadSpec) -> Result<Weight> {
    let d = psi.dim() as f64;
    let r = k.circumradius_bound();
    let flat = ConvexBody::reflected(k.clone()).flatten();
    let integral = support_integral(psi, |t| flat.support(t), quad)?;
    let mut terms = Vec::new();
    for n in 0..=n_max {
        let mut phi_norm = 0.0f64;
        for phi in family {
            phi_norm = phi_norm.max(schwartz_norm(phi, 0, n)?);
        }
        let a = 4f64.powi(n as i32)
            * (1.0 + d.sqrt()).powi(n as i32)
            * r.powi(n as i32).max(1.0)
            * psi.max_sup_norm(n)
            * integral
            * phi_norm;
        terms.push(Weight::product(vec![Weight::constant(a), Weight::poly_inv(n as f64)]));
    }
    Ok(Weight::Min { terms })
}

/// The bounded family used when none is given: a Gaussian and an off-centre bump.
pub fn default_family(dim: usize) -> Result<Vec<SchwartzTestFunction>> {
    let mut c = vec![0.0; dim];
    c[0] = 0.25;
    Ok(vec![
        SchwartzTestFunction::gaussian(1.0, vec![0.0; dim])?,
        SchwartzTestFunction::bump(Window::new(1.0, dim)?.centered_at(c)?),
    ])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdjointConfig {
    pub eta_samples: usize,
    /// Highest order entering `v₀`.
    pub n_max: u32,
    #[serde(default)]
    pub quad: QuadSpec,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl Default for AdjointConfig {
    fn default() -> Self {
        AdjointConfig { eta_samples: 8, n_max: 4, quad: QuadSpec::default(), tol: BOUND_TOL, seed: DEFAULT_SEED }
    }
}

/// `p_{K,B}(V*_ψ F) ≤ C ‖F‖_{K_ε,w}` with `K = K_index`, `w = v₀(1+|ξ|)^{d+1}`.
#[allow(clippy::too_many_arguments)]
pub fn adjoint_bound_suite(
    field: &TimeFrequencyField,
    gamma: &OpenConvexRegion,
    psi: &Window,
    k_index: usize,
    epsilon: f64,
    family: &[SchwartzTestFunction],
    v0: Option<&Weight>,
    cfg: &AdjointConfig,
) -> Result<BoundReport> {
    let dim = field.grid.dim;
    if gamma.dim() != dim || psi.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: gamma.dim() });
    }
    let c = adjoint_constant(dim, epsilon)?;
    let k = gamma.exhaust(k_index)?;
    let k_eps = k.fatten(epsilon)?;
    let next = gamma.exhaust(k_index + 1)?;
    if !contains(&k_eps, &next, 2 * dim)?.is_certified() {
        return Err(Error::EpsilonTooLarge);
    }
    let v0 = match v0 {
        Some(w) => w.clone(),
        None => adjoint_weight(psi, &k, family, cfg.n_max, &cfg.quad)?,
    };
    let w = Weight::product(vec![v0, Weight::poly((dim + 1) as f64)]);
    let rhs = c * tf_weighted_norm(field, &k_eps, &w)?;
    let etas = eta_samples(&k, cfg.eta_samples, cfg.seed);
    let samples = etas
        .par_iter()
        .map(|eta| -> Result<(Vec<f64>, f64, f64)> {
            let mut lhs = 0.0f64;
            for phi in family {
                lhs = lhs.max(adjoint_apply(field, psi, &phi.clone().with_tilt(eta), &cfg.quad)?.norm());
            }
            Ok((eta.clone(), lhs, rhs))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundReport::from_samples(samples, c, cfg.tol))
}

/// For each `N`, the first `n` whose sup `|F| w_N v_n` is bounded along the ladder.
pub fn tensor_membership_scan(
    source: &dyn FieldSource,
    w: &IncreasingWeightSystem,
    v: &DecreasingWeightSystem,
    ladder: &[GridSpec],
) -> Result<MembershipVerdict> {
    if w.dim() != v.dim() {
        return Err(Error::DimensionMismatch { expected: w.dim(), got: v.dim() });
    }
    let fs = fields(source, ladder)?;
    let rows = w
        .indices()
        .map(|big_n| {
            let mut last = None;
            for n in v.indices() {
                let ln = ln_sups(&fs, w.weight(big_n), v.weight(n));
                let r = row(format!("N={big_n} n={n}"), big_n, Some(n), ln);
                if r.trend == Trend::Bounded {
                    return TrendRow { label: format!("N={big_n}"), ..r };
                }
                last = Some(r);
            }
            let r = last.expect("nonempty system");
            TrendRow { label: format!("N={big_n}"), witness: None, ..r }
        })
        .collect();
    Ok(MembershipVerdict::from_rows(rows))
}

/// Trends of `sup_x |(f∗φ)(x)| w_N(x)` over the `x` nodes of each window,
/// without checking `W` against `Γ(f)`.
pub fn convolutor_trends(
    f: &TestDistribution,
    phis: &[Window],
    w: &IncreasingWeightSystem,
    ladder: &[GridSpec],
    quad: &QuadSpec,
) -> Result<MembershipVerdict> {
    if ladder.is_empty() {
        return Err(Error::InvalidInput("empty window ladder".into()));
    }
    let xs: Vec<Vec<Vec<f64>>> = ladder
        .iter()
        .map(|g| {
            let per = g.xi_steps.pow(g.dim as u32);
            (0..g.x_steps.pow(g.dim as u32)).map(|r| g.node(r * per).0).collect()
        })
        .collect();
    let mut rows = Vec::new();
    for (i, phi) in phis.iter().enumerate() {
        let conv: Vec<Vec<Complex64>> = xs.iter().map(|x| convolve(f, phi, x, quad)).collect::<Result<_>>()?;
        for big_n in w.indices() {
            let wn = w.weight(big_n);
            let ln = conv
                .iter()
                .zip(&xs)
                .map(|(c, x)| {
                    c.iter()
                        .zip(x)
                        .map(|(v, x)| if v.norm() == 0.0 { f64::NEG_INFINITY } else { v.norm().ln() + wn.ln_value(x) })
                        .fold(f64::NEG_INFINITY, f64::max)
                })
                .collect();
            rows.push(row(format!("phi={i} N={big_n}"), big_n, None, ln));
        }
    }
    Ok(MembershipVerdict::from_rows(rows))
}

/// [`convolutor_trends`] after checking that `W` is exponential with every body inside `Γ(f)`.
pub fn convolutor_suite(
    f: &TestDistribution,
    phis: &[Window],
    w: &IncreasingWeightSystem,
    ladder: &[GridSpec],
    quad: &QuadSpec,
) -> Result<MembershipVerdict> {
    if !w.is_exponential() {
        return Err(Error::InvalidInput("convolutor suite needs an exponential weight system".into()));
    }
    let gamma_f = f.gamma_region()?;
    for n in w.indices() {
        let k = w.body(n).expect("exponential system has bodies");
        if !gamma_f.strictly_contains(k) {
            return Err(Error::OutsideGamma(format!("K_{n} is not inside Γ(f)")));
        }
    }
    convolutor_trends(f, phis, w, ladder, quad)
}
