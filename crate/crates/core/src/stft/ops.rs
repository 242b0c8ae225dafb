use num_complex::Complex64;
use rayon::prelude::*;

use super::{GaborAtom, GridSpec, ReflectedBump, SchwartzTestFunction, SmoothFn, Term, TestDistribution, TimeFrequencyField, Window};
use crate::error::{Error, Result};
use crate::geometry::MAX_DIM;
use crate::linalg::{dot, norm, order};
use crate::quadrature::{fourier_box, integrate_box, FreqAxis, QuadSpec};

/// Sampled tail of the adjoint integrand allowed relative to its peak.
pub const TAIL_LIMIT: f64 = 1e-6;

const MAX_PANELS: usize = 4096;

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Composite Gauss–Legendre over `[lo, hi]` with panels sized to resolve the
/// feature length `scale` and `freq` oscillations per unit length.
fn integrate<F>(h: F, lo: &[f64], hi: &[f64], scale: f64, freq: f64, quad: &QuadSpec) -> Result<Complex64>
where
    F: Fn(&[f64]) -> Complex64,
{
    let panels = initial_panels(lo, hi, scale, freq, quad);
    integrate_box(h, lo, hi, &panels, quad)
}

fn initial_panels(lo: &[f64], hi: &[f64], scale: f64, freq: f64, quad: &QuadSpec) -> Vec<usize> {
    lo.iter()
        .zip(hi)
        .map(|(a, b)| {
            let w = b - a;
            let by_scale = if scale.is_finite() { (quad.panels as f64 * w / (2.0 * scale)).ceil() } else { 0.0 };
            (by_scale.max((freq * w).ceil()) as usize).clamp(quad.panels, MAX_PANELS)
        })
        .collect()
}

fn intersect(a: (Vec<f64>, Vec<f64>), b: (Vec<f64>, Vec<f64>)) -> (Vec<f64>, Vec<f64>) {
    (
        a.0.iter().zip(&b.0).map(|(x, y)| x.max(*y)).collect(),
        a.1.iter().zip(&b.1).map(|(x, y)| x.min(*y)).collect(),
    )
}

/// `∫ φ(t) g(t) dt` for a real test function `φ`.
pub fn integrate_against(phi: &SchwartzTestFunction, g: &dyn SmoothFn, quad: &QuadSpec) -> Result<Complex64> {
    check_dim(phi.dim(), g.dim())?;
    let growth = phi.tilt.as_deref().map_or(0.0, norm);
    let (lo, hi) = intersect(phi.support_box(0.0), g.support_box(growth));
    let scale = phi.length_scale().min(g.length_scale());
    integrate(
        |t| {
            let p = phi.real_value(t);
            if p == 0.0 {
                zero()
            } else {
                p * g.value(t)
            }
        },
        &lo,
        &hi,
        scale,
        g.frequency(),
        quad,
    )
}

fn pair_term(term: &Term, g: &dyn SmoothFn, quad: &QuadSpec) -> Result<Complex64> {
    match term {
        Term::DeltaDeriv { a, alpha, coeff } => {
            let sign = if order(alpha).is_multiple_of(2) { 1.0 } else { -1.0 };
            Ok(coeff * sign * g.derivative(alpha, a))
        }
        Term::ExpPolyOrthant { mu, corner, poly, coeff } => {
            if *coeff == zero() {
                return Ok(zero());
            }
            let (mut lo, hi) = g.support_box(norm(mu));
            for (l, c) in lo.iter_mut().zip(corner) {
                *l = l.max(*c);
            }
            let v = integrate(
                |t| {
                    let u: Vec<f64> = t.iter().zip(corner).map(|(a, b)| a - b).collect();
                    poly.eval(&u) * dot(mu, t).exp() * g.value(t)
                },
                &lo,
                &hi,
                g.length_scale(),
                g.frequency(),
                quad,
            )?;
            Ok(coeff * v)
        }
        Term::GaussPoly { coeff, .. } | Term::Bump { coeff, .. } => {
            if *coeff == zero() {
                return Ok(zero());
            }
            let phi = term.function().expect("function term");
            Ok(coeff * integrate_against(&phi, g, quad)?)
        }
    }
}

/// `⟨f, g⟩`. Point masses are evaluated exactly, function terms by quadrature
/// over the support box of `g` cut to the term's support.
pub fn pairing(f: &TestDistribution, g: &dyn SmoothFn, quad: &QuadSpec) -> Result<Complex64> {
    check_dim(f.dim(), g.dim())?;
    let mut total = zero();
    for term in f.terms() {
        total += pair_term(term, g, quad)?;
    }
    Ok(total)
}

fn freq_axes(grid: &GridSpec, sign: f64) -> Vec<FreqAxis> {
    vec![
        FreqAxis { start: sign * grid.xi_min, step: sign * grid.xi_step(), count: grid.xi_steps };
        grid.dim
    ]
}

/// `∫ h(t) ψ(t - x) e^{-2πi ξ·t} dt` for all `ξ` of the axes, over `[lo, hi] ∩ supp ψ(· - x)`.
fn window_row<H>(
    h: H,
    lo: Vec<f64>,
    hi: Vec<f64>,
    scale: f64,
    psi: &Window,
    x: &[f64],
    axes: &[FreqAxis],
    quad: &QuadSpec,
) -> Result<Vec<Complex64>>
where
    H: Fn(&[f64]) -> Complex64,
{
    let (wlo, whi) = psi.support_box();
    let shifted = (
        wlo.iter().zip(x).map(|(a, b)| a + b).collect(),
        whi.iter().zip(x).map(|(a, b)| a + b).collect(),
    );
    let (lo, hi) = intersect((lo, hi), shifted);
    let freq = axes.iter().fold(0.0f64, |m, a| m.max(a.max_abs()));
    let panels = initial_panels(&lo, &hi, scale.min(psi.radius()), freq, quad);
    fourier_box(
        |t| {
            let mut s = [0.0; MAX_DIM];
            for i in 0..t.len() {
                s[i] = t[i] - x[i];
            }
            let w = psi.value(&s[..t.len()]);
            if w == 0.0 {
                zero()
            } else {
                h(t) * w
            }
        },
        &lo,
        &hi,
        &panels,
        axes,
        quad,
    )
}

/// `V_ψ f(x, ξ_j)` for every `ξ_j` of the axes.
fn stft_row(f: &TestDistribution, psi: &Window, x: &[f64], axes: &[FreqAxis], quad: &QuadSpec) -> Result<Vec<Complex64>> {
    let len: usize = axes.iter().map(|a| a.count).product();
    let mut row = vec![zero(); len];
    let xi_at = |mut j: usize| -> Vec<f64> {
        let mut xi = vec![0.0; axes.len()];
        for a in (0..axes.len()).rev() {
            xi[a] = axes[a].start + axes[a].step * (j % axes[a].count) as f64;
            j /= axes[a].count;
        }
        xi
    };
    for term in f.terms() {
        if term.coeff() == zero() {
            continue;
        }
        let part = match term {
            Term::DeltaDeriv { .. } => {
                let single = TestDistribution::new(f.dim(), vec![term.clone()])?;
                (0..len)
                    .map(|j| pairing(&single, &GaborAtom::new(psi, x, &xi_at(j)), quad))
                    .collect::<Result<Vec<_>>>()?
            }
            Term::ExpPolyOrthant { mu, corner, poly, coeff } => {
                window_row(
                    |t| {
                        let mut u = [0.0; MAX_DIM];
                        for i in 0..t.len() {
                            u[i] = t[i] - corner[i];
                        }
                        coeff * poly.eval(&u[..t.len()]) * dot(mu, t).exp()
                    },
                    corner.clone(),
                    vec![f64::INFINITY; corner.len()],
                    f64::INFINITY,
                    psi,
                    x,
                    axes,
                    quad,
                )?
            }
            Term::GaussPoly { coeff, .. } | Term::Bump { coeff, .. } => {
                let phi = term.function().expect("function term");
                let (lo, hi) = phi.support_box(0.0);
                window_row(|t| coeff * phi.real_value(t), lo, hi, phi.length_scale(), psi, x, axes, quad)?
            }
        };
        for (r, p) in row.iter_mut().zip(part) {
            *r += p;
        }
    }
    Ok(row)
}

fn x_rows(grid: &GridSpec) -> usize {
    grid.x_steps.pow(grid.dim as u32)
}

fn row_x(grid: &GridSpec, r: usize) -> Vec<f64> {
    let per_row = grid.xi_steps.pow(grid.dim as u32);
    grid.node(r * per_row).0
}

/// `V_ψ f` on every node of `grid`. Each `x` row is one sampled integrand
/// swept over all frequencies; point masses are evaluated exactly.
pub fn stft(f: &TestDistribution, psi: &Window, grid: &GridSpec, quad: &QuadSpec) -> Result<TimeFrequencyField> {
    let grid = grid.validated()?;
    let values = stft_rows(f, psi, &grid, quad, None)?;
    TimeFrequencyField::new(grid, values)
}

/// Rows with `keep[r] == false` are left at zero.
fn stft_rows(f: &TestDistribution, psi: &Window, grid: &GridSpec, quad: &QuadSpec, keep: Option<&[bool]>) -> Result<Vec<Complex64>> {
    quad.validate()?;
    check_dim(f.dim(), psi.dim())?;
    check_dim(f.dim(), grid.dim)?;
    let axes = freq_axes(grid, 1.0);
    let per_row = grid.xi_steps.pow(grid.dim as u32);
    let rows = (0..x_rows(grid))
        .into_par_iter()
        .map(|r| match keep {
            Some(k) if !k[r] => Ok(vec![zero(); per_row]),
            _ => stft_row(f, psi, &row_x(grid, r), &axes, quad),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(rows.concat())
}

/// `V_ψ̄ φ(x, -ξ)` on every node of `grid`.
pub fn dual_stft(phi: &SchwartzTestFunction, psi: &Window, grid: &GridSpec, quad: &QuadSpec) -> Result<TimeFrequencyField> {
    quad.validate()?;
    let grid = grid.validated()?;
    check_dim(grid.dim, psi.dim())?;
    check_dim(grid.dim, phi.dim())?;
    TimeFrequencyField::new(grid, dual_field(phi, psi, &grid, quad)?)
}

fn dual_field(phi: &SchwartzTestFunction, psi: &Window, grid: &GridSpec, quad: &QuadSpec) -> Result<Vec<Complex64>> {
    let axes = freq_axes(grid, -1.0);
    let (lo, hi) = phi.support_box(0.0);
    let rows = (0..x_rows(grid))
        .into_par_iter()
        .map(|r| {
            let x = row_x(grid, r);
            window_row(
                |t| Complex64::new(phi.real_value(t), 0.0),
                lo.clone(),
                hi.clone(),
                phi.length_scale(),
                psi,
                &x,
                &axes,
                quad,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(rows.concat())
}

/// `⟨V*_ψ F, φ⟩ = ∬ F(x,ξ) V_ψ̄ φ(x,-ξ) dx dξ` with the trapezoid rule on the
/// grid of `F`.
pub fn adjoint_apply(
    field: &TimeFrequencyField,
    psi: &Window,
    phi: &SchwartzTestFunction,
    quad: &QuadSpec,
) -> Result<Complex64> {
    quad.validate()?;
    let grid = field.grid;
    check_dim(grid.dim, psi.dim())?;
    check_dim(grid.dim, phi.dim())?;
    if field.values.iter().all(|v| *v == zero()) {
        return Ok(zero());
    }
    let dual = dual_field(phi, psi, &grid, quad)?;
    trapezoid_pairing(&field.values, &dual, &grid)
}

/// `Σ w_j F_j G_j` behind the tail guard.
fn trapezoid_pairing(values: &[Complex64], dual: &[Complex64], grid: &GridSpec) -> Result<Complex64> {
    let mut peak = 0.0f64;
    let mut tail = 0.0f64;
    let mut sum = zero();
    for (j, ((f, g), w)) in values.iter().zip(dual).zip(grid.trapezoid()).enumerate() {
        let p = f * g;
        peak = peak.max(p.norm());
        if grid.is_boundary(j) {
            tail = tail.max(p.norm());
        }
        sum += w * p;
    }
    if peak == 0.0 {
        return Ok(zero());
    }
    if tail > TAIL_LIMIT * peak {
        return Err(Error::GridTooSmall { tail_fraction: tail / peak, limit: TAIL_LIMIT });
    }
    Ok(sum)
}

/// `(γ, ψ)_{L²}` for real windows.
pub fn window_inner(gamma: &Window, psi: &Window, quad: &QuadSpec) -> Result<f64> {
    check_dim(gamma.dim(), psi.dim())?;
    let (lo, hi) = intersect(gamma.support_box(), psi.support_box());
    let scale = gamma.radius().min(psi.radius());
    Ok(integrate(|t| Complex64::new(gamma.value(t) * psi.value(t), 0.0), &lo, &hi, scale, 0.0, quad)?.re)
}

/// Outcome of one reconstruction experiment.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Reconstruction {
    pub reconstructed: Complex64,
    pub exact: Complex64,
    pub window_inner: f64,
    /// Relative error, or absolute when `⟨f, φ⟩ = 0`.
    pub error: f64,
}

/// Compares `⟨V*_γ V_ψ f, φ⟩ / (γ, ψ)` against `⟨f, φ⟩`.
pub fn reconstruct(
    f: &TestDistribution,
    psi: &Window,
    gamma: &Window,
    phi: &SchwartzTestFunction,
    grid: &GridSpec,
    quad: &QuadSpec,
) -> Result<Reconstruction> {
    let ip = window_inner(gamma, psi, quad)?;
    if ip.abs() <= 1e-12 {
        return Err(Error::DegenerateSynthesisWindow(ip));
    }
    let exact = pairing(f, phi, quad)?;
    if f.is_zero() {
        return Ok(Reconstruction { reconstructed: zero(), exact, window_inner: ip, error: 0.0 });
    }
    let grid = grid.validated()?;
    check_dim(grid.dim, phi.dim())?;
    // V_γ̄ φ first: rows of V_ψ f where it vanishes do not contribute
    let dual = dual_field(phi, gamma, &grid, quad)?;
    let per_row = grid.xi_steps.pow(grid.dim as u32);
    let keep: Vec<bool> = dual.chunks(per_row).map(|row| row.iter().any(|v| *v != zero())).collect();
    let values = stft_rows(f, psi, &grid, quad, Some(&keep))?;
    let reconstructed = trapezoid_pairing(&values, &dual, &grid)? / ip;
    let diff = (reconstructed - exact).norm();
    let error = if exact.norm() > 0.0 { diff / exact.norm().max(1e-30) } else { diff };
    Ok(Reconstruction { reconstructed, exact, window_inner: ip, error })
}

pub fn reconstruct_error(
    f: &TestDistribution,
    psi: &Window,
    gamma: &Window,
    phi: &SchwartzTestFunction,
    grid: &GridSpec,
    quad: &QuadSpec,
) -> Result<f64> {
    Ok(reconstruct(f, psi, gamma, phi, grid, quad)?.error)
}

/// `‖f‖²_{L²}` for distributions made of function terms only.
pub fn l2_norm_sq(f: &TestDistribution, quad: &QuadSpec) -> Result<f64> {
    if !f.is_square_integrable() {
        return Err(Error::NotSquareIntegrable("only Gaussian and bump terms are L² objects".into()));
    }
    let fns: Vec<(Complex64, SchwartzTestFunction)> = f
        .terms()
        .iter()
        .map(|t| (t.coeff(), t.function().expect("function term")))
        .collect();
    let mut total = zero();
    for (ci, fi) in &fns {
        for (cj, fj) in &fns {
            total += ci * cj.conj() * integrate_against(fi, fj, quad)?;
        }
    }
    Ok(total.re)
}

/// `|‖V_ψ f‖² - ‖ψ‖²‖f‖²| / (‖ψ‖²‖f‖²)` with the grid norm of the field.
pub fn isometry_gap(f: &TestDistribution, psi: &Window, grid: &GridSpec, quad: &QuadSpec) -> Result<f64> {
    let f_sq = l2_norm_sq(f, quad)?;
    let psi_sq = window_inner(psi, psi, quad)?;
    let exact = f_sq * psi_sq;
    let field = stft(f, psi, grid, quad)?;
    let sampled = field.l2_norm_sq();
    if exact == 0.0 {
        return Ok(sampled);
    }
    Ok((sampled - exact).abs() / exact)
}

/// `(f ∗ φ)(x) = ⟨f, φ(x - ·)⟩` at each point of `xs`.
pub fn convolve(f: &TestDistribution, phi: &Window, xs: &[Vec<f64>], quad: &QuadSpec) -> Result<Vec<Complex64>> {
    quad.validate()?;
    check_dim(f.dim(), phi.dim())?;
    xs.par_iter()
        .map(|x| {
            check_dim(f.dim(), x.len())?;
            pairing(f, &ReflectedBump { window: phi, x: x.clone() }, quad)
        })
        .collect()
}
