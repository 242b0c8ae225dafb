use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{directions::probe_directions, ConvexBody};
use crate::linalg::{cartesian, linspace, multi_indices, norm};
use crate::quadrature::QuadSpec;
use crate::stft::{pairing, SchwartzTestFunction, SmoothFn, TestDistribution, TimeFrequencyField, MAX_ORDER};
use crate::weights::Weight;

/// Boundary-to-interior ratio accepted by the sup-norm box guard.
pub const BOX_GUARD: f64 = 1e-9;
/// Largest η sample set drawn from a body.
pub const MAX_ETA_SAMPLES: usize = 200;

const BOX_ENLARGEMENTS: usize = 6;

/// Grid points per axis for dense sup scans, by dimension.
pub(crate) fn dense_points(dim: usize) -> usize {
    match dim {
        1 => 4097,
        2 => 257,
        _ => 41,
    }
}

/// Result of a dense derivative scan.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct SupScan {
    pub value: f64,
    pub argmax: Vec<f64>,
    pub boundary: f64,
}

/// `max_{|α| ≤ n} sup_{t ∈ [lo, hi]} |D(α, t)| e^{lnw(t)}` on a tensor grid,
/// polished by compass search around the best node of each `α`.
pub(crate) fn derivative_sup<D, W>(d: D, lnw: W, lo: &[f64], hi: &[f64], n: u32, points: usize) -> SupScan
where
    D: Fn(&[u32], &[f64]) -> f64,
    W: Fn(&[f64]) -> f64,
{
    let dim = lo.len();
    let axes: Vec<Vec<f64>> = (0..dim).map(|i| linspace(lo[i], hi[i], points)).collect();
    let nodes = cartesian(&axes);
    let eval = |alpha: &[u32], t: &[f64]| -> f64 {
        let v = d(alpha, t).abs();
        if v == 0.0 {
            0.0
        } else {
            v * lnw(t).exp()
        }
    };
    let on_boundary = |t: &[f64]| (0..dim).any(|i| t[i] == lo[i] || t[i] == hi[i]);
    let mut best = SupScan { value: 0.0, argmax: lo.to_vec(), boundary: 0.0 };
    for order in 0..=n {
        for alpha in multi_indices(dim, order) {
            let mut top = (0.0, 0usize);
            for (j, t) in nodes.iter().enumerate() {
                let v = eval(&alpha, t);
                if v > top.0 {
                    top = (v, j);
                }
                if on_boundary(t) {
                    best.boundary = best.boundary.max(v);
                }
            }
            if top.0 == 0.0 {
                continue;
            }
            let (mut val, mut at) = (top.0, nodes[top.1].clone());
            let mut step: Vec<f64> = (0..dim).map(|i| (hi[i] - lo[i]) / (points - 1) as f64).collect();
            for _ in 0..60 {
                let mut moved = false;
                for i in 0..dim {
                    for s in [1.0, -1.0] {
                        let mut p = at.clone();
                        p[i] = (p[i] + s * step[i]).clamp(lo[i], hi[i]);
                        let v = eval(&alpha, &p);
                        if v > val {
                            val = v;
                            at = p;
                            moved = true;
                        }
                    }
                }
                if !moved {
                    step.iter_mut().for_each(|h| *h *= 0.5);
                    if step.iter().zip(lo.iter().zip(hi)).all(|(h, (a, b))| *h < 1e-12 * (b - a)) {
                        break;
                    }
                }
            }
            if val > best.value {
                best.value = val;
                best.argmax = at;
            }
        }
    }
    best
}

fn check_order(n: u32) -> Result<()> {
    if n as usize > MAX_ORDER {
        return Err(Error::InvalidInput(format!("derivative order {n} exceeds {MAX_ORDER}")));
    }
    Ok(())
}

/// Dense sup with the box guard: compactly supported functions use their
/// support box, Gaussians start from their tail box and grow until the
/// boundary is below `BOX_GUARD` of the interior maximum.
fn guarded_sup<W: Fn(&[f64]) -> f64>(phi: &SchwartzTestFunction, lnw: W, n: u32) -> Result<f64> {
    check_order(n)?;
    let phi = phi.clone().validated()?;
    let points = dense_points(phi.dim());
    let d = |a: &[u32], t: &[f64]| phi.real_derivative(a, t);
    if let Some(b) = &phi.bump {
        let (lo, hi) = b.support_box();
        return Ok(derivative_sup(d, &lnw, &lo, &hi, n, points).value);
    }
    let mut half = phi.tail_radius(0.0);
    let mut ratio = f64::NAN;
    for _ in 0..=BOX_ENLARGEMENTS {
        let lo: Vec<f64> = phi.center.iter().map(|c| c - half).collect();
        let hi: Vec<f64> = phi.center.iter().map(|c| c + half).collect();
        let scan = derivative_sup(d, &lnw, &lo, &hi, n, points);
        if !scan.value.is_finite() {
            return Err(Error::BoxGuard { ratio: f64::INFINITY, half_width: half });
        }
        if scan.value == 0.0 || scan.boundary <= BOX_GUARD * scan.value {
            return Ok(scan.value);
        }
        ratio = scan.boundary / scan.value;
        half *= 1.5;
    }
    Err(Error::BoxGuard { ratio, half_width: half })
}

/// `‖φ‖_{S^n_k} = max_{|α|≤n} sup_x |∂^α φ(x)| (1+|x|)^k`.
pub fn schwartz_norm(phi: &SchwartzTestFunction, k: u32, n: u32) -> Result<f64> {
    let k = k as f64;
    guarded_sup(phi, |t| k * (1.0 + norm(t)).ln(), n)
}

/// `‖φ‖_{v,n} = max_{|α|≤n} sup_x |∂^α φ(x)| v(x)`.
pub fn weighted_cn_norm(phi: &SchwartzTestFunction, v: &Weight, n: u32) -> Result<f64> {
    v.validate()?;
    if let Some(d) = v.dim() {
        if d != phi.dim() {
            return Err(Error::DimensionMismatch { expected: phi.dim(), got: d });
        }
    }
    guarded_sup(phi, |t| v.ln_value(t), n)
}

/// `sup |F(x,ξ)| e^{h_{-K}(x)} v(ξ)` over the grid nodes.
pub fn tf_weighted_norm(field: &TimeFrequencyField, k: &ConvexBody, v: &Weight) -> Result<f64> {
    let dim = field.grid.dim;
    if k.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: k.dim() });
    }
    if let Some(d) = v.dim() {
        if d != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: d });
        }
    }
    let flat = ConvexBody::reflected(k.clone()).flatten();
    let ln_max = field
        .values
        .par_iter()
        .enumerate()
        .map(|(j, f)| {
            let a = f.norm();
            if a == 0.0 {
                return f64::NEG_INFINITY;
            }
            let (x, xi) = field.grid.node(j);
            a.ln() + flat.support(&x) + v.ln_value(&xi)
        })
        .reduce(|| f64::NEG_INFINITY, f64::max);
    Ok(ln_max.exp())
}

/// Vertices (or support points in probe directions) of `K` plus seeded
/// convex combinations, `count` points in total (at most 200).
pub fn eta_samples(k: &ConvexBody, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dirs = probe_directions(k.dim(), seed);
    k.sample_points(&dirs, count.clamp(1, MAX_ETA_SAMPLES), &mut rng)
}

/// `p_{K,B}(f) = sup_{η∈K} sup_{φ∈B} |⟨e^{-η·t} f, φ⟩|` over sampled `η`.
pub fn p_seminorm(
    f: &TestDistribution,
    k: &ConvexBody,
    family: &[SchwartzTestFunction],
    eta_count: usize,
    seed: u64,
    quad: &QuadSpec,
) -> Result<f64> {
    if k.dim() != f.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), got: k.dim() });
    }
    let gamma = f.gamma_region()?;
    if !gamma.strictly_contains(k) {
        return Err(Error::OutsideGamma(format!("K reaches {:.6} outside Γ(f)", -gamma.margin(k))));
    }
    if family.is_empty() {
        return Ok(0.0);
    }
    let etas = eta_samples(k, eta_count, seed);
    let values = etas
        .par_iter()
        .map(|eta| -> Result<f64> {
            let g = f.reweight(eta)?;
            let mut m = 0.0f64;
            for phi in family {
                m = m.max(pairing(&g, phi as &dyn SmoothFn, quad)?.norm());
            }
            Ok(m)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(values.into_iter().fold(0.0, f64::max))
}
