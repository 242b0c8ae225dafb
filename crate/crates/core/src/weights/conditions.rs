use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{DecreasingWeightSystem, IncreasingWeightSystem, Weight};
use crate::error::{Error, Result};
use crate::geometry::directions::{probe_directions, random_unit, DEFAULT_SEED};
use crate::geometry::{contains, ConvexBody};
use crate::linalg::{add, scale};
use crate::quadrature::{adaptive, gauss_legendre, QuadSpec};
use crate::trend::{classify_log, Trend};

/// Ratio threshold below which a limit counts as reached.
pub const RATIO_THRESHOLD: f64 = 1e-6;
/// Relative size of the last partial-integral increments for integrability.
pub const CAUCHY_INCREMENT: f64 = 1e-8;
/// Minimum sample count for the translation check.
pub const MIN_SAMPLES: usize = 1000;
const LADDER_LEVELS: i32 = 6;
const EXHAUSTED: &str = "exhausted indices";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    V,
    L1,
    TransInv,
    OmegaSwitched,
    Nachbin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Certified,
    NumericallySupported,
    Falsified,
    Undetermined,
}

impl Verdict {
    pub fn holds(self) -> bool {
        matches!(self, Verdict::Certified | Verdict::NumericallySupported)
    }

    /// Falsified beats undetermined beats supported beats certified.
    fn combine(verdicts: impl IntoIterator<Item = Verdict>) -> Verdict {
        let mut out = Verdict::Certified;
        let rank = |v: Verdict| match v {
            Verdict::Certified => 0,
            Verdict::NumericallySupported => 1,
            Verdict::Undetermined => 2,
            Verdict::Falsified => 3,
        };
        for v in verdicts {
            if rank(v) > rank(out) {
                out = v;
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmegaChoice {
    pub p: usize,
    pub theta: f64,
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Witness {
    Index { m: usize },
    Pair { m1: usize, m2: usize, c: f64 },
    Omega { m: usize, choices: Vec<OmegaChoice> },
    Bound { c: f64 },
}

/// A stored sample whose log-ratio can be recomputed with [`replay_violation`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// Indices entering the ratio, in the order the condition names them.
    pub indices: Vec<usize>,
    pub x: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    pub ln_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionRow {
    pub n: usize,
    pub verdict: Verdict,
    pub witness: Option<Witness>,
    pub violation: Option<Violation>,
    /// Log-ratio sups (or partial integrals for L1) along the radius ladder.
    pub trace: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl ConditionRow {
    fn exhausted(n: usize, trace: Vec<f64>) -> Self {
        ConditionRow {
            n,
            verdict: Verdict::Undetermined,
            witness: None,
            violation: None,
            trace,
            note: Some(EXHAUSTED.into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub condition: Condition,
    pub verdict: Verdict,
    pub rows: Vec<ConditionRow>,
    pub diagnostics: Vec<String>,
}

impl ConditionReport {
    fn from_rows(condition: Condition, rows: Vec<ConditionRow>, mut diagnostics: Vec<String>) -> Self {
        let verdict = if rows.is_empty() {
            diagnostics.push(EXHAUSTED.into());
            Verdict::Undetermined
        } else {
            Verdict::combine(rows.iter().map(|r| r.verdict))
        };
        ConditionReport {
            condition,
            verdict,
            rows,
            diagnostics,
        }
    }

    pub fn row(&self, n: usize) -> Option<&ConditionRow> {
        self.rows.iter().find(|r| r.n == n)
    }
}

/// Either kind of weight system, for the ratio-limit check.
#[derive(Debug, Clone, Copy)]
pub enum AnySystem<'a> {
    Decreasing(&'a DecreasingWeightSystem),
    Increasing(&'a IncreasingWeightSystem),
}

impl<'a> From<&'a DecreasingWeightSystem> for AnySystem<'a> {
    fn from(s: &'a DecreasingWeightSystem) -> Self {
        AnySystem::Decreasing(s)
    }
}

impl<'a> From<&'a IncreasingWeightSystem> for AnySystem<'a> {
    fn from(s: &'a IncreasingWeightSystem) -> Self {
        AnySystem::Increasing(s)
    }
}

impl AnySystem<'_> {
    fn dim(&self) -> usize {
        match self {
            AnySystem::Decreasing(s) => s.dim(),
            AnySystem::Increasing(s) => s.dim(),
        }
    }

    fn range(&self) -> (usize, usize) {
        match self {
            AnySystem::Decreasing(s) => (s.start(), s.max_index()),
            AnySystem::Increasing(s) => (s.start(), s.max_index()),
        }
    }

    /// `ln(v_M/v_N)` or `ln(w_N/w_M)`: the ratio that must vanish at infinity.
    fn ln_ratio(&self, n: usize, m: usize, x: &[f64]) -> f64 {
        match self {
            AnySystem::Decreasing(s) => s.weight(m).ln_value(x) - s.weight(n).ln_value(x),
            AnySystem::Increasing(s) => s.weight(n).ln_value(x) - s.weight(m).ln_value(x),
        }
    }
}

fn check_radii(radii: &[f64]) -> Result<()> {
    if radii.len() < 3 {
        return Err(Error::InvalidInput("need at least 3 radii".into()));
    }
    if radii.iter().any(|r| !r.is_finite() || *r < 0.0) || radii.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput("radii must be finite, nonnegative and strictly increasing".into()));
    }
    Ok(())
}

/// `10^lo, 10^(lo+step), …, 10^hi`.
pub fn decade_radii(lo: i32, hi: i32, step: i32) -> Vec<f64> {
    (lo..=hi).step_by(step as usize).map(|e| 10f64.powi(e)).collect()
}

/// Default ladder for the ratio and Nachbin checks.
pub fn default_radii() -> Vec<f64> {
    decade_radii(0, 8, 1)
}

/// Default ladder for integrability.
pub fn default_l1_radii() -> Vec<f64> {
    decade_radii(0, 10, 1)
}

/// Default ladder for the user-system branch of the θ-interpolation check.
pub fn default_omega_radii() -> Vec<f64> {
    decade_radii(0, 150, 5)
}

/// `max_u f(r u)` over the probe directions, with the maximizing point.
fn sphere_max(f: impl Fn(&[f64]) -> f64, r: f64, dirs: &[Vec<f64>]) -> (f64, Vec<f64>) {
    let mut best = (f64::NEG_INFINITY, Vec::new());
    for u in dirs {
        let x = scale(u, r);
        let v = f(&x);
        if v > best.0 || best.1.is_empty() {
            best = (v, x);
        }
    }
    best
}

/// Sup of `f` over the ball `B(0, r0)`, sampled on 17 concentric spheres.
fn inner_peak(f: impl Fn(&[f64]) -> f64, r0: f64, dirs: &[Vec<f64>]) -> f64 {
    (0..=16)
        .map(|i| sphere_max(&f, r0 * i as f64 / 16.0, dirs).0)
        .fold(f64::NEG_INFINITY, f64::max)
}

fn ladder(f: impl Fn(&[f64]) -> f64, radii: &[f64], dirs: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    radii.iter().map(|&r| sphere_max(&f, r, dirs)).unzip()
}

/// Ratio limits: `v_M/v_N → 0` (decreasing) or `w_N/w_M → 0` (increasing).
pub fn check_v<'a>(system: impl Into<AnySystem<'a>>, radii: &[f64]) -> Result<ConditionReport> {
    let system = system.into();
    check_radii(radii)?;
    let dirs = probe_directions(system.dim(), DEFAULT_SEED);
    let (start, max) = system.range();
    let threshold = RATIO_THRESHOLD.ln();
    let rows: Vec<ConditionRow> = (start..max)
        .into_par_iter()
        .map(|n| {
            let mut all_falsify = true;
            let mut last = (Vec::new(), Vec::new(), 0);
            for m in n + 1..=max {
                let (trace, points) = ladder(|x| system.ln_ratio(n, m, x), radii, &dirs);
                let tail = *trace.last().unwrap();
                let decreasing = trace.windows(2).all(|w| w[1] <= w[0] + 1e-12);
                if decreasing && tail < threshold {
                    return ConditionRow {
                        n,
                        verdict: Verdict::NumericallySupported,
                        witness: Some(Witness::Index { m }),
                        violation: None,
                        trace,
                        note: None,
                    };
                }
                let nondecreasing = trace.windows(2).all(|w| w[1] >= w[0] - 1e-12);
                all_falsify &= nondecreasing && tail >= threshold;
                last = (trace, points, m);
            }
            let (trace, points, m) = last;
            if all_falsify {
                let x = points.last().cloned().unwrap_or_default();
                ConditionRow {
                    n,
                    verdict: Verdict::Falsified,
                    witness: None,
                    violation: Some(Violation {
                        indices: vec![n, m],
                        ln_ratio: system.ln_ratio(n, m, &x),
                        x,
                        y: None,
                        theta: None,
                    }),
                    trace,
                    note: Some("ratio trace bounded below for every M".into()),
                }
            } else {
                ConditionRow::exhausted(n, trace)
            }
        })
        .collect();
    Ok(ConditionReport::from_rows(Condition::V, rows, Vec::new()))
}

/// Nodes and weights of a quadrature rule on the unit sphere `S^{d-1}`.
fn sphere_rule(dim: usize) -> Vec<(Vec<f64>, f64)> {
    use std::f64::consts::TAU;
    match dim {
        1 => vec![(vec![1.0], 1.0), (vec![-1.0], 1.0)],
        2 => {
            let k = 256;
            (0..k)
                .map(|i| {
                    let a = TAU * i as f64 / k as f64;
                    (vec![a.cos(), a.sin()], TAU / k as f64)
                })
                .collect()
        }
        _ => {
            let (zs, wz) = gauss_legendre(24);
            let k = 48;
            let mut out = Vec::with_capacity(24 * k);
            for (z, w) in zs.iter().zip(&wz) {
                let s = (1.0 - z * z).sqrt();
                for i in 0..k {
                    let a = TAU * i as f64 / k as f64;
                    out.push((vec![s * a.cos(), s * a.sin(), *z], w * TAU / k as f64));
                }
            }
            out
        }
    }
}

/// Partial integrals of `e^{ln_f}` over the balls `B(0, r_j)`.
pub fn ball_integrals(
    ln_f: impl Fn(&[f64]) -> f64,
    dim: usize,
    radii: &[f64],
    rel_tol: f64,
) -> Result<Vec<f64>> {
    let rule = sphere_rule(dim);
    let radial = |rho: f64| -> f64 {
        let shell: f64 = rule
            .iter()
            .map(|(u, w)| w * ln_f(&scale(u, rho)).exp())
            .sum();
        shell * rho.powi(dim as i32 - 1)
    };
    let mut out = Vec::with_capacity(radii.len());
    let mut total = 0.0;
    let mut lo = 0.0;
    for &hi in radii {
        let abs_tol = 1e-3 * CAUCHY_INCREMENT * total;
        let piece = if lo > 0.0 && hi / lo > 4.0 {
            adaptive(|s| { let r = s.exp(); radial(r) * r }, lo.ln(), hi.ln(), rel_tol, abs_tol)?
        } else {
            adaptive(radial, lo, hi, rel_tol, abs_tol)?
        };
        total += piece;
        out.push(total);
        lo = hi;
    }
    Ok(out)
}

/// Integrability of `w_N/w_M`, judged by the partial integrals over growing balls.
pub fn check_l1(system: &IncreasingWeightSystem, radii: &[f64], quad: &QuadSpec) -> Result<ConditionReport> {
    check_radii(radii)?;
    if radii[0] <= 0.0 {
        return Err(Error::InvalidInput("integration radii must be positive".into()));
    }
    quad.validate()?;
    let dim = system.dim();
    let max = system.max_index();
    let rows: Vec<Result<ConditionRow>> = (system.start()..max)
        .into_par_iter()
        .map(|n| {
            let mut trace = Vec::new();
            for m in n + 1..=max {
                let (wn, wm) = (system.weight(n), system.weight(m));
                trace = ball_integrals(|x| wn.ln_value(x) - wm.ln_value(x), dim, radii, quad.rel_tol)?;
                let k = trace.len();
                let total = trace[k - 1];
                let settled = total.is_finite()
                    && (k - 2..k).all(|j| trace[j] - trace[j - 1] <= CAUCHY_INCREMENT * total);
                if settled {
                    return Ok(ConditionRow {
                        n,
                        verdict: Verdict::NumericallySupported,
                        witness: Some(Witness::Index { m }),
                        violation: None,
                        trace,
                        note: None,
                    });
                }
            }
            Ok(ConditionRow::exhausted(n, trace))
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(ConditionReport::from_rows(Condition::L1, rows, Vec::new()))
}

fn constant_values(system: &IncreasingWeightSystem) -> Option<Vec<f64>> {
    system
        .weights()
        .iter()
        .map(|w| match w {
            Weight::Constant { value } => Some(*value),
            _ => None,
        })
        .collect()
}

/// Sample pairs `(x, y)` with radii uniform in `[0, R_l]` on the ladder `R_l = 10^l`.
/// Each random pair comes with the degenerate pairs `(x, 0)`, `(0, y)`, `(x, x)` and `(x, -x)`.
fn ladder_pairs(dim: usize, n_samples: usize, seed: u64) -> Vec<Vec<(Vec<f64>, Vec<f64>)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let per_level = n_samples.div_ceil(LADDER_LEVELS as usize);
    let zero = vec![0.0; dim];
    (0..LADDER_LEVELS)
        .map(|l| {
            let r = 10f64.powi(l);
            let mut level = Vec::with_capacity(5 * per_level);
            for _ in 0..per_level {
                let x = scale(&random_unit(dim, &mut rng), r * rng.gen::<f64>());
                let y = scale(&random_unit(dim, &mut rng), r * rng.gen::<f64>());
                level.push((x.clone(), zero.clone()));
                level.push((zero.clone(), y.clone()));
                level.push((x.clone(), x.clone()));
                level.push((x.clone(), scale(&x, -1.0)));
                level.push((x, y));
            }
            level
        })
        .collect()
}

fn trans_ln_ratio(system: &IncreasingWeightSystem, n: usize, m1: usize, m2: usize, x: &[f64], y: &[f64]) -> f64 {
    system.weight(n).ln_value(&add(x, y)) - system.weight(m1).ln_value(x) - system.weight(m2).ln_value(y)
}

/// `w_N(x+y) ≤ C w_{M1}(x) w_{M2}(y)`.
pub fn check_trans_inv(system: &IncreasingWeightSystem, n_samples: usize, seed: u64) -> Result<ConditionReport> {
    if n_samples < MIN_SAMPLES {
        return Err(Error::InvalidInput(format!("need at least {MIN_SAMPLES} samples")));
    }
    let dim = system.dim();
    let (start, max) = (system.start(), system.max_index());
    let levels = ladder_pairs(dim, n_samples, seed);
    let mut diagnostics = Vec::new();
    if system.is_exponential() || constant_values(system).is_some() {
        let consts = constant_values(system);
        let mut worst = f64::NEG_INFINITY;
        let rows = system
            .indices()
            .map(|n| {
                for (x, y) in levels.iter().flatten() {
                    let scale_ = 1.0 + system.weight(n).ln_value(x).abs() + system.weight(n).ln_value(y).abs();
                    worst = worst.max(trans_ln_ratio(system, n, n, n, x, y) / scale_);
                }
                let c = consts.as_ref().map_or(1.0, |v| 1.0 / v[n - start]);
                ConditionRow {
                    n,
                    verdict: Verdict::Certified,
                    witness: Some(Witness::Pair { m1: n, m2: n, c }),
                    violation: None,
                    trace: Vec::new(),
                    note: Some(if consts.is_some() {
                        "constant weights".into()
                    } else {
                        "subadditive exponent".into()
                    }),
                }
            })
            .collect();
        diagnostics.push(format!("max sampled relative log-excess with M1=M2=N: {worst:.3e}"));
        return Ok(ConditionReport::from_rows(Condition::TransInv, rows, diagnostics));
    }
    if start == max {
        diagnostics.push(EXHAUSTED.into());
    }
    let rows: Vec<ConditionRow> = system
        .indices()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|n| {
            let mut pairs: Vec<(usize, usize)> = (n..=max).flat_map(|a| (n..=max).map(move |b| (a, b))).collect();
            pairs.sort_by_key(|&(a, b)| (a + b, a));
            let mut all_diverge = true;
            let mut fallback = None;
            for &(m1, m2) in &pairs {
                let mut running = f64::NEG_INFINITY;
                let mut arg = (Vec::new(), Vec::new());
                let mut trace = Vec::with_capacity(levels.len());
                for level in &levels {
                    for (x, y) in level {
                        let v = trans_ln_ratio(system, n, m1, m2, x, y);
                        if v > running {
                            running = v;
                            arg = (x.clone(), y.clone());
                        }
                    }
                    trace.push(running);
                }
                match classify_log(&trace) {
                    Trend::Bounded => {
                        return ConditionRow {
                            n,
                            verdict: Verdict::NumericallySupported,
                            witness: Some(Witness::Pair { m1, m2, c: running.exp() }),
                            violation: None,
                            trace,
                            note: None,
                        }
                    }
                    Trend::Diverging => {}
                    Trend::Inconclusive => all_diverge = false,
                }
                fallback = Some((m1, m2, trace, arg, running));
            }
            let (m1, m2, trace, (x, y), running) = fallback.expect("at least one pair");
            if all_diverge {
                ConditionRow {
                    n,
                    verdict: Verdict::Falsified,
                    witness: None,
                    violation: Some(Violation {
                        indices: vec![n, m1, m2],
                        x,
                        y: Some(y),
                        theta: None,
                        ln_ratio: running,
                    }),
                    trace,
                    note: Some("running max diverges for every (M1, M2)".into()),
                }
            } else {
                ConditionRow::exhausted(n, trace)
            }
        })
        .collect();
    Ok(ConditionReport::from_rows(Condition::TransInv, rows, diagnostics))
}

/// Re-sample the stored `(M1, M2, C)` witnesses; returns the number of violations.
pub fn replay_trans_inv(
    system: &IncreasingWeightSystem,
    report: &ConditionReport,
    n_samples: usize,
    seed: u64,
) -> usize {
    let levels = ladder_pairs(system.dim(), n_samples, seed);
    let mut violations = 0;
    for row in &report.rows {
        let Some(Witness::Pair { m1, m2, c }) = row.witness else {
            continue;
        };
        for (x, y) in levels.iter().flatten() {
            let lhs = system.weight(row.n).ln_value(&add(x, y));
            let rhs = c.ln() + system.weight(m1).ln_value(x) + system.weight(m2).ln_value(y);
            if lhs > rhs + 1e-10 * (1.0 + lhs.abs().max(rhs.abs())) {
                violations += 1;
            }
        }
    }
    violations
}

/// `(1-θ) K_N + θ K_P`.
fn interpolated_body(kn: &ConvexBody, kp: &ConvexBody, theta: f64) -> Result<ConvexBody> {
    ConvexBody::minkowski_sum(
        ConvexBody::scaled(1.0 - theta, kn.clone())?,
        ConvexBody::scaled(theta, kp.clone())?,
    )
}

fn interpolation_certified(kn: &ConvexBody, kp: &ConvexBody, km: &ConvexBody, theta: f64) -> Result<bool> {
    let inner = interpolated_body(kn, kp, theta)?;
    Ok(contains(&inner, km, 4 * kn.dim())?.is_certified())
}

/// Largest θ on the grid with a certified inclusion, then smaller θ below the
/// grid, then the facet formula for the admissible interval.
fn certified_theta(kn: &ConvexBody, kp: &ConvexBody, km: &ConvexBody, grid: &[f64]) -> Result<Option<f64>> {
    // the admissible θ form an interval containing 0
    let (mut lo, mut hi) = (0usize, grid.len());
    while lo < hi {
        let mid = (lo + hi) / 2;
        if interpolation_certified(kn, kp, km, grid[mid])? {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    if lo > 0 {
        return Ok(Some(grid[lo - 1]));
    }
    let mut theta = grid[0];
    for _ in 0..30 {
        theta *= 0.5;
        if interpolation_certified(kn, kp, km, theta)? {
            return Ok(Some(theta));
        }
    }
    if let Some((a, b)) = km.h_form() {
        let mut upper = f64::INFINITY;
        for (row, bi) in a.iter().zip(&b) {
            let (hn, hp) = (kn.support_function(row), kp.support_function(row));
            if hp > hn {
                upper = upper.min((bi - hn) / (hp - hn));
            }
        }
        if upper.is_finite() && upper > 0.0 {
            let theta = 0.5 * upper.min(1.0);
            if interpolation_certified(kn, kp, km, theta)? {
                return Ok(Some(theta));
            }
        }
    }
    Ok(None)
}

fn omega_ln_ratio(system: &IncreasingWeightSystem, n: usize, m: usize, p: usize, theta: f64, x: &[f64]) -> f64 {
    (1.0 - theta) * system.weight(n).ln_value(x) + theta * system.weight(p).ln_value(x)
        - system.weight(m).ln_value(x)
}

/// `w_N^{1-θ} w_P^θ ≤ C w_M` for `P ∈ [M, P_max]`.
pub fn check_omega_switched(
    system: &IncreasingWeightSystem,
    theta_grid: &[f64],
    p_max: usize,
    radii: &[f64],
) -> Result<ConditionReport> {
    if theta_grid.is_empty() || theta_grid.iter().any(|t| !(*t > 0.0 && *t < 1.0)) {
        return Err(Error::InvalidInput("θ grid must be nonempty and inside (0, 1)".into()));
    }
    if p_max > system.max_index() {
        return Err(Error::InvalidInput(format!(
            "P_max {p_max} exceeds the largest index {}",
            system.max_index()
        )));
    }
    check_radii(radii)?;
    let mut grid = theta_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let start = system.start();
    let top = p_max.saturating_sub(1);
    let ns: Vec<usize> = (start..top).collect();
    if system.is_exponential() {
        let rows: Vec<Result<ConditionRow>> = ns
            .into_par_iter()
            .map(|n| {
                let kn = system.body(n).expect("exponential body");
                'm: for m in n + 1..=top {
                    let km = system.body(m).expect("exponential body");
                    let mut choices = Vec::new();
                    for p in m..=p_max {
                        let kp = system.body(p).expect("exponential body");
                        match certified_theta(kn, kp, km, &grid)? {
                            Some(theta) => choices.push(OmegaChoice { p, theta, c: 1.0 }),
                            None => continue 'm,
                        }
                    }
                    return Ok(ConditionRow {
                        n,
                        verdict: Verdict::Certified,
                        witness: Some(Witness::Omega { m, choices }),
                        violation: None,
                        trace: Vec::new(),
                        note: Some("(1-θ)K_N + θK_P ⊆ K_M certified".into()),
                    });
                }
                Ok(ConditionRow::exhausted(n, Vec::new()))
            })
            .collect();
        let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
        return Ok(ConditionReport::from_rows(Condition::OmegaSwitched, rows, Vec::new()));
    }
    let dirs = probe_directions(system.dim(), DEFAULT_SEED);
    let rows: Vec<ConditionRow> = ns
        .into_par_iter()
        .map(|n| {
            let mut every_m_fails = true;
            let mut failing = None;
            let mut last_trace = Vec::new();
            for m in n..=top {
                let mut choices = Vec::new();
                let mut m_diverges = false;
                for p in m..=p_max {
                    let mut best: Option<(f64, f64)> = None;
                    let mut all_diverge = true;
                    let mut sample = None;
                    for &theta in &grid {
                        let f = |x: &[f64]| omega_ln_ratio(system, n, m, p, theta, x);
                        let (trace, points) = ladder(f, radii, &dirs);
                        let peak = trace.iter().cloned().fold(inner_peak(f, radii[0], &dirs), f64::max);
                        match classify_log(&trace) {
                            Trend::Bounded => {
                                all_diverge = false;
                                if best.is_none_or(|(_, c)| peak < c) {
                                    best = Some((theta, peak));
                                }
                            }
                            Trend::Inconclusive => all_diverge = false,
                            Trend::Diverging => {}
                        }
                        sample = Some((theta, points.last().cloned().unwrap_or_default(), *trace.last().unwrap()));
                        last_trace = trace;
                    }
                    match best {
                        Some((theta, peak)) => choices.push(OmegaChoice { p, theta, c: peak.exp() }),
                        None => {
                            if all_diverge {
                                m_diverges = true;
                                if failing.is_none() {
                                    let (theta, x, ln_ratio) = sample.expect("nonempty grid");
                                    failing = Some(Violation {
                                        indices: vec![n, m, p],
                                        x,
                                        y: None,
                                        theta: Some(theta),
                                        ln_ratio,
                                    });
                                }
                            }
                            break;
                        }
                    }
                }
                if choices.len() == p_max - m + 1 {
                    return ConditionRow {
                        n,
                        verdict: Verdict::NumericallySupported,
                        witness: Some(Witness::Omega { m, choices }),
                        violation: None,
                        trace: last_trace,
                        note: None,
                    };
                }
                every_m_fails &= m_diverges;
            }
            if every_m_fails && failing.is_some() {
                ConditionRow {
                    n,
                    verdict: Verdict::Falsified,
                    witness: None,
                    violation: failing,
                    trace: last_trace,
                    note: Some("log-ratio diverges for every M and θ".into()),
                }
            } else {
                ConditionRow::exhausted(n, last_trace)
            }
        })
        .collect();
    Ok(ConditionReport::from_rows(Condition::OmegaSwitched, rows, Vec::new()))
}

/// Evaluate every stored `(M, θ, C)` choice on the probe spheres and at random
/// points; returns the number of violations.
pub fn replay_omega(system: &IncreasingWeightSystem, report: &ConditionReport, radii: &[f64], seed: u64) -> usize {
    let dim = system.dim();
    let mut points: Vec<Vec<f64>> = Vec::new();
    for r in radii {
        points.extend(probe_directions(dim, seed).iter().map(|u| scale(u, *r)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r_max = radii.iter().cloned().fold(1.0, f64::max);
    for _ in 0..1000 {
        let r = r_max.powf(rng.gen::<f64>());
        points.push(scale(&random_unit(dim, &mut rng), r));
    }
    let mut violations = 0;
    for row in &report.rows {
        let Some(Witness::Omega { m, choices }) = &row.witness else {
            continue;
        };
        for ch in choices {
            for x in &points {
                let v = omega_ln_ratio(system, row.n, *m, ch.p, ch.theta, x);
                let scale_ = 1.0 + system.weight(*m).ln_value(x).abs() + system.weight(ch.p).ln_value(x).abs();
                if v > ch.c.ln() + 1e-10 * scale_ {
                    violations += 1;
                }
            }
        }
    }
    violations
}

/// `sup_x v(x)/v_N(x) < ∞` for every `N`, judged on growing spheres.
pub fn nachbin_member(v: &Weight, system: &DecreasingWeightSystem, radii: &[f64]) -> Result<ConditionReport> {
    check_radii(radii)?;
    v.validate()?;
    let dirs = probe_directions(system.dim(), DEFAULT_SEED);
    let rows: Vec<ConditionRow> = system
        .indices()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|n| {
            let vn = system.weight(n);
            let f = |x: &[f64]| v.ln_value(x) - vn.ln_value(x);
            let (trace, points) = ladder(f, radii, &dirs);
            let peak = trace.iter().cloned().fold(inner_peak(f, radii[0], &dirs), f64::max);
            let (verdict, witness, violation) = match classify_log(&trace) {
                Trend::Bounded => (Verdict::NumericallySupported, Some(Witness::Bound { c: peak.exp() }), None),
                Trend::Diverging => {
                    let x = points.last().cloned().unwrap_or_default();
                    let violation = Violation {
                        indices: vec![n],
                        ln_ratio: *trace.last().unwrap(),
                        x,
                        y: None,
                        theta: None,
                    };
                    (Verdict::Falsified, None, Some(violation))
                }
                Trend::Inconclusive => (Verdict::Undetermined, None, None),
            };
            ConditionRow {
                n,
                verdict,
                witness,
                violation,
                trace,
                note: None,
            }
        })
        .collect();
    Ok(ConditionReport::from_rows(Condition::Nachbin, rows, Vec::new()))
}

/// Recompute the stored log-ratio of a violation for an increasing system.
pub fn replay_violation(condition: Condition, system: &IncreasingWeightSystem, violation: &Violation) -> Option<f64> {
    let ix = &violation.indices;
    let x = &violation.x;
    match condition {
        Condition::V => Some(AnySystem::from(system).ln_ratio(ix[0], ix[1], x)),
        Condition::TransInv => Some(trans_ln_ratio(system, ix[0], ix[1], ix[2], x, violation.y.as_ref()?)),
        Condition::OmegaSwitched => Some(omega_ln_ratio(system, ix[0], ix[1], ix[2], violation.theta?, x)),
        Condition::L1 | Condition::Nachbin => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_combination() {
        use Verdict::*;
        assert_eq!(Verdict::combine([Certified, NumericallySupported]), NumericallySupported);
        assert_eq!(Verdict::combine([Undetermined, Falsified]), Falsified);
        assert_eq!(Verdict::combine([]), Certified);
    }

    #[test]
    fn sphere_rules_integrate_constants() {
        for (d, area) in [(1, 2.0), (2, std::f64::consts::TAU), (3, 4.0 * std::f64::consts::PI)] {
            let total: f64 = sphere_rule(d).iter().map(|(_, w)| w).sum();
            assert!((total - area).abs() < 1e-12, "d={d}");
        }
    }

    #[test]
    fn ball_integral_of_gaussian() {
        // ∫_{ℝ²} e^{-|x|²} = π
        let v = ball_integrals(|x| -crate::linalg::dot(x, x), 2, &[1.0, 10.0, 100.0], 1e-12).unwrap();
        assert!((v[2] - std::f64::consts::PI).abs() < 1e-10);
        assert!((v[0] - std::f64::consts::PI * (1.0 - (-1.0f64).exp())).abs() < 1e-10);
    }
}
