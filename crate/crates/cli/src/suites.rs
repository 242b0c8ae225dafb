use serde::Serialize;

use gamma_stft::geometry::ConvexBody;
use gamma_stft::seminorm::{
    adjoint_bound_suite, convolutor_suite, convolutor_trends, gamma_membership, lemma1_suite, lemma2_suite,
    weighted_sup_ladder, BoundReport, GammaReport, Lemma1Config, StftSource,
};
use gamma_stft::stft::{isometry_gap, reconstruct, stft, GridSpec, Reconstruction, TimeFrequencyField, Window};
use gamma_stft::trend::{MembershipVerdict, Trend, TrendRow};
use gamma_stft::weights::{
    check_l1, check_omega_switched, check_trans_inv, check_v, default_l1_radii, default_omega_radii, default_radii,
    default_theta_grid, nachbin_member, ConditionReport,
};
use gamma_stft::Result;

use crate::config::*;

/// Results of one command; `failures` names every suite that did not pass.
pub struct Outcome<T> {
    pub results: T,
    pub failures: Vec<String>,
    pub field: Option<TimeFrequencyField>,
    /// Rows for the optional CSV trace.
    pub trace: Vec<Vec<String>>,
    pub trace_header: Vec<&'static str>,
}

/// Numbers below this count as converged on the roundoff floor.
pub const ROUNDOFF_FLOOR: f64 = 1e-12;

fn decreasing(coarse: f64, fine: f64) -> bool {
    fine < coarse || coarse.max(fine) < ROUNDOFF_FLOOR
}

#[derive(Debug, Serialize)]
pub struct WeightsResults {
    pub v: ConditionReport,
    pub l1: ConditionReport,
    pub trans_inv: ConditionReport,
    pub omega: ConditionReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nachbin: Option<ConditionReport>,
}

pub fn check_weights(cfg: &WeightsConfig, seed: u64) -> Result<Outcome<WeightsResults>> {
    let sys = cfg.system.build()?;
    let p_max = cfg.p_max.unwrap_or(sys.max_index());
    let results = WeightsResults {
        v: check_v(&sys, &default_radii())?,
        l1: check_l1(&sys, &default_l1_radii(), &cfg.quad)?,
        trans_inv: check_trans_inv(&sys, cfg.trans_inv_samples, seed)?,
        omega: check_omega_switched(&sys, &default_theta_grid(), p_max, &default_omega_radii())?,
        nachbin: match &cfg.nachbin {
            Some(n) => Some(nachbin_member(&n.v, &n.system.build()?, &default_radii())?),
            None => None,
        },
    };
    let mut failures = Vec::new();
    let mut trace = Vec::new();
    let named = [
        ("v", Some(&results.v)),
        ("l1", Some(&results.l1)),
        ("trans_inv", Some(&results.trans_inv)),
        ("omega", Some(&results.omega)),
        ("nachbin", results.nachbin.as_ref()),
    ];
    for (name, report) in named {
        let Some(r) = report else { continue };
        if !r.verdict.holds() {
            failures.push(format!("{name}: {:?}", r.verdict));
        }
        for row in &r.rows {
            trace.push(vec![name.to_string(), row.n.to_string(), format!("{:?}", row.verdict)]);
        }
    }
    Ok(Outcome { results, failures, field: None, trace, trace_header: vec!["condition", "n", "verdict"] })
}

#[derive(Debug, Serialize)]
pub struct StftInputResult {
    pub name: String,
    pub reconstruction: Reconstruction,
    pub reconstruction_doubled: Reconstruction,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub isometry_gap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub isometry_gap_doubled: Option<f64>,
    pub passed: bool,
}

pub fn stft_verify(cfg: &StftConfig, tol: Option<f64>) -> Result<Outcome<Vec<StftInputResult>>> {
    let rec_tol = tol.unwrap_or(cfg.reconstruction_tol);
    let synthesis = cfg.synthesis.as_ref().unwrap_or(&cfg.window);
    let doubled = cfg.grid.doubled();
    let mut results = Vec::new();
    let mut failures = Vec::new();
    let mut trace = Vec::new();
    for input in &cfg.inputs {
        let coarse = reconstruct(&input.f, &cfg.window, synthesis, &cfg.test_function, &cfg.grid, &cfg.quad)?;
        let fine = reconstruct(&input.f, &cfg.window, synthesis, &cfg.test_function, &doubled, &cfg.quad)?;
        let mut passed = coarse.error < rec_tol && decreasing(coarse.error, fine.error);
        let (mut gap, mut gap_fine) = (None, None);
        if input.f.is_square_integrable() && !input.f.is_zero() {
            let g = isometry_gap(&input.f, &cfg.window, &cfg.grid, &cfg.quad)?;
            let gf = isometry_gap(&input.f, &cfg.window, &doubled, &cfg.quad)?;
            passed &= g < cfg.isometry_tol && decreasing(g, gf);
            gap = Some(g);
            gap_fine = Some(gf);
        }
        if !passed {
            failures.push(input.name.clone());
        }
        trace.push(vec![
            input.name.clone(),
            format!("{:e}", coarse.error),
            format!("{:e}", fine.error),
            gap.map_or(String::new(), |g| format!("{g:e}")),
            gap_fine.map_or(String::new(), |g| format!("{g:e}")),
        ]);
        results.push(StftInputResult {
            name: input.name.clone(),
            reconstruction: coarse,
            reconstruction_doubled: fine,
            isometry_gap: gap,
            isometry_gap_doubled: gap_fine,
            passed,
        });
    }
    let field = match cfg.inputs.get(cfg.field_input.unwrap_or(0)) {
        Some(input) => Some(stft(&input.f, &cfg.window, &cfg.grid, &cfg.quad)?),
        None => None,
    };
    Ok(Outcome {
        results,
        failures,
        field,
        trace,
        trace_header: vec!["input", "reconstruction_error", "reconstruction_error_doubled", "isometry_gap", "isometry_gap_doubled"],
    })
}

#[derive(Debug, Serialize)]
pub struct LemmaRun {
    pub label: String,
    pub k: u32,
    pub n: u32,
    pub report: BoundReport,
}

#[derive(Debug, Serialize)]
pub struct LemmaResults {
    pub lemma: u8,
    pub runs: Vec<LemmaRun>,
    pub max_ratio: f64,
}

fn lemma_outcome(lemma: u8, runs: Vec<LemmaRun>, require_nonvacuous: bool) -> Outcome<LemmaResults> {
    let max_ratio = runs.iter().map(|r| r.report.max_ratio).fold(0.0, f64::max);
    let mut failures: Vec<String> = runs
        .iter()
        .filter(|r| !r.report.passed())
        .map(|r| format!("{} k={} n={}: {} violations", r.label, r.k, r.n, r.report.violations.len()))
        .collect();
    if max_ratio > 1.0 {
        failures.push(format!("max_ratio {max_ratio:e} above 1"));
    }
    if require_nonvacuous && max_ratio <= 1e-6 {
        failures.push(format!("max_ratio {max_ratio:e}: harness never approaches the bound"));
    }
    let trace = runs
        .iter()
        .map(|r| {
            vec![
                r.label.clone(),
                r.k.to_string(),
                r.n.to_string(),
                r.report.n_points.to_string(),
                format!("{:e}", r.report.max_ratio),
                r.report.violations.len().to_string(),
            ]
        })
        .collect();
    Outcome {
        results: LemmaResults { lemma, runs, max_ratio },
        failures,
        field: None,
        trace,
        trace_header: vec!["configuration", "k", "n", "points", "max_ratio", "violations"],
    }
}

fn body_label(k: &ConvexBody) -> String {
    serde_json::to_string(k).unwrap_or_default()
}

pub fn lemma1(cfg: &Lemma1Cli, seed: u64, tol: Option<f64>) -> Result<Outcome<LemmaResults>> {
    let mut runs = Vec::new();
    for body in &cfg.bodies {
        let psi = Window::new(cfg.window_radius, body.dim())?;
        for &(k, n) in &cfg.orders {
            let mut c = Lemma1Config::default_for(body.dim(), k, n)?;
            c.epsilon = cfg.epsilon;
            c.seed = seed;
            if let Some(g) = cfg.grid {
                c.grid = g;
            }
            if let Some(e) = cfg.eta_samples {
                c.eta_samples = e;
            }
            if let Some(t) = cfg.t_points {
                c.t_points = t;
            }
            if let Some(t) = tol {
                c.tol = t;
            }
            let report = lemma1_suite(&psi, body, &cfg.v, &c)?;
            runs.push(LemmaRun { label: body_label(body), k, n, report });
        }
    }
    Ok(lemma_outcome(1, runs, false))
}

pub fn lemma2(cfg: &Lemma2Cli, tol: Option<f64>) -> Result<Outcome<LemmaResults>> {
    let tol = tol.unwrap_or(gamma_stft::seminorm::BOUND_TOL);
    let mut runs = Vec::new();
    for eta in &cfg.etas {
        for &(k, n) in &cfg.orders {
            let report = lemma2_suite(&cfg.window, eta, k, n, &cfg.test_function, &cfg.grid, &cfg.quad, tol)?;
            runs.push(LemmaRun { label: format!("eta={eta:?}"), k, n, report });
        }
    }
    Ok(lemma_outcome(2, runs, true))
}

#[derive(Debug, Serialize)]
pub struct GammaResults {
    pub membership: GammaReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub negative_control: Option<TrendRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adjoint: Option<BoundReport>,
}

pub fn gamma_certify(cfg: &GammaCli, seed: u64, tol: Option<f64>, ladder: Option<usize>) -> Result<Outcome<GammaResults>> {
    let mut m = cfg.membership.clone();
    m.seed = seed;
    if let Some(t) = tol {
        m.tol = t;
    }
    if let Some(l) = ladder {
        m.windows = l;
    }
    let membership = gamma_membership(&cfg.f, &cfg.gamma, &cfg.window, &cfg.v, &m)?;
    let mut failures = Vec::new();
    if membership.verdict.trend != Trend::Bounded {
        failures.push(format!("membership trend {:?}", membership.verdict.trend));
    }
    for b in &membership.bounds {
        if !b.report.passed() {
            failures.push(format!("K_{}: sampled norm above e·p", b.n));
        }
    }
    let negative_control = match &cfg.negative_control {
        Some(k) => {
            let src = StftSource { f: &cfg.f, psi: &cfg.window, quad: m.quad };
            let row = weighted_sup_ladder(&src, k, &cfg.v, &m.ladder()?)?;
            if row.trend != Trend::Diverging {
                failures.push(format!("negative control trend {:?}", row.trend));
            }
            Some(row)
        }
        None => None,
    };
    let adjoint = match &cfg.adjoint {
        Some(a) => {
            let mut ac = a.config.clone();
            ac.seed = seed;
            if let Some(t) = tol {
                ac.tol = t;
            }
            let psi = Window::new(cfg.window.radius(), a.grid.dim)?;
            let field = stft(&a.source, &psi, &a.grid, &ac.quad)?;
            let r = adjoint_bound_suite(&field, &a.gamma, &psi, a.k_index, a.epsilon, &a.family, a.v0.as_ref(), &ac)?;
            if !r.passed() {
                failures.push(format!("adjoint bound: {} violations", r.violations.len()));
            }
            Some(r)
        }
        None => None,
    };
    let mut trace = Vec::new();
    for row in membership.verdict.rows.iter().chain(negative_control.iter()) {
        for (w, s) in row.sups.iter().enumerate() {
            trace.push(vec![row.label.clone(), w.to_string(), format!("{s:e}"), format!("{:?}", row.trend)]);
        }
    }
    Ok(Outcome {
        results: GammaResults { membership, negative_control, adjoint },
        failures,
        field: None,
        trace,
        trace_header: vec!["row", "window", "sup", "trend"],
    })
}

pub fn convolutor_check(cfg: &ConvolutorCli, ladder: Option<usize>) -> Result<Outcome<MembershipVerdict>> {
    let sys = cfg.system.build()?;
    let windows = ladder.unwrap_or(cfg.windows);
    if windows < 3 {
        return Err(gamma_stft::Error::InvalidInput("a trend needs at least 3 windows".into()));
    }
    let grids: Vec<GridSpec> = cfg.grid.validated()?.ladder(windows);
    let verdict = if cfg.unchecked {
        convolutor_trends(&cfg.f, &cfg.phis, &sys, &grids, &cfg.quad)?
    } else {
        convolutor_suite(&cfg.f, &cfg.phis, &sys, &grids, &cfg.quad)?
    };
    let mut failures = Vec::new();
    if verdict.trend != cfg.expect {
        failures.push(format!("trend {:?}, expected {:?}", verdict.trend, cfg.expect));
    }
    let trace = verdict
        .rows
        .iter()
        .flat_map(|row| {
            row.sups
                .iter()
                .enumerate()
                .map(|(w, s)| vec![row.label.clone(), w.to_string(), format!("{s:e}"), format!("{:?}", row.trend)])
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(Outcome { results: verdict, failures, field: None, trace, trace_header: vec!["row", "window", "sup", "trend"] })
}
