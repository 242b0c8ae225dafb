use gamma_stft::geometry::{contains, ConvexBody, OpenConvexRegion};
use gamma_stft::quadrature::QuadSpec;
use gamma_stft::weights::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn half_line() -> OpenConvexRegion {
    OpenConvexRegion::hregion(vec![vec![-1.0]], vec![0.0]).unwrap()
}

fn unit_square() -> OpenConvexRegion {
    OpenConvexRegion::open_box(&[0.0, 0.0], &[1.0, 1.0]).unwrap()
}

fn poly_system(n_max: usize) -> IncreasingWeightSystem {
    IncreasingWeightSystem::new(1, (1..=n_max).map(|n| Weight::poly(n as f64)).collect(), 1).unwrap()
}

fn exp_norm_system(n_max: usize, dim: usize) -> IncreasingWeightSystem {
    let ws = (1..=n_max)
        .map(|n| Weight::exp_support(ConvexBody::ball(vec![0.0; dim], n as f64).unwrap()))
        .collect();
    IncreasingWeightSystem::new(1, ws, dim).unwrap()
}

#[test]
fn half_line_weights_match_piecewise_oracle() {
    let sys = exp_weight_system(&half_line(), 8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for n in 1..=8 {
        let nf = n as f64;
        for _ in 0..200 {
            let x: f64 = rng.gen_range(-50.0..50.0);
            // max over η ∈ [-N, -1/N] of x·η
            let oracle = (-x / nf).max(-x * nf);
            assert!((sys.weight(n).ln_value(&[x]) - oracle).abs() < 1e-12 * (1.0 + oracle.abs()));
        }
        assert!((sys.weight(n).value(&[0.5]) - (-0.5 / nf).exp()).abs() < 1e-14);
    }
}

#[test]
fn full_space_weights_are_exp_norm() {
    let sys = exp_weight_system(&OpenConvexRegion::full_space(2).unwrap(), 5).unwrap();
    for n in 1..=5 {
        let x = [3.0, -4.0];
        assert!((sys.weight(n).ln_value(&x) - 5.0 * n as f64).abs() < 1e-12);
    }
}

#[test]
fn exponential_systems_are_monotone_on_samples() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for region in [half_line(), unit_square()] {
        let sys = exp_weight_system(&region, 8).unwrap();
        let d = region.dim();
        for _ in 0..10_000 {
            let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-100.0..100.0)).collect();
            for n in sys.start()..sys.max_index() {
                let (a, b) = (sys.weight(n).ln_value(&x), sys.weight(n + 1).ln_value(&x));
                assert!(a <= b + MONOTONE_TOL + 1e-13 * b.abs());
            }
        }
    }
    let pol = DecreasingWeightSystem::polynomial(6, 2);
    for _ in 0..10_000 {
        let x = [rng.gen_range(-1e3..1e3), rng.gen_range(-1e3..1e3)];
        for n in 0..6 {
            assert!(pol.weight(n + 1).value(&x) <= pol.weight(n).value(&x) * (1.0 + MONOTONE_TOL));
        }
    }
}

#[test]
fn ratio_limits() {
    let pol = DecreasingWeightSystem::polynomial(5, 1);
    let r = check_v(&pol, &default_radii()).unwrap();
    assert_eq!(r.verdict, Verdict::NumericallySupported);
    for row in &r.rows {
        assert_eq!(row.witness, Some(Witness::Index { m: row.n + 1 }));
        // ratio (1+r)^{-1}
        let last = (-(1e8f64).ln_1p()).max(f64::MIN);
        assert!((row.trace.last().unwrap() - last).abs() < 1e-12);
    }

    let sys = exp_weight_system(&half_line(), 8).unwrap();
    let r = check_v(&sys, &default_radii()).unwrap();
    assert_eq!(r.verdict, Verdict::NumericallySupported);
    for row in &r.rows {
        let (n, m) = (row.n as f64, (row.n + 1) as f64);
        assert_eq!(row.witness, Some(Witness::Index { m: row.n + 1 }));
        // closed form: sup of e^{-r(1/N - 1/M)} and e^{-(M-N) r}
        for (trace, rad) in row.trace.iter().zip(default_radii()) {
            let oracle = (-rad * (1.0 / n - 1.0 / m)).max(-(m - n) * rad);
            assert!((trace - oracle).abs() < 1e-9 * (1.0 + oracle.abs()));
        }
    }

    let ones = IncreasingWeightSystem::new(1, vec![Weight::constant(1.0); 4], 2).unwrap();
    let r = check_v(&ones, &default_radii()).unwrap();
    assert_eq!(r.verdict, Verdict::Falsified);
    for row in &r.rows {
        let v = row.violation.as_ref().unwrap();
        assert_eq!(replay_violation(Condition::V, &ones, v), Some(v.ln_ratio));
        assert!(v.ln_ratio >= RATIO_THRESHOLD.ln());
    }

    let single = IncreasingWeightSystem::new(1, vec![Weight::poly(1.0)], 1).unwrap();
    let r = check_v(&single, &default_radii()).unwrap();
    assert_eq!(r.verdict, Verdict::Undetermined);
    assert!(r.diagnostics.iter().any(|d| d.contains("exhausted")));
    assert!(check_v(&single, &[1.0, 2.0]).is_err());
}

#[test]
fn integrability() {
    let quad = QuadSpec::default();
    let sys = exp_weight_system(&unit_square(), 6).unwrap();
    let r = check_l1(&sys, &default_l1_radii(), &quad).unwrap();
    assert_eq!(r.verdict, Verdict::NumericallySupported);
    for row in &r.rows {
        assert_eq!(row.witness, Some(Witness::Index { m: row.n + 1 }));
    }

    let pol = poly_system(6);
    let r = check_l1(&pol, &default_l1_radii(), &quad).unwrap();
    assert_eq!(r.verdict, Verdict::Undetermined);
    for row in r.rows.iter().filter(|row| row.n + 2 <= 6) {
        assert_eq!(row.witness, Some(Witness::Index { m: row.n + 2 }));
        // ∫_{-r}^{r} (1+|x|)^{-2} dx = 2(1 - 1/(1+r))
        for (v, rad) in row.trace.iter().zip(default_l1_radii()) {
            let oracle = 2.0 * (1.0 - 1.0 / (1.0 + rad));
            assert!((v - oracle).abs() < 1e-9, "{v} vs {oracle}");
        }
    }

    let short = poly_system(2);
    let r = check_l1(&short, &default_l1_radii(), &quad).unwrap();
    assert_eq!(r.rows.len(), 1);
    assert_eq!(r.rows[0].verdict, Verdict::Undetermined);
    assert_eq!(r.rows[0].note.as_deref(), Some("exhausted indices"));
    // ∫_{-r}^{r} (1+|x|)^{-1} = 2 ln(1+r) keeps growing
    let t = &r.rows[0].trace;
    assert!((t[t.len() - 1] - 2.0 * (1e10f64).ln_1p()).abs() < 1e-8);
}

#[test]
fn translation_bounds() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for region in [half_line(), unit_square(), OpenConvexRegion::open_ball(vec![0.0, 0.0, 1.0], 0.5).unwrap()] {
        let sys = exp_weight_system(&region, 6).unwrap();
        let r = check_trans_inv(&sys, 2000, 11).unwrap();
        assert_eq!(r.verdict, Verdict::Certified);
        for row in &r.rows {
            assert_eq!(row.witness, Some(Witness::Pair { m1: row.n, m2: row.n, c: 1.0 }));
        }
        // subadditivity of the exponent
        let d = region.dim();
        for _ in 0..10_000 {
            let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-20.0..20.0)).collect();
            let y: Vec<f64> = (0..d).map(|_| rng.gen_range(-20.0..20.0)).collect();
            let s: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
            for n in sys.indices() {
                let w = sys.weight(n);
                assert!(w.value(&s) <= w.value(&x) * w.value(&y) * (1.0 + 1e-10));
            }
        }
        assert_eq!(replay_trans_inv(&sys, &r, 2000, 12), 0, "{region:?}");
    }

    let pol = poly_system(5);
    let r = check_trans_inv(&pol, 3000, 5).unwrap();
    assert_eq!(r.verdict, Verdict::NumericallySupported);
    for row in &r.rows {
        let Some(Witness::Pair { m1, m2, c }) = row.witness else {
            panic!("missing witness")
        };
        assert_eq!((m1, m2), (row.n, row.n));
        assert!(c <= 1.0 && c <= 2f64.powi(row.n as i32));
    }
    assert_eq!(replay_trans_inv(&pol, &r, 3000, 99), 0);

    let ones = IncreasingWeightSystem::new(1, vec![Weight::constant(1.0); 3], 1).unwrap();
    let r = check_trans_inv(&ones, 1000, 1).unwrap();
    assert_eq!(r.verdict, Verdict::Certified);
    assert_eq!(r.rows[0].witness, Some(Witness::Pair { m1: 1, m2: 1, c: 1.0 }));

    assert!(check_trans_inv(&pol, 999, 1).is_err());
}

#[test]
fn translation_for_gaussian_growth_needs_larger_indices() {
    // e^{N|x|²}: N|x+y|² - M1|x|² - M2|y|² is bounded iff M1, M2 ≥ 2N-ish;
    // (2,2) is the first bounded pair for N = 1 since |x+y|² - 2|x|² - 2|y|² = -|x-y|²
    let ws = (1..=3)
        .map(|n| Weight::product(vec![Weight::power_exp(2.0); n]))
        .collect();
    let sys = IncreasingWeightSystem::new(1, ws, 2).unwrap();
    let r = check_trans_inv(&sys, 3000, 4).unwrap();
    let row = r.row(1).unwrap();
    assert_eq!(row.verdict, Verdict::NumericallySupported);
    assert!(matches!(row.witness, Some(Witness::Pair { m1: 2, m2: 2, .. })));
    // no doubled index is available inside the truncated system
    for n in [2, 3] {
        let row = r.row(n).unwrap();
        assert_eq!(row.verdict, Verdict::Falsified);
        let v = row.violation.as_ref().unwrap();
        let again = replay_violation(Condition::TransInv, &sys, v).unwrap();
        assert!((again - v.ln_ratio).abs() <= 1e-9 * v.ln_ratio.abs());
    }
    assert_eq!(r.verdict, Verdict::Falsified);
    assert_eq!(replay_trans_inv(&sys, &r, 3000, 8), 0);
}

#[test]
fn interpolation_condition_half_line() {
    let sys = exp_weight_system(&half_line(), 8).unwrap();
    let r = check_omega_switched(&sys, &default_theta_grid(), 8, &default_omega_radii()).unwrap();
    assert_eq!(r.verdict, Verdict::Certified);
    assert_eq!(replay_omega(&sys, &r, &decade_radii(-2, 6, 1), 3), 0);

    // the witness M = 2N with θ(P) = min(1/2, N/(P-N)) from the interval endpoint inequalities
    for n in 1..=4usize {
        let m = 2 * n;
        let kn = sys.body(n).unwrap();
        let km = sys.body(m).unwrap();
        for p in m..=8 {
            let theta = (0.5f64).min(n as f64 / (p - n) as f64);
            let (nf, pf) = (n as f64, p as f64);
            assert!((1.0 - theta) / nf + theta / pf >= 1.0 / (2.0 * nf) - 1e-15);
            assert!((1.0 - theta) * nf + theta * pf <= 2.0 * nf + 1e-12);
            let inner = ConvexBody::minkowski_sum(
                ConvexBody::scaled(1.0 - theta, kn.clone()).unwrap(),
                ConvexBody::scaled(theta, sys.body(p).unwrap().clone()).unwrap(),
            )
            .unwrap();
            assert!(contains(&inner, km, 4).unwrap().is_certified());
        }
    }
}

#[test]
fn interpolation_condition_user_systems() {
    let sys = exp_norm_system(8, 1);
    let r = check_omega_switched(&sys, &default_theta_grid(), 8, &default_omega_radii()).unwrap();
    assert_eq!(r.verdict, Verdict::NumericallySupported);
    for row in &r.rows {
        let Some(Witness::Omega { m, choices }) = &row.witness else {
            panic!("missing witness")
        };
        assert_eq!(*m, row.n + 1);
        for ch in choices {
            // exponent arithmetic: (1-θ)N + θP ≤ M
            assert!(ch.theta <= (m - row.n) as f64 / (ch.p - row.n) as f64 + 1e-12);
            assert!(ch.c <= 1.0);
        }
    }
    assert_eq!(replay_omega(&sys, &r, &decade_radii(-2, 6, 1), 5), 0);

    let ws = (1..=8)
        .map(|n| Weight::power_exp(2.0 - 1.0 / n as f64))
        .collect();
    let sys = IncreasingWeightSystem::new(1, ws, 1).unwrap();
    let r = check_omega_switched(&sys, &default_theta_grid(), 8, &default_omega_radii()).unwrap();
    assert_eq!(r.verdict, Verdict::Falsified);
    for row in &r.rows {
        assert_eq!(row.verdict, Verdict::Falsified);
        let v = row.violation.as_ref().unwrap();
        let again = replay_violation(Condition::OmegaSwitched, &sys, v).unwrap();
        assert!((again - v.ln_ratio).abs() <= 1e-9 * v.ln_ratio.abs());
        assert!(v.ln_ratio > 100.0);
    }
}

#[test]
fn nachbin_membership() {
    for n_max in 0..=4usize {
        let pol = DecreasingWeightSystem::polynomial(n_max, 1);
        let v = Weight::poly_inv(n_max as f64 + 3.0);
        let r = nachbin_member(&v, &pol, &default_radii()).unwrap();
        assert_eq!(r.verdict, Verdict::NumericallySupported);
        for row in &r.rows {
            assert_eq!(row.witness, Some(Witness::Bound { c: 1.0 }));
        }
    }
    let pol = DecreasingWeightSystem::polynomial(4, 2);
    let r = nachbin_member(&Weight::poly(1.0), &pol, &default_radii()).unwrap();
    assert_eq!(r.verdict, Verdict::Falsified);
    for row in &r.rows {
        let v = row.violation.as_ref().unwrap();
        // ratio (1+|x|)^{1+N}
        let oracle = (1.0 + row.n as f64) * (1e8f64).ln_1p();
        assert!((v.ln_ratio - oracle).abs() < 1e-9 * oracle);
    }
    // w = v₀ (1+|ξ|)^{d+1} with v₀ = (1+|ξ|)^{-(N_max+d+1)}
    let d = 2usize;
    let n_max = 3usize;
    let v0 = Weight::poly_inv((n_max + d + 1) as f64);
    let w = Weight::product(vec![v0, Weight::poly((d + 1) as f64)]);
    let pol = DecreasingWeightSystem::polynomial(n_max, d);
    assert_eq!(nachbin_member(&w, &pol, &default_radii()).unwrap().verdict, Verdict::NumericallySupported);
}

#[test]
fn reports_serialize() {
    let sys = exp_weight_system(&half_line(), 4).unwrap();
    let r = check_v(&sys, &default_radii()).unwrap();
    let json = serde_json::to_string(&r).unwrap();
    let back: ConditionReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back, r);
    let spec: IncreasingSystemSpec = serde_json::from_str(
        r#"{"kind":"exponential","region":{"type":"hregion","A":[[-1.0]],"b":[0.0]},"n_max":4}"#,
    )
    .unwrap();
    assert_eq!(spec.build().unwrap(), sys);
}

fn random_polytopal_region(rng: &mut ChaCha8Rng) -> OpenConvexRegion {
    let d = rng.gen_range(1..=2usize);
    let lo: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..1.0)).collect();
    let hi: Vec<f64> = lo.iter().map(|l| l + rng.gen_range(0.5..3.0)).collect();
    if rng.gen_bool(0.5) {
        OpenConvexRegion::open_box(&lo, &hi).unwrap()
    } else {
        OpenConvexRegion::orthant(&lo).unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]
    #[test]
    fn exponential_interpolation_never_falsified(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let region = random_polytopal_region(&mut rng);
        let start = region.min_exhaustion_index().unwrap();
        let sys = exp_weight_system(&region, start + 5).unwrap();
        let r = check_omega_switched(&sys, &default_theta_grid(), start + 5, &default_omega_radii()).unwrap();
        prop_assert_ne!(r.verdict, Verdict::Falsified);
        prop_assert_eq!(r.verdict, Verdict::Certified);
    }
}
