//! End-to-end acceptance gate. Runs without the libtest harness so each
//! criterion prints one line; exits nonzero if any criterion fails.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use gamma_stft::geometry::{directions::random_unit, lp_maximize, ConvexBody, OpenConvexRegion};
use gamma_stft::quadrature::QuadSpec;
use gamma_stft::weights::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(t: Instant, limit: Duration) -> Result<Duration, String> {
    let e = t.elapsed();
    ensure(e < limit, || format!("runtime {e:.1?} over {limit:?}"))?;
    Ok(e)
}

// ---- criterion 1 -------------------------------------------------------

fn det(m: &[Vec<f64>]) -> f64 {
    match m.len() {
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        _ => {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
    }
}

fn cramer(m: &[Vec<f64>], r: &[f64]) -> Option<Vec<f64>> {
    let d = det(m);
    if d.abs() < 1e-10 {
        return None;
    }
    let col = |k: usize| -> Vec<Vec<f64>> {
        m.iter()
            .zip(r)
            .map(|(row, &ri)| {
                let mut row = row.clone();
                row[k] = ri;
                row
            })
            .collect()
    };
    Some((0..m.len()).map(|k| det(&col(k)) / d).collect())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Max of c·η over every feasible intersection of d constraint planes.
fn vertex_oracle(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> f64 {
    let d = c.len();
    let m = a.len();
    let mut subsets: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..d {
        subsets = subsets
            .into_iter()
            .flat_map(|s| {
                let start = s.last().map_or(0, |&l| l + 1);
                (start..m).map(move |i| {
                    let mut t = s.clone();
                    t.push(i);
                    t
                })
            })
            .collect();
    }
    let mut best = f64::NEG_INFINITY;
    for rows in subsets {
        let mat: Vec<Vec<f64>> = rows.iter().map(|&i| a[i].clone()).collect();
        let rhs: Vec<f64> = rows.iter().map(|&i| b[i]).collect();
        if let Some(v) = cramer(&mat, &rhs) {
            if a.iter().zip(b).all(|(row, bi)| dot(row, &v) <= bi + 1e-9) {
                best = best.max(dot(c, &v));
            }
        }
    }
    best
}

fn random_hpolytope(d: usize, rng: &mut ChaCha8Rng) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut a = Vec::new();
    let mut b = Vec::new();
    for i in 0..d {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; d];
            e[i] = s;
            a.push(e);
            b.push(rng.gen_range(1.0..3.0));
        }
    }
    for _ in 0..rng.gen_range(0..=(10 - 2 * d)) {
        a.push(random_unit(d, rng));
        b.push(rng.gen_range(0.3..2.0));
    }
    (a, b)
}

fn random_body(d: usize, rng: &mut ChaCha8Rng) -> ConvexBody {
    let pt = |rng: &mut ChaCha8Rng| (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect::<Vec<f64>>();
    match rng.gen_range(0..5) {
        0 => ConvexBody::point(pt(rng)).unwrap(),
        1 => ConvexBody::ball(pt(rng), rng.gen_range(0.1..2.0)).unwrap(),
        2 => {
            let n = rng.gen_range(1..6);
            ConvexBody::vpolytope((0..n).map(|_| pt(rng)).collect()).unwrap()
        }
        3 => {
            let lo = pt(rng);
            let hi: Vec<f64> = lo.iter().map(|l| l + rng.gen_range(0.0..2.0)).collect();
            ConvexBody::cuboid(&lo, &hi).unwrap()
        }
        _ => {
            let (a, b) = random_hpolytope(d, rng);
            ConvexBody::hpolytope(a, b).unwrap()
        }
    }
}

fn criterion1() -> Check {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let d = rng.gen_range(1..=3);
        let k1 = random_body(d, &mut rng);
        let k2 = random_body(d, &mut rng);
        let eps = rng.gen_range(0.01..2.0);
        let r = rng.gen_range(0.1..5.0);
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let (h1, h2) = (k1.support_function(&x), k2.support_function(&x));
        let sum = ConvexBody::minkowski_sum(k1.clone(), k2).unwrap().support_function(&x);
        let fat = k1.fatten(eps).unwrap().support_function(&x);
        let ball = ConvexBody::ball(vec![0.0; d], r).unwrap().support_function(&x);
        let scale = 1.0 + h1.abs() + h2.abs() + norm(&x);
        worst = worst
            .max((sum - h1 - h2).abs() / scale)
            .max((fat - h1 - eps * norm(&x)).abs() / scale)
            .max((ball - r * norm(&x)).abs() / scale);
    }
    ensure(worst <= 1e-12, || format!("identity error {worst:e}"))?;
    let mut lp_worst: f64 = 0.0;
    for i in 0..200 {
        let (a, b) = random_hpolytope(1 + i % 3, &mut rng);
        let d = a[0].len();
        let c: Vec<f64> = (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let lp = lp_maximize(&a, &b, &c).map_err(|e| e.to_string())?;
        let body = ConvexBody::hpolytope(a.clone(), b.clone()).unwrap().support_function(&c);
        let oracle = vertex_oracle(&a, &b, &c);
        lp_worst = lp_worst.max((lp.value - oracle).abs()).max((body - oracle).abs());
    }
    ensure(lp_worst <= 1e-9, || format!("lp vs vertex oracle {lp_worst:e}"))?;
    let e = within(t, Duration::from_secs(10))?;
    Ok(format!("identity err {worst:.1e}, lp err {lp_worst:.1e}, {e:.1?}"))
}

// ---- criterion 2 -------------------------------------------------------

fn all_witnessed(r: &ConditionReport) -> bool {
    r.verdict.holds() && r.rows.iter().all(|row| row.verdict.holds() && row.witness.is_some())
}

fn criterion2() -> Check {
    let t = Instant::now();
    let regions = [
        ("(0,inf)", OpenConvexRegion::orthant(&[0.0]).unwrap()),
        ("R", OpenConvexRegion::full_space(1).unwrap()),
        ("square", OpenConvexRegion::open_box(&[0.0, 0.0], &[1.0, 1.0]).unwrap()),
        (
            "triangle",
            OpenConvexRegion::hregion(vec![vec![-1.0, 0.0], vec![0.0, -1.0], vec![1.0, 1.0]], vec![0.0, 0.0, 1.0])
                .unwrap(),
        ),
    ];
    let quad = QuadSpec::default();
    for (name, region) in &regions {
        let sys = exp_weight_system(region, 8).map_err(|e| e.to_string())?;
        let v = check_v(&sys, &default_radii()).map_err(|e| e.to_string())?;
        let l1 = check_l1(&sys, &default_l1_radii(), &quad).map_err(|e| e.to_string())?;
        let ti = check_trans_inv(&sys, 2000, 7).map_err(|e| e.to_string())?;
        let om = check_omega_switched(&sys, &default_theta_grid(), 8, &default_omega_radii()).map_err(|e| e.to_string())?;
        for (c, r) in [("V", &v), ("L1", &l1), ("trans-inv", &ti), ("omega", &om)] {
            ensure(all_witnessed(r), || format!("{name} {c}: {:?}", r.verdict))?;
        }
        ensure(ti.verdict == Verdict::Certified && om.verdict == Verdict::Certified, || {
            format!("{name}: trans-inv {:?}, omega {:?}", ti.verdict, om.verdict)
        })?;
        for row in &ti.rows {
            ensure(matches!(row.witness, Some(Witness::Pair { c, .. }) if c == 1.0), || {
                format!("{name} trans-inv N={}: {:?}", row.n, row.witness)
            })?;
        }
        for row in &om.rows {
            let ok = match &row.witness {
                Some(Witness::Omega { choices, .. }) => choices.iter().all(|ch| ch.c == 1.0),
                _ => false,
            };
            ensure(ok, || format!("{name} omega N={}: {:?}", row.n, row.witness))?;
        }
    }
    let ws = (1..=8).map(|n| Weight::power_exp(2.0 - 1.0 / n as f64)).collect();
    let neg = IncreasingWeightSystem::new(1, ws, 1).map_err(|e| e.to_string())?;
    let r = check_omega_switched(&neg, &default_theta_grid(), 8, &default_omega_radii()).map_err(|e| e.to_string())?;
    ensure(r.verdict == Verdict::Falsified, || format!("negative control: {:?}", r.verdict))?;
    let e = within(t, Duration::from_secs(30))?;
    Ok(format!("4 regions certified, negative control falsified, {e:.1?}"))
}

// ---- criteria 3 to 7 go through the command line -------------------------

struct Cli {
    dir: PathBuf,
}

impl Cli {
    fn run(&self, tag: &str, args: &[&str]) -> Result<(Value, Vec<u8>), String> {
        let out = self.dir.join(format!("{tag}.json"));
        let mut argv = vec!["gamma-stft"];
        argv.extend_from_slice(args);
        argv.extend_from_slice(&["--seed", "7", "--quiet", "--out", out.to_str().unwrap()]);
        let code = gamma_stft_cli::run(&argv);
        let bytes = std::fs::read(&out).map_err(|e| format!("{tag}: exit {code}, no report ({e})"))?;
        let v: Value = serde_json::from_slice(&bytes).map_err(|e| e.to_string())?;
        ensure(code == 0 && v["passed"] == true, || format!("{tag}: exit {code}, failures {}", v["failures"]))?;
        Ok((v, bytes))
    }
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap_or(f64::NAN)
}

const FLOOR: f64 = 1e-12;

fn criterion3(cli: &Cli) -> Check {
    let t = Instant::now();
    let (r, _) = cli.run("stft", &["stft-verify"])?;
    let inputs = r["results"].as_array().ok_or("no results")?;
    ensure(inputs.len() == 4, || format!("{} inputs", inputs.len()))?;
    let mut worst: f64 = 0.0;
    for i in inputs {
        let (c, f) = (num(&i["reconstruction"]["error"]), num(&i["reconstruction_doubled"]["error"]));
        ensure(c < 1e-3 && (f < c || c.max(f) < FLOOR), || format!("{}: reconstruction {c:e} -> {f:e}", i["name"]))?;
        worst = worst.max(c);
    }
    let g = inputs.iter().find(|i| i["name"] == "gaussian").ok_or("no gaussian input")?;
    let (gap, gap2) = (num(&g["isometry_gap"]), num(&g["isometry_gap_doubled"]));
    ensure(gap < 0.01 && gap2 < gap, || format!("isometry gap {gap:e} -> {gap2:e}"))?;
    let e = within(t, Duration::from_secs(120))?;
    Ok(format!("isometry gap {gap:.2e} -> {gap2:.2e}, worst reconstruction {worst:.2e}, {e:.1?}"))
}

fn lemma_runs(r: &Value) -> Result<&Vec<Value>, String> {
    let runs = r["results"]["runs"].as_array().ok_or("no runs")?;
    for run in runs {
        let v = run["report"]["violations"].as_array().map_or(usize::MAX, |v| v.len());
        ensure(v == 0, || format!("{} k={} n={}: {v} violations", run["label"], run["k"], run["n"]))?;
    }
    Ok(runs)
}

fn criterion4(cli: &Cli) -> Check {
    let t = Instant::now();
    let (r, _) = cli.run("lemma2", &["lemma-verify", "--lemma", "2", "--tol", "1e-8"])?;
    let runs = lemma_runs(&r)?;
    ensure(runs.len() == 27, || format!("{} configurations", runs.len()))?;
    ensure(runs.iter().all(|run| run["report"]["n_points"] == 10_000), || "grid is not 100x100".into())?;
    let m = num(&r["results"]["max_ratio"]);
    ensure(m <= 1.0, || format!("max_ratio {m}"))?;
    let e = within(t, Duration::from_secs(120))?;
    Ok(format!("27 configurations, max_ratio {m:.3}, {e:.1?}"))
}

fn criterion5(cli: &Cli) -> Check {
    let t = Instant::now();
    let (r, _) = cli.run("lemma1", &["lemma-verify", "--lemma", "1"])?;
    let runs = lemma_runs(&r)?;
    ensure(runs.len() == 27, || format!("{} configurations", runs.len()))?;
    let m = num(&r["results"]["max_ratio"]);
    let e = within(t, Duration::from_secs(60))?;
    Ok(format!("3 bodies x 9 orders, max_ratio {m:.3}, {e:.1?}"))
}

fn criterion6(cli: &Cli) -> Check {
    let t = Instant::now();
    let (r, _) = cli.run("gamma", &["gamma-certify"])?;
    let res = &r["results"];
    ensure(res["membership"]["verdict"]["trend"] == "bounded", || "membership not bounded".into())?;
    let bounds = res["membership"]["bounds"].as_array().ok_or("no bounds")?;
    let ns: Vec<u64> = bounds.iter().filter_map(|b| b["n"].as_u64()).collect();
    ensure(ns == (2..=6).collect::<Vec<_>>(), || format!("indices {ns:?}"))?;
    let mut worst: f64 = 0.0;
    for b in bounds {
        let rep = &b["report"];
        ensure(rep["violations"].as_array().is_some_and(|v| v.is_empty()), || format!("K_{} above e·p", b["n"]))?;
        worst = worst.max(num(&rep["max_ratio"]));
    }
    ensure(res["negative_control"]["trend"] == "diverging", || "negative control not diverging".into())?;
    let adj = &res["adjoint"];
    ensure(adj["violations"].as_array().is_some_and(|v| v.is_empty()), || "adjoint violations".into())?;
    let e = within(t, Duration::from_secs(180))?;
    Ok(format!(
        "K_2..K_6 bounded, max norm/(e·p) {worst:.3}, control diverging, adjoint max_ratio {:.2e}, {e:.1?}",
        num(&adj["max_ratio"])
    ))
}

fn criterion7(cli: &Cli, first: &[(&str, Vec<u8>)]) -> Check {
    let again = Cli { dir: cli.dir.join("again") };
    std::fs::create_dir_all(&again.dir).map_err(|e| e.to_string())?;
    ensure(first.len() == 6, || format!("only {} of 6 suites produced a first report", first.len()))?;
    let mut n = 0;
    for (tag, bytes) in first {
        let args = suite_args(tag);
        let (_, second) = again.run(tag, &args)?;
        ensure(&second == bytes, || format!("{tag}: reports differ"))?;
        n += 1;
    }
    Ok(format!("{n} reports byte-identical"))
}

fn suite_args(tag: &str) -> Vec<&'static str> {
    match tag {
        "weights" => vec!["check-weights"],
        "stft" => vec!["stft-verify"],
        "lemma2" => vec!["lemma-verify", "--lemma", "2", "--tol", "1e-8"],
        "lemma1" => vec!["lemma-verify", "--lemma", "1"],
        "gamma" => vec!["gamma-certify"],
        _ => vec!["convolutor-check"],
    }
}

fn report(n: usize, r: &Check) -> bool {
    match r {
        Ok(msg) => println!("criterion {n}: PASS {msg}"),
        Err(msg) => println!("criterion {n}: FAIL {msg}"),
    }
    r.is_ok()
}

fn read(dir: &Path, tag: &str) -> Option<Vec<u8>> {
    std::fs::read(dir.join(format!("{tag}.json"))).ok()
}

fn main() {
    // `cargo test -- --list` and filters other than ours
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let tmp = tempfile::tempdir().expect("tempdir");
    let cli = Cli { dir: tmp.path().to_path_buf() };
    let mut ok = true;
    ok &= report(1, &criterion1());
    ok &= report(2, &criterion2());
    ok &= report(3, &criterion3(&cli));
    ok &= report(4, &criterion4(&cli));
    ok &= report(5, &criterion5(&cli));
    ok &= report(6, &criterion6(&cli));
    let extra = ["weights", "convolutor"].map(|tag| cli.run(tag, &suite_args(tag)).map(|(_, b)| b));
    let mut first: Vec<(&str, Vec<u8>)> = Vec::new();
    for tag in ["stft", "lemma2", "lemma1", "gamma"] {
        if let Some(b) = read(&cli.dir, tag) {
            first.push((tag, b));
        }
    }
    for (tag, r) in ["weights", "convolutor"].into_iter().zip(extra) {
        match r {
            Ok(b) => first.push((tag, b)),
            Err(e) => println!("{tag}: {e}"),
        }
    }
    ok &= report(7, &criterion7(&cli, &first));
    if !ok {
        std::process::exit(1);
    }
}
