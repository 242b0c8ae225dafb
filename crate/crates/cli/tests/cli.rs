use std::path::Path;
use std::process::{Command, Output};

use gamma_stft::stft::{GridSpec, TestDistribution};
use serde_json::{json, Value};

fn gamma_stft(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gamma-stft")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, v: &Value) -> String {
    let p = dir.join(name);
    std::fs::write(&p, v.to_string()).unwrap();
    p.to_str().unwrap().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn check_weights_passes_and_prints_the_report() {
    let o = gamma_stft(&["check-weights"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["schema"], "gamma-stft/1");
    assert_eq!(r["command"], "check-weights");
    assert_eq!(r["passed"], true);
    assert_eq!(r["config"], json!({}));
    for c in ["v", "l1"] {
        assert!(["certified", "numerically-supported"].contains(&r["results"][c]["verdict"].as_str().unwrap()), "{c}");
    }
    for c in ["trans_inv", "omega"] {
        assert_eq!(r["results"][c]["verdict"], "certified", "{c}");
    }
}

#[test]
fn failed_expectation_exits_one_with_a_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &json!({ "expect": "diverging" }));
    let out = dir.path().join("r.json");
    let o = gamma_stft(&["convolutor-check", "--config", &cfg, "--out", out.to_str().unwrap(), "-q"]);
    assert_eq!(o.status.code(), Some(1));
    let summary: Value = serde_json::from_str(stderr(&o).trim()).unwrap();
    assert_eq!(summary["status"], "fail");
    let r: Value = serde_json::from_slice(&std::fs::read(out).unwrap()).unwrap();
    assert_eq!(r["passed"], false);
    assert_eq!(r["config"]["expect"], "diverging");
}

#[test]
fn malformed_configs_exit_two_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("check-weights", json!({ "trans_inv_samples": "many" }), "trans_inv_samples"),
        ("stft-verify", json!({ "inputs": [{ "name": "a", "f": { "nope": 1 } }] }), "inputs[0].f"),
        ("gamma-certify", json!({ "membership": { "windows": -1 } }), "membership.windows"),
    ];
    for (i, (cmd, v, key)) in cases.iter().enumerate() {
        let cfg = write_config(dir.path(), &format!("{i}.json"), v);
        let o = gamma_stft(&[cmd, "--config", &cfg]);
        assert_eq!(o.status.code(), Some(2), "{cmd}: {}", stderr(&o));
        let e: Value = serde_json::from_str(stderr(&o).trim()).unwrap();
        assert!(e["key"].as_str().unwrap().starts_with(key), "{cmd}: {}", e["key"]);
    }
    let bad_json = dir.path().join("broken.json");
    std::fs::write(&bad_json, "{ \"trans_inv_samples\": ").unwrap();
    assert_eq!(gamma_stft(&["check-weights", "--config", bad_json.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(gamma_stft(&["check-weights", "--config", "/nonexistent/x.json"]).status.code(), Some(2));
    assert_eq!(gamma_stft(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(gamma_stft(&["lemma-verify", "--lemma", "3"]).status.code(), Some(2));
    // semantic rejection of a parsed value
    let few = write_config(dir.path(), "few.json", &json!({ "trans_inv_samples": 10 }));
    assert_eq!(gamma_stft(&["check-weights", "--config", &few]).status.code(), Some(2));
}

#[test]
fn truncated_grid_trips_the_guard() {
    let dir = tempfile::tempdir().unwrap();
    let grid = GridSpec::symmetric(1, 0.3, 8.0, 7, 17).unwrap();
    let cfg = json!({
        "inputs": [{ "name": "delta", "f": TestDistribution::delta(vec![0.0]).unwrap() }],
        "grid": grid,
    });
    let cfg = write_config(dir.path(), "g.json", &cfg);
    let o = gamma_stft(&["stft-verify", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let e: Value = serde_json::from_str(stderr(&o).trim()).unwrap();
    assert_eq!(e["status"], "error");
}

#[test]
fn report_exports_one_csv_row_per_node() {
    let dir = tempfile::tempdir().unwrap();
    let grid = GridSpec::symmetric(1, 2.5, 12.0, 21, 49).unwrap();
    let cfg = json!({
        "inputs": [{ "name": "gauss", "f": TestDistribution::gaussian(1.0, vec![0.0]).unwrap() }],
        "grid": grid,
    });
    let cfg = write_config(dir.path(), "s.json", &cfg);
    let out = dir.path().join("s.report.json");
    let trace = dir.path().join("trace.csv");
    let o = gamma_stft(&["stft-verify", "--config", &cfg, "--out", out.to_str().unwrap(), "--csv", trace.to_str().unwrap(), "-q"]);
    assert!(matches!(o.status.code(), Some(0 | 1)), "{}", stderr(&o));
    assert_eq!(std::fs::read_to_string(&trace).unwrap().lines().count(), 2);

    let heat = dir.path().join("heatmap.csv");
    let o = gamma_stft(&["report", "--in", out.to_str().unwrap(), "--csv", heat.to_str().unwrap(), "-q"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&heat).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x1,xi1,re,im,abs"));
    assert_eq!(lines.count(), grid.len());

    // a report without a stored field, and a foreign schema
    let plain = dir.path().join("w.json");
    assert_eq!(gamma_stft(&["check-weights", "--out", plain.to_str().unwrap(), "-q"]).status.code(), Some(0));
    let o = gamma_stft(&["report", "--in", plain.to_str().unwrap(), "--csv", heat.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let mut r: Value = serde_json::from_slice(&std::fs::read(&plain).unwrap()).unwrap();
    r["schema"] = json!("something-else/9");
    std::fs::write(&plain, r.to_string()).unwrap();
    assert_eq!(gamma_stft(&["report", "--in", plain.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn reports_are_byte_identical_for_a_fixed_seed() {
    let dir = tempfile::tempdir().unwrap();
    for cmd in ["check-weights", "convolutor-check"] {
        let runs: Vec<Vec<u8>> = (0..2)
            .map(|i| {
                let out = dir.path().join(format!("{cmd}{i}.json"));
                let o = gamma_stft(&[cmd, "--seed", "42", "--out", out.to_str().unwrap(), "-q"]);
                assert_eq!(o.status.code(), Some(0));
                std::fs::read(out).unwrap()
            })
            .collect();
        assert_eq!(runs[0], runs[1], "{cmd}");
        let r: Value = serde_json::from_slice(&runs[0]).unwrap();
        assert_eq!(r["seed"], 42);
    }
}

#[test]
fn run_reports_help_and_version_as_success() {
    assert_eq!(gamma_stft_cli::run(["gamma-stft", "--help"]), gamma_stft_cli::EXIT_PASS);
    assert_eq!(gamma_stft_cli::run(["gamma-stft", "--version"]), gamma_stft_cli::EXIT_PASS);
    assert_eq!(gamma_stft_cli::run(["gamma-stft"]), gamma_stft_cli::EXIT_CONFIG);
}
