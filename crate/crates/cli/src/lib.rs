//! Command-line orchestration of the certification suites: JSON configs in,
//! versioned JSON reports and CSV traces out.

pub mod config;
pub mod error;
pub mod suites;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use gamma_stft::geometry::directions::DEFAULT_SEED;
use gamma_stft::stft::TimeFrequencyField;

pub use error::{CliError, EXIT_CONFIG, EXIT_FAIL, EXIT_GUARD, EXIT_PASS};
use suites::Outcome;

pub const SCHEMA: &str = "gamma-stft/1";

#[derive(Debug, Parser)]
#[command(name = "gamma-stft", version, about = "Certify STFT and weighted-seminorm estimates for Laplace transformable distributions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON config; every field has a default.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Report path; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// CSV trace (or the stored field, for `report`).
    #[arg(long, global = true)]
    pub csv: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides the suite tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Number of windows in trend ladders.
    #[arg(long, global = true)]
    pub ladder: Option<usize>,
    #[arg(short, long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Conditions (V), integrability, translation and interpolation of a weight system.
    CheckWeights,
    /// Reconstruction and isometry of the STFT on a testbed.
    StftVerify,
    /// Sampled certification of the bounded-family (1) or dual-window (2) estimate.
    LemmaVerify {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        lemma: u8,
    },
    /// Weighted membership of V_ψ f and both continuity bounds.
    GammaCertify,
    /// Convolutor trends of f ∗ φ against an increasing weight system.
    ConvolutorCheck,
    /// Summarize a report; `--csv` exports its stored field.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub command: String,
    pub seed: u64,
    pub config: Value,
    pub passed: bool,
    pub failures: Vec<String>,
    pub results: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<TimeFrequencyField>,
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Read { path: path.to_path_buf(), source })
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| CliError::Write { path: path.to_path_buf(), source })?;
    }
    fs::write(path, bytes).map_err(|source| CliError::Write { path: path.to_path_buf(), source })
}

fn csv_line(cells: &[String]) -> String {
    let quoted: Vec<String> = cells
        .iter()
        .map(|c| if c.contains([',', '"', '\n']) { format!("\"{}\"", c.replace('"', "\"\"")) } else { c.clone() })
        .collect();
    quoted.join(",")
}

/// Loads the config text (`{}` without `--config`) into `T` and its raw echo.
fn load<T: serde::de::DeserializeOwned>(common: &Common) -> Result<(T, Value), CliError> {
    let text = match &common.config {
        Some(p) => read(p)?,
        None => "{}".to_string(),
    };
    let parsed = config::parse::<T>(&text)?;
    let echo = config::parse::<Value>(&text)?;
    Ok((parsed, echo))
}

fn finish<T: Serialize>(name: &str, seed: u64, echo: Value, outcome: Outcome<T>, common: &Common) -> Result<i32, CliError> {
    let results = serde_json::to_value(&outcome.results).map_err(|e| CliError::Config { key: String::new(), message: e.to_string() })?;
    let report = Report {
        schema: SCHEMA.into(),
        command: name.into(),
        seed,
        config: echo,
        passed: outcome.failures.is_empty(),
        failures: outcome.failures.clone(),
        results,
        field: outcome.field,
    };
    let mut bytes = serde_json::to_vec_pretty(&report).expect("report serializes");
    bytes.push(b'\n');
    match &common.out {
        Some(p) => write(p, &bytes)?,
        None => std::io::stdout().write_all(&bytes).map_err(|source| CliError::Write { path: "<stdout>".into(), source })?,
    }
    if let Some(p) = &common.csv {
        let mut text = csv_line(&outcome.trace_header.iter().map(|s| s.to_string()).collect::<Vec<_>>());
        text.push('\n');
        for row in &outcome.trace {
            text.push_str(&csv_line(row));
            text.push('\n');
        }
        write(p, text.as_bytes())?;
    }
    if !common.quiet && common.out.is_some() {
        println!("{name}: {}", if report.passed { "PASS" } else { "FAIL" });
    }
    if report.passed {
        Ok(EXIT_PASS)
    } else {
        let summary = serde_json::json!({ "status": "fail", "command": name, "failures": report.failures });
        eprintln!("{summary}");
        Ok(EXIT_FAIL)
    }
}

fn report_command(input: &Path, common: &Common) -> Result<i32, CliError> {
    let report: Report = config::parse(&read(input)?)?;
    if report.schema != SCHEMA {
        return Err(CliError::Config { key: "schema".into(), message: format!("unsupported schema {}", report.schema) });
    }
    if let Some(p) = &common.csv {
        let field = report
            .field
            .as_ref()
            .ok_or_else(|| CliError::Config { key: "field".into(), message: "report stores no field".into() })?;
        let mut bytes = Vec::new();
        field.write_csv(&mut bytes).expect("writing to memory");
        write(p, &bytes)?;
    }
    if !common.quiet {
        println!(
            "{} ({}): {}{}",
            report.command,
            report.schema,
            if report.passed { "PASS" } else { "FAIL" },
            report.field.as_ref().map_or(String::new(), |f| format!(", field with {} nodes", f.values.len()))
        );
        for f in &report.failures {
            println!("  {f}");
        }
    }
    Ok(EXIT_PASS)
}

fn dispatch(cli: &Cli) -> Result<i32, CliError> {
    let common = &cli.common;
    let seed = common.seed.unwrap_or(DEFAULT_SEED);
    match &cli.command {
        Command::CheckWeights => {
            let (cfg, echo) = load::<config::WeightsConfig>(common)?;
            finish("check-weights", seed, echo, suites::check_weights(&cfg, seed)?, common)
        }
        Command::StftVerify => {
            let (cfg, echo) = load::<config::StftConfig>(common)?;
            finish("stft-verify", seed, echo, suites::stft_verify(&cfg, common.tol)?, common)
        }
        Command::LemmaVerify { lemma: 1 } => {
            let (cfg, echo) = load::<config::Lemma1Cli>(common)?;
            finish("lemma-verify", seed, echo, suites::lemma1(&cfg, seed, common.tol)?, common)
        }
        Command::LemmaVerify { .. } => {
            let (cfg, echo) = load::<config::Lemma2Cli>(common)?;
            finish("lemma-verify", seed, echo, suites::lemma2(&cfg, common.tol)?, common)
        }
        Command::GammaCertify => {
            let (cfg, echo) = load::<config::GammaCli>(common)?;
            finish("gamma-certify", seed, echo, suites::gamma_certify(&cfg, seed, common.tol, common.ladder)?, common)
        }
        Command::ConvolutorCheck => {
            let (cfg, echo) = load::<config::ConvolutorCli>(common)?;
            finish("convolutor-check", seed, echo, suites::convolutor_check(&cfg, common.ladder)?, common)
        }
        Command::Report { input } => report_command(input, common),
    }
}

/// Runs the CLI on `argv` and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            let summary = serde_json::json!({
                "status": "error",
                "kind": e.kind(),
                "key": e.key(),
                "message": e.to_string(),
            });
            eprintln!("{summary}");
            e.exit_code()
        }
    }
}
