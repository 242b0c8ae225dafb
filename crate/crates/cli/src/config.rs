//! Per-command JSON configs. Every field has a default, so `{}` is a valid
//! config and reproduces the standard certification runs.

use serde::de::DeserializeOwned;
use serde::Deserialize;

use gamma_stft::geometry::{ConvexBody, OpenConvexRegion};
use gamma_stft::quadrature::QuadSpec;
use gamma_stft::seminorm::{default_family, AdjointConfig, GammaConfig};
use gamma_stft::stft::{GridSpec, SchwartzTestFunction, TestDistribution, Window};
use gamma_stft::trend::Trend;
use gamma_stft::weights::{DecreasingSystemSpec, IncreasingSystemSpec, Weight};

use crate::error::CliError;

/// Deserialize with the JSON path of the first offending key.
pub fn parse<T: DeserializeOwned>(text: &str) -> Result<T, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let key = e.path().to_string();
        CliError::Config { key, message: e.into_inner().to_string() }
    })
}

fn half_line() -> OpenConvexRegion {
    OpenConvexRegion::orthant(&[0.5]).expect("valid orthant")
}

fn unit_window() -> Window {
    Window::new(1.0, 1).expect("valid window")
}

fn exp_half() -> TestDistribution {
    TestDistribution::exp_orthant(vec![0.5], vec![0.0]).expect("valid term")
}

fn poly_inv2() -> Weight {
    Weight::poly_inv(2.0)
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NachbinSpec {
    pub v: Weight,
    pub system: DecreasingSystemSpec,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsConfig {
    #[serde(default = "default_system")]
    pub system: IncreasingSystemSpec,
    #[serde(default = "trans_inv_samples")]
    pub trans_inv_samples: usize,
    /// Largest `P` in the interpolation check; defaults to the last index.
    #[serde(default)]
    pub p_max: Option<usize>,
    #[serde(default)]
    pub quad: QuadSpec,
    #[serde(default)]
    pub nachbin: Option<NachbinSpec>,
}

fn default_system() -> IncreasingSystemSpec {
    IncreasingSystemSpec::Exponential { region: OpenConvexRegion::orthant(&[0.0]).expect("valid"), n_max: 8 }
}

fn trans_inv_samples() -> usize {
    2000
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedInput {
    pub name: String,
    pub f: TestDistribution,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StftConfig {
    #[serde(default = "testbed")]
    pub inputs: Vec<NamedInput>,
    #[serde(default = "unit_window")]
    pub window: Window,
    /// Synthesis window; the analysis window when absent.
    #[serde(default)]
    pub synthesis: Option<Window>,
    #[serde(default = "test_bump")]
    pub test_function: SchwartzTestFunction,
    #[serde(default = "default_grid")]
    pub grid: GridSpec,
    #[serde(default)]
    pub quad: QuadSpec,
    #[serde(default = "reconstruction_tol")]
    pub reconstruction_tol: f64,
    #[serde(default = "isometry_tol")]
    pub isometry_tol: f64,
    /// Input whose STFT is stored in the report.
    #[serde(default)]
    pub field_input: Option<usize>,
}

pub fn testbed() -> Vec<NamedInput> {
    let named = |name: &str, f: gamma_stft::Result<TestDistribution>| NamedInput { name: name.into(), f: f.expect("valid") };
    vec![
        named("delta", TestDistribution::delta(vec![0.0])),
        named("delta_prime", TestDistribution::delta_deriv(vec![1], vec![0.0])),
        named("half_line_exp", Ok(exp_half())),
        named("gaussian", TestDistribution::gaussian(1.0, vec![0.0])),
    ]
}

pub fn test_bump() -> SchwartzTestFunction {
    SchwartzTestFunction::bump(Window::new(1.0, 1).and_then(|w| w.centered_at(vec![0.25])).expect("valid"))
}

fn default_grid() -> GridSpec {
    GridSpec::DEFAULT_1D
}

fn reconstruction_tol() -> f64 {
    1e-3
}

fn isometry_tol() -> f64 {
    1e-2
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lemma1Cli {
    #[serde(default = "one")]
    pub window_radius: f64,
    #[serde(default = "lemma1_bodies")]
    pub bodies: Vec<ConvexBody>,
    #[serde(default = "poly_inv2")]
    pub v: Weight,
    #[serde(default = "all_orders")]
    pub orders: Vec<(u32, u32)>,
    #[serde(default = "one")]
    pub epsilon: f64,
    /// Overrides the per-dimension default grid.
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub eta_samples: Option<usize>,
    #[serde(default)]
    pub t_points: Option<usize>,
}

fn lemma1_bodies() -> Vec<ConvexBody> {
    vec![
        ConvexBody::point(vec![0.5]).expect("valid"),
        ConvexBody::interval(-1.0, 2.0).expect("valid"),
        ConvexBody::cuboid(&[0.0, 0.0], &[1.0, 1.0]).expect("valid"),
    ]
}

pub fn all_orders() -> Vec<(u32, u32)> {
    (0..=2).flat_map(|k| (0..=2).map(move |n| (k, n))).collect()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lemma2Cli {
    #[serde(default = "unit_window")]
    pub window: Window,
    #[serde(default = "gauss")]
    pub test_function: SchwartzTestFunction,
    #[serde(default = "etas")]
    pub etas: Vec<Vec<f64>>,
    #[serde(default = "all_orders")]
    pub orders: Vec<(u32, u32)>,
    #[serde(default = "lemma2_grid")]
    pub grid: GridSpec,
    #[serde(default)]
    pub quad: QuadSpec,
}

fn gauss() -> SchwartzTestFunction {
    SchwartzTestFunction::gaussian(1.0, vec![0.0]).expect("valid")
}

fn etas() -> Vec<Vec<f64>> {
    vec![vec![0.0], vec![1.0], vec![-1.0]]
}

pub fn lemma2_grid() -> GridSpec {
    GridSpec::symmetric(1, 4.0, 8.0, 100, 100).expect("valid")
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdjointCli {
    /// `F = V_ψ f` for this distribution.
    #[serde(default = "delta0")]
    pub source: TestDistribution,
    #[serde(default = "line")]
    pub gamma: OpenConvexRegion,
    #[serde(default = "one_usize")]
    pub k_index: usize,
    #[serde(default = "half")]
    pub epsilon: f64,
    #[serde(default = "default_grid")]
    pub grid: GridSpec,
    #[serde(default = "family")]
    pub family: Vec<SchwartzTestFunction>,
    #[serde(default)]
    pub v0: Option<Weight>,
    #[serde(default)]
    pub config: AdjointConfig,
}

impl Default for AdjointCli {
    fn default() -> Self {
        parse("{}").expect("defaults parse")
    }
}

fn delta0() -> TestDistribution {
    TestDistribution::delta(vec![0.0]).expect("valid")
}

fn line() -> OpenConvexRegion {
    OpenConvexRegion::full_space(1).expect("valid")
}

fn one_usize() -> usize {
    1
}

fn half() -> f64 {
    0.5
}

fn family() -> Vec<SchwartzTestFunction> {
    default_family(1).expect("valid")
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaCli {
    #[serde(default = "exp_half")]
    pub f: TestDistribution,
    #[serde(default = "half_line")]
    pub gamma: OpenConvexRegion,
    #[serde(default = "unit_window")]
    pub window: Window,
    #[serde(default = "poly_inv2")]
    pub v: Weight,
    #[serde(default = "membership")]
    pub membership: GammaConfig,
    /// A body outside Γ whose weighted sups must diverge.
    #[serde(default = "negative_control")]
    pub negative_control: Option<ConvexBody>,
    #[serde(default = "adjoint")]
    pub adjoint: Option<AdjointCli>,
}

fn membership() -> GammaConfig {
    GammaConfig::default_1d(6).expect("valid")
}

fn negative_control() -> Option<ConvexBody> {
    Some(ConvexBody::interval(0.1, 0.4).expect("valid"))
}

fn adjoint() -> Option<AdjointCli> {
    Some(AdjointCli::default())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvolutorCli {
    #[serde(default = "exp_half")]
    pub f: TestDistribution,
    #[serde(default = "phis")]
    pub phis: Vec<Window>,
    #[serde(default = "conv_system")]
    pub system: IncreasingSystemSpec,
    /// Smallest window; only its `x` axes matter.
    #[serde(default = "conv_grid")]
    pub grid: GridSpec,
    #[serde(default = "three")]
    pub windows: usize,
    #[serde(default)]
    pub quad: QuadSpec,
    /// Skip the check that the system's bodies lie inside Γ(f).
    #[serde(default)]
    pub unchecked: bool,
    #[serde(default = "bounded")]
    pub expect: Trend,
}

fn phis() -> Vec<Window> {
    vec![unit_window(), Window::new(0.5, 1).and_then(|w| w.centered_at(vec![0.3])).expect("valid")]
}

fn conv_system() -> IncreasingSystemSpec {
    IncreasingSystemSpec::Exponential { region: half_line(), n_max: 6 }
}

fn conv_grid() -> GridSpec {
    GridSpec::symmetric(1, 2.0, 1.0, 41, 2).expect("valid")
}

fn three() -> usize {
    3
}

fn bounded() -> Trend {
    Trend::Bounded
}
