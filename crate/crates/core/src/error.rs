use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("simplex iteration limit reached")]
    IterationLimit,

    #[error("exhaustion index too small: N = {index}, smallest admissible is {minimum}")]
    ExhaustionIndexTooSmall { index: usize, minimum: usize },

    #[error("quadrature did not converge: estimate {estimate:e}, error {error:e}")]
    QuadratureNonConvergence { estimate: f64, error: f64 },

    #[error("grid too small: sampled tail fraction {tail_fraction:e} exceeds {limit:e}")]
    GridTooSmall { tail_fraction: f64, limit: f64 },

    #[error("sup-norm box guard failed: boundary/interior ratio {ratio:e} at half-width {half_width}")]
    BoxGuard { ratio: f64, half_width: f64 },

    #[error("seminorm undefined outside Γ: {0}")]
    OutsideGamma(String),

    #[error("ε too large: fattened body escapes Γ")]
    EpsilonTooLarge,

    #[error("synthesis window degenerate: (γ, ψ) = {0:e}")]
    DegenerateSynthesisWindow(f64),

    #[error("weight is not in the Nachbin family: {0}")]
    NotNachbin(String),

    #[error("distribution term is not square integrable: {0}")]
    NotSquareIntegrable(String),
}

impl Error {
    /// Failures of a numerical guard (quadrature, grid extent, sup-norm box)
    /// rather than of the input.
    pub fn is_numerical_guard(&self) -> bool {
        matches!(
            self,
            Error::QuadratureNonConvergence { .. }
                | Error::GridTooSmall { .. }
                | Error::BoxGuard { .. }
                | Error::IterationLimit
        )
    }
}
