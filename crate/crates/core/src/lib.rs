//! Computable layer of the theory of Laplace transformable distributions:
//! supporting functions of convex bodies, exponential weight systems and
//! their structural conditions, the short-time Fourier transform on a
//! symbolic distribution testbed, and numerical certification of explicit
//! seminorm estimates.

pub mod error;
pub mod geometry;
pub mod linalg;
pub mod quadrature;
pub mod seminorm;
pub mod stft;
pub mod trend;
pub mod weights;

pub use error::{Error, Result};

/// Report schema tag shared by every JSON report.
pub const SCHEMA: &str = "gamma-stft/1";
