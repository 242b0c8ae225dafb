//! Short-time Fourier transform of symbolic test distributions: windows,
//! pairings, the adjoint, reconstruction and the isometry.

mod distribution;
mod grid;
mod ops;
mod poly;
mod smooth;
mod window;

pub use distribution::{Term, TestDistribution};
pub use grid::{GridSpec, TimeFrequencyField};
pub use ops::{
    adjoint_apply, convolve, dual_stft, integrate_against, isometry_gap, l2_norm_sq, pairing, reconstruct, reconstruct_error,
    stft, window_inner, Reconstruction, TAIL_LIMIT,
};
pub use poly::{Monomial, Poly};
pub use smooth::{GaborAtom, ReflectedBump, SchwartzTestFunction, SmoothFn};
pub use window::{profile_derivative, profile_sup, Window, WindowSpec, MAX_ORDER};
