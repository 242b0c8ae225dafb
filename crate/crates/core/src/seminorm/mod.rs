//! Seminorms of test functions, distributions and time-frequency fields, and
//! sampled certification of the estimates linking them.

mod lemmas;
mod membership;
mod norms;
mod report;

pub use lemmas::{exp_poly_sup, lemma1_constant, lemma1_suite, lemma2_constant, lemma2_suite, Lemma1Config};
pub use membership::{
    adjoint_bound_suite, adjoint_constant, adjoint_weight, convolutor_suite, convolutor_trends, default_family,
    gamma_membership, tensor_membership_scan, weighted_sup_ladder, AdjointConfig, FieldSource, FnSource, GammaConfig,
    GammaReport, GammaRow, StftSource,
};
pub use norms::{eta_samples, p_seminorm, schwartz_norm, tf_weighted_norm, weighted_cn_norm, BOX_GUARD, MAX_ETA_SAMPLES};
pub use report::{BoundReport, BoundViolation, BOUND_TOL};
