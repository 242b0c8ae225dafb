//! Weights, weight systems and checks of the growth conditions they must satisfy.

mod conditions;
mod system;
mod weight;

pub use conditions::{
    ball_integrals, check_l1, check_omega_switched, check_trans_inv, check_v, decade_radii,
    default_l1_radii, default_omega_radii, default_radii, nachbin_member, replay_omega,
    replay_trans_inv, replay_violation, AnySystem, Condition, ConditionReport, ConditionRow,
    OmegaChoice, Verdict, Violation, Witness, CAUCHY_INCREMENT, MIN_SAMPLES, RATIO_THRESHOLD,
};
pub use system::{
    exp_weight_system, DecreasingSystemSpec, DecreasingWeightSystem, IncreasingSystemSpec,
    IncreasingWeightSystem, SystemOrigin, MONOTONE_TOL,
};
pub use weight::{FlatCache, Weight};

/// `θ ∈ {0.01, 0.02, …, 0.5}`.
pub fn default_theta_grid() -> Vec<f64> {
    (1..=50).map(|i| i as f64 / 100.0).collect()
}
