//! Measurements along fields and trajectories: microscopic currents and
//! their conservation residual, local-smoothing norms, exact series
//! identities, and the `κ → ∞` convergence of the `H_κ` flows.

mod currents;
mod identities;
mod kappa;
mod smoothing;

pub use currents::{
    current_j5th, current_j5th_with, current_jkappa, current_jkappa_verbatim, current_jkappa_with,
    microscopic_residual, microscopic_residual_with, POLE_GAP,
};
pub use identities::series_identity_check;
pub use kappa::{kappa_convergence_study, KappaRow, KappaStudy};
pub use smoothing::{center_grid, ls_norm, ls_norm_window, LSReport, WeightFamily, LS_WINDOW};
