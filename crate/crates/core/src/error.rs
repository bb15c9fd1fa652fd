use thiserror::Error;

use crate::flows::TrajectoryRecord;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite sample at index {index}")]
    NonFinite { index: usize },

    #[error("grid mismatch: {left:?} vs {right:?}")]
    GridMismatch {
        left: crate::spectral::Grid,
        right: crate::spectral::Grid,
    },

    #[error("symbol is not Hermitian on the lattice (worst defect {defect:e} at mode {mode}); real output refused")]
    NonHermitianSymbol { mode: i64, defect: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("Neumann series refused: Hilbert-Schmidt estimate {estimate:.4} >= guard {guard:.4}")]
    SeriesDivergent { estimate: f64, guard: f64 },

    #[error("dense operator of size {size} exceeds configured limit {limit}")]
    ResourceLimit { size: usize, limit: usize },

    #[error("resolvent matrix is near singular (condition estimate {condition:e})")]
    NearSingular { condition: f64 },

    #[error("Newton inversion did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("stability guard violated: dt * lipschitz = {product:.3} > {limit:.3}")]
    StabilityGuard { product: f64, limit: f64 },

    #[error("integration aborted at t = {t}: non-finite state")]
    Aborted { t: f64, partial: Box<TrajectoryRecord> },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("time window [{t0}, {t1}] not covered by trajectory [{start}, {end}]")]
    WindowNotCovered { t0: f64, t1: f64, start: f64, end: f64 },

    #[error("current pole: |kappa^2 - varkappa^2| = {gap:e} below required gap {required:e}")]
    PoleProximity { gap: f64, required: f64 },
}

pub(crate) fn check_kappa(name: &'static str, kappa: f64) -> Result<()> {
    if kappa.is_finite() && kappa >= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("must be finite and >= 1, got {kappa}"),
        })
    }
}
