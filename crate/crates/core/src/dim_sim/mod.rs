//! The dynamic influence model `y = G(z) y + e`: transfer functions, exact
//! spectra and time-domain simulation.

mod panel;
mod simulate;
mod spectra;
mod system;
mod tf;

pub use panel::TimeSeriesPanel;
pub use simulate::simulate_dim;
pub use spectra::{
    analytic_inverse_psd, analytic_psd, autocorrelation_from_psd, default_grid, grid, lag_covariance,
    SpectralMatrix,
};
pub use system::{check_stability, check_stability_with, stability_diagnosis, DimSystem, NoiseSpec};
pub use tf::{eval_tf, TransferFunction};
pub(crate) use spectra::psd_at;

use thiserror::Error;

/// Tolerance on the grid minimum of `|det(I - G)|`.
pub const STABILITY_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum DimError {
    #[error("invalid transfer function: {0}")]
    InvalidTf(String),
    #[error("denominator vanishes at omega = {0}")]
    SingularEvaluation(f64),
    #[error("invalid noise spec: {0}")]
    InvalidNoise(String),
    #[error("unstable system: {0}")]
    Unstable(String),
    #[error("I - G(e^jw) singular at omega = {0}")]
    SingularAt(f64),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
