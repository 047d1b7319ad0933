//! Welch cross-spectral estimation and structure recovery from the support
//! of the inverse spectrum.

mod support;
mod welch;

pub use support::{
    graph_from_scores, invert_spectrum, reconstruct, relative_scores, score_matrix, support_graph, write_scores_csv,
    Aggregate, Ridge, RidgeMode, SupportConfig, ThresholdMode,
};
pub use welch::{average_spectra, coherence, estimate_cross_psd, Window, WelchConfig};

use thiserror::Error;

use crate::dim_sim::DimError;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("segment length {segment} exceeds record length {samples}")]
    SegmentTooLong { segment: usize, samples: usize },
    #[error("spectrum singular or ill-conditioned at {} frequencies: {}", .0.len(), fmt_freqs(.0))]
    Singular(Vec<f64>),
    #[error(transparent)]
    Dim(#[from] DimError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

fn fmt_freqs(w: &[f64]) -> String {
    let shown: Vec<String> = w.iter().take(8).map(|v| format!("{v:.4}")).collect();
    if w.len() > 8 {
        format!("{} ...", shown.join(", "))
    } else {
        shown.join(", ")
    }
}
