//! Randomized state-space corruption of individual data streams and the
//! exact second-order statistics of the corrupted streams.
//!
//! Every corruption of a scalar channel `y` has the form
//!
//! ```text
//! x[t+1] = A[t] x[t] + B[t] y[t] + w[t]
//! u[t]   = C[t] x[t] + D[t] y[t] + v[t]
//! ```
//!
//! with `(A, B, C, D)` drawn IID from a finite mixture. The corrupted stream
//! is then `u = h * y + Δu` where `h` is the impulse response of the mean
//! system and `Δu` is uncorrelated with `y`, so
//! `Phi_uu = H Phi_yy H^* + diag(theta)` and `Phi_uy = H Phi_yy`.

mod model;
mod simulate;
mod stats;

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

pub use model::{
    check_gen_lyapunov, lower_to_state_space, mean_tf, mean_tf_of, CorruptionModel, Outcome, RandomStateSpace,
    RawOutcome, RawStateSpace,
};
pub use simulate::{apply_corruption, apply_state_space};
pub use stats::{
    channel_autocorr, delay_delta_u0, delta_u_autocorr, delta_x_autocorr, moments, packet_delta_autocorr,
    packet_mean_autocorr, packet_theta, packet_theta_lag, r_at, theta_general, theta_spectrum, truncate_autocorr,
    AutocorrOptions, Moments, TAIL_LIMIT,
};

use crate::dim_sim::{analytic_psd, DimError, DimSystem, SpectralMatrix, TransferFunction};
use crate::graphs::NodeSet;

#[derive(Debug, Error)]
pub enum CorruptionError {
    #[error("invalid corruption model: {0}")]
    Invalid(String),
    #[error("E[A kron A] has spectral radius {0:.6} >= 1; no stationary solution")]
    NotContractive(f64),
    #[error("mean system unstable (spectral radius {0:.6})")]
    UnstableMean(f64),
    #[error("autocorrelation: {0}")]
    Truncation(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error(transparent)]
    Dim(#[from] DimError),
}

/// Which node carries which corruption; unlisted nodes are clean.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CorruptionAssignment {
    n: usize,
    models: BTreeMap<usize, CorruptionModel>,
}

impl CorruptionAssignment {
    pub fn new(n: usize) -> Self {
        Self { n, models: BTreeMap::new() }
    }

    pub fn insert(&mut self, node: usize, m: CorruptionModel) -> Result<(), CorruptionError> {
        if node >= self.n {
            return Err(CorruptionError::Dimension(format!("node {node} outside {} nodes", self.n)));
        }
        if self.models.contains_key(&node) {
            return Err(CorruptionError::Invalid(format!("node {node} already has a corruption")));
        }
        m.validate()?;
        self.models.insert(node, m);
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn get(&self, node: usize) -> Option<&CorruptionModel> {
        self.models.get(&node)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &CorruptionModel)> + '_ {
        self.models.iter().map(|(&k, v)| (k, v))
    }

    /// The perturbed set `Z`.
    pub fn perturbed_set(&self) -> NodeSet {
        self.models.keys().copied().collect()
    }
}

/// Per-node `theta` sampled on the grid of the clean spectrum.
pub type Thetas = BTreeMap<usize, Vec<f64>>;

#[derive(Debug, Clone, PartialEq)]
pub struct CorruptedSpectra {
    pub uu: SpectralMatrix,
    pub uy: SpectralMatrix,
}

/// `Phi_uu = H Phi_yy H^* + diag(theta)` and `Phi_uy = H Phi_yy`, with
/// `H_p = 1` and `theta_p = 0` on clean nodes.
pub fn corrupted_psd(
    clean: &SpectralMatrix,
    assignment: &CorruptionAssignment,
    thetas: &Thetas,
) -> Result<CorruptedSpectra, CorruptionError> {
    let n = clean.n();
    if assignment.n() != n {
        return Err(CorruptionError::Dimension(format!("assignment for {} nodes, spectrum has {n}", assignment.n())));
    }
    let hs: Vec<(usize, TransferFunction)> =
        assignment.iter().map(|(i, m)| Ok((i, mean_tf(m)?))).collect::<Result<_, CorruptionError>>()?;
    for (i, _) in &hs {
        match thetas.get(i) {
            Some(t) if t.len() == clean.len() => {}
            _ => return Err(CorruptionError::Dimension(format!("theta for node {i} missing or off-grid"))),
        }
    }
    let mut uu = Vec::with_capacity(clean.len());
    let mut uy = Vec::with_capacity(clean.len());
    for (k, (&w, phi)) in clean.freqs.iter().zip(&clean.values).enumerate() {
        let mut h = vec![Complex64::new(1.0, 0.0); n];
        for (i, tf) in &hs {
            h[*i] = tf.eval(w)?;
        }
        let hy = crate::linalg::CMatrix::from_fn(n, n, |a, b| h[a] * phi[(a, b)]);
        let mut m = crate::linalg::CMatrix::from_fn(n, n, |a, b| hy[(a, b)] * h[b].conj());
        for (i, _) in &hs {
            m[(*i, *i)] += thetas[i][k];
        }
        uu.push(m);
        uy.push(hy);
    }
    Ok(CorruptedSpectra {
        uu: SpectralMatrix::new(clean.freqs.clone(), uu)?,
        uy: SpectralMatrix::new(clean.freqs.clone(), uy)?,
    })
}

/// Exact corrupted spectra of a network: clean `Phi_yy`, per-node `theta`
/// from the clean autocorrelations, then [`corrupted_psd`].
pub fn analytic_corruption(
    sys: &DimSystem,
    assignment: &CorruptionAssignment,
    freqs: &[f64],
    opts: AutocorrOptions,
) -> Result<(CorruptedSpectra, Thetas), CorruptionError> {
    let clean = analytic_psd(sys, freqs)?;
    let mut thetas = Thetas::new();
    for (i, m) in assignment.iter() {
        let r = channel_autocorr(sys, i, opts)?;
        thetas.insert(i, theta_spectrum(m, &r, freqs)?);
    }
    Ok((corrupted_psd(&clean, assignment, &thetas)?, thetas))
}

#[derive(Debug, Clone, Serialize)]
pub struct ChannelSpectra {
    pub node: usize,
    pub kind: &'static str,
    pub h_re: Vec<f64>,
    pub h_im: Vec<f64>,
    pub theta: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CorruptionSpectraExport {
    pub freqs: Vec<f64>,
    pub channels: Vec<ChannelSpectra>,
}

/// `H` and `theta` of every corrupted node on `freqs`, ready for JSON.
pub fn export_spectra(
    assignment: &CorruptionAssignment,
    freqs: &[f64],
    thetas: &Thetas,
) -> Result<CorruptionSpectraExport, CorruptionError> {
    let mut channels = Vec::new();
    for (i, m) in assignment.iter() {
        let h = mean_tf(m)?;
        let vals: Vec<Complex64> = freqs.iter().map(|&w| h.eval(w)).collect::<Result<_, _>>()?;
        channels.push(ChannelSpectra {
            node: i,
            kind: m.kind(),
            h_re: vals.iter().map(|z| z.re).collect(),
            h_im: vals.iter().map(|z| z.im).collect(),
            theta: thetas
                .get(&i)
                .cloned()
                .ok_or_else(|| CorruptionError::Dimension(format!("theta for node {i} missing")))?,
        });
    }
    Ok(CorruptionSpectraExport { freqs: freqs.to_vec(), channels })
}
