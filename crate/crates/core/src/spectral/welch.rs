use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::SpectralError;
use crate::dim_sim::{SpectralMatrix, TimeSeriesPanel};
use crate::linalg::{CMatrix, RMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    #[default]
    Hann,
    Hamming,
    Rectangular,
}

impl Window {
    /// Periodic window of length `len` (the DFT-even form).
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        let n = len as f64;
        (0..len)
            .map(|k| {
                let x = 2.0 * PI * k as f64 / n;
                match self {
                    Window::Hann => 0.5 - 0.5 * x.cos(),
                    Window::Hamming => 0.54 - 0.46 * x.cos(),
                    Window::Rectangular => 1.0,
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WelchConfig {
    pub segment_length: usize,
    pub overlap: f64,
    pub window: Window,
    pub nfft: usize,
}

impl Default for WelchConfig {
    fn default() -> Self {
        Self { segment_length: 512, overlap: 0.5, window: Window::Hann, nfft: 512 }
    }
}

impl WelchConfig {
    pub fn validate(&self) -> Result<(), SpectralError> {
        if self.segment_length == 0 {
            return Err(SpectralError::Config("segment_length must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.overlap) {
            return Err(SpectralError::Config(format!("overlap {} outside [0, 1)", self.overlap)));
        }
        if self.nfft < self.segment_length {
            return Err(SpectralError::Config("nfft must be at least segment_length".into()));
        }
        Ok(())
    }

    pub fn step(&self) -> usize {
        ((self.segment_length as f64 * (1.0 - self.overlap)).round() as usize).max(1)
    }

    /// `2 pi k / nfft`, `k = 0..=nfft/2`.
    pub fn freqs(&self) -> Vec<f64> {
        (0..=self.nfft / 2).map(|k| 2.0 * PI * k as f64 / self.nfft as f64).collect()
    }
}

/// Averaged modified periodograms,
/// `S_ij(w) = sum_seg X_i(w) conj(X_j(w)) / (U * nseg)` with `U = sum w[t]^2`
/// and `X_i(w) = sum_t w[t] x_i[t] e^{-jwt}` over each segment.
///
/// Two-sided normalization: unit-variance white noise estimates to 1.
pub fn estimate_cross_psd(panel: &TimeSeriesPanel, cfg: &WelchConfig) -> Result<SpectralMatrix, SpectralError> {
    cfg.validate()?;
    let t = panel.len();
    let len = cfg.segment_length;
    if len > t {
        return Err(SpectralError::SegmentTooLong { segment: len, samples: t });
    }
    let n = panel.n_channels();
    let step = cfg.step();
    let win = cfg.window.coefficients(len);
    let u: f64 = win.iter().map(|w| w * w).sum();
    let nf = cfg.nfft / 2 + 1;
    let fft = FftPlanner::<f64>::new().plan_fft_forward(cfg.nfft);

    let mut acc = vec![CMatrix::zeros(n, n); nf];
    let mut spectra = vec![vec![Complex64::new(0.0, 0.0); cfg.nfft]; n];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let mut nseg = 0usize;
    let mut start = 0;
    while start + len <= t {
        for (i, buf) in spectra.iter_mut().enumerate() {
            let x = &panel.channel(i)[start..start + len];
            for (k, b) in buf.iter_mut().enumerate() {
                *b = if k < len { Complex64::new(win[k] * x[k], 0.0) } else { Complex64::new(0.0, 0.0) };
            }
            fft.process_with_scratch(buf, &mut scratch);
        }
        for (f, m) in acc.iter_mut().enumerate() {
            for i in 0..n {
                let xi = spectra[i][f];
                for j in i..n {
                    m[(i, j)] += xi * spectra[j][f].conj();
                }
            }
        }
        nseg += 1;
        start += step;
    }
    let scale = 1.0 / (u * nseg as f64);
    for m in &mut acc {
        for i in 0..n {
            m[(i, i)] = Complex64::new(m[(i, i)].re * scale, 0.0);
            for j in i + 1..n {
                m[(i, j)] *= scale;
                m[(j, i)] = m[(i, j)].conj();
            }
        }
    }
    Ok(SpectralMatrix::new(cfg.freqs(), acc)?)
}

/// Entrywise mean of per-trial estimates, in the order given.
pub fn average_spectra(list: &[SpectralMatrix]) -> Result<SpectralMatrix, SpectralError> {
    Ok(SpectralMatrix::average(list)?)
}

/// Magnitude-squared coherence `|S_ij|^2 / (S_ii S_jj)` per frequency.
pub fn coherence(s: &SpectralMatrix) -> Vec<RMatrix> {
    s.values
        .iter()
        .map(|m| {
            let n = m.nrows();
            RMatrix::from_fn(n, n, |i, j| {
                let d = m[(i, i)].re * m[(j, j)].re;
                if d > 0.0 {
                    m[(i, j)].norm_sqr() / d
                } else {
                    0.0
                }
            })
        })
        .collect()
}
