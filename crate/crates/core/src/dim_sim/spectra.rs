use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::{stability_diagnosis, DimError, DimSystem, STABILITY_TOL};
use crate::linalg::{hermitian_eigenvalues, CMatrix, RMatrix};

/// Default analytic grid size on `[0, pi]`.
pub const DEFAULT_GRID_POINTS: usize = 256;

/// `n` uniformly spaced angles from 0 to pi inclusive.
pub fn grid(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|k| PI * k as f64 / (n - 1) as f64).collect(),
    }
}

pub fn default_grid() -> Vec<f64> {
    grid(DEFAULT_GRID_POINTS)
}

/// An `n x n` complex matrix per frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMatrix {
    pub freqs: Vec<f64>,
    pub values: Vec<CMatrix>,
}

#[derive(Serialize, Deserialize)]
struct SpectralJson {
    n: usize,
    freqs: Vec<f64>,
    /// `re[k][i][j]`
    re: Vec<Vec<Vec<f64>>>,
    im: Vec<Vec<Vec<f64>>>,
}

impl SpectralMatrix {
    pub fn new(freqs: Vec<f64>, values: Vec<CMatrix>) -> Result<Self, DimError> {
        if freqs.len() != values.len() {
            return Err(DimError::Dimension(format!(
                "{} frequencies vs {} matrices",
                freqs.len(),
                values.len()
            )));
        }
        if let Some(first) = values.first() {
            let n = first.nrows();
            if values.iter().any(|m| m.nrows() != n || m.ncols() != n) {
                return Err(DimError::Dimension("matrices must be square and equally sized".into()));
            }
        }
        Ok(Self { freqs, values })
    }

    pub fn n(&self) -> usize {
        self.values.first().map_or(0, |m| m.nrows())
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    pub fn entry(&self, i: usize, j: usize) -> Vec<Complex64> {
        self.values.iter().map(|m| m[(i, j)]).collect()
    }

    pub fn map<F: FnMut(f64, &CMatrix) -> CMatrix>(&self, mut f: F) -> Self {
        Self {
            freqs: self.freqs.clone(),
            values: self.freqs.iter().zip(&self.values).map(|(&w, m)| f(w, m)).collect(),
        }
    }

    /// Largest deviation from Hermitian symmetry over the grid.
    pub fn hermitian_defect(&self) -> f64 {
        self.values
            .iter()
            .map(|m| (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max))
            .fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.values
            .iter()
            .filter_map(|m| hermitian_eigenvalues(m).first().copied())
            .fold(f64::INFINITY, f64::min)
    }

    /// Entrywise mean of several spectra on the same grid, in the given order.
    pub fn average(list: &[SpectralMatrix]) -> Result<SpectralMatrix, DimError> {
        let first = list.first().ok_or_else(|| DimError::Invalid("nothing to average".into()))?;
        let mut acc = first.values.clone();
        for s in &list[1..] {
            if s.freqs != first.freqs || s.n() != first.n() {
                return Err(DimError::Dimension("spectra on different grids".into()));
            }
            for (a, b) in acc.iter_mut().zip(&s.values) {
                *a += b;
            }
        }
        let k = Complex64::new(1.0 / list.len() as f64, 0.0);
        for a in &mut acc {
            *a *= k;
        }
        Ok(SpectralMatrix { freqs: first.freqs.clone(), values: acc })
    }

    pub fn to_json(&self) -> Result<String, DimError> {
        let part = |f: fn(&Complex64) -> f64| -> Vec<Vec<Vec<f64>>> {
            self.values
                .iter()
                .map(|m| (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect()).collect())
                .collect()
        };
        let j = SpectralJson { n: self.n(), freqs: self.freqs.clone(), re: part(|z| z.re), im: part(|z| z.im) };
        Ok(serde_json::to_string_pretty(&j)?)
    }

    pub fn from_json(text: &str) -> Result<Self, DimError> {
        let j: SpectralJson = serde_json::from_str(text)?;
        if j.re.len() != j.freqs.len() || j.im.len() != j.freqs.len() {
            return Err(DimError::Dimension("re/im length differs from freqs".into()));
        }
        let mut values = Vec::with_capacity(j.freqs.len());
        for (re, im) in j.re.iter().zip(&j.im) {
            if re.len() != j.n || im.len() != j.n || re.iter().chain(im).any(|r| r.len() != j.n) {
                return Err(DimError::Dimension(format!("expected {0}x{0} matrices", j.n)));
            }
            values.push(CMatrix::from_fn(j.n, j.n, |a, b| Complex64::new(re[a][b], im[a][b])));
        }
        Self::new(j.freqs, values)
    }
}

/// `Phi_yy = (I - G)^-1 Phi_e (I - G)^-H` on `freqs`.
pub fn analytic_psd(sys: &DimSystem, freqs: &[f64]) -> Result<SpectralMatrix, DimError> {
    stability_diagnosis(sys, &[], STABILITY_TOL)?;
    let values = freqs
        .iter()
        .map(|&w| psd_at(sys, w))
        .collect::<Result<Vec<_>, _>>()?;
    SpectralMatrix::new(freqs.to_vec(), values)
}

pub(crate) fn psd_at(sys: &DimSystem, w: f64) -> Result<CMatrix, DimError> {
    let inv = sys.return_difference(w)?.try_inverse().ok_or(DimError::SingularAt(w))?;
    let pe = sys.noise_psd(w)?;
    let mut scaled = inv.clone();
    for (j, &p) in pe.iter().enumerate() {
        scaled.column_mut(j).scale_mut(p);
    }
    let m = &scaled * inv.adjoint();
    Ok(crate::linalg::hermitian_part(&m))
}

/// `(I - G)^H Phi_e^-1 (I - G)`, evaluated without any matrix inversion.
pub fn analytic_inverse_psd(sys: &DimSystem, freqs: &[f64]) -> Result<SpectralMatrix, DimError> {
    let values = freqs
        .iter()
        .map(|&w| {
            let d = sys.return_difference(w)?;
            let pe = sys.noise_psd(w)?;
            if let Some(i) = pe.iter().position(|&p| p <= 0.0) {
                return Err(DimError::InvalidNoise(format!("zero noise spectrum on node {i} at omega = {w}")));
            }
            let mut scaled = d.clone();
            for (i, &p) in pe.iter().enumerate() {
                scaled.row_mut(i).scale_mut(1.0 / p);
            }
            Ok(d.adjoint() * scaled)
        })
        .collect::<Result<Vec<_>, _>>()?;
    SpectralMatrix::new(freqs.to_vec(), values)
}

/// Autocorrelation `R[k] = (1/2pi) int phi(w) e^{jwk} dw`, k = 0..=max_lag, for a
/// real even scalar spectrum sampled on an `m`-point full circle.
pub fn autocorrelation_from_psd<F>(phi: F, m: usize, max_lag: usize) -> Result<Vec<f64>, DimError>
where
    F: Fn(f64) -> Result<f64, DimError>,
{
    if max_lag >= m / 2 {
        return Err(DimError::Invalid(format!("max_lag {max_lag} needs more than {m} grid points")));
    }
    let mut buf: Vec<Complex64> = (0..m)
        .map(|k| phi(2.0 * PI * k as f64 / m as f64).map(|v| Complex64::new(v, 0.0)))
        .collect::<Result<_, _>>()?;
    FftPlanner::new().plan_fft_inverse(m).process(&mut buf);
    Ok(buf[..=max_lag].iter().map(|z| z.re / m as f64).collect())
}

/// Lag covariance `E[y[t+k] y[t]^T]` from the exact spectrum, by the
/// trapezoid rule on an `m`-point full circle.
pub fn lag_covariance(sys: &DimSystem, lag: i64, m: usize) -> Result<RMatrix, DimError> {
    let n = sys.n();
    let mut acc = CMatrix::zeros(n, n);
    for k in 0..m {
        let w = 2.0 * PI * k as f64 / m as f64;
        acc += psd_at(sys, w)? * Complex64::from_polar(1.0, w * lag as f64);
    }
    Ok(acc.map(|z| z.re / m as f64))
}
