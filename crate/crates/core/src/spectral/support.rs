use std::io::Write;

use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{estimate_cross_psd, SpectralError, WelchConfig};
use crate::dim_sim::{SpectralMatrix, TimeSeriesPanel};
use crate::graphs::UndirectedGraph;
use crate::linalg::{hermitian_part, CMatrix, RMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Aggregate {
    Max,
    #[default]
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdMode {
    #[default]
    Relative,
    Absolute,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum RidgeMode {
    /// `eps * trace(S) / n` at each frequency.
    #[default]
    Relative,
    Absolute,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ridge {
    pub eps: f64,
    pub mode: RidgeMode,
}

impl Ridge {
    pub const NONE: Ridge = Ridge { eps: 0.0, mode: RidgeMode::Absolute };

    fn at(&self, m: &CMatrix) -> f64 {
        match self.mode {
            RidgeMode::Absolute => self.eps,
            RidgeMode::Relative => {
                let n = m.nrows().max(1) as f64;
                self.eps * m.diagonal().iter().map(|z| z.re).sum::<f64>() / n
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SupportConfig {
    pub aggregate: Aggregate,
    pub threshold_mode: ThresholdMode,
    pub tau: f64,
    pub ridge: f64,
    pub ridge_mode: RidgeMode,
    /// Largest tolerated eigenvalue ratio per frequency before inversion fails.
    pub condition_cap: f64,
}

impl Default for SupportConfig {
    fn default() -> Self {
        Self {
            aggregate: Aggregate::Mean,
            threshold_mode: ThresholdMode::Relative,
            tau: 0.08,
            ridge: 1e-8,
            ridge_mode: RidgeMode::Relative,
            condition_cap: 1e12,
        }
    }
}

impl SupportConfig {
    pub fn validate(&self) -> Result<(), SpectralError> {
        if !(self.tau > 0.0) {
            return Err(SpectralError::Config(format!("tau {} must be positive", self.tau)));
        }
        if !(self.ridge >= 0.0) {
            return Err(SpectralError::Config("ridge must be nonnegative".into()));
        }
        if !(self.condition_cap > 1.0) {
            return Err(SpectralError::Config("condition_cap must exceed 1".into()));
        }
        Ok(())
    }

    pub fn ridge(&self) -> Ridge {
        Ridge { eps: self.ridge, mode: self.ridge_mode }
    }
}

/// Per-frequency inverse of `S + eps I` through its Hermitian eigendecomposition.
///
/// Fails, listing every offending frequency, when the smallest eigenvalue is
/// not positive or the eigenvalue ratio exceeds `condition_cap`.
pub fn invert_spectrum(s: &SpectralMatrix, ridge: Ridge, condition_cap: f64) -> Result<SpectralMatrix, SpectralError> {
    let mut bad = Vec::new();
    let mut values = Vec::with_capacity(s.len());
    for (&w, m) in s.freqs.iter().zip(&s.values) {
        let n = m.nrows();
        let mut h = hermitian_part(m);
        let eps = ridge.at(m);
        for i in 0..n {
            h[(i, i)] += Complex64::new(eps, 0.0);
        }
        if n == 0 {
            values.push(h);
            continue;
        }
        let eig = SymmetricEigen::new(h);
        let lo = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(lo > 0.0) || hi / lo > condition_cap {
            bad.push(w);
            continue;
        }
        let v = &eig.eigenvectors;
        let mut scaled = v.clone();
        for (k, &lam) in eig.eigenvalues.iter().enumerate() {
            scaled.column_mut(k).scale_mut(1.0 / lam);
        }
        values.push(hermitian_part(&(scaled * v.adjoint())));
    }
    if !bad.is_empty() {
        return Err(SpectralError::Singular(bad));
    }
    Ok(SpectralMatrix::new(s.freqs.clone(), values)?)
}

/// `aggregate_w |inv(w)_ij|`.
pub fn score_matrix(inv: &SpectralMatrix, aggregate: Aggregate) -> RMatrix {
    let n = inv.n();
    let mut out = RMatrix::zeros(n, n);
    if inv.is_empty() {
        return out;
    }
    for m in &inv.values {
        for i in 0..n {
            for j in 0..n {
                let a = m[(i, j)].norm();
                match aggregate {
                    Aggregate::Max => out[(i, j)] = out[(i, j)].max(a),
                    Aggregate::Mean => out[(i, j)] += a,
                }
            }
        }
    }
    if aggregate == Aggregate::Mean {
        out /= inv.len() as f64;
    }
    out
}

/// Edges whose score clears the threshold; symmetrized by taking the larger
/// of the two entries.
pub fn graph_from_scores(scores: &RMatrix, cfg: &SupportConfig) -> UndirectedGraph {
    let n = scores.nrows();
    let sym = |i: usize, j: usize| scores[(i, j)].max(scores[(j, i)]);
    let mut max_off = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            max_off = max_off.max(sym(i, j));
        }
    }
    let cut = match cfg.threshold_mode {
        ThresholdMode::Relative => cfg.tau * max_off,
        ThresholdMode::Absolute => cfg.tau,
    };
    let mut g = UndirectedGraph::new(n);
    if max_off == 0.0 {
        return g;
    }
    for i in 0..n {
        for j in i + 1..n {
            if sym(i, j) > cut {
                g.add_edge(i, j).expect("indices in range");
            }
        }
    }
    g
}

pub fn support_graph(inv: &SpectralMatrix, cfg: &SupportConfig) -> UndirectedGraph {
    graph_from_scores(&score_matrix(inv, cfg.aggregate), cfg)
}

/// Scores divided by the largest off-diagonal entry.
pub fn relative_scores(scores: &RMatrix) -> RMatrix {
    let n = scores.nrows();
    let mut m = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                m = m.max(scores[(i, j)]);
            }
        }
    }
    if m == 0.0 {
        scores.clone()
    } else {
        scores / m
    }
}

/// Estimate, invert, threshold.
pub fn reconstruct(
    panel: &TimeSeriesPanel,
    welch: &WelchConfig,
    support: &SupportConfig,
) -> Result<UndirectedGraph, SpectralError> {
    support.validate()?;
    let s = estimate_cross_psd(panel, welch)?;
    let inv = invert_spectrum(&s, support.ridge(), support.condition_cap)?;
    Ok(support_graph(&inv, support))
}

/// Score matrix as CSV: header `,<labels>`, then one labelled row per node.
pub fn write_scores_csv<W: Write>(scores: &RMatrix, labels: &[String], w: W) -> Result<(), SpectralError> {
    let mut wr = csv::Writer::from_writer(w);
    let mut header = vec![String::new()];
    header.extend(labels.iter().cloned());
    wr.write_record(&header)?;
    for i in 0..scores.nrows() {
        let mut row = vec![labels.get(i).cloned().unwrap_or_else(|| (i + 1).to_string())];
        row.extend((0..scores.ncols()).map(|j| format!("{:.6}", scores[(i, j)])));
        wr.write_record(&row)?;
    }
    wr.flush()?;
    Ok(())
}
