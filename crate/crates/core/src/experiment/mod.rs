//! Config-driven experiments: simulate, corrupt, estimate, recover and grade;
//! or the same pipeline on exact spectra; or the Markov random field checks.
//!
//! Per-trial randomness comes from [`crate::random::derive_seed`], so a
//! report depends only on the config (and the seed override), never on the
//! number of worker threads.

mod config;

pub use config::{
    AnalyticConfig, ArcSpec, BuiltMrf, BuiltSystem, CorruptionEntry, ExperimentConfig, FactorSpec, GaussianArc,
    GaussianPertSpec, MrfSpec, NodeRef, Nodes, NoiseEntry, OutputConfig, PerturbSpec, SimulationConfig, SystemSpec,
};

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::corruption::{
    analytic_corruption, apply_corruption, corrupted_psd, export_spectra, AutocorrOptions, CorruptionError,
    CorruptionSpectraExport, Thetas,
};
use crate::dim_sim::{analytic_psd, grid, simulate_dim, DimError, SpectralMatrix, TimeSeriesPanel};
use crate::graphs::{GraphError, UndirectedGraph};
use crate::linalg::RMatrix;
use crate::mrf::{observed_precision, precision_of, verify_gaussian, verify_pairwise_markov, GaussianReport, MarkovReport, MrfError};
use crate::predict::{exact_support, grade, grade_moral, woodbury_sequence, PredictError, PredictionReport};
use crate::random::{corruption_stream, derive_seed, STREAM_DIM};
use crate::spectral::{
    average_spectra, estimate_cross_psd, invert_spectrum, relative_scores, score_matrix, graph_from_scores,
    write_scores_csv, SpectralError,
};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Dim(#[from] DimError),
    #[error(transparent)]
    Corruption(#[from] CorruptionError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Predict(#[from] PredictError),
    #[error(transparent)]
    Mrf(#[from] MrfError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Run,
    Analytic,
    Mrf,
}

/// Empirical minus analytic corrupted spectrum, per entry, normalized by
/// `sqrt(Phi_ii Phi_jj)` and maximized over frequency.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Deviations {
    pub per_entry: Vec<Vec<f64>>,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WoodburyCheck {
    /// Max over the grid of `max|W - inv| / max|inv|`.
    pub max_rel_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timing {
    pub elapsed_seconds: f64,
    pub threads: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub version: &'static str,
    pub mode: Mode,
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub labels: Vec<String>,
    /// Relative scores behind `recovered` (see README for each mode).
    pub scores: Vec<Vec<f64>>,
    pub recovered: UndirectedGraph,
    pub prediction: PredictionReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deviations: Option<Deviations>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub woodbury: Option<WoodburyCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corruption_spectra: Option<CorruptionSpectraExport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gaussian: Option<GaussianReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub markov: Option<MarkovReport>,
    /// Checks that were skipped, and why.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub timing: Timing,
}

impl ExperimentReport {
    /// 0 when every recovered edge lies in the perturbed graph, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        let markov_bad = self.markov.as_ref().is_some_and(|m| !m.violations.is_empty());
        if self.prediction.has_violations() || markov_bad {
            2
        } else {
            0
        }
    }

    pub fn scores_matrix(&self) -> RMatrix {
        let n = self.scores.len();
        RMatrix::from_fn(n, n, |i, j| self.scores[i][j])
    }

    pub fn to_json(&self) -> Result<String, ExperimentError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Writes `report.json`, `scores.csv`, `recovered.dot` and `predicted.dot`.
    pub fn write_outputs(&self, dir: &Path) -> Result<(), ExperimentError> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), self.to_json()? + "\n")?;
        let f = std::fs::File::create(dir.join("scores.csv"))?;
        write_scores_csv(&self.scores_matrix(), &self.labels, std::io::BufWriter::new(f))?;
        if let Some(dot) = self.prediction.recovered_dot(&self.labels) {
            std::fs::write(dir.join("recovered.dot"), dot)?;
        }
        std::fs::write(dir.join("predicted.dot"), self.prediction.predicted_dot(&self.labels))?;
        Ok(())
    }
}

fn rows(m: &RMatrix) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn symmetrize_max(m: &RMatrix) -> RMatrix {
    RMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)].max(m[(j, i)]))
}

fn finish(
    cfg: &ExperimentConfig,
    mode: Mode,
    labels: Vec<String>,
    scores: RMatrix,
    recovered: UndirectedGraph,
    prediction: PredictionReport,
    start: Instant,
) -> ExperimentReport {
    ExperimentReport {
        version: crate::VERSION,
        mode,
        config_hash: cfg.hash(),
        config: cfg.clone(),
        labels,
        scores: rows(&scores),
        recovered,
        prediction,
        deviations: None,
        woodbury: None,
        corruption_spectra: None,
        gaussian: None,
        markov: None,
        notes: Vec::new(),
        timing: Timing { elapsed_seconds: start.elapsed().as_secs_f64(), threads: rayon::current_num_threads() },
    }
}

fn autocorr_opts(a: &AnalyticConfig) -> AutocorrOptions {
    AutocorrOptions { grid: a.autocorr_grid, max_lag: a.max_lag, ..AutocorrOptions::default() }
}

/// Corrupted measurement panel for one trial: `samples` values after
/// `burn_in` warm-up shared by the network and the corruption states.
pub fn simulate_trial(cfg: &ExperimentConfig, built: &BuiltSystem, trial: u64) -> Result<TimeSeriesPanel, ExperimentError> {
    let sim = &cfg.simulation;
    let total = sim.samples + sim.burn_in;
    let y = simulate_dim(&built.system, total, derive_seed(cfg.seed, trial, STREAM_DIM), sim.burn_in)?;
    let mut channels = Vec::with_capacity(built.labels.len());
    for i in 0..built.labels.len() {
        let ch = match built.assignment.get(i) {
            Some(m) => apply_corruption(m, y.channel(i), derive_seed(cfg.seed, trial, corruption_stream(i)))?,
            None => y.channel(i).to_vec(),
        };
        channels.push(ch[sim.burn_in..].to_vec());
    }
    Ok(TimeSeriesPanel::new(built.labels.clone(), channels)?)
}

/// Trial-averaged Welch estimate of the corrupted cross-spectrum. Trials run
/// in parallel and are averaged in trial order.
pub fn averaged_spectrum(cfg: &ExperimentConfig, built: &BuiltSystem) -> Result<SpectralMatrix, ExperimentError> {
    let per_trial: Vec<SpectralMatrix> = (0..cfg.simulation.trials as u64)
        .into_par_iter()
        .map(|t| Ok(estimate_cross_psd(&simulate_trial(cfg, built, t)?, &cfg.welch)?))
        .collect::<Result<_, ExperimentError>>()?;
    Ok(average_spectra(&per_trial)?)
}

fn deviations(est: &SpectralMatrix, exact: &SpectralMatrix) -> Deviations {
    let n = est.n();
    let mut d = RMatrix::zeros(n, n);
    for (a, b) in est.values.iter().zip(&exact.values) {
        for i in 0..n {
            for j in 0..n {
                let s = (b[(i, i)].re * b[(j, j)].re).sqrt();
                if s > 0.0 {
                    d[(i, j)] = d[(i, j)].max((a[(i, j)] - b[(i, j)]).norm() / s);
                }
            }
        }
    }
    Deviations { max: d.max(), per_entry: rows(&d) }
}

/// Simulate, corrupt, estimate, invert, threshold and grade.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    let start = Instant::now();
    cfg.validate()?;
    let built = cfg.build_system()?;
    let z = built.assignment.perturbed_set();
    let s = averaged_spectrum(cfg, &built)?;
    let inv = invert_spectrum(&s, cfg.support.ridge(), cfg.support.condition_cap)?;
    let raw = score_matrix(&inv, cfg.support.aggregate);
    let recovered = graph_from_scores(&raw, &cfg.support);
    let prediction = grade(&built.system.generative_graph(), &z, &recovered)?;
    let mut rep = finish(cfg, Mode::Run, built.labels.clone(), relative_scores(&raw), recovered, prediction, start);
    match analytic_corruption(&built.system, &built.assignment, &s.freqs, autocorr_opts(&cfg.analytic)) {
        Ok((exact, _)) => rep.deviations = Some(deviations(&s, &exact.uu)),
        Err(e) => rep.notes.push(format!("analytic comparison skipped: {e}")),
    }
    rep.timing.elapsed_seconds = start.elapsed().as_secs_f64();
    Ok(rep)
}

/// Max over the grid of `max|a - b| / max|b|`.
fn rel_deviation(a: &SpectralMatrix, b: &SpectralMatrix) -> f64 {
    a.values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| {
            let scale = y.iter().map(|v| v.norm()).fold(0.0, f64::max);
            (x - y).iter().map(|v| v.norm()).fold(0.0, f64::max) / scale
        })
        .fold(0.0, f64::max)
}

/// The same pipeline on exact spectra, with the Woodbury cross-check.
pub fn run_analytic(cfg: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    let start = Instant::now();
    cfg.validate()?;
    let built = cfg.build_system()?;
    let z = built.assignment.perturbed_set();
    let freqs = grid(cfg.analytic.grid_points);
    let (cs, thetas) = analytic_corruption(&built.system, &built.assignment, &freqs, autocorr_opts(&cfg.analytic))?;
    let (ratio, recovered) = exact_support(&cs.uu, cfg.analytic.threshold)?;
    let prediction = grade(&built.system.generative_graph(), &z, &recovered)?;
    let mut rep = finish(cfg, Mode::Analytic, built.labels.clone(), symmetrize_max(&ratio), recovered, prediction, start);

    let zero: Thetas = thetas.keys().map(|&i| (i, vec![0.0; freqs.len()])).collect();
    let psi0 = corrupted_psd(&analytic_psd(&built.system, &freqs)?, &built.assignment, &zero)?.uu;
    let direct = SpectralMatrix::new(
        freqs.clone(),
        cs.uu.values.iter().map(|m| m.clone().try_inverse().expect("checked by exact_support")).collect(),
    )?;
    match woodbury_sequence(&psi0, &z.to_vec(), &thetas) {
        Ok(w) => rep.woodbury = Some(WoodburyCheck { max_rel_deviation: rel_deviation(&w, &direct) }),
        Err(e) => rep.notes.push(format!("woodbury check skipped: {e}")),
    }
    rep.corruption_spectra = Some(export_spectra(&built.assignment, &freqs, &thetas)?);
    rep.timing.elapsed_seconds = start.elapsed().as_secs_f64();
    Ok(rep)
}

/// Pairwise-Markov (discrete) or marginal-precision (Gaussian) check.
pub fn run_mrf(cfg: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    let start = Instant::now();
    cfg.validate()?;
    let spec = cfg.mrf.as_ref().ok_or_else(|| ExperimentError::Config("missing [mrf] section".into()))?;
    match spec.build()? {
        BuiltMrf::Gaussian { labels, model, perts, threshold } => {
            let g: GaussianReport = verify_gaussian(&model, &perts, threshold)?;
            let p = observed_precision(&precision_of(&model), &perts)?;
            let scores = relative_scores(&p.matrix().abs());
            let prediction = grade(&model.digraph(), &g.z, &g.support)?;
            let mut rep = finish(cfg, Mode::Mrf, labels, scores, g.support.clone(), prediction, start);
            rep.gaussian = Some(g);
            Ok(rep)
        }
        BuiltMrf::Discrete { labels, mrf, perts } => {
            let m: MarkovReport = verify_pairwise_markov(&mrf, &perts)?;
            let n = mrf.n();
            let mut scores = RMatrix::zeros(n, n);
            let mut recovered = UndirectedGraph::new(n);
            for p in &m.pairs {
                scores[(p.pair.0, p.pair.1)] = p.gap;
                scores[(p.pair.1, p.pair.0)] = p.gap;
                if p.dependent {
                    recovered.add_edge(p.pair.0, p.pair.1)?;
                }
            }
            let prediction = grade_moral(mrf.graph(), &m.z, &recovered)?;
            let mut rep = finish(cfg, Mode::Mrf, labels, scores, recovered, prediction, start);
            if !m.genericity_exceptions.is_empty() {
                rep.notes.push(format!("{} genericity exception(s)", m.genericity_exceptions.len()));
            }
            rep.markov = Some(m);
            rep.timing.elapsed_seconds = start.elapsed().as_secs_f64();
            Ok(rep)
        }
    }
}
