//! Network topology identification from corrupted data streams.
//!
//! The crate simulates networks of linearly interacting agents (the dynamic
//! influence model `y = G(z) y + e`), corrupts individual data streams with
//! randomized state-space perturbations (random delays, packet drops,
//! measurement noise, disinformation), recovers an undirected structure from
//! the support of the inverse power spectral density, and grades the result
//! against the perturbed moral graph that bounds where spurious links may
//! appear.
//!
//! Module map:
//!
//! - [`graphs`]: directed/undirected graphs, moral graph, kins, perturbed
//!   graph, separation, maximal cliques.
//! - [`dim_sim`]: transfer functions, the dynamic influence model, time-domain
//!   simulation and exact spectra.
//! - [`corruption`]: random state-space corruption models and their
//!   second-order statistics.
//! - [`spectral`]: Welch cross-spectral estimation, spectral inversion and
//!   support recovery.
//! - [`predict`]: spurious-link prediction, Woodbury iteration and grading.
//! - [`mrf`]: Gaussian and discrete Markov random field marginalization checks.
//! - [`experiment`]: config-driven experiment runner used by the CLI.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod corruption;
pub mod dim_sim;
pub mod experiment;
pub mod graphs;
pub mod linalg;
pub mod mrf;
pub mod predict;
pub mod random;
pub mod spectral;

pub use corruption::{CorruptionAssignment, CorruptionModel, RandomStateSpace};
pub use dim_sim::{DimSystem, NoiseSpec, SpectralMatrix, TimeSeriesPanel, TransferFunction};
pub use graphs::{DirectedGraph, NodeSet, UndirectedGraph};

/// Crate version embedded in experiment reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
