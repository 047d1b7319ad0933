//! Marginalizing corrupted nodes out of a Markov random field: Gaussian
//! closed forms (precision matrices and Schur complements) and exact
//! enumeration for small discrete fields.

mod discrete;
mod gaussian;

pub use discrete::{
    brute_marginal, ci_gap, conditional_independence, join_with_perturbations, verify_pairwise_markov, DiscreteMrf, Factor,
    MarkovReport, PairVerdict, PerturbFactor, ProbTable, DEFAULT_STATE_CAP,
};
pub use gaussian::{
    gaussian_joint, marginal_precision, observed_precision, precision_of, verify_gaussian, GaussianNetworkModel,
    GaussianPerturbation, GaussianReport, PrecisionMatrix,
};

use thiserror::Error;

use crate::graphs::GraphError;

/// Tolerance on probability differences for conditional independence.
pub const CI_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum MrfError {
    #[error("invalid model: {0}")]
    Invalid(String),
    #[error("matrix not positive definite")]
    NotPositiveDefinite,
    #[error("cannot hide every node")]
    AllHidden,
    #[error("{states} joint states exceed the enumeration cap {cap}")]
    CapExceeded { states: u128, cap: u128 },
    #[error("zero partition function")]
    ZeroMass,
    #[error("conditioning cell {0:?} has zero probability")]
    ZeroConditioning(Vec<usize>),
    #[error(transparent)]
    Graph(#[from] GraphError),
}
