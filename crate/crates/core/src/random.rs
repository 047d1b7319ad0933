//! Seed derivation and random instance generators for the property suites.
//!
//! Seeds: every trial and stream gets its own generator, seeded by
//! `derive_seed(master, trial, stream)`. Stream [`STREAM_DIM`] drives the
//! network noise; stream `corruption_stream(i)` drives the corruption of node
//! `i`. The derivation chains SplitMix64 finalizers, so seeds do not depend on
//! scheduling and trials can run in any order.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corruption::{CorruptionAssignment, CorruptionModel};
use crate::dim_sim::{DimSystem, TransferFunction};
use crate::graphs::{NodeSet, UndirectedGraph};
use crate::mrf::{DiscreteMrf, Factor, GaussianNetworkModel, GaussianPerturbation, PerturbFactor};

pub const STREAM_DIM: u64 = 0;

pub fn corruption_stream(node: usize) -> u64 {
    1 + node as u64
}

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `mix(mix(mix(master + G) + trial + G) + stream + G)`, `G` the golden gamma.
pub fn derive_seed(master: u64, trial: u64, stream: u64) -> u64 {
    let a = mix(master.wrapping_add(GAMMA));
    let b = mix(a.wrapping_add(trial).wrapping_add(GAMMA));
    mix(b.wrapping_add(stream).wrapping_add(GAMMA))
}

pub fn rng_for(master: u64, trial: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, trial, stream))
}

/// DAG over a random topological order: each forward pair is an arc with
/// probability `p`, carrying an FIR filter of 1-3 taps drawn from
/// `[0.3, 1.2]`. Unit white noise. Always stable (`I - G` is triangular up to
/// a permutation with unit determinant).
pub fn random_dag_system<R: Rng>(rng: &mut R, n: usize, p: f64) -> DimSystem {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut sys = DimSystem::new(n);
    for a in 0..n {
        for b in a + 1..n {
            if rng.random_bool(p) {
                let taps = rng.random_range(1..=3);
                let coeffs = (0..taps).map(|_| rng.random_range(0.3..1.2)).collect();
                let tf = TransferFunction::fir(coeffs).expect("finite coefficients");
                sys.set_arc(order[a], order[b], tf).expect("distinct in-range nodes");
            }
        }
    }
    sys
}

/// Each node independently with probability `p`.
pub fn random_subset<R: Rng>(rng: &mut R, n: usize, p: f64) -> NodeSet {
    (0..n).filter(|_| rng.random_bool(p)).collect()
}

/// One of the named corruption variants with random parameters.
pub fn random_corruption<R: Rng>(rng: &mut R) -> CorruptionModel {
    match rng.random_range(0..5) {
        0 => {
            let d1 = rng.random_range(0..3);
            let d2 = d1 + rng.random_range(1..3);
            let p = rng.random_range(0.15..0.85);
            CorruptionModel::delay(&[(d1, p), (d2, 1.0 - p)])
        }
        1 => CorruptionModel::PacketDrop { p: rng.random_range(0.2..0.9) },
        2 => CorruptionModel::MeasurementNoise { variance: rng.random_range(0.1..1.0), shaping: None },
        3 => CorruptionModel::MeasurementNoise {
            variance: rng.random_range(0.1..1.0),
            shaping: Some(TransferFunction::new(vec![1.0], vec![1.0, -rng.random_range(-0.8..0.8)]).expect("valid")),
        },
        _ => CorruptionModel::Disinformation { variance: rng.random_range(0.1..1.0), shaping: None },
    }
}

/// Random corruptions on every node of `z`.
pub fn random_assignment<R: Rng>(rng: &mut R, n: usize, z: &NodeSet) -> CorruptionAssignment {
    let mut a = CorruptionAssignment::new(n);
    for i in z.iter() {
        a.insert(i, random_corruption(rng)).expect("generated models are valid");
    }
    a
}

/// Static DAG model: arcs with probability `p` along a random order, weights
/// of magnitude `[0.3, 1.2]` and random sign, variances in `[0.5, 2]`.
pub fn random_gaussian_model<R: Rng>(rng: &mut R, n: usize, p: f64) -> GaussianNetworkModel {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut arcs = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.random_bool(p) {
                let w: f64 = rng.random_range(0.3..1.2);
                arcs.push((order[a], order[b], if rng.random_bool(0.5) { w } else { -w }));
            }
        }
    }
    let var = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
    GaussianNetworkModel::from_arcs(n, &arcs, var).expect("acyclic by construction")
}

pub fn random_gaussian_perturbations<R: Rng>(rng: &mut R, z: &NodeSet) -> Vec<GaussianPerturbation> {
    z.iter()
        .map(|node| {
            let c: f64 = rng.random_range(0.5..1.5);
            GaussianPerturbation {
                node,
                c: if rng.random_bool(0.5) { c } else { -c },
                noise_var: rng.random_range(0.1..1.0),
            }
        })
        .collect()
}

fn positive_table<R: Rng>(rng: &mut R, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(-1.0f64..1.0).exp()).collect()
}

/// Binary pairwise field on a random graph (edge probability `p`) with
/// strictly positive unary and pairwise factors.
pub fn random_discrete_mrf<R: Rng>(rng: &mut R, n: usize, p: f64) -> DiscreteMrf {
    let mut g = UndirectedGraph::new(n);
    let mut factors = Vec::new();
    for i in 0..n {
        factors.push(Factor { nodes: vec![i], table: positive_table(rng, 2) });
        for j in i + 1..n {
            if rng.random_bool(p) {
                g.add_edge(i, j).expect("distinct in-range nodes");
                factors.push(Factor { nodes: vec![i, j], table: positive_table(rng, 4) });
            }
        }
    }
    DiscreteMrf::new(vec![2; n], g, factors).expect("pairwise factors on edges")
}

/// Positive binary kernels for every node of `z`.
pub fn random_perturb_factors<R: Rng>(rng: &mut R, z: &NodeSet) -> Vec<PerturbFactor> {
    z.iter().map(|node| PerturbFactor { node, card_u: 2, table: positive_table(rng, 4) }).collect()
}
