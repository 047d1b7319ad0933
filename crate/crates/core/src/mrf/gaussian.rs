use std::collections::BTreeSet;

use nalgebra::Cholesky;
use serde::{Deserialize, Serialize};

use super::MrfError;
use crate::graphs::{diff_graphs, moral_graph, perturbed_graph, DirectedGraph, Edge, NodeSet, UndirectedGraph};
use crate::linalg::RMatrix;

/// Static linear model `y = M y + e` with independent `e_i ~ N(0, var_i)`.
/// `M[(i, j)] != 0` is an arc `j -> i`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianNetworkModel {
    m: RMatrix,
    noise_var: Vec<f64>,
}

impl GaussianNetworkModel {
    pub fn new(m: RMatrix, noise_var: Vec<f64>) -> Result<Self, MrfError> {
        let n = m.nrows();
        if m.ncols() != n || noise_var.len() != n {
            return Err(MrfError::Invalid("M must be n x n with n variances".into()));
        }
        if noise_var.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(MrfError::Invalid("noise variances must be positive".into()));
        }
        if m.iter().any(|v| !v.is_finite()) || (0..n).any(|i| m[(i, i)] != 0.0) {
            return Err(MrfError::Invalid("M must be finite with zero diagonal".into()));
        }
        let gm = Self { m, noise_var };
        if !gm.digraph().is_acyclic() {
            return Err(MrfError::Invalid("support of M is cyclic".into()));
        }
        Ok(gm)
    }

    /// Builds `M` from `(from, to, weight)` triples.
    pub fn from_arcs(n: usize, arcs: &[(usize, usize, f64)], noise_var: Vec<f64>) -> Result<Self, MrfError> {
        let mut m = RMatrix::zeros(n, n);
        for &(from, to, w) in arcs {
            if from >= n || to >= n {
                return Err(MrfError::Invalid(format!("arc {from}->{to} out of range")));
            }
            m[(to, from)] = w;
        }
        Self::new(m, noise_var)
    }

    pub fn n(&self) -> usize {
        self.m.nrows()
    }

    pub fn m(&self) -> &RMatrix {
        &self.m
    }

    pub fn noise_var(&self) -> &[f64] {
        &self.noise_var
    }

    pub fn digraph(&self) -> DirectedGraph {
        let n = self.n();
        let mut g = DirectedGraph::new(n);
        for i in 0..n {
            for j in 0..n {
                if self.m[(i, j)] != 0.0 {
                    g.add_arc(j, i).expect("indices in range");
                }
            }
        }
        g
    }
}

/// Symmetric positive definite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionMatrix(RMatrix);

impl PrecisionMatrix {
    pub fn new(m: RMatrix) -> Result<Self, MrfError> {
        if m.nrows() != m.ncols() {
            return Err(MrfError::Invalid("precision must be square".into()));
        }
        let scale = m.amax().max(1e-300);
        if (&m - m.transpose()).amax() > 1e-10 * scale {
            return Err(MrfError::Invalid("precision must be symmetric".into()));
        }
        let sym = (&m + m.transpose()) * 0.5;
        if Cholesky::new(sym.clone()).is_none() {
            return Err(MrfError::NotPositiveDefinite);
        }
        Ok(Self(sym))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &RMatrix {
        &self.0
    }

    /// Off-diagonal entries above `rel_tol * max|P|`.
    pub fn support(&self, rel_tol: f64) -> UndirectedGraph {
        let n = self.n();
        let cut = rel_tol * self.0.amax();
        let mut g = UndirectedGraph::new(n);
        for i in 0..n {
            for j in i + 1..n {
                if self.0[(i, j)].abs() > cut {
                    g.add_edge(i, j).expect("indices in range");
                }
            }
        }
        g
    }
}

/// `(I - M)^T E^-1 (I - M)`.
pub fn precision_of(gm: &GaussianNetworkModel) -> PrecisionMatrix {
    let n = gm.n();
    let a = RMatrix::identity(n, n) - &gm.m;
    let einv = RMatrix::from_diagonal(&nalgebra::DVector::from_iterator(n, gm.noise_var.iter().map(|v| 1.0 / v)));
    PrecisionMatrix::new(a.transpose() * einv * a).expect("(I-M) is unit triangular up to permutation")
}

/// Schur complement `P_oo - P_oh P_hh^-1 P_ho`, observed nodes in ascending order.
pub fn marginal_precision(p: &PrecisionMatrix, hidden: &NodeSet) -> Result<PrecisionMatrix, MrfError> {
    let n = p.n();
    hidden.check_range(n)?;
    if hidden.is_empty() {
        return Ok(p.clone());
    }
    if hidden.len() == n {
        return Err(MrfError::AllHidden);
    }
    let h = hidden.to_vec();
    let o: Vec<usize> = (0..n).filter(|&i| !hidden.contains(i)).collect();
    let pick = |r: &[usize], c: &[usize]| RMatrix::from_fn(r.len(), c.len(), |a, b| p.0[(r[a], c[b])]);
    let phh = Cholesky::new(pick(&h, &h)).ok_or(MrfError::NotPositiveDefinite)?;
    let pho = pick(&h, &o);
    PrecisionMatrix::new(pick(&o, &o) - pho.transpose() * phh.solve(&pho))
}

/// Noisy linear copy `u = c * y_node + w`, `w ~ N(0, noise_var)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianPerturbation {
    pub node: usize,
    pub c: f64,
    pub noise_var: f64,
}

fn check_perts(n: usize, perts: &[GaussianPerturbation]) -> Result<NodeSet, MrfError> {
    let mut z = NodeSet::new();
    for q in perts {
        if q.node >= n {
            return Err(MrfError::Invalid(format!("perturbed node {} out of range", q.node)));
        }
        if !z.insert(q.node) {
            return Err(MrfError::Invalid(format!("node {} perturbed twice", q.node)));
        }
        if q.c == 0.0 || !q.c.is_finite() || !(q.noise_var > 0.0) {
            return Err(MrfError::Invalid("perturbation needs c != 0 and noise_var > 0".into()));
        }
    }
    Ok(z)
}

/// Joint precision over `(y, u)`; `u` of `perts[k]` is variable `n + k`.
pub fn gaussian_joint(p: &PrecisionMatrix, perts: &[GaussianPerturbation]) -> Result<PrecisionMatrix, MrfError> {
    let n = p.n();
    check_perts(n, perts)?;
    let mut j = RMatrix::zeros(n + perts.len(), n + perts.len());
    j.view_mut((0, 0), (n, n)).copy_from(&p.0);
    for (k, q) in perts.iter().enumerate() {
        let s = 1.0 / q.noise_var;
        j[(q.node, q.node)] += q.c * q.c * s;
        j[(q.node, n + k)] = -q.c * s;
        j[(n + k, q.node)] = -q.c * s;
        j[(n + k, n + k)] = s;
    }
    PrecisionMatrix::new(j)
}

/// Precision of the measured streams, where position `i` holds `u_i` for a
/// perturbed node and `y_i` otherwise.
pub fn observed_precision(p: &PrecisionMatrix, perts: &[GaussianPerturbation]) -> Result<PrecisionMatrix, MrfError> {
    let n = p.n();
    let z = check_perts(n, perts)?;
    let joint = gaussian_joint(p, perts)?;
    let marg = marginal_precision(&joint, &z)?;
    // marg rows: clean y in ascending order, then u in pert order
    let mut slot = Vec::with_capacity(n);
    slot.extend((0..n).filter(|&i| !z.contains(i)));
    slot.extend(perts.iter().map(|q| q.node));
    let mut pos = vec![0; n];
    for (r, &node) in slot.iter().enumerate() {
        pos[node] = r;
    }
    PrecisionMatrix::new(RMatrix::from_fn(n, n, |a, b| marg.0[(pos[a], pos[b])]))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaussianReport {
    pub z: NodeSet,
    pub moral: UndirectedGraph,
    pub perturbed: UndirectedGraph,
    /// Off-diagonal support of the observed precision.
    pub support: UndirectedGraph,
    pub violations: BTreeSet<Edge>,
    /// Spurious edges that actually appear (a subset of the admissible ones).
    pub realized_spurious: BTreeSet<Edge>,
}

/// Observed precision support against the perturbed moral graph.
pub fn verify_gaussian(
    gm: &GaussianNetworkModel,
    perts: &[GaussianPerturbation],
    rel_tol: f64,
) -> Result<GaussianReport, MrfError> {
    let z = check_perts(gm.n(), perts)?;
    let moral = moral_graph(&gm.digraph());
    let perturbed = perturbed_graph(&moral, &z)?;
    let support = observed_precision(&precision_of(gm), perts)?.support(rel_tol);
    let violations = diff_graphs(&perturbed, &support)?.spurious;
    let realized_spurious = diff_graphs(&moral, &support)?.spurious.difference(&violations).copied().collect();
    Ok(GaussianReport { z, moral, perturbed, support, violations, realized_spurious })
}
