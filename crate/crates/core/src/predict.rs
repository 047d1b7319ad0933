//! Where spurious links may appear when a set `Z` of nodes is corrupted, a
//! numerical mirror of the rank-one argument behind it, and grading of
//! recovered graphs.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::dim_sim::SpectralMatrix;
use crate::graphs::{
    diff_graphs, moral_graph, perturbed_graph, to_dot, DirectedGraph, Edge, EdgeStyle, GraphError, NodeSet,
    UndirectedGraph,
};
use crate::linalg::RMatrix;

#[derive(Debug, Error)]
pub enum PredictError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("Psi_0 singular at omega = {0}")]
    Singular(f64),
    #[error("Woodbury denominator vanishes for node {node} at omega = {omega}")]
    Degenerate { node: usize, omega: f64 },
    #[error("theta for node {0} missing, negative or off-grid")]
    Theta(usize),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeClass {
    TrueKin,
    PredictedSpurious,
    Violation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClassifiedEdge {
    pub edge: Edge,
    pub class: EdgeClass,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictionReport {
    pub z: NodeSet,
    pub true_moral: UndirectedGraph,
    pub perturbed: UndirectedGraph,
    /// `perturbed \ moral`
    pub admissible_spurious: BTreeSet<Edge>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recovered: Option<UndirectedGraph>,
    /// Recovered edges outside the perturbed graph.
    pub violations: BTreeSet<Edge>,
    /// Moral edges absent from the recovered graph.
    pub missing: BTreeSet<Edge>,
    pub classified: Vec<ClassifiedEdge>,
}

impl PredictionReport {
    pub fn has_violations(&self) -> bool {
        !self.violations.is_empty()
    }

    /// Predicted graph: moral edges solid, admissible spurious edges dashed.
    pub fn predicted_dot(&self, labels: &[String]) -> String {
        to_dot(&self.perturbed, labels, "predicted", |e| {
            if self.admissible_spurious.contains(&e) {
                EdgeStyle::Dashed
            } else {
                EdgeStyle::Solid
            }
        })
    }

    /// Recovered graph: true kins solid, predicted spurious dashed, violations bold.
    pub fn recovered_dot(&self, labels: &[String]) -> Option<String> {
        let rec = self.recovered.as_ref()?;
        let classes: BTreeMap<Edge, EdgeClass> = self.classified.iter().map(|c| (c.edge, c.class)).collect();
        Some(to_dot(rec, labels, "recovered", |e| match classes.get(&e) {
            Some(EdgeClass::Violation) => EdgeStyle::Bold,
            Some(EdgeClass::PredictedSpurious) => EdgeStyle::Dashed,
            _ => EdgeStyle::Solid,
        }))
    }
}

/// Moral graph of `g`, its perturbed graph for `z`, and the edges that may
/// appear spuriously.
pub fn predict_spurious(g: &DirectedGraph, z: &NodeSet) -> Result<PredictionReport, PredictError> {
    predict_from_moral(&moral_graph(g), z)
}

/// As [`predict_spurious`], starting from an undirected graph that plays the
/// role of the moral graph (e.g. the graph of a Markov random field).
pub fn predict_from_moral(moral: &UndirectedGraph, z: &NodeSet) -> Result<PredictionReport, PredictError> {
    let perturbed = perturbed_graph(moral, z)?;
    let admissible = diff_graphs(moral, &perturbed)?.spurious;
    Ok(PredictionReport {
        z: z.clone(),
        true_moral: moral.clone(),
        perturbed,
        admissible_spurious: admissible,
        recovered: None,
        violations: BTreeSet::new(),
        missing: BTreeSet::new(),
        classified: Vec::new(),
    })
}

/// Classifies every recovered edge against the prediction.
pub fn grade(g: &DirectedGraph, z: &NodeSet, recovered: &UndirectedGraph) -> Result<PredictionReport, PredictError> {
    grade_moral(&moral_graph(g), z, recovered)
}

pub fn grade_moral(
    moral: &UndirectedGraph,
    z: &NodeSet,
    recovered: &UndirectedGraph,
) -> Result<PredictionReport, PredictError> {
    let mut rep = predict_from_moral(moral, z)?;
    let d = diff_graphs(&rep.perturbed, recovered)?;
    rep.violations = d.spurious;
    rep.missing = diff_graphs(&rep.true_moral, recovered)?.missing;
    rep.classified = recovered
        .edges()
        .map(|e| ClassifiedEdge {
            edge: e,
            class: if rep.true_moral.has_edge(e.0, e.1) {
                EdgeClass::TrueKin
            } else if rep.perturbed.has_edge(e.0, e.1) {
                EdgeClass::PredictedSpurious
            } else {
                EdgeClass::Violation
            },
        })
        .collect();
    rep.recovered = Some(recovered.clone());
    Ok(rep)
}

/// Support of an exact inverse spectrum: `i - j` is an edge when
/// `|inv_ij(w)| > rel_tol * max_kl |inv_kl(w)|` at some frequency. Returns
/// the per-entry maximum of those ratios and the graph.
pub fn exact_support(s: &SpectralMatrix, rel_tol: f64) -> Result<(RMatrix, UndirectedGraph), PredictError> {
    let n = s.n();
    let mut ratio = RMatrix::zeros(n, n);
    for (&w, m) in s.freqs.iter().zip(&s.values) {
        let inv = m.clone().try_inverse().ok_or(PredictError::Singular(w))?;
        let top = inv.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if !(top > 0.0 && top.is_finite()) {
            return Err(PredictError::Singular(w));
        }
        for i in 0..n {
            for j in 0..n {
                ratio[(i, j)] = ratio[(i, j)].max(inv[(i, j)].norm() / top);
            }
        }
    }
    let mut g = UndirectedGraph::new(n);
    for i in 0..n {
        for j in i + 1..n {
            if ratio[(i, j)].max(ratio[(j, i)]) > rel_tol {
                g.add_edge(i, j)?;
            }
        }
    }
    Ok((ratio, g))
}

/// Largest tolerated condition number of `Psi_0` (infinity norm).
pub const WOODBURY_COND_CAP: f64 = 1e12;

fn inf_norm(m: &crate::linalg::CMatrix) -> f64 {
    (0..m.nrows()).map(|i| m.row(i).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// `(Psi_0 + sum_v theta_v b_v b_v^T)^-1` by successive rank-one
/// Woodbury downdates of `P = Psi_0^-1`:
/// `P <- P - P b b^T P / (1/theta + b^T P b)`. Nodes with `theta = 0` are
/// skipped (the update is a no-op).
pub fn woodbury_sequence(
    psi0: &SpectralMatrix,
    z: &[usize],
    thetas: &BTreeMap<usize, Vec<f64>>,
) -> Result<SpectralMatrix, PredictError> {
    let n = psi0.n();
    for &v in z {
        if v >= n {
            return Err(PredictError::Dimension(format!("node {v} outside {n} nodes")));
        }
        match thetas.get(&v) {
            Some(t) if t.len() == psi0.len() && t.iter().all(|&x| x >= 0.0) => {}
            _ => return Err(PredictError::Theta(v)),
        }
    }
    let mut values = Vec::with_capacity(psi0.len());
    for (k, (&w, m)) in psi0.freqs.iter().zip(&psi0.values).enumerate() {
        let mut p = m.clone().try_inverse().ok_or(PredictError::Singular(w))?;
        if inf_norm(m) * inf_norm(&p) > WOODBURY_COND_CAP {
            return Err(PredictError::Singular(w));
        }
        for &v in z {
            let th = thetas[&v][k];
            if th == 0.0 {
                continue;
            }
            let pvv = p[(v, v)];
            let delta = Complex64::new(1.0 / th, 0.0) + pvv;
            if delta.norm() <= 1e-14 * (1.0 / th + pvv.norm()) {
                return Err(PredictError::Degenerate { node: v, omega: w });
            }
            let col = p.column(v).into_owned();
            let row = p.row(v).into_owned();
            p -= (col * row) / delta;
        }
        values.push(p);
    }
    SpectralMatrix::new(psi0.freqs.clone(), values).map_err(|e| PredictError::Dimension(e.to_string()))
}
