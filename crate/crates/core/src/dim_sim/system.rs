use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{default_grid, DimError, TransferFunction, STABILITY_TOL};
use crate::graphs::DirectedGraph;
use crate::linalg::{spectral_radius, CMatrix, RMatrix};

/// Per-node excitation: `variance` times white noise, optionally passed
/// through a stable shaping filter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub variance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shaping: Option<TransferFunction>,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self::white(1.0)
    }
}

impl NoiseSpec {
    pub fn white(variance: f64) -> Self {
        Self { variance, shaping: None }
    }

    pub fn colored(variance: f64, shaping: TransferFunction) -> Self {
        Self { variance, shaping: Some(shaping) }
    }

    pub fn validate(&self) -> Result<(), DimError> {
        if !(self.variance > 0.0 && self.variance.is_finite()) {
            return Err(DimError::InvalidNoise(format!("variance {} must be positive", self.variance)));
        }
        if let Some(s) = &self.shaping {
            if !s.is_stable() {
                return Err(DimError::InvalidNoise("shaping filter is unstable".into()));
            }
        }
        Ok(())
    }

    pub fn psd(&self, omega: f64) -> Result<f64, DimError> {
        Ok(match &self.shaping {
            None => self.variance,
            Some(s) => self.variance * s.eval(omega)?.norm_sqr(),
        })
    }
}

/// `n` nodes, entry `g[i][j]` is the filter on arc `j -> i`.
#[derive(Debug, Clone, PartialEq)]
pub struct DimSystem {
    n: usize,
    g: Vec<Option<TransferFunction>>,
    noise: Vec<NoiseSpec>,
}

impl DimSystem {
    /// No arcs, unit white noise on every node.
    pub fn new(n: usize) -> Self {
        Self { n, g: vec![None; n * n], noise: vec![NoiseSpec::default(); n] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Installs `tf` on the arc `from -> to` (entry `G[to][from]`).
    pub fn set_arc(&mut self, from: usize, to: usize, tf: TransferFunction) -> Result<(), DimError> {
        if from >= self.n || to >= self.n {
            return Err(DimError::Dimension(format!("arc {from}->{to} outside {} nodes", self.n)));
        }
        if from == to {
            return Err(DimError::Invalid(format!("self-loop on node {from}")));
        }
        self.g[to * self.n + from] = if tf.is_zero() { None } else { Some(tf) };
        Ok(())
    }

    pub fn set_noise(&mut self, i: usize, spec: NoiseSpec) -> Result<(), DimError> {
        if i >= self.n {
            return Err(DimError::Dimension(format!("node {i} outside {} nodes", self.n)));
        }
        spec.validate()?;
        self.noise[i] = spec;
        Ok(())
    }

    /// Entry `G_ij`, the filter from `j` into `i`.
    pub fn entry(&self, i: usize, j: usize) -> Option<&TransferFunction> {
        self.g[i * self.n + j].as_ref()
    }

    pub fn noise(&self, i: usize) -> &NoiseSpec {
        &self.noise[i]
    }

    /// Iterates `(from, to, tf)` over all arcs.
    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize, &TransferFunction)> + '_ {
        self.g.iter().enumerate().filter_map(move |(k, t)| {
            t.as_ref().map(|t| (k % self.n, k / self.n, t))
        })
    }

    pub fn generative_graph(&self) -> DirectedGraph {
        let mut d = DirectedGraph::new(self.n);
        for (j, i, _) in self.arcs() {
            d.add_arc(j, i).expect("arcs validated on insertion");
        }
        d
    }

    pub fn transfer_matrix(&self, omega: f64) -> Result<CMatrix, DimError> {
        let mut m = CMatrix::zeros(self.n, self.n);
        for (j, i, t) in self.arcs() {
            m[(i, j)] = t.eval(omega)?;
        }
        Ok(m)
    }

    /// `I - G(e^{jw})`.
    pub fn return_difference(&self, omega: f64) -> Result<CMatrix, DimError> {
        let mut m = -self.transfer_matrix(omega)?;
        for i in 0..self.n {
            m[(i, i)] += Complex64::new(1.0, 0.0);
        }
        Ok(m)
    }

    pub fn noise_psd(&self, omega: f64) -> Result<Vec<f64>, DimError> {
        self.noise.iter().map(|s| s.psd(omega)).collect()
    }

    /// Instantaneous coupling `G(z -> infinity)`.
    pub fn instantaneous_gain(&self) -> RMatrix {
        let mut g0 = RMatrix::zeros(self.n, self.n);
        for (j, i, t) in self.arcs() {
            g0[(i, j)] = t.feedthrough();
        }
        g0
    }
}

/// Returns the first reason the system is not a well-posed stable network, if any.
///
/// Checks, in order: every arc filter and noise shaping filter stable; the
/// instantaneous loop `G0` contractive (so the algebraic loop stays solvable
/// under an infinitesimal extra delay); `|det(I - G)|` above `tol` on `freqs`;
/// zero winding of `det(I - G(e^{jw}))` around the origin over the full circle,
/// which together with the above rules out closed-loop poles on or outside
/// the unit circle.
pub fn stability_diagnosis(sys: &DimSystem, freqs: &[f64], tol: f64) -> Result<(), DimError> {
    for (j, i, t) in sys.arcs() {
        if !t.is_stable() {
            return Err(DimError::Unstable(format!("arc {j}->{i} has a pole outside the unit disc")));
        }
    }
    for i in 0..sys.n() {
        sys.noise(i).validate()?;
    }
    let rho = spectral_radius(&sys.instantaneous_gain());
    if rho >= 1.0 {
        return Err(DimError::Unstable(format!("instantaneous loop gain {rho:.4} >= 1")));
    }
    for &w in freqs {
        let d = sys.return_difference(w)?.determinant().norm();
        if d <= tol {
            return Err(DimError::Unstable(format!("|det(I-G)| = {d:.3e} at omega = {w:.4}")));
        }
    }
    if sys.arcs().next().is_none() {
        return Ok(());
    }
    let m = 4096;
    let det = |k: usize| -> Result<Complex64, DimError> {
        let w = 2.0 * std::f64::consts::PI * k as f64 / m as f64;
        Ok(sys.return_difference(w)?.determinant())
    };
    let first = det(0)?;
    let mut prev = first;
    let mut phase = 0.0;
    for k in 1..=m {
        let cur = if k == m { first } else { det(k)? };
        if cur.norm() <= tol {
            return Err(DimError::Unstable("det(I-G) vanishes on the unit circle".into()));
        }
        phase += (cur / prev).arg();
        prev = cur;
    }
    let winding = (phase / (2.0 * std::f64::consts::PI)).round() as i64;
    if winding != 0 {
        return Err(DimError::Unstable(format!("det(I-G) winds {winding} times around 0")));
    }
    Ok(())
}

pub fn check_stability_with(sys: &DimSystem, freqs: &[f64], tol: f64) -> bool {
    stability_diagnosis(sys, freqs, tol).is_ok()
}

/// Default check: 256-point grid on `[0, pi]`, tolerance `1e-6`.
pub fn check_stability(sys: &DimSystem) -> bool {
    check_stability_with(sys, &default_grid(), STABILITY_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stability_examples() {
        assert!(check_stability(&DimSystem::new(3)));
        let mut s = DimSystem::new(2);
        s.set_arc(0, 1, TransferFunction::delay(1)).unwrap();
        assert!(check_stability(&s));
        let mut s = DimSystem::new(2);
        s.set_arc(0, 1, TransferFunction::constant(1.1)).unwrap();
        s.set_arc(1, 0, TransferFunction::constant(1.1)).unwrap();
        assert!(!check_stability(&s));
    }

    #[test]
    fn delayed_feedback_loop() {
        // y1 = a z^-1 y2, y2 = y1 : closed-loop pole at a
        let mut s = DimSystem::new(2);
        s.set_arc(1, 0, TransferFunction::fir(vec![0.0, 0.5]).unwrap()).unwrap();
        s.set_arc(0, 1, TransferFunction::constant(1.0)).unwrap();
        assert!(check_stability(&s));
        s.set_arc(1, 0, TransferFunction::fir(vec![0.0, 1.5]).unwrap()).unwrap();
        assert!(!check_stability(&s));
    }

    #[test]
    fn unstable_entry_is_rejected() {
        let mut s = DimSystem::new(2);
        s.set_arc(0, 1, TransferFunction::new(vec![1.0], vec![1.0, -1.2]).unwrap()).unwrap();
        assert!(!check_stability(&s));
    }

    #[test]
    fn generative_graph_orients_arcs() {
        let mut s = DimSystem::new(3);
        s.set_arc(0, 2, TransferFunction::delay(1)).unwrap();
        let g = s.generative_graph();
        assert!(g.has_arc(0, 2));
        assert!(s.entry(2, 0).is_some());
        assert!(s.set_arc(1, 1, TransferFunction::delay(1)).is_err());
    }
}
