use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{default_grid, stability_diagnosis, DimError, DimSystem, TimeSeriesPanel, TransferFunction, STABILITY_TOL};
use crate::linalg::RMatrix;

/// Streaming direct-form filter. `past()` is the part of the next output that
/// depends only on strictly earlier samples; `push(x)` commits input `x`.
#[derive(Debug, Clone)]
pub(crate) struct FilterState {
    b: Vec<f64>,
    a: Vec<f64>,
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl FilterState {
    pub(crate) fn new(tf: &TransferFunction) -> Self {
        let d0 = tf.den()[0];
        let b: Vec<f64> = tf.num().iter().map(|c| c / d0).collect();
        let a: Vec<f64> = tf.den().iter().map(|c| c / d0).collect();
        let (nb, na) = (b.len(), a.len());
        Self { b, a, xs: vec![0.0; nb.saturating_sub(1)], ys: vec![0.0; na.saturating_sub(1)] }
    }

    #[inline]
    pub(crate) fn past(&self) -> f64 {
        let mut acc = 0.0;
        for (k, x) in self.xs.iter().enumerate() {
            acc += self.b[k + 1] * x;
        }
        for (k, y) in self.ys.iter().enumerate() {
            acc -= self.a[k + 1] * y;
        }
        acc
    }

    /// Commits input `x` and returns the output sample.
    #[inline]
    pub(crate) fn push_with_past(&mut self, x: f64, past: f64) -> f64 {
        let y = self.b[0] * x + past;
        shift_in(&mut self.xs, x);
        shift_in(&mut self.ys, y);
        y
    }

    #[inline]
    pub(crate) fn step(&mut self, x: f64) -> f64 {
        let p = self.past();
        self.push_with_past(x, p)
    }
}

#[inline]
fn shift_in(buf: &mut [f64], v: f64) {
    if buf.is_empty() {
        return;
    }
    buf.copy_within(0..buf.len() - 1, 1);
    buf[0] = v;
}

/// Simulates `t` samples of `y = G y + e` after discarding `burn_in` samples.
///
/// Instantaneous coupling (arc filters with a nonzero constant term) is
/// resolved each step by solving `(I - G0) y[t] = past + e[t]`.
/// Noise draws come from `ChaCha8Rng::seed_from_u64(seed)`, node-major within
/// each time step.
pub fn simulate_dim(sys: &DimSystem, t: usize, seed: u64, burn_in: usize) -> Result<TimeSeriesPanel, DimError> {
    if t == 0 {
        return Err(DimError::Invalid("sample count must be positive".into()));
    }
    stability_diagnosis(sys, &default_grid(), STABILITY_TOL)?;
    let n = sys.n();
    let arcs: Vec<(usize, usize)> = sys.arcs().map(|(j, i, _)| (j, i)).collect();
    let mut filters: Vec<FilterState> = sys.arcs().map(|(_, _, tf)| FilterState::new(tf)).collect();
    let mut shaping: Vec<Option<FilterState>> =
        (0..n).map(|i| sys.noise(i).shaping.as_ref().map(FilterState::new)).collect();
    let sd: Vec<f64> = (0..n).map(|i| sys.noise(i).variance.sqrt()).collect();

    let g0 = sys.instantaneous_gain();
    let solve = if g0.iter().any(|&v| v != 0.0) {
        let m = RMatrix::identity(n, n) - &g0;
        Some(m.try_inverse().ok_or_else(|| DimError::Unstable("I - G0 is singular".into()))?)
    } else {
        None
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = burn_in + t;
    let mut out = vec![Vec::with_capacity(t); n];
    let mut rhs = vec![0.0; n];
    let mut pasts = vec![0.0; arcs.len()];
    let mut y = vec![0.0; n];
    for step in 0..total {
        for i in 0..n {
            let w: f64 = StandardNormal.sample(&mut rng);
            let w = w * sd[i];
            rhs[i] = match &mut shaping[i] {
                Some(f) => f.step(w),
                None => w,
            };
        }
        for (k, f) in filters.iter().enumerate() {
            pasts[k] = f.past();
            rhs[arcs[k].1] += pasts[k];
        }
        match &solve {
            Some(inv) => {
                for i in 0..n {
                    y[i] = (0..n).map(|j| inv[(i, j)] * rhs[j]).sum();
                }
            }
            None => y.copy_from_slice(&rhs),
        }
        for (k, f) in filters.iter_mut().enumerate() {
            f.push_with_past(y[arcs[k].0], pasts[k]);
        }
        if step >= burn_in {
            for i in 0..n {
                out[i].push(y[i]);
            }
        }
    }
    TimeSeriesPanel::from_channels(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dim_sim::lag_covariance;

    #[test]
    fn filter_state_matches_impulse_response() {
        let tf = TransferFunction::new(vec![1.0, 0.3], vec![1.0, -0.5, 0.06]).unwrap();
        let mut f = FilterState::new(&tf);
        let h: Vec<f64> = (0..10).map(|k| f.step(if k == 0 { 1.0 } else { 0.0 })).collect();
        let want = tf.impulse_response(10);
        for (a, b) in h.iter().zip(&want) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let mut s = DimSystem::new(3);
        s.set_arc(0, 1, TransferFunction::fir(vec![1.2, 0.9]).unwrap()).unwrap();
        s.set_arc(1, 2, TransferFunction::delay(1)).unwrap();
        let a = simulate_dim(&s, 500, 7, 100).unwrap();
        let b = simulate_dim(&s, 500, 7, 100).unwrap();
        let c = simulate_dim(&s, 500, 8, 100).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(simulate_dim(&s, 0, 7, 100).is_err());
    }

    #[test]
    fn white_noise_variance() {
        let p = simulate_dim(&DimSystem::new(2), 100_000, 1, 0).unwrap();
        for c in p.channels() {
            let v = c.iter().map(|x| x * x).sum::<f64>() / c.len() as f64;
            // sd of the sample variance is sqrt(2/T) ~ 0.0045
            assert!((v - 1.0).abs() < 0.0135, "variance {v}");
        }
    }

    #[test]
    fn instantaneous_chain_covariance() {
        let mut s = DimSystem::new(3);
        s.set_arc(0, 1, TransferFunction::fir(vec![1.0, 0.5]).unwrap()).unwrap();
        s.set_arc(1, 2, TransferFunction::constant(0.8)).unwrap();
        let p = simulate_dim(&s, 100_000, 3, 1000).unwrap();
        let r = lag_covariance(&s, 0, 1024).unwrap();
        for i in 0..3 {
            let c = p.channel(i);
            let v = c.iter().map(|x| x * x).sum::<f64>() / c.len() as f64;
            assert!((v / r[(i, i)] - 1.0).abs() < 0.05, "node {i}: {v} vs {}", r[(i, i)]);
        }
    }
}
