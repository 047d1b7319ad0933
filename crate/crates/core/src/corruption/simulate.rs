use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{check_gen_lyapunov, lower_to_state_space, CorruptionError, CorruptionModel, RandomStateSpace};
use crate::linalg::{psd_sqrt, RMatrix};

/// Runs the corruption of one channel forward from `x[0] = 0`.
pub fn apply_corruption(m: &CorruptionModel, y: &[f64], seed: u64) -> Result<Vec<f64>, CorruptionError> {
    let ss = lower_to_state_space(m)?;
    apply_state_space(&ss, y, seed)
}

/// Same as [`apply_corruption`] on an already lowered model.
///
/// Per step the RNG first draws a uniform for the mixture outcome, then
/// `nx + 1` standard normals for `(w, v)` when the noise is nonzero.
pub fn apply_state_space(ss: &RandomStateSpace, y: &[f64], seed: u64) -> Result<Vec<f64>, CorruptionError> {
    ss.validate()?;
    let nx = ss.state_dim();
    check_gen_lyapunov(ss, &RMatrix::identity(nx, nx))?;

    // flat row-major copies for the inner loop
    let outs: Vec<Flat> = ss.outcomes.iter().map(Flat::new).collect();
    let mut cdf = Vec::with_capacity(outs.len());
    let mut acc = 0.0;
    for o in &ss.outcomes {
        acc += o.prob;
        cdf.push(acc);
    }
    let noise_cov = ss.joint_noise_cov();
    let chol = if noise_cov.iter().any(|&v| v != 0.0) {
        let l = psd_sqrt(&noise_cov, 1e-10).ok_or_else(|| CorruptionError::Invalid("noise covariance not PSD".into()))?;
        Some(l)
    } else {
        None
    };

    let single = outs.len() == 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0.0; nx];
    let mut xn = vec![0.0; nx];
    let mut eps = vec![0.0; nx + 1];
    let mut noise = vec![0.0; nx + 1];
    let mut u = Vec::with_capacity(y.len());
    for &yt in y {
        let k = if single {
            0
        } else {
            let r: f64 = rng.random();
            cdf.iter().position(|&c| r < c).unwrap_or(outs.len() - 1)
        };
        if let Some(l) = &chol {
            for e in eps.iter_mut() {
                *e = StandardNormal.sample(&mut rng);
            }
            for i in 0..=nx {
                noise[i] = (0..=nx).map(|j| l[(i, j)] * eps[j]).sum();
            }
        }
        let o = &outs[k];
        let mut ut = o.d * yt + noise[nx];
        ut += o.c.iter().zip(&x).map(|(c, xj)| c * xj).sum::<f64>();
        for (i, xi) in xn.iter_mut().enumerate() {
            let row = &o.a[i * nx..(i + 1) * nx];
            *xi = o.b[i] * yt + noise[i] + row.iter().zip(&x).map(|(a, xj)| a * xj).sum::<f64>();
        }
        std::mem::swap(&mut x, &mut xn);
        u.push(ut);
    }
    Ok(u)
}

struct Flat {
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    d: f64,
}

impl Flat {
    fn new(o: &super::Outcome) -> Self {
        let nx = o.a.nrows();
        let a = (0..nx * nx).map(|k| o.a[(k / nx, k % nx)]).collect();
        Flat { a, b: o.b.iter().copied().collect(), c: o.c.iter().copied().collect(), d: o.d }
    }
}
