//! Second-order statistics of corrupted channels.
//!
//! Notation: `x_bar` is the state of the mean system driven by `y`,
//! `Δx = x - x_bar`, and `Δu = u - h * y` with `h` the impulse response of
//! the mean system. `r` is the autocorrelation of the clean channel for lags
//! `0..r.len()`, taken as zero beyond.

use num_complex::Complex64;

use super::{check_gen_lyapunov, lower_to_state_space, CorruptionError, CorruptionModel, RandomStateSpace};
use crate::dim_sim::{autocorrelation_from_psd, DimSystem};
use crate::linalg::{unit_delay, CMatrix, RMatrix};

/// How clean-channel autocorrelations are obtained from an exact spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AutocorrOptions {
    /// Points on the full circle for the inverse FFT.
    pub grid: usize,
    pub max_lag: usize,
    /// Lags are dropped once `|r[k]| < tail_tol * r[0]` for every later lag.
    pub tail_tol: f64,
}

impl Default for AutocorrOptions {
    fn default() -> Self {
        Self { grid: 4096, max_lag: 200, tail_tol: 1e-10 }
    }
}

/// Largest allowed `|r[last]| / r[0]` accepted by [`theta_spectrum`].
pub const TAIL_LIMIT: f64 = 1e-6;

#[inline]
pub fn r_at(r: &[f64], k: i64) -> f64 {
    r.get(k.unsigned_abs() as usize).copied().unwrap_or(0.0)
}

/// Drops the negligible tail of an autocorrelation sequence.
pub fn truncate_autocorr(mut r: Vec<f64>, tail_tol: f64) -> Vec<f64> {
    let r0 = r.first().copied().unwrap_or(0.0).abs();
    while r.len() > 1 && r.last().unwrap().abs() < tail_tol * r0 {
        r.pop();
    }
    r
}

/// Autocorrelation of node `i` of a network, from its exact spectrum.
///
/// Fails if the sequence has not decayed below [`TAIL_LIMIT`] of `r[0]` by
/// `opts.max_lag`.
pub fn channel_autocorr(sys: &DimSystem, i: usize, opts: AutocorrOptions) -> Result<Vec<f64>, CorruptionError> {
    crate::dim_sim::stability_diagnosis(sys, &[], crate::dim_sim::STABILITY_TOL)?;
    let r = autocorrelation_from_psd(
        |w| Ok(crate::dim_sim::psd_at(sys, w)?[(i, i)].re),
        opts.grid,
        opts.max_lag,
    )?;
    let r0 = r.first().copied().unwrap_or(0.0);
    if let Some(&last) = r.last() {
        if r.len() > 1 && last.abs() > TAIL_LIMIT * r0 {
            return Err(CorruptionError::Truncation(format!(
                "autocorrelation still at {:.2e} of r[0] at lag {}; raise the maximum lag",
                last.abs() / r0,
                r.len() - 1
            )));
        }
    }
    Ok(truncate_autocorr(r, opts.tail_tol))
}

fn check_r(r: &[f64]) -> Result<(), CorruptionError> {
    let r0 = *r.first().ok_or_else(|| CorruptionError::Truncation("empty autocorrelation".into()))?;
    if !(r0 > 0.0) || r.iter().any(|v| !v.is_finite()) {
        return Err(CorruptionError::Truncation("r[0] must be positive and all lags finite".into()));
    }
    if r.iter().skip(1).any(|v| v.abs() > r0 * (1.0 + 1e-9)) {
        return Err(CorruptionError::Truncation("|r[k]| exceeds r[0]; not an autocorrelation".into()));
    }
    Ok(())
}

/// Stationary moments shared by the Δx and Δu formulas.
#[derive(Debug, Clone)]
pub struct Moments {
    /// `E[x_bar x_bar^T]`
    pub r_xbar: RMatrix,
    /// `E[x_bar y]`
    pub r_xbar_y: RMatrix,
    /// `E[Δx Δx^T]`
    pub r_dx0: RMatrix,
    /// Covariance of `[x; y]`.
    pub sigma_x: RMatrix,
    pub a_bar: RMatrix,
    pub c_bar: RMatrix,
}

/// `E[[ΔP ΔQ] Σ [ΔR ΔS]^T]` over the mixture, with `f` picking the blocks.
fn delta_quadratic<F, G>(ss: &RandomStateSpace, sigma: &RMatrix, left: F, right: G) -> RMatrix
where
    F: Fn(&super::Outcome) -> RMatrix,
    G: Fn(&super::Outcome) -> RMatrix,
{
    let mean_l = ss.outcomes.iter().fold(None::<RMatrix>, |acc, o| {
        let v = left(o) * o.prob;
        Some(acc.map_or(v.clone(), |a| a + v))
    });
    let mean_r = ss.outcomes.iter().fold(None::<RMatrix>, |acc, o| {
        let v = right(o) * o.prob;
        Some(acc.map_or(v.clone(), |a| a + v))
    });
    let (ml, mr) = (mean_l.unwrap(), mean_r.unwrap());
    let mut out = RMatrix::zeros(ml.nrows(), mr.nrows());
    for o in &ss.outcomes {
        let dl = left(o) - &ml;
        let dr = right(o) - &mr;
        out += (dl * sigma * dr.transpose()) * o.prob;
    }
    out
}

fn ab(o: &super::Outcome) -> RMatrix {
    let nx = o.a.nrows();
    let mut m = RMatrix::zeros(nx, nx + 1);
    m.view_mut((0, 0), (nx, nx)).copy_from(&o.a);
    m.view_mut((0, nx), (nx, 1)).copy_from(&o.b);
    m
}

fn cd(o: &super::Outcome) -> RMatrix {
    let nx = o.a.nrows();
    let mut m = RMatrix::zeros(1, nx + 1);
    m.view_mut((0, 0), (1, nx)).copy_from(&o.c);
    m[(0, nx)] = o.d;
    m
}

pub fn moments(ss: &RandomStateSpace, r: &[f64]) -> Result<Moments, CorruptionError> {
    ss.validate()?;
    let nx = ss.state_dim();
    let (a_bar, b_bar, c_bar, _) = ss.mean();
    let lag_max = r.len() as i64 - 1;

    // g_k = A^{k-1} B for k = 1..K until the powers are negligible
    let mut g: Vec<RMatrix> = Vec::new();
    if nx > 0 {
        let scale = 1.0 + b_bar.abs().max();
        let mut cur = b_bar.clone();
        let mut pow = RMatrix::identity(nx, nx);
        for k in 1..=100_000usize {
            g.push(cur.clone());
            cur = &a_bar * cur;
            pow = &a_bar * pow;
            if k >= nx && pow.abs().max() * scale < 1e-17 {
                break;
            }
            if k == 100_000 {
                return Err(CorruptionError::UnstableMean(crate::linalg::spectral_radius(&a_bar)));
            }
        }
    }
    let kk = g.len() as i64;
    let mut r_xbar = RMatrix::zeros(nx, nx);
    let mut r_xbar_y = RMatrix::zeros(nx, 1);
    for k in 1..=kk {
        let gk = &g[(k - 1) as usize];
        r_xbar_y += gk * r_at(r, k);
        let lo = (k - lag_max).max(1);
        let hi = (k + lag_max).min(kk);
        for l in lo..=hi {
            r_xbar += gk * g[(l - 1) as usize].transpose() * r_at(r, l - k);
        }
    }
    let r_xbar = (&r_xbar + r_xbar.transpose()) * 0.5;

    let mut sigma_bar = RMatrix::zeros(nx + 1, nx + 1);
    sigma_bar.view_mut((0, 0), (nx, nx)).copy_from(&r_xbar);
    sigma_bar.view_mut((0, nx), (nx, 1)).copy_from(&r_xbar_y);
    sigma_bar.view_mut((nx, 0), (1, nx)).copy_from(&r_xbar_y.transpose());
    sigma_bar[(nx, nx)] = r[0];

    let q = &ss.w + delta_quadratic(ss, &sigma_bar, ab, ab);
    let r_dx0 = check_gen_lyapunov(ss, &q)?;
    let mut sigma_x = sigma_bar;
    {
        let mut tl = sigma_x.view_mut((0, 0), (nx, nx));
        tl += &r_dx0;
    }
    Ok(Moments { r_xbar, r_xbar_y, r_dx0, sigma_x, a_bar, c_bar })
}

/// `E[Δx[t+k] Δx[t]^T]` for `k = 0..=max_lag`.
pub fn delta_x_autocorr(ss: &RandomStateSpace, r: &[f64], max_lag: usize) -> Result<Vec<RMatrix>, CorruptionError> {
    let m = moments(ss, r)?;
    let mut out = Vec::with_capacity(max_lag + 1);
    let mut cur = m.r_dx0.clone();
    for _ in 0..=max_lag {
        out.push(cur.clone());
        cur = &m.a_bar * cur;
    }
    Ok(out)
}

/// Scalar pieces of the Δu autocorrelation:
/// `R[0] = r0`, `R[k] = C A^k X + C A^{k-1} M` for `k > 0`.
struct DeltaU {
    r0: f64,
    /// `R_Δx[0] C^T`
    x: RMatrix,
    /// `S + E[[ΔA ΔB] Σx [ΔC ΔD]^T]`
    m: RMatrix,
    a_bar: RMatrix,
    c_bar: RMatrix,
}

fn delta_u_parts(ss: &RandomStateSpace, r: &[f64]) -> Result<DeltaU, CorruptionError> {
    let mo = moments(ss, r)?;
    let lag0 = (&mo.c_bar * &mo.r_dx0 * mo.c_bar.transpose())[(0, 0)]
        + ss.v
        + delta_quadratic(ss, &mo.sigma_x, cd, cd)[(0, 0)];
    let m = &ss.s + delta_quadratic(ss, &mo.sigma_x, ab, cd);
    Ok(DeltaU { r0: lag0, x: &mo.r_dx0 * mo.c_bar.transpose(), m, a_bar: mo.a_bar, c_bar: mo.c_bar })
}

/// `E[Δu[t+k] Δu[t]]` for `k = 0..=max_lag` (even in `k`).
pub fn delta_u_autocorr(ss: &RandomStateSpace, r: &[f64], max_lag: usize) -> Result<Vec<f64>, CorruptionError> {
    let p = delta_u_parts(ss, r)?;
    let mut out = vec![p.r0];
    let mut ak = p.a_bar.clone(); // A^k
    let mut akm1 = RMatrix::identity(p.a_bar.nrows(), p.a_bar.ncols()); // A^{k-1}
    for _ in 1..=max_lag {
        out.push((&p.c_bar * &ak * &p.x)[(0, 0)] + (&p.c_bar * &akm1 * &p.m)[(0, 0)]);
        akm1 = ak.clone();
        ak = &p.a_bar * ak;
    }
    Ok(out)
}

/// `theta(w) = sum_k R_Δu[k] e^{-jwk}` summed in closed form:
/// `R[0] + 2 Re[C (I - zA)^-1 z (A X + M)]`, `z = e^{-jw}`.
pub fn theta_general(ss: &RandomStateSpace, r: &[f64], freqs: &[f64]) -> Result<Vec<f64>, CorruptionError> {
    let p = delta_u_parts(ss, r)?;
    let nx = p.a_bar.nrows();
    if nx == 0 {
        return Ok(vec![p.r0; freqs.len()]);
    }
    let cplx = |m: &RMatrix| m.map(|v| Complex64::new(v, 0.0));
    let a = cplx(&p.a_bar);
    let c = cplx(&p.c_bar);
    let rhs = cplx(&(&p.a_bar * &p.x + &p.m));
    freqs
        .iter()
        .map(|&w| {
            let z = unit_delay(w);
            let lhs = CMatrix::identity(nx, nx) - &a * z;
            let sol = lhs.lu().solve(&(&rhs * z)).ok_or(CorruptionError::UnstableMean(1.0))?;
            Ok(p.r0 + 2.0 * (&c * sol)[(0, 0)].re)
        })
        .collect()
}

/// Lag-0 Δu variance of a random delay: `r0 - p^T T p`, `T_ab = r(|d_a - d_b|)`.
pub fn delay_delta_u0(delays: &[usize], probs: &[f64], r: &[f64]) -> f64 {
    let mut quad = 0.0;
    for (a, &pa) in delays.iter().zip(probs) {
        for (b, &pb) in delays.iter().zip(probs) {
            quad += pa * pb * r_at(r, *a as i64 - *b as i64);
        }
    }
    r[0] - quad
}

/// Autocorrelation at lag `t` of the mean-filtered packet-drop stream
/// `(h * r * h~)[t]`, as the double sum
/// `sum_{j <= |t|} sum_{k >= j} p^2 q^{|t|+k-2j} r(k)`, `q = 1 - p`.
///
/// With `r` zero beyond lag `L`, every `j <= -L` sees the full window
/// `k = -L..=L`; those terms form a geometric series in `q^2` and are
/// summed in closed form.
pub fn packet_mean_autocorr(r: &[f64], p: f64, t: i64) -> f64 {
    let q = 1.0 - p;
    let t = t.abs();
    let l = r.len() as i64 - 1;
    let mut s = 0.0;
    for j in (-l + 1)..=t {
        for k in j.max(-l)..=l {
            s += q.powi((t + k - 2 * j) as i32) * r_at(r, k);
        }
    }
    let mut tail = 0.0;
    for k in -l..=l {
        tail += q.powi((t + k + 2 * l) as i32) * r_at(r, k);
    }
    p * p * (s + tail / (1.0 - q * q))
}

/// Autocorrelation of the packet-drop output by unrolling the hold recursion:
/// `q^{|t|} r0 + sum_{j=1}^{|t|} sum_{k>=j} p^2 q^{|t|+k-2j} r(k)`.
pub fn packet_delta_autocorr(r: &[f64], p: f64, t: i64) -> f64 {
    let q = 1.0 - p;
    let t = t.abs();
    let l = r.len() as i64 - 1;
    let mut s = 0.0;
    for j in 1..=t {
        for k in j..=l {
            s += q.powi((t + k - 2 * j) as i32) * r_at(r, k);
        }
    }
    q.powi(t as i32) * r[0] + p * p * s
}

/// The constant `p^2/(1-q^2) (r0 + 2 sum_{k>=1} q^k r(k))`, which equals
/// `(h * r * h~)[0]`.
fn packet_dsum(r: &[f64], p: f64) -> f64 {
    let q = 1.0 - p;
    let tail: f64 = (1..r.len()).map(|k| q.powi(k as i32) * r[k]).sum();
    p * p / (1.0 - q * q) * (r[0] + 2.0 * tail)
}

/// `R_Δu[t] = q^{|t|} (r0 - Dsum)` for packet drops.
pub fn packet_theta_lag(r: &[f64], p: f64, t: i64) -> f64 {
    (1.0 - p).powi(t.unsigned_abs() as i32) * (r[0] - packet_dsum(r, p))
}

/// `theta(w) = (1 - q^2)(r0 - Dsum) / |1 - q e^{-jw}|^2` for packet drops.
pub fn packet_theta(r: &[f64], p: f64, freqs: &[f64]) -> Vec<f64> {
    let q = 1.0 - p;
    let c = (1.0 - q * q) * (r[0] - packet_dsum(r, p));
    freqs.iter().map(|&w| c / (1.0 - q * unit_delay(w)).norm_sqr()).collect()
}

/// Spectrum of `Δu` on `freqs`, using the specialised closed form where one exists.
/// Lags past the end of `r` are taken as zero.
pub fn theta_spectrum(m: &CorruptionModel, r: &[f64], freqs: &[f64]) -> Result<Vec<f64>, CorruptionError> {
    check_r(r)?;
    match m {
        CorruptionModel::MeasurementNoise { variance, shaping } | CorruptionModel::Disinformation { variance, shaping } => {
            lower_to_state_space(m)?;
            let theta: Vec<f64> = match shaping {
                None => vec![*variance; freqs.len()],
                Some(s) => freqs
                    .iter()
                    .map(|&w| Ok(variance * s.eval(w)?.norm_sqr()))
                    .collect::<Result<_, CorruptionError>>()?,
            };
            Ok(theta)
        }
        CorruptionModel::RandomDelay { delays, probs } => {
            lower_to_state_space(m)?;
            Ok(vec![delay_delta_u0(delays, probs, r); freqs.len()])
        }
        CorruptionModel::PacketDrop { p } => {
            lower_to_state_space(m)?;
            Ok(packet_theta(r, *p, freqs))
        }
        CorruptionModel::StateSpace(_) => theta_general(&lower_to_state_space(m)?, r, freqs),
    }
}
