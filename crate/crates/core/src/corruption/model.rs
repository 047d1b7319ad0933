use serde::{Deserialize, Serialize};

use super::CorruptionError;
use crate::dim_sim::TransferFunction;
use crate::linalg::{char_poly, kron, psd_sqrt, spectral_radius, RMatrix};

/// One mixture component of the IID matrix distribution of a scalar channel:
/// `x[t+1] = A x + B y + w`, `u = C x + D y + v`.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub prob: f64,
    pub a: RMatrix,
    /// `nx x 1`
    pub b: RMatrix,
    /// `1 x nx`
    pub c: RMatrix,
    pub d: f64,
}

/// Random state-space corruption of one scalar channel.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomStateSpace {
    pub outcomes: Vec<Outcome>,
    /// State noise covariance, `nx x nx`.
    pub w: RMatrix,
    /// Cross covariance `E[w v]`, `nx x 1`.
    pub s: RMatrix,
    /// Output noise variance.
    pub v: f64,
}

impl RandomStateSpace {
    pub fn state_dim(&self) -> usize {
        self.w.nrows()
    }

    pub fn validate(&self) -> Result<(), CorruptionError> {
        let nx = self.state_dim();
        if self.outcomes.is_empty() {
            return Err(CorruptionError::Invalid("no outcomes".into()));
        }
        let total: f64 = self.outcomes.iter().map(|o| o.prob).sum();
        if self.outcomes.iter().any(|o| !(o.prob > 0.0)) || (total - 1.0).abs() > 1e-9 {
            return Err(CorruptionError::Invalid(format!("probabilities must be positive and sum to 1 (sum {total})")));
        }
        for o in &self.outcomes {
            if o.a.shape() != (nx, nx) || o.b.shape() != (nx, 1) || o.c.shape() != (1, nx) {
                return Err(CorruptionError::Invalid(format!("outcome matrices inconsistent with state dim {nx}")));
            }
        }
        if self.w.shape() != (nx, nx) || self.s.shape() != (nx, 1) {
            return Err(CorruptionError::Invalid("noise covariance blocks inconsistent".into()));
        }
        if psd_sqrt(&self.joint_noise_cov(), 1e-10).is_none() {
            return Err(CorruptionError::Invalid("joint noise covariance is not PSD".into()));
        }
        Ok(())
    }

    /// `[[W, S], [S^T, V]]`.
    pub fn joint_noise_cov(&self) -> RMatrix {
        let nx = self.state_dim();
        let mut m = RMatrix::zeros(nx + 1, nx + 1);
        m.view_mut((0, 0), (nx, nx)).copy_from(&self.w);
        m.view_mut((0, nx), (nx, 1)).copy_from(&self.s);
        m.view_mut((nx, 0), (1, nx)).copy_from(&self.s.transpose());
        m[(nx, nx)] = self.v;
        m
    }

    /// Mean matrices `(A, B, C, D)`.
    pub fn mean(&self) -> (RMatrix, RMatrix, RMatrix, f64) {
        let nx = self.state_dim();
        let mut a = RMatrix::zeros(nx, nx);
        let mut b = RMatrix::zeros(nx, 1);
        let mut c = RMatrix::zeros(1, nx);
        let mut d = 0.0;
        for o in &self.outcomes {
            a += &o.a * o.prob;
            b += &o.b * o.prob;
            c += &o.c * o.prob;
            d += o.d * o.prob;
        }
        (a, b, c, d)
    }

    /// `E[A kron A]`.
    pub fn second_moment(&self) -> RMatrix {
        let nx = self.state_dim();
        let mut m = RMatrix::zeros(nx * nx, nx * nx);
        for o in &self.outcomes {
            m += kron(&o.a, &o.a) * o.prob;
        }
        m
    }
}

/// Per-node data corruption, in the forms exposed to configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CorruptionModel {
    /// `u[t] = y[t - d]`, `d` drawn IID with the given probabilities.
    RandomDelay { delays: Vec<usize>, probs: Vec<f64> },
    /// `u = y + v`, `v` white with `variance` or shaped by `shaping`.
    MeasurementNoise {
        variance: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        shaping: Option<TransferFunction>,
    },
    /// `u[t] = y[t]` with probability `p`, else `u[t - 1]`.
    PacketDrop { p: f64 },
    /// `u = v`: the stream carries no information about `y`.
    Disinformation {
        variance: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        shaping: Option<TransferFunction>,
    },
    StateSpace(RawStateSpace),
}

/// Serialized form of [`RandomStateSpace`], matrices as row lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawStateSpace {
    pub outcomes: Vec<RawOutcome>,
    #[serde(default)]
    pub w: Vec<Vec<f64>>,
    #[serde(default)]
    pub s: Vec<f64>,
    #[serde(default)]
    pub v: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawOutcome {
    pub prob: f64,
    #[serde(default)]
    pub a: Vec<Vec<f64>>,
    #[serde(default)]
    pub b: Vec<f64>,
    #[serde(default)]
    pub c: Vec<f64>,
    pub d: f64,
}

fn rows(m: &[Vec<f64>], nx: usize, what: &str) -> Result<RMatrix, CorruptionError> {
    if m.is_empty() && nx > 0 {
        return Ok(RMatrix::zeros(nx, nx));
    }
    if m.len() != nx || m.iter().any(|r| r.len() != nx) {
        return Err(CorruptionError::Invalid(format!("{what} must be {nx}x{nx}")));
    }
    Ok(RMatrix::from_fn(nx, nx, |i, j| m[i][j]))
}

fn vector(v: &[f64], nx: usize, what: &str) -> Result<Vec<f64>, CorruptionError> {
    if v.is_empty() {
        return Ok(vec![0.0; nx]);
    }
    if v.len() != nx {
        return Err(CorruptionError::Invalid(format!("{what} must have length {nx}")));
    }
    Ok(v.to_vec())
}

impl RawStateSpace {
    pub fn to_state_space(&self) -> Result<RandomStateSpace, CorruptionError> {
        let nx = self
            .outcomes
            .iter()
            .map(|o| o.a.len().max(o.b.len()).max(o.c.len()))
            .chain([self.w.len(), self.s.len()])
            .max()
            .unwrap_or(0);
        let outcomes = self
            .outcomes
            .iter()
            .map(|o| {
                Ok(Outcome {
                    prob: o.prob,
                    a: rows(&o.a, nx, "a")?,
                    b: RMatrix::from_column_slice(nx, 1, &vector(&o.b, nx, "b")?),
                    c: RMatrix::from_row_slice(1, nx, &vector(&o.c, nx, "c")?),
                    d: o.d,
                })
            })
            .collect::<Result<Vec<_>, CorruptionError>>()?;
        let ss = RandomStateSpace {
            outcomes,
            w: rows(&self.w, nx, "w")?,
            s: RMatrix::from_column_slice(nx, 1, &vector(&self.s, nx, "s")?),
            v: self.v,
        };
        ss.validate()?;
        Ok(ss)
    }
}

impl From<&RandomStateSpace> for RawStateSpace {
    fn from(ss: &RandomStateSpace) -> Self {
        let m2v = |m: &RMatrix| -> Vec<Vec<f64>> {
            (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
        };
        RawStateSpace {
            outcomes: ss
                .outcomes
                .iter()
                .map(|o| RawOutcome {
                    prob: o.prob,
                    a: m2v(&o.a),
                    b: o.b.iter().copied().collect(),
                    c: o.c.iter().copied().collect(),
                    d: o.d,
                })
                .collect(),
            w: m2v(&ss.w),
            s: ss.s.iter().copied().collect(),
            v: ss.v,
        }
    }
}

impl CorruptionModel {
    pub fn delay(pairs: &[(usize, f64)]) -> Self {
        CorruptionModel::RandomDelay {
            delays: pairs.iter().map(|p| p.0).collect(),
            probs: pairs.iter().map(|p| p.1).collect(),
        }
    }

    pub fn validate(&self) -> Result<(), CorruptionError> {
        lower_to_state_space(self).map(|_| ())
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CorruptionModel::RandomDelay { .. } => "random_delay",
            CorruptionModel::MeasurementNoise { .. } => "measurement_noise",
            CorruptionModel::PacketDrop { .. } => "packet_drop",
            CorruptionModel::Disinformation { .. } => "disinformation",
            CorruptionModel::StateSpace(_) => "state_space",
        }
    }
}

/// Controller-canonical realization `(A, K, L, M)` of a stable shaping filter:
/// `xf[t+1] = A xf + K e`, `out = L xf + M e`.
fn shaping_realization(tf: &TransferFunction) -> (RMatrix, RMatrix, RMatrix, f64) {
    let d0 = tf.den()[0];
    let n = tf.num().len().max(tf.den().len()) - 1;
    let coef = |c: &[f64], k: usize| c.get(k).copied().unwrap_or(0.0) / d0;
    let b0 = coef(tf.num(), 0);
    let mut a = RMatrix::zeros(n, n);
    let mut l = RMatrix::zeros(1, n);
    for k in 1..=n {
        a[(0, k - 1)] = -coef(tf.den(), k);
        l[(0, k - 1)] = coef(tf.num(), k) - b0 * coef(tf.den(), k);
    }
    for k in 1..n {
        a[(k, k - 1)] = 1.0;
    }
    let mut kk = RMatrix::zeros(n, 1);
    if n > 0 {
        kk[(0, 0)] = 1.0;
    }
    (a, kk, l, b0)
}

fn additive_noise(variance: f64, shaping: &Option<TransferFunction>, d: f64) -> Result<RandomStateSpace, CorruptionError> {
    if !(variance >= 0.0 && variance.is_finite()) {
        return Err(CorruptionError::Invalid(format!("noise variance {variance} must be nonnegative")));
    }
    let (a, k, l, m) = match shaping {
        None => (RMatrix::zeros(0, 0), RMatrix::zeros(0, 1), RMatrix::zeros(1, 0), 1.0),
        Some(tf) => {
            if !tf.is_stable() {
                return Err(CorruptionError::Invalid("noise shaping filter is unstable".into()));
            }
            shaping_realization(tf)
        }
    };
    let nx = a.nrows();
    Ok(RandomStateSpace {
        outcomes: vec![Outcome { prob: 1.0, a, b: RMatrix::zeros(nx, 1), c: l, d }],
        w: &k * k.transpose() * variance,
        s: &k * (m * variance),
        v: m * m * variance,
    })
}

/// Lowers a corruption to its random state-space form.
pub fn lower_to_state_space(m: &CorruptionModel) -> Result<RandomStateSpace, CorruptionError> {
    match m {
        CorruptionModel::RandomDelay { delays, probs } => {
            if delays.is_empty() || delays.len() != probs.len() {
                return Err(CorruptionError::Invalid("delays and probs must be nonempty and equally long".into()));
            }
            let mut seen = std::collections::BTreeSet::new();
            if !delays.iter().all(|d| seen.insert(*d)) {
                return Err(CorruptionError::Invalid("repeated delay value".into()));
            }
            // shift register x_k[t] = y[t - k], k = 1..=L
            let nx = *delays.iter().max().unwrap();
            let mut a = RMatrix::zeros(nx, nx);
            for k in 1..nx {
                a[(k, k - 1)] = 1.0;
            }
            let mut b = RMatrix::zeros(nx, 1);
            if nx > 0 {
                b[(0, 0)] = 1.0;
            }
            let outcomes = delays
                .iter()
                .zip(probs)
                .map(|(&d, &p)| {
                    let mut c = RMatrix::zeros(1, nx);
                    if d > 0 {
                        c[(0, d - 1)] = 1.0;
                    }
                    Outcome { prob: p, a: a.clone(), b: b.clone(), c, d: if d == 0 { 1.0 } else { 0.0 } }
                })
                .collect();
            let ss = RandomStateSpace { outcomes, w: RMatrix::zeros(nx, nx), s: RMatrix::zeros(nx, 1), v: 0.0 };
            ss.validate()?;
            Ok(ss)
        }
        CorruptionModel::MeasurementNoise { variance, shaping } => additive_noise(*variance, shaping, 1.0),
        CorruptionModel::Disinformation { variance, shaping } => additive_noise(*variance, shaping, 0.0),
        CorruptionModel::PacketDrop { p } => {
            if !(*p > 0.0 && *p <= 1.0) {
                return Err(CorruptionError::Invalid(format!("success probability {p} outside (0, 1]")));
            }
            let one = |v: f64| RMatrix::from_element(1, 1, v);
            let mut outcomes = vec![Outcome { prob: *p, a: one(0.0), b: one(1.0), c: one(0.0), d: 1.0 }];
            if *p < 1.0 {
                outcomes.push(Outcome { prob: 1.0 - p, a: one(1.0), b: one(0.0), c: one(1.0), d: 0.0 });
            }
            Ok(RandomStateSpace { outcomes, w: one(0.0), s: one(0.0), v: 0.0 })
        }
        CorruptionModel::StateSpace(raw) => raw.to_state_space(),
    }
}

/// Solves `P = E[A P A^T] + Q` through `(I - E[A kron A]) vec P = vec Q`.
pub fn check_gen_lyapunov(ss: &RandomStateSpace, q: &RMatrix) -> Result<RMatrix, CorruptionError> {
    let nx = ss.state_dim();
    if q.shape() != (nx, nx) {
        return Err(CorruptionError::Invalid(format!("Q must be {nx}x{nx}")));
    }
    if nx == 0 {
        return Ok(RMatrix::zeros(0, 0));
    }
    let m = ss.second_moment();
    let rho = spectral_radius(&m);
    if rho >= 1.0 - 1e-12 {
        return Err(CorruptionError::NotContractive(rho));
    }
    let lhs = RMatrix::identity(nx * nx, nx * nx) - m;
    // nalgebra storage is column-major, so this is vec(Q)
    let rhs = nalgebra::DVector::from_column_slice(q.as_slice());
    let sol = lhs.lu().solve(&rhs).ok_or(CorruptionError::NotContractive(rho))?;
    let p = RMatrix::from_column_slice(nx, nx, sol.as_slice());
    Ok((&p + p.transpose()) * 0.5)
}

/// Transfer function `H(z) = D + C (zI - A)^-1 B` of the mean system.
pub fn mean_tf(m: &CorruptionModel) -> Result<TransferFunction, CorruptionError> {
    let ss = lower_to_state_space(m)?;
    mean_tf_of(&ss)
}

pub fn mean_tf_of(ss: &RandomStateSpace) -> Result<TransferFunction, CorruptionError> {
    let (a, b, c, d) = ss.mean();
    let nx = a.nrows();
    if nx == 0 || b.iter().all(|&v| v == 0.0) || c.iter().all(|&v| v == 0.0) {
        return Ok(TransferFunction::constant(d));
    }
    let rho = spectral_radius(&a);
    if rho >= 1.0 {
        return Err(CorruptionError::UnstableMean(rho));
    }
    let den = char_poly(&a);
    // Markov parameters h_0 = D, h_k = C A^{k-1} B
    let mut h = vec![d];
    let mut g = b.clone();
    for _ in 0..nx {
        h.push((&c * &g)[(0, 0)]);
        g = &a * g;
    }
    let num: Vec<f64> = (0..=nx)
        .map(|k| (0..=k).map(|i| h[i] * den[k - i]).sum::<f64>())
        .map(|v| if v.abs() < 1e-14 { 0.0 } else { v })
        .collect();
    Ok(TransferFunction::new(num, den).expect("monic denominator"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dim_sim::eval_tf;
    use std::f64::consts::PI;

    #[test]
    fn packet_drop_lowering() {
        let ss = lower_to_state_space(&CorruptionModel::PacketDrop { p: 0.75 }).unwrap();
        assert_eq!(ss.outcomes.len(), 2);
        let (s, f) = (&ss.outcomes[0], &ss.outcomes[1]);
        assert_eq!((s.prob, s.a[(0, 0)], s.b[(0, 0)], s.c[(0, 0)], s.d), (0.75, 0.0, 1.0, 0.0, 1.0));
        assert_eq!((f.prob, f.a[(0, 0)], f.b[(0, 0)], f.c[(0, 0)], f.d), (0.25, 1.0, 0.0, 1.0, 0.0));
        assert!(lower_to_state_space(&CorruptionModel::PacketDrop { p: 0.0 }).is_err());
    }

    #[test]
    fn delay_lowering() {
        let ss = lower_to_state_space(&CorruptionModel::delay(&[(1, 0.35), (3, 0.65)])).unwrap();
        assert_eq!(ss.state_dim(), 3);
        assert_eq!(ss.outcomes[0].c, RMatrix::from_row_slice(1, 3, &[1.0, 0.0, 0.0]));
        assert_eq!(ss.outcomes[1].c, RMatrix::from_row_slice(1, 3, &[0.0, 0.0, 1.0]));
        let unit = lower_to_state_space(&CorruptionModel::delay(&[(1, 1.0)])).unwrap();
        assert_eq!(unit.outcomes.len(), 1);
        assert!(lower_to_state_space(&CorruptionModel::delay(&[(1, 0.5), (2, 0.4)])).is_err());
        assert!(lower_to_state_space(&CorruptionModel::delay(&[])).is_err());
    }

    #[test]
    fn mean_tf_examples() {
        let h = mean_tf(&CorruptionModel::delay(&[(1, 0.2), (2, 0.3), (3, 0.5)])).unwrap();
        assert_eq!(h.num(), &[0.0, 0.2, 0.3, 0.5]);
        assert_eq!(h.den(), &[1.0]);

        let p = 0.3;
        let h = mean_tf(&CorruptionModel::PacketDrop { p }).unwrap();
        for w in [0.0, 0.7, PI] {
            let want = p / (1.0 - (1.0 - p) * crate::linalg::unit_delay(w));
            assert!((eval_tf(&h, w).unwrap() - want).norm() < 1e-12);
        }

        let h = mean_tf(&CorruptionModel::MeasurementNoise { variance: 2.0, shaping: None }).unwrap();
        assert_eq!(h, TransferFunction::constant(1.0));
        let shaped = TransferFunction::new(vec![1.0, 0.4], vec![1.0, -0.5]).unwrap();
        let h = mean_tf(&CorruptionModel::MeasurementNoise { variance: 2.0, shaping: Some(shaped.clone()) }).unwrap();
        assert_eq!(h, TransferFunction::constant(1.0));
        let h = mean_tf(&CorruptionModel::Disinformation { variance: 1.0, shaping: Some(shaped) }).unwrap();
        assert!(h.is_zero());
    }

    #[test]
    fn shaping_realization_matches_filter() {
        let tf = TransferFunction::new(vec![0.5, 0.4, -0.1], vec![2.0, -0.6, 0.1]).unwrap();
        let (a, k, l, m) = shaping_realization(&tf);
        let h = tf.impulse_response(8);
        assert!((h[0] - m).abs() < 1e-14);
        let mut g = k.clone();
        for (t, ht) in h.iter().enumerate().skip(1) {
            assert!(((&l * &g)[(0, 0)] - ht).abs() < 1e-14, "lag {t}");
            g = &a * g;
        }
    }

    #[test]
    fn lyapunov_examples() {
        let ss = lower_to_state_space(&CorruptionModel::PacketDrop { p: 0.4 }).unwrap();
        let q = RMatrix::from_element(1, 1, 0.7);
        let p = check_gen_lyapunov(&ss, &q).unwrap();
        assert!((p[(0, 0)] - 0.7 / 0.4).abs() < 1e-12);

        // deterministic stable A reduces to the ordinary discrete Lyapunov equation
        let a = RMatrix::from_row_slice(2, 2, &[0.5, 0.2, -0.1, 0.3]);
        let det = RandomStateSpace {
            outcomes: vec![Outcome { prob: 1.0, a: a.clone(), b: RMatrix::zeros(2, 1), c: RMatrix::zeros(1, 2), d: 0.0 }],
            w: RMatrix::zeros(2, 2),
            s: RMatrix::zeros(2, 1),
            v: 0.0,
        };
        let q = RMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 2.0]);
        let p = check_gen_lyapunov(&det, &q).unwrap();
        assert!((&a * &p * a.transpose() + &q - &p).abs().max() < 1e-12);

        let unit = RandomStateSpace {
            outcomes: vec![Outcome {
                prob: 1.0,
                a: RMatrix::from_element(1, 1, 1.0),
                b: RMatrix::zeros(1, 1),
                c: RMatrix::zeros(1, 1),
                d: 0.0,
            }],
            w: RMatrix::zeros(1, 1),
            s: RMatrix::zeros(1, 1),
            v: 0.0,
        };
        assert!(matches!(
            check_gen_lyapunov(&unit, &RMatrix::from_element(1, 1, 1.0)),
            Err(CorruptionError::NotContractive(_))
        ));
    }

    #[test]
    fn raw_state_space_round_trip() {
        let ss = lower_to_state_space(&CorruptionModel::delay(&[(0, 0.5), (2, 0.5)])).unwrap();
        let raw = RawStateSpace::from(&ss);
        let m = CorruptionModel::StateSpace(raw);
        let text = serde_json::to_string(&m).unwrap();
        let back: CorruptionModel = serde_json::from_str(&text).unwrap();
        assert_eq!(lower_to_state_space(&back).unwrap(), ss);
    }
}
