use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::DimError;
use crate::linalg::unit_delay;

/// Rational function in `z^-1`: `num[k]` and `den[k]` multiply `z^-k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTf", into = "RawTf")]
pub struct TransferFunction {
    num: Vec<f64>,
    den: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawTf {
    num: Vec<f64>,
    #[serde(default = "one")]
    den: Vec<f64>,
}

fn one() -> Vec<f64> {
    vec![1.0]
}

impl TryFrom<RawTf> for TransferFunction {
    type Error = DimError;
    fn try_from(r: RawTf) -> Result<Self, DimError> {
        TransferFunction::new(r.num, r.den)
    }
}

impl From<TransferFunction> for RawTf {
    fn from(t: TransferFunction) -> Self {
        RawTf { num: t.num, den: t.den }
    }
}

impl TransferFunction {
    pub fn new(num: Vec<f64>, den: Vec<f64>) -> Result<Self, DimError> {
        if den.is_empty() || den[0] == 0.0 {
            return Err(DimError::InvalidTf("den[0] must be nonzero".into()));
        }
        if num.iter().chain(den.iter()).any(|c| !c.is_finite()) {
            return Err(DimError::InvalidTf("non-finite coefficient".into()));
        }
        let mut num = num;
        if num.is_empty() {
            num.push(0.0);
        }
        let mut den = den;
        trim(&mut num);
        trim(&mut den);
        Ok(Self { num, den })
    }

    pub fn fir(coeffs: Vec<f64>) -> Result<Self, DimError> {
        Self::new(coeffs, vec![1.0])
    }

    pub fn constant(g: f64) -> Self {
        Self { num: vec![g], den: vec![1.0] }
    }

    /// `z^-k`.
    pub fn delay(k: usize) -> Self {
        let mut num = vec![0.0; k + 1];
        num[k] = 1.0;
        Self { num, den: vec![1.0] }
    }

    pub fn num(&self) -> &[f64] {
        &self.num
    }

    pub fn den(&self) -> &[f64] {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.iter().all(|&c| c == 0.0)
    }

    /// Value at `z = infinity`, i.e. the direct feedthrough.
    pub fn feedthrough(&self) -> f64 {
        self.num[0] / self.den[0]
    }

    pub fn eval(&self, omega: f64) -> Result<Complex64, DimError> {
        let zi = unit_delay(omega);
        let d = horner(&self.den, zi);
        let scale: f64 = self.den.iter().map(|c| c.abs()).sum();
        if d.norm() <= 1e-12 * scale {
            return Err(DimError::SingularEvaluation(omega));
        }
        Ok(horner(&self.num, zi) / d)
    }

    /// Poles in the `z` plane: roots of `den[0] z^n + den[1] z^{n-1} + ... + den[n]`.
    pub fn poles(&self) -> Vec<Complex64> {
        let n = self.den.len() - 1;
        if n == 0 {
            return Vec::new();
        }
        let mut c = DMatrix::<f64>::zeros(n, n);
        for k in 0..n {
            c[(0, k)] = -self.den[k + 1] / self.den[0];
        }
        for k in 1..n {
            c[(k, k - 1)] = 1.0;
        }
        crate::linalg::eigenvalues(&c).unwrap_or_else(|| crate::linalg::poly_roots(&self.den))
    }

    pub fn is_stable(&self) -> bool {
        crate::linalg::schur_stable(&self.den)
    }

    pub fn impulse_response(&self, len: usize) -> Vec<f64> {
        let mut h = vec![0.0; len];
        for t in 0..len {
            let mut acc = self.num.get(t).copied().unwrap_or(0.0);
            for k in 1..self.den.len().min(t + 1) {
                acc -= self.den[k] * h[t - k];
            }
            h[t] = acc / self.den[0];
        }
        h
    }
}

fn trim(c: &mut Vec<f64>) {
    while c.len() > 1 && *c.last().unwrap() == 0.0 {
        c.pop();
    }
}

pub(crate) fn horner(c: &[f64], zi: Complex64) -> Complex64 {
    c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &a| acc * zi + a)
}

/// `num(e^{-jw}) / den(e^{-jw})`.
pub fn eval_tf(tf: &TransferFunction, omega: f64) -> Result<Complex64, DimError> {
    tf.eval(omega)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn eval_examples() {
        let d = TransferFunction::delay(1);
        assert!((eval_tf(&d, 0.0).unwrap() - 1.0).norm() < 1e-15);
        let f = TransferFunction::fir(vec![1.2, 0.9]).unwrap();
        assert!((eval_tf(&f, PI).unwrap() - 0.3).norm() < 1e-12);
        let p = 0.5;
        let pd = TransferFunction::new(vec![p], vec![1.0, -(1.0 - p)]).unwrap();
        assert!((eval_tf(&pd, 0.0).unwrap() - 1.0).norm() < 1e-15);
    }

    #[test]
    fn singular_denominator_is_reported() {
        let t = TransferFunction::new(vec![1.0], vec![1.0, -1.0]).unwrap();
        assert!(matches!(t.eval(0.0), Err(DimError::SingularEvaluation(_))));
        assert!(!t.is_stable());
    }

    #[test]
    fn poles_and_impulse_response() {
        let t = TransferFunction::new(vec![1.0], vec![1.0, -0.5]).unwrap();
        let p = t.poles();
        assert_eq!(p.len(), 1);
        assert!((p[0].re - 0.5).abs() < 1e-12);
        assert!(t.is_stable());
        let h = t.impulse_response(4);
        assert_eq!(h, vec![1.0, 0.5, 0.25, 0.125]);
        assert!(TransferFunction::new(vec![1.0], vec![0.0]).is_err());
    }

    #[test]
    fn serde_defaults_den() {
        let t: TransferFunction = serde_json::from_str(r#"{"num":[0,1]}"#).unwrap();
        assert_eq!(t, TransferFunction::delay(1));
        assert!(serde_json::from_str::<TransferFunction>(r#"{"num":[1],"den":[0]}"#).is_err());
    }
}
