//! Small dense linear-algebra helpers shared by the spectral and corruption code.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type RMatrix = DMatrix<f64>;

pub const J: Complex64 = Complex64::new(0.0, 1.0);

/// `e^{-j omega}`, the value substituted for `z^{-1}` on the unit circle.
#[inline]
pub fn unit_delay(omega: f64) -> Complex64 {
    Complex64::from_polar(1.0, -omega)
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let h = hermitian_part(m);
    let mut ev: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Eigenvalues of a real symmetric matrix, ascending.
pub fn symmetric_eigenvalues(m: &RMatrix) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let h = (m + m.transpose()) * 0.5;
    let mut ev: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// `(M + M^H) / 2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Eigenvalues of a real square matrix, or `None` if the Schur iteration
/// does not converge (nalgebra's unbounded variant can loop forever on
/// defective matrices such as shift registers).
pub fn eigenvalues(m: &RMatrix) -> Option<Vec<Complex64>> {
    if m.nrows() == 0 {
        return Some(Vec::new());
    }
    if m.iter().all(|&v| v == 0.0) {
        return Some(vec![Complex64::new(0.0, 0.0); m.nrows()]);
    }
    let schur = nalgebra::Schur::try_new(m.clone(), 1e-14, 10_000)?;
    Some(schur.complex_eigenvalues().iter().copied().collect())
}

/// Largest eigenvalue modulus of a real square matrix; zero for an empty one.
pub fn spectral_radius(m: &RMatrix) -> f64 {
    let n = m.nrows();
    if n == 0 {
        return 0.0;
    }
    // nilpotent matrices (acyclic couplings, shift registers) are common here
    let mut p = m.clone();
    for _ in 1..n {
        p = &p * m;
    }
    if p.iter().all(|&v| v == 0.0) {
        return 0.0;
    }
    if let Some(ev) = eigenvalues(m) {
        return ev.iter().map(|z| z.norm()).fold(0.0, f64::max);
    }
    // Gelfand: rho = lim ||A^k||^(1/k), by repeated squaring with rescaling
    let mut a = m.clone();
    let mut log_scale = 0.0;
    let mut k = 1.0;
    for _ in 0..30 {
        let s = a.abs().max();
        if s == 0.0 {
            return 0.0;
        }
        a /= s;
        log_scale += s.ln() / k;
        a = &a * &a;
        k *= 2.0;
    }
    (log_scale + a.abs().max().ln() / k).exp()
}

/// Roots of `c[0] z^n + ... + c[n]` by Durand-Kerner iteration; used when
/// the companion-matrix eigen solver gives up.
pub fn poly_roots(c: &[f64]) -> Vec<Complex64> {
    let n = c.len().saturating_sub(1);
    let a: Vec<Complex64> = c.iter().map(|v| Complex64::new(v / c[0], 0.0)).collect();
    let eval = |z: Complex64| a.iter().fold(Complex64::new(0.0, 0.0), |acc, &k| acc * z + k);
    let seed = Complex64::new(0.4, 0.9);
    let mut roots: Vec<Complex64> = (0..n).map(|k| seed.powu(k as u32)).collect();
    for _ in 0..2000 {
        let mut delta = 0.0f64;
        for i in 0..n {
            let mut den = Complex64::new(1.0, 0.0);
            for j in 0..n {
                if i != j {
                    den *= roots[i] - roots[j];
                }
            }
            let step = eval(roots[i]) / den;
            roots[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-15 {
            break;
        }
    }
    roots
}

/// True iff every root of `c[0] z^n + c[1] z^{n-1} + ... + c[n]` lies strictly
/// inside the unit circle (Schur-Cohn step-down recursion).
pub fn schur_stable(c: &[f64]) -> bool {
    let mut a: Vec<f64> = c.iter().map(|v| v / c[0]).collect();
    while a.len() > 1 {
        let m = a.len() - 1;
        let k = a[m];
        if k.abs() >= 1.0 {
            return false;
        }
        let d = 1.0 - k * k;
        a = (0..m).map(|i| (a[i] - k * a[m - i]) / d).collect();
    }
    true
}

/// Kronecker product of two real matrices.
pub fn kron(a: &RMatrix, b: &RMatrix) -> RMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = RMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let s = a[(i, j)];
            if s == 0.0 {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = s * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Factor `L` with `L L^T = sigma` for a symmetric positive semidefinite matrix.
/// Negative eigenvalues down to `-tol * max|lambda|` are clipped to zero.
pub fn psd_sqrt(sigma: &RMatrix, tol: f64) -> Option<RMatrix> {
    let n = sigma.nrows();
    if n == 0 {
        return Some(RMatrix::zeros(0, 0));
    }
    let sym = (sigma + sigma.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let scale = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut l = eig.eigenvectors.clone();
    for (k, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam < -tol * scale.max(1e-300) {
            return None;
        }
        let s = lam.max(0.0).sqrt();
        for i in 0..n {
            l[(i, k)] *= s;
        }
    }
    Some(l)
}

/// Maximum entrywise modulus of `a - b`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Characteristic polynomial coefficients `[1, c1, ..., cn]` of `det(zI - A)`
/// via the Faddeev-LeVerrier recursion. Adequate for the small state
/// dimensions used by corruption models.
pub fn char_poly(a: &RMatrix) -> Vec<f64> {
    let n = a.nrows();
    let mut coeffs = vec![1.0];
    let mut m = RMatrix::zeros(n, n);
    let eye = RMatrix::identity(n, n);
    for k in 1..=n {
        m = a * &m + &eye * coeffs[k - 1];
        let am = a * &m;
        coeffs.push(-am.trace() / k as f64);
    }
    coeffs
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kron_of_identities_is_identity() {
        let k = kron(&RMatrix::identity(2, 2), &RMatrix::identity(3, 3));
        assert_eq!(k, RMatrix::identity(6, 6));
    }

    #[test]
    fn char_poly_of_companion_matches() {
        // roots 0.5 and -0.25: z^2 - 0.25 z - 0.125
        let a = RMatrix::from_row_slice(2, 2, &[0.25, 0.125, 1.0, 0.0]);
        let c = char_poly(&a);
        assert!((c[1] + 0.25).abs() < 1e-14);
        assert!((c[2] + 0.125).abs() < 1e-14);
        assert!((spectral_radius(&a) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn spectral_radius_of_defective_matrices() {
        let mut shift = RMatrix::zeros(4, 4);
        for k in 1..4 {
            shift[(k, k - 1)] = 1.0;
        }
        assert_eq!(spectral_radius(&shift), 0.0);
        let jordan = RMatrix::from_row_slice(2, 2, &[0.9, 1.0, 0.0, 0.9]);
        assert!((spectral_radius(&jordan) - 0.9).abs() < 1e-6);
    }

    #[test]
    fn schur_cohn_examples() {
        assert!(schur_stable(&[1.0, -0.5]));
        assert!(!schur_stable(&[1.0, -1.2]));
        assert!(!schur_stable(&[1.0, -2.0, 1.0]));
        assert!(schur_stable(&[1.0, -1.6, 0.64]));
        assert!(schur_stable(&[2.0]));
    }

    #[test]
    fn psd_sqrt_reconstructs() {
        let s = RMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let l = psd_sqrt(&s, 1e-12).unwrap();
        assert!((&l * l.transpose() - &s).abs().max() < 1e-12);
        let bad = RMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(psd_sqrt(&bad, 1e-12).is_none());
    }
}
