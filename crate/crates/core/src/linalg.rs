//! Complex vector/matrix aliases and a few small helpers shared by the models.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// One draw of a circular complex Gaussian `CN(0, variance)`.
#[inline]
pub fn cn<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> C64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(s * re, s * im)
}

/// Matrix with i.i.d. `CN(0, variance)` entries, filled column-major.
pub fn cn_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, variance: f64) -> CMat {
    CMat::from_fn(rows, cols, |_, _| cn(rng, variance))
}

pub fn cn_vector<R: Rng + ?Sized>(rng: &mut R, len: usize, variance: f64) -> CVec {
    CVec::from_fn(len, |_, _| cn(rng, variance))
}

/// Uniformly random unit-norm complex vector.
pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R, len: usize) -> CVec {
    loop {
        let x = cn_vector(rng, len, 1.0);
        let n = x.norm();
        if n > 1e-12 {
            return x / C64::from(n);
        }
    }
}

/// `‖x‖²`.
#[inline]
pub fn norm_sq(x: &CVec) -> f64 {
    x.norm_squared()
}

/// `(A + Aᴴ)/2`.
pub fn hermitian_part(a: &CMat) -> CMat {
    (a + a.adjoint()) * C64::from(0.5)
}

/// Solve `A x = b` for Hermitian positive definite `A` via Cholesky, with a
/// fall-back to LU when the factorisation fails numerically.
pub fn solve_hpd(a: &CMat, b: &CVec) -> Option<CVec> {
    if let Some(ch) = a.clone().cholesky() {
        return Some(ch.solve(b));
    }
    a.clone().lu().solve(b)
}

/// Spectral condition number of a Hermitian matrix (ratio of extreme
/// eigenvalue magnitudes).
pub fn hermitian_condition(a: &CMat) -> f64 {
    let eig = a.clone().symmetric_eigenvalues();
    let max = eig.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    let min = eig.iter().fold(f64::INFINITY, |m, e| m.min(e.abs()));
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn cn_has_requested_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 200_000;
        let var = 3.0;
        let acc: f64 = (0..n).map(|_| cn(&mut rng, var).norm_sqr()).sum::<f64>() / n as f64;
        assert!((acc / var - 1.0).abs() < 0.01, "{acc}");
    }

    #[test]
    fn hpd_solve_matches_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = cn_matrix(&mut rng, 4, 4, 1.0);
        let a = &g * g.adjoint() + CMat::identity(4, 4);
        let b = cn_vector(&mut rng, 4, 1.0);
        let x = solve_hpd(&a, &b).unwrap();
        assert!((&a * x - b).norm() < 1e-12);
        assert!(hermitian_condition(&a) >= 1.0);
    }
}
