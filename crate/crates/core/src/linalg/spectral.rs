//! Power-iteration eigenvalue estimates for symmetric matrices.

use super::factor::cholesky;
use super::{DenseMatrix, DenseVector};

/// Multiplicative inflation applied to the power-iteration estimate.
pub const SPECTRAL_INFLATION: f64 = 1.01;
pub const DEFAULT_POWER_ITERS: usize = 1000;
pub const DEFAULT_POWER_TOL: f64 = 1e-12;

/// Upper estimate of `λ_max(M)` for symmetric PSD `M`.
///
/// Runs power iteration from the normalized all-ones vector and returns the
/// final Rayleigh quotient times [`SPECTRAL_INFLATION`]. Stops early when the
/// quotient changes by at most `tol` relative. The zero matrix gives 0.
pub fn spectral_upper_bound(m: &DenseMatrix, iters: usize, tol: f64) -> f64 {
    assert!(m.is_square(), "spectral_upper_bound: matrix must be square");
    let n = m.rows();
    rayleigh_power(|v| m.matvec(v), DenseVector::filled(n, 1.0), iters, tol).max(0.0) * SPECTRAL_INFLATION
}

/// [`spectral_upper_bound`] with the default iteration budget.
pub fn spectral_bound(m: &DenseMatrix) -> f64 {
    spectral_upper_bound(m, DEFAULT_POWER_ITERS, DEFAULT_POWER_TOL)
}

/// Estimate of `λ_min(M)` for symmetric positive-definite `M` by inverse
/// iteration on its Cholesky factor. `None` when `M` is not certified PD.
///
/// The estimate approaches `λ_min` from above. The start vector has
/// irrational, pairwise distinct entries so that it is not orthogonal to the
/// bottom eigenvector of structured matrices such as `[[2,1],[1,2]]`.
pub fn smallest_eigenvalue(m: &DenseMatrix, iters: usize, tol: f64) -> Option<f64> {
    let chol = cholesky(m).ok()?;
    let start = DenseVector::from_raw((1..=m.rows()).map(|i| 0.5 + (i as f64 * GOLDEN).fract()).collect());
    let inv_max = rayleigh_power(|v| chol.solve(v), start, iters, tol);
    (inv_max > 0.0).then(|| 1.0 / inv_max)
}

const GOLDEN: f64 = 0.618_033_988_749_894_9;

fn rayleigh_power(apply: impl Fn(&[f64]) -> DenseVector, start: DenseVector, iters: usize, tol: f64) -> f64 {
    let norm = start.norm();
    if norm == 0.0 {
        return 0.0;
    }
    let mut v = start.scaled(1.0 / norm);
    let mut lambda = 0.0;
    for _ in 0..iters.max(1) {
        let w = apply(&v);
        let next = v.dot(&w);
        let norm = w.norm();
        if norm == 0.0 || !norm.is_finite() {
            return next.max(0.0);
        }
        let converged = (next - lambda).abs() <= tol * next.abs();
        lambda = next;
        v = w.scaled(1.0 / norm);
        if converged {
            break;
        }
    }
    lambda
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_bound() {
        let m = DenseMatrix::from_diagonal(&[1.0, 2.0]);
        let bound = spectral_bound(&m);
        assert!((2.0..=2.03).contains(&bound), "bound {bound}");
    }

    #[test]
    fn zero_matrix_gives_zero() {
        assert_eq!(spectral_bound(&DenseMatrix::zeros(3, 3)), 0.0);
    }

    #[test]
    fn smallest_eigenvalue_diagonal() {
        let m = DenseMatrix::from_diagonal(&[0.5, 3.0, 7.0]);
        let lmin = smallest_eigenvalue(&m, 500, 1e-14).unwrap();
        assert!((lmin - 0.5).abs() < 1e-10);
        assert!(smallest_eigenvalue(&DenseMatrix::zeros(2, 2), 10, 1e-12).is_none());
    }
}
