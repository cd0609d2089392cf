//! Cholesky and LU factorizations and the guarded linear solve.

use super::dense::dot;
use super::{DenseMatrix, DenseVector, LinalgError};

/// Relative asymmetry accepted by [`cholesky`].
pub const SYMMETRY_TOL: f64 = 1e-10;
/// A Cholesky pivot at or below `PIVOT_TOL · ‖M‖_max` rejects the matrix.
pub const PIVOT_TOL: f64 = 1e-14;
/// Residual bound `‖Md − r‖_∞ ≤ RESIDUAL_TOL · (1 + ‖r‖_∞)` for [`solve_linear`].
pub const RESIDUAL_TOL: f64 = 1e-8;
/// Ridge weight of the fallback solve, relative to `‖M‖_∞²`.
pub const RIDGE_REL: f64 = 1e-12;

/// Lower-triangular factor `L` with `L Lᵀ = M`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    lower: DenseMatrix,
}

impl Cholesky {
    pub fn lower(&self) -> &DenseMatrix {
        &self.lower
    }

    pub fn into_lower(self) -> DenseMatrix {
        self.lower
    }

    pub fn dim(&self) -> usize {
        self.lower.rows()
    }

    /// Solves `L Lᵀ x = r`.
    pub fn solve(&self, r: &[f64]) -> DenseVector {
        let n = self.dim();
        assert_eq!(r.len(), n, "cholesky solve: dimension mismatch");
        let l = &self.lower;
        let mut y = vec![0.0; n];
        for i in 0..n {
            let row = l.row(i);
            y[i] = (r[i] - dot(&row[..i], &y[..i])) / row[i];
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let tail: f64 = x.iter().enumerate().skip(i + 1).map(|(k, xk)| l.get(k, i) * xk).sum();
            x[i] = (y[i] - tail) / l.get(i, i);
        }
        DenseVector::from_raw(x)
    }
}

/// Cholesky factorization of a symmetric matrix. Success certifies positive definiteness.
pub fn cholesky(m: &DenseMatrix) -> Result<Cholesky, LinalgError> {
    if !m.is_square() {
        return Err(LinalgError::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let scale = m.norm_max();
    if m.asymmetry() > SYMMETRY_TOL * scale {
        return Err(LinalgError::NotSymmetric);
    }
    let n = m.rows();
    let floor = PIVOT_TOL * scale;
    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let pivot = m.get(j, j) - l.row(j)[..j].iter().map(|v| v * v).sum::<f64>();
        if pivot <= floor || !pivot.is_finite() {
            return Err(LinalgError::NotPositiveDefinite { pivot: j });
        }
        let ljj = pivot.sqrt();
        l.set(j, j, ljj);
        for i in (j + 1)..n {
            let s = m.get(i, j) - dot(&l.row(i)[..j], &l.row(j)[..j]);
            l.set(i, j, s / ljj);
        }
    }
    Ok(Cholesky { lower: l })
}

/// LU factorization with partial pivoting, `P M = L U`.
#[derive(Debug, Clone)]
pub struct Lu {
    factors: DenseMatrix,
    perm: Vec<usize>,
    min_pivot: f64,
}

impl Lu {
    pub fn factor(m: &DenseMatrix) -> Result<Self, LinalgError> {
        if !m.is_square() {
            return Err(LinalgError::NotSquare {
                rows: m.rows(),
                cols: m.cols(),
            });
        }
        let n = m.rows();
        let mut a = m.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut min_pivot = f64::INFINITY;
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, a.get(i, k).abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            min_pivot = min_pivot.min(pmax);
            if pmax == 0.0 {
                continue;
            }
            if p != k {
                perm.swap(p, k);
                for j in 0..n {
                    let tmp = a.get(k, j);
                    a.set(k, j, a.get(p, j));
                    a.set(p, j, tmp);
                }
            }
            let pivot = a.get(k, k);
            let pivot_row: Vec<f64> = a.row(k)[k + 1..].to_vec();
            for i in (k + 1)..n {
                let factor = a.get(i, k) / pivot;
                a.set(i, k, factor);
                if factor == 0.0 {
                    continue;
                }
                let row = &mut a.row_mut(i)[k + 1..];
                for (x, u) in row.iter_mut().zip(&pivot_row) {
                    *x -= factor * u;
                }
            }
        }
        Ok(Self {
            factors: a,
            perm,
            min_pivot,
        })
    }

    /// Smallest pivot magnitude met during elimination.
    pub fn min_pivot(&self) -> f64 {
        self.min_pivot
    }

    /// Solves `M x = r`; meaningless when a zero pivot occurred.
    pub fn solve(&self, r: &[f64]) -> DenseVector {
        let n = self.factors.rows();
        assert_eq!(r.len(), n, "lu solve: dimension mismatch");
        let a = &self.factors;
        let mut y: Vec<f64> = self.perm.iter().map(|&p| r[p]).collect();
        for i in 0..n {
            let s = dot(&a.row(i)[..i], &y[..i]);
            y[i] -= s;
        }
        for i in (0..n).rev() {
            let row = a.row(i);
            let s = dot(&row[i + 1..], &y[i + 1..]);
            y[i] = (y[i] - s) / row[i];
        }
        DenseVector::from_raw(y)
    }
}

/// Outcome of [`solve_linear`].
#[derive(Debug, Clone)]
pub struct LinearSolution {
    pub x: DenseVector,
    /// Set when the ridge least-squares fallback produced `x`.
    pub fallback_used: bool,
    /// `‖M x − r‖_∞`.
    pub residual: f64,
}

/// Solves `M d = r` by LU with partial pivoting.
///
/// If elimination meets a near-zero pivot or the LU residual misses the
/// tolerance, `(MᵀM + δI) d = Mᵀ r` with `δ = 1e-12·‖M‖_∞²` is solved instead
/// and the fallback is flagged. `Singular` is returned only when the fallback
/// residual also misses the tolerance.
pub fn solve_linear(m: &DenseMatrix, r: &DenseVector) -> Result<LinearSolution, LinalgError> {
    if !m.is_square() {
        return Err(LinalgError::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    if r.dim() != m.rows() {
        return Err(LinalgError::DimensionMismatch {
            expected: m.rows(),
            got: r.dim(),
        });
    }
    let n = m.rows();
    let tol = RESIDUAL_TOL * (1.0 + r.norm_inf());
    let scale = m.norm_max();
    let lu = Lu::factor(m)?;
    let pivot_floor = (n as f64) * f64::EPSILON * scale;
    if lu.min_pivot() > pivot_floor {
        let x = lu.solve(r);
        let residual = residual_inf(m, &x, r);
        if x.is_finite() && residual <= tol {
            return Ok(LinearSolution {
                x,
                fallback_used: false,
                residual,
            });
        }
    }

    let norm = m.norm_inf();
    let delta = RIDGE_REL * norm * norm;
    if delta == 0.0 {
        // M = 0: any d solves it only when r = 0.
        return if r.norm_inf() <= tol {
            Ok(LinearSolution {
                x: DenseVector::zeros(n),
                fallback_used: true,
                residual: r.norm_inf(),
            })
        } else {
            Err(LinalgError::Singular)
        };
    }
    let normal = m.gram().add_diagonal(delta);
    let rhs = m.transpose_matvec(r);
    let x = match cholesky(&normal) {
        Ok(chol) => chol.solve(&rhs),
        Err(_) => Lu::factor(&normal)?.solve(&rhs),
    };
    let residual = residual_inf(m, &x, r);
    if x.is_finite() && residual <= tol {
        Ok(LinearSolution {
            x,
            fallback_used: true,
            residual,
        })
    } else {
        Err(LinalgError::Singular)
    }
}

fn residual_inf(m: &DenseMatrix, x: &DenseVector, r: &DenseVector) -> f64 {
    m.matvec(x).sub(r).norm_inf()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reconstruct(l: &DenseMatrix) -> DenseMatrix {
        l.matmul(&l.transpose())
    }

    #[test]
    fn cholesky_identity() {
        let chol = cholesky(&DenseMatrix::identity(2)).unwrap();
        assert_eq!(chol.lower(), &DenseMatrix::identity(2));
    }

    #[test]
    fn cholesky_two_by_two() {
        let m = DenseMatrix::from_rows(&[[4.0, 2.0], [2.0, 3.0]]).unwrap();
        let chol = cholesky(&m).unwrap();
        let l = chol.lower();
        assert_eq!(l.get(0, 0), 2.0);
        assert_eq!(l.get(0, 1), 0.0);
        assert_eq!(l.get(1, 0), 1.0);
        assert!((l.get(1, 1) - 2f64.sqrt()).abs() < 1e-15);
        let back = reconstruct(l);
        assert!(back.combine(1.0, &m, -1.0).norm_max() <= 1e-9 * (1.0 + m.norm_max()));
    }

    #[test]
    fn cholesky_rejects_zero_and_asymmetric() {
        assert!(matches!(
            cholesky(&DenseMatrix::zeros(2, 2)),
            Err(LinalgError::NotPositiveDefinite { pivot: 0 })
        ));
        let m = DenseMatrix::from_rows(&[[1.0, 0.5], [0.4, 1.0]]).unwrap();
        assert!(matches!(cholesky(&m), Err(LinalgError::NotSymmetric)));
        let indefinite = DenseMatrix::from_rows(&[[1.0, 2.0], [2.0, 1.0]]).unwrap();
        assert!(matches!(
            cholesky(&indefinite),
            Err(LinalgError::NotPositiveDefinite { pivot: 1 })
        ));
    }

    #[test]
    fn solve_identity_and_diagonal() {
        let r = DenseVector::new(vec![3.0, -1.0]).unwrap();
        let sol = solve_linear(&DenseMatrix::identity(2), &r).unwrap();
        assert_eq!(sol.x.as_slice(), &[3.0, -1.0]);
        assert!(!sol.fallback_used);

        let m = DenseMatrix::from_diagonal(&[2.0, 4.0]);
        let r = DenseVector::new(vec![2.0, 8.0]).unwrap();
        let sol = solve_linear(&m, &r).unwrap();
        assert_eq!(sol.x.as_slice(), &[1.0, 2.0]);
    }

    #[test]
    fn solve_needs_pivoting() {
        let m = DenseMatrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap();
        let r = DenseVector::new(vec![5.0, 7.0]).unwrap();
        let sol = solve_linear(&m, &r).unwrap();
        assert_eq!(sol.x.as_slice(), &[7.0, 5.0]);
        assert!(!sol.fallback_used);
    }

    #[test]
    fn singular_consistent_system_uses_fallback() {
        let m = DenseMatrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]).unwrap();
        let r = DenseVector::new(vec![2.0, 2.0]).unwrap();
        let sol = solve_linear(&m, &r).unwrap();
        assert!(sol.fallback_used);
        assert!(sol.residual <= RESIDUAL_TOL * 3.0);
        assert!((sol.x[0] + sol.x[1] - 2.0).abs() < 1e-10, "{sol:?}");
    }

    #[test]
    fn singular_inconsistent_system_errors() {
        let m = DenseMatrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]).unwrap();
        let r = DenseVector::new(vec![1.0, -1.0]).unwrap();
        assert!(matches!(solve_linear(&m, &r), Err(LinalgError::Singular)));
        let z = DenseMatrix::zeros(2, 2);
        assert!(matches!(solve_linear(&z, &r), Err(LinalgError::Singular)));
    }

    #[test]
    fn solve_dimension_mismatch() {
        let r = DenseVector::new(vec![1.0; 3]).unwrap();
        assert!(matches!(
            solve_linear(&DenseMatrix::identity(2), &r),
            Err(LinalgError::DimensionMismatch { expected: 2, got: 3 })
        ));
    }
}
