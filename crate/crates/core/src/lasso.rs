//! The `ℓ1` instantiation: `min ½‖Ax − b‖² + μ‖x‖₁`.
//!
//! Provides the soft-threshold prox, membership tests for the first- and
//! second-order subdifferentials of `μ‖·‖₁`, the row-selection Newton system
//! for the reduced problem, and the relative KKT residual used as the common
//! stopping metric.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::composite::{CompositeError, MoreauReduction, NewtonRegularizer, QuadraticCompositeProblem, Regularizer};
use crate::linalg::{solve_linear, DenseMatrix, DenseVector};
use crate::newton::{DirectionError, NewtonDirection};

/// Default equality tolerance of the membership tests.
pub const MEMBERSHIP_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LassoError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("mu must be a finite nonnegative number, got {0}")]
    InvalidMu(f64),
    #[error("A^T b is zero, so the relative mu rule is undefined")]
    ZeroData,
    #[error("(x, y) is not in the graph of the subdifferential")]
    NotInGraph,
}

fn check_dims(expected: usize, got: usize) -> Result<(), LassoError> {
    if expected == got {
        Ok(())
    } else {
        Err(LassoError::DimensionMismatch { expected, got })
    }
}

/// Coordinatewise soft threshold: `x_i − t` above `t`, `x_i + t` below `−t`, 0 on `[−t, t]`.
pub fn prox_l1(x: &[f64], threshold: f64) -> DenseVector {
    DenseVector::from_raw(x.iter().map(|&xi| soft_threshold(xi, threshold)).collect())
}

#[inline]
pub fn soft_threshold(xi: f64, threshold: f64) -> f64 {
    if xi > threshold {
        xi - threshold
    } else if xi < -threshold {
        xi + threshold
    } else {
        0.0
    }
}

/// `g(x) = μ‖x‖₁`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct L1Norm {
    pub mu: f64,
}

impl Regularizer for L1Norm {
    fn value(&self, x: &[f64]) -> f64 {
        self.mu * x.iter().map(|v| v.abs()).sum::<f64>()
    }

    fn prox(&self, x: &DenseVector, gamma: f64) -> DenseVector {
        prox_l1(x, self.mu * gamma)
    }
}

impl NewtonRegularizer for L1Norm {
    fn newton_direction(
        &self,
        reduction: &MoreauReduction,
        u: &DenseVector,
        v: &DenseVector,
        grad: &DenseVector,
    ) -> Result<NewtonDirection, DirectionError> {
        direction_lasso(reduction, self.mu, u, v, grad)
    }
}

/// Which prox branch each coordinate falls in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activity {
    Nonzero,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActivePattern(Vec<Activity>);

impl ActivePattern {
    /// Tags from `v = Prox_{γμ‖·‖₁}(u)`: `Nonzero` iff `v_i ≠ 0`, i.e. `|u_i| > μγ`.
    /// With `μ = 0` the regularizer vanishes and every coordinate is `Nonzero`.
    pub fn from_prox(v: &[f64], mu: f64) -> Self {
        Self(
            v.iter()
                .map(|&vi| {
                    if vi != 0.0 || mu == 0.0 {
                        Activity::Nonzero
                    } else {
                        Activity::Zero
                    }
                })
                .collect(),
        )
    }

    pub fn tags(&self) -> &[Activity] {
        &self.0
    }

    pub fn nonzeros(&self) -> usize {
        self.0.iter().filter(|t| **t == Activity::Nonzero).count()
    }
}

/// Tests `v ∈ ∂(μ‖·‖₁)(x)` with absolute tolerance [`MEMBERSHIP_TOL`].
pub fn in_subdiff_l1(x: &[f64], v: &[f64], mu: f64) -> Result<bool, LassoError> {
    in_subdiff_l1_tol(x, v, mu, MEMBERSHIP_TOL)
}

/// `v ∈ ∂(μ‖·‖₁)(x)`: `v_j = μ·sgn(x_j)` where `x_j ≠ 0`, `|v_j| ≤ μ` where
/// `x_j = 0`. Entries with `|x_j| ≤ tol` count as zero and equalities hold to `tol`.
pub fn in_subdiff_l1_tol(x: &[f64], v: &[f64], mu: f64, tol: f64) -> Result<bool, LassoError> {
    check_dims(x.len(), v.len())?;
    Ok(x.iter().zip(v).all(|(&xj, &vj)| {
        if xj.abs() <= tol {
            vj.abs() <= mu + tol
        } else {
            (vj - mu * xj.signum()).abs() <= tol
        }
    }))
}

/// Tolerances of [`in_second_subdiff_l1_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MembershipTolerance {
    /// `|x_i| ≤ zero_x` counts as `x_i = 0`.
    pub zero_x: f64,
    /// Tolerance on `p = y_i/μ` hitting `±1`.
    pub unit_p: f64,
    /// Zero and sign tests on `w_i/μ` (on `w_i` when `μ = 0`).
    pub zero_w: f64,
    /// Zero and sign tests on `v_i`.
    pub zero_v: f64,
}

impl MembershipTolerance {
    pub fn uniform(tol: f64) -> Self {
        Self {
            zero_x: tol,
            unit_p: tol,
            zero_w: tol,
            zero_v: tol,
        }
    }
}

/// Tests `w ∈ ∂²(μ‖·‖₁)(x, y)(v)` with absolute tolerance [`MEMBERSHIP_TOL`].
pub fn in_second_subdiff_l1(x: &[f64], y: &[f64], v: &[f64], w: &[f64], mu: f64) -> Result<bool, LassoError> {
    in_second_subdiff_l1_with(x, y, v, w, mu, &MembershipTolerance::uniform(MEMBERSHIP_TOL))
}

/// `w ∈ ∂²(μ‖·‖₁)(x, y)(v)` iff `(w_i/μ, −v_i) ∈ G(x_i, y_i/μ)` for every `i`, where
///
/// ```text
/// G(t,p) = {0}×ℝ                      t ≠ 0, p ∈ {−1, 1}
///          ℝ×{0}                      t = 0, p ∈ (−1, 1)
///          (ℝ₊×ℝ₋) ∪ ({0}×ℝ) ∪ (ℝ×{0}) t = 0, p = −1
///          (ℝ₋×ℝ₊) ∪ ({0}×ℝ) ∪ (ℝ×{0}) t = 0, p = 1
///          ∅                          otherwise
/// ```
///
/// With `μ = 0` the subgradient graph is `ℝⁿ × {0}` and membership reduces to `w = 0`.
pub fn in_second_subdiff_l1_with(
    x: &[f64],
    y: &[f64],
    v: &[f64],
    w: &[f64],
    mu: f64,
    tol: &MembershipTolerance,
) -> Result<bool, LassoError> {
    let n = x.len();
    check_dims(n, y.len())?;
    check_dims(n, v.len())?;
    check_dims(n, w.len())?;
    if mu == 0.0 {
        if y.iter().any(|yi| yi.abs() > tol.unit_p) {
            return Err(LassoError::NotInGraph);
        }
        return Ok(w.iter().all(|wi| wi.abs() <= tol.zero_w));
    }
    let in_graph = x.iter().zip(y).all(|(&xi, &yi)| {
        let p = yi / mu;
        if xi.abs() <= tol.zero_x {
            p.abs() <= 1.0 + tol.unit_p
        } else {
            (p - xi.signum()).abs() <= tol.unit_p
        }
    });
    if !in_graph {
        return Err(LassoError::NotInGraph);
    }
    Ok((0..n).all(|i| {
        let t_zero = x[i].abs() <= tol.zero_x;
        let p = y[i] / mu;
        let a = w[i] / mu;
        let b = -v[i];
        let a_zero = a.abs() <= tol.zero_w;
        let b_zero = b.abs() <= tol.zero_v;
        let p_unit = (p.abs() - 1.0).abs() <= tol.unit_p;
        match (t_zero, p_unit) {
            (false, true) => a_zero,
            (false, false) => false,
            (true, false) if p.abs() < 1.0 => b_zero,
            (true, false) => false,
            (true, true) if p < 0.0 => a_zero || b_zero || (a >= -tol.zero_w && b <= tol.zero_v),
            (true, true) => a_zero || b_zero || (a <= tol.zero_w && b >= -tol.zero_v),
        }
    }))
}

/// Relative backward-error level used to verify Newton directions.
const DIRECTION_CHECK_REL: f64 = 1e-10;

/// Newton direction for the reduced Lasso problem.
///
/// Assembles `X` from the rows of `P` (where `v_i ≠ 0`) and `Q` (where
/// `v_i = 0`), both shifted by the reduction's Tikhonov shift, and solves
/// `X d = −∇ψ(u)`. The returned direction carries the outcome of the explicit
/// membership check
/// `(−∇ψ − Pd)/γ ∈ ∂²(μ‖·‖₁)(v, (u − v)/γ)(Qd + ∇ψ)`, with each zero test taken
/// relative to the magnitude of the terms it is formed from.
pub fn direction_lasso(
    reduction: &MoreauReduction,
    mu: f64,
    u: &DenseVector,
    v: &DenseVector,
    grad: &DenseVector,
) -> Result<NewtonDirection, DirectionError> {
    let n = reduction.dim();
    for len in [u.dim(), v.dim(), grad.dim()] {
        if len != n {
            return Err(DirectionError::Linalg(crate::linalg::LinalgError::DimensionMismatch {
                expected: n,
                got: len,
            }));
        }
    }
    let pattern = ActivePattern::from_prox(v, mu);
    let x_matrix = newton_matrix(reduction, &pattern);
    let solution = solve_linear(&x_matrix, &grad.scaled(-1.0))?;
    let d = solution.x;

    let gamma = reduction.gamma();
    let qd = reduction.apply_q(&d);
    let pd = reduction.apply_p(&d);
    let v_arg = qd.add(grad);
    let w: Vec<f64> = grad
        .iter()
        .zip(pd.iter())
        .map(|(g, p)| (-g - p) / gamma)
        .collect();
    // (u − v)/γ, evaluated without cancellation: μ·sgn(v_i) on the support.
    let y: Vec<f64> = u
        .iter()
        .zip(v.iter())
        .map(|(&ui, &vi)| if vi != 0.0 { mu * vi.signum() } else { ui / gamma })
        .collect();
    let d_inf = d.norm_inf();
    let g_inf = grad.norm_inf();
    let w_terms = (g_inf + reduction.p().norm_inf() * d_inf + reduction.shift().abs() * d_inf) / gamma;
    let tol = MembershipTolerance {
        zero_x: MEMBERSHIP_TOL,
        unit_p: MEMBERSHIP_TOL,
        zero_w: DIRECTION_CHECK_REL * if mu > 0.0 { w_terms / mu } else { w_terms },
        zero_v: DIRECTION_CHECK_REL * (g_inf + (reduction.q().norm_inf() + reduction.shift().abs()) * d_inf),
    };
    let verified = in_second_subdiff_l1_with(v, &y, &v_arg, &w, mu, &tol).unwrap_or(false);

    Ok(NewtonDirection {
        d,
        fallback_used: solution.fallback_used,
        inclusion_verified: Some(verified),
    })
}

/// `X` with rows of `P + εI` on the support of `v` and of `Q + εI` off it.
pub fn newton_matrix(reduction: &MoreauReduction, pattern: &ActivePattern) -> DenseMatrix {
    let n = reduction.dim();
    let tags = pattern.tags();
    let x = DenseMatrix::select_rows(n, n, |i| match tags[i] {
        Activity::Nonzero => reduction.p(),
        Activity::Zero => reduction.q(),
    });
    if reduction.shift() != 0.0 {
        x.add_diagonal(reduction.shift())
    } else {
        x
    }
}

/// `μ = 10⁻³ ‖Aᵀb‖_∞`.
pub fn mu_default(a: &DenseMatrix, b: &DenseVector) -> Result<f64, LassoError> {
    check_dims(a.rows(), b.dim())?;
    let atb = a.transpose_matvec(b).norm_inf();
    if atb == 0.0 {
        Err(LassoError::ZeroData)
    } else {
        Ok(1e-3 * atb)
    }
}

/// Objective and KKT residual at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LassoEval {
    pub objective: f64,
    pub eta: f64,
    /// `‖Ax − b‖`.
    pub residual_norm: f64,
}

/// A Lasso instance `(A, b, μ)`.
#[derive(Debug, Clone)]
pub struct LassoInstance {
    a: DenseMatrix,
    b: DenseVector,
    mu: f64,
}

impl LassoInstance {
    /// `μ = 0` is accepted and gives plain least squares.
    pub fn new(a: DenseMatrix, b: DenseVector, mu: f64) -> Result<Self, LassoError> {
        check_dims(a.rows(), b.dim())?;
        if !(mu.is_finite() && mu >= 0.0) {
            return Err(LassoError::InvalidMu(mu));
        }
        Ok(Self { a, b, mu })
    }

    /// Instance with `μ` from [`mu_default`].
    pub fn with_relative_mu(a: DenseMatrix, b: DenseVector) -> Result<Self, LassoError> {
        let mu = mu_default(&a, &b)?;
        Self::new(a, b, mu)
    }

    pub fn a(&self) -> &DenseMatrix {
        &self.a
    }

    pub fn b(&self) -> &DenseVector {
        &self.b
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn rows(&self) -> usize {
        self.a.rows()
    }

    pub fn cols(&self) -> usize {
        self.a.cols()
    }

    pub fn regularizer(&self) -> L1Norm {
        L1Norm { mu: self.mu }
    }

    /// `(Ā, b̄, ᾱ) = (AᵀA, −Aᵀb, ½‖b‖²)` with `g = μ‖·‖₁`.
    pub fn to_composite(&self) -> Result<QuadraticCompositeProblem<L1Norm>, CompositeError> {
        let b_norm = self.b.norm();
        QuadraticCompositeProblem::new(
            self.a.gram(),
            self.a.transpose_matvec(&self.b).scaled(-1.0),
            0.5 * b_norm * b_norm,
            self.regularizer(),
        )
    }

    pub fn evaluate(&self, x: &DenseVector) -> Result<LassoEval, LassoError> {
        check_dims(self.cols(), x.dim())?;
        let r = self.a.matvec(x).sub(&self.b);
        let grad = self.a.transpose_matvec(&r);
        let fixed = prox_l1(&x.sub(&grad), self.mu);
        let r_norm = r.norm();
        Ok(LassoEval {
            objective: 0.5 * r_norm * r_norm + self.regularizer().value(x),
            eta: x.distance(&fixed) / (1.0 + x.norm() + r_norm),
            residual_norm: r_norm,
        })
    }

    pub fn objective(&self, x: &DenseVector) -> Result<f64, LassoError> {
        self.evaluate(x).map(|e| e.objective)
    }
}

/// `η = ‖x − Prox_{μ‖·‖₁}(x − Aᵀ(Ax − b))‖ / (1 + ‖x‖ + ‖Ax − b‖)`.
pub fn kkt_residual(inst: &LassoInstance, x: &DenseVector) -> Result<f64, LassoError> {
    inst.evaluate(x).map(|e| e.eta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vector(x: &[f64]) -> DenseVector {
        DenseVector::new(x.to_vec()).unwrap()
    }

    fn scalar_instance(mu: f64) -> LassoInstance {
        LassoInstance::new(DenseMatrix::from_rows(&[[1.0]]).unwrap(), vector(&[2.0]), mu).unwrap()
    }

    #[test]
    fn prox_branches() {
        assert_eq!(prox_l1(&[2.0, 0.5, -3.0], 1.0).as_slice(), &[1.0, 0.0, -2.0]);
        assert_eq!(prox_l1(&[0.0, 0.0], 1.0).as_slice(), &[0.0, 0.0]);
        // closed interval maps to zero
        assert_eq!(prox_l1(&[1.0, -1.0], 1.0).as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn pattern_ties_go_to_zero_branch() {
        let v = prox_l1(&[1.0, 1.5, -0.2], 1.0);
        let p = ActivePattern::from_prox(&v, 1.0);
        assert_eq!(p.tags(), &[Activity::Zero, Activity::Nonzero, Activity::Zero]);
        let p0 = ActivePattern::from_prox(&[0.0, 1.0], 0.0);
        assert_eq!(p0.nonzeros(), 2);
    }

    #[test]
    fn first_order_membership() {
        let mu = 0.7;
        assert!(in_subdiff_l1(&[1.0, 0.0], &[mu, mu / 2.0], mu).unwrap());
        assert!(!in_subdiff_l1(&[1.0, 0.0], &[-mu, 0.0], mu).unwrap());
        assert!(!in_subdiff_l1(&[0.0], &[1.5 * mu], mu).unwrap());
        assert!(matches!(
            in_subdiff_l1(&[1.0], &[1.0, 2.0], mu),
            Err(LassoError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn second_order_branch_nonzero_t() {
        let mu = 0.5;
        // t = 1, p = 1: {0} × ℝ
        assert!(in_second_subdiff_l1(&[1.0], &[mu], &[3.0], &[0.0], mu).unwrap());
        assert!(in_second_subdiff_l1(&[1.0], &[mu], &[-7.0], &[0.0], mu).unwrap());
        assert!(!in_second_subdiff_l1(&[1.0], &[mu], &[3.0], &[mu], mu).unwrap());
    }

    #[test]
    fn second_order_branch_interior() {
        let mu = 0.5;
        // t = 0, p = 0: ℝ × {0}
        assert!(in_second_subdiff_l1(&[0.0], &[0.0], &[0.0], &[5.0], mu).unwrap());
        assert!(!in_second_subdiff_l1(&[0.0], &[0.0], &[1.0], &[5.0], mu).unwrap());
    }

    #[test]
    fn second_order_branch_corner() {
        let mu = 0.5;
        // t = 0, p = 1: (a, b) = (w/μ, −v)
        // (−1, 1): w = −μ, v = −1
        assert!(in_second_subdiff_l1(&[0.0], &[mu], &[-1.0], &[-mu], mu).unwrap());
        // (1, 1): w = μ, v = −1
        assert!(!in_second_subdiff_l1(&[0.0], &[mu], &[-1.0], &[mu], mu).unwrap());
        // p = −1 mirrors: (1, −1) allowed, (−1, −1) not
        assert!(in_second_subdiff_l1(&[0.0], &[-mu], &[1.0], &[mu], mu).unwrap());
        assert!(!in_second_subdiff_l1(&[0.0], &[-mu], &[1.0], &[-mu], mu).unwrap());
        // axes are always allowed at the corner
        assert!(in_second_subdiff_l1(&[0.0], &[mu], &[4.0], &[0.0], mu).unwrap());
        assert!(in_second_subdiff_l1(&[0.0], &[mu], &[0.0], &[9.0], mu).unwrap());
    }

    #[test]
    fn second_order_requires_graph_point() {
        assert_eq!(
            in_second_subdiff_l1(&[1.0], &[0.1], &[0.0], &[0.0], 0.5),
            Err(LassoError::NotInGraph)
        );
        assert_eq!(
            in_second_subdiff_l1(&[0.0], &[0.6], &[0.0], &[0.0], 0.5),
            Err(LassoError::NotInGraph)
        );
    }

    #[test]
    fn kkt_residual_scalar_instance() {
        let inst = scalar_instance(0.5);
        assert_eq!(kkt_residual(&inst, &vector(&[1.5])).unwrap(), 0.0);
        assert_eq!(kkt_residual(&inst, &vector(&[0.0])).unwrap(), 0.5);
    }

    #[test]
    fn mu_rule() {
        let a = DenseMatrix::identity(2);
        assert!((mu_default(&a, &vector(&[2.0, -3.0])).unwrap() - 0.003).abs() < 1e-18);
        assert_eq!(mu_default(&a, &vector(&[0.0, 0.0])), Err(LassoError::ZeroData));
    }

    #[test]
    fn instance_validation() {
        let a = DenseMatrix::identity(2);
        assert!(matches!(
            LassoInstance::new(a.clone(), vector(&[1.0]), 1.0),
            Err(LassoError::DimensionMismatch { .. })
        ));
        assert_eq!(
            LassoInstance::new(a, vector(&[1.0, 1.0]), -1.0).unwrap_err(),
            LassoError::InvalidMu(-1.0)
        );
    }

    #[test]
    fn composite_data_matches_definition() {
        let a = DenseMatrix::from_rows(&[[1.0, 2.0], [0.0, 1.0], [3.0, -1.0]]).unwrap();
        let inst = LassoInstance::new(a, vector(&[1.0, -1.0, 2.0]), 0.1).unwrap();
        let prob = inst.to_composite().unwrap();
        let x = vector(&[0.3, -0.7]);
        let direct = inst.objective(&x).unwrap();
        assert!((prob.objective(&x) - direct).abs() < 1e-12);
        let eta_direct = kkt_residual(&inst, &x).unwrap();
        assert!((prob.kkt_residual(&x) - eta_direct).abs() < 1e-12);
    }
}
