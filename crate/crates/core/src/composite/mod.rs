//! Quadratic composite problems `min ½⟨Āx,x⟩ + ⟨b̄,x⟩ + ᾱ + g(x)` and their
//! reduction, through the Moreau envelope of `g`, to a `C^{1,1}` problem in `u`.
//!
//! For `γ > 0` with `I − γĀ` positive definite, put `Q = (I − γĀ)⁻¹`,
//! `c = γQb̄` and `P = Q − I`. The reduced objective
//!
//! ```text
//! ψ(u) = ½⟨Pu,u⟩ + ⟨c,u⟩ + γ g(Prox_γg(u)) + ½‖u − Prox_γg(u)‖²
//! ∇ψ(u) = Qu − Prox_γg(u) + c
//! ```
//!
//! is continuously differentiable, and `x = Qū + c` solves the composite
//! problem exactly when `ū` minimizes `ψ`.

mod reduction;
mod solve;
mod tikhonov;

pub use reduction::{build_reduction, MoreauReduction, MAX_GAMMA_HALVINGS};
pub use solve::{gdnm_composite_solve, gdnm_composite_solve_from, solve_with_reduction, CompositeReport, ReducedOracle};
pub use tikhonov::{default_schedule, tikhonov_solve, TikhonovReport, TikhonovStage};

use thiserror::Error;

use crate::linalg::{cholesky, DenseMatrix, DenseVector, LinalgError};
use crate::newton::{ConfigError, DirectionError, NewtonDirection};

/// Relative asymmetry tolerated in `Ā`.
pub const SYMMETRY_TOL: f64 = 1e-10;
/// Diagonal shift, relative to `‖Ā‖_max`, used when certifying `Ā ⪰ 0`.
pub const PSD_SHIFT: f64 = 1e-12;

/// A closed proper convex regularizer given through its value and proximal mapping.
pub trait Regularizer {
    fn value(&self, x: &[f64]) -> f64;

    /// `Prox_{γg}(x) = argmin_y g(y) + ‖y − x‖² / (2γ)`.
    fn prox(&self, x: &DenseVector, gamma: f64) -> DenseVector;
}

/// A regularizer whose second-order subdifferential yields Newton directions
/// for the reduced problem.
pub trait NewtonRegularizer: Regularizer {
    /// Finds `d` with `(−∇ψ(u) − Pd)/γ ∈ ∂²g(v, (u − v)/γ)(Qd + ∇ψ(u))`, where
    /// `v = Prox_γg(u)`.
    fn newton_direction(
        &self,
        reduction: &MoreauReduction,
        u: &DenseVector,
        v: &DenseVector,
        grad: &DenseVector,
    ) -> Result<NewtonDirection, DirectionError>;
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompositeError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("quadratic term is not symmetric")]
    NotSymmetric,
    #[error("quadratic term is not positive semidefinite")]
    NotPositiveSemidefinite,
    #[error("no gamma certified I - gamma*A positive definite after {halvings} halvings")]
    ReductionFailed { halvings: usize },
    #[error("invalid Tikhonov schedule: {0}")]
    Schedule(String),
}

/// Data `(Ā, b̄, ᾱ, g)` of a quadratic composite problem.
#[derive(Debug, Clone)]
pub struct QuadraticCompositeProblem<R> {
    a_bar: DenseMatrix,
    b_bar: DenseVector,
    alpha_bar: f64,
    regularizer: R,
}

impl<R: Regularizer> QuadraticCompositeProblem<R> {
    /// Validates that `Ā` is symmetric and positive semidefinite.
    pub fn new(a_bar: DenseMatrix, b_bar: DenseVector, alpha_bar: f64, regularizer: R) -> Result<Self, CompositeError> {
        if !a_bar.is_square() {
            return Err(LinalgError::NotSquare {
                rows: a_bar.rows(),
                cols: a_bar.cols(),
            }
            .into());
        }
        if b_bar.dim() != a_bar.rows() {
            return Err(CompositeError::DimensionMismatch {
                expected: a_bar.rows(),
                got: b_bar.dim(),
            });
        }
        if !a_bar.is_symmetric(SYMMETRY_TOL) {
            return Err(CompositeError::NotSymmetric);
        }
        let shift = PSD_SHIFT * a_bar.norm_max();
        // The zero matrix is PSD but the shifted Cholesky cannot certify it.
        if shift > 0.0 && cholesky(&a_bar.symmetrized().add_diagonal(shift)).is_err() {
            return Err(CompositeError::NotPositiveSemidefinite);
        }
        Ok(Self {
            a_bar,
            b_bar,
            alpha_bar,
            regularizer,
        })
    }

    pub fn a_bar(&self) -> &DenseMatrix {
        &self.a_bar
    }

    pub fn b_bar(&self) -> &DenseVector {
        &self.b_bar
    }

    pub fn alpha_bar(&self) -> f64 {
        self.alpha_bar
    }

    pub fn regularizer(&self) -> &R {
        &self.regularizer
    }

    pub fn dim(&self) -> usize {
        self.b_bar.dim()
    }

    pub fn check_dim(&self, v: &DenseVector) -> Result<(), CompositeError> {
        if v.dim() == self.dim() {
            Ok(())
        } else {
            Err(CompositeError::DimensionMismatch {
                expected: self.dim(),
                got: v.dim(),
            })
        }
    }

    /// Smooth part `½⟨Āx,x⟩ + ⟨b̄,x⟩ + ᾱ`.
    pub fn smooth_value(&self, x: &DenseVector) -> f64 {
        0.5 * self.a_bar.matvec(x).dot(x) + self.b_bar.dot(x) + self.alpha_bar
    }

    pub fn smooth_gradient(&self, x: &DenseVector) -> DenseVector {
        self.a_bar.matvec(x).add(&self.b_bar)
    }

    pub fn objective(&self, x: &DenseVector) -> f64 {
        self.smooth_value(x) + self.regularizer.value(x)
    }

    /// Relative fixed-point residual
    /// `‖x − Prox_g(x − ∇f(x))‖ / (1 + ‖x‖ + √(2 f(x)))`.
    ///
    /// For least-squares data `f = ½‖Ax − b‖²` the last term is `‖Ax − b‖`.
    pub fn kkt_residual(&self, x: &DenseVector) -> f64 {
        let grad = self.smooth_gradient(x);
        let shifted = x.sub(&grad);
        let fixed = self.regularizer.prox(&shifted, 1.0);
        let loss = (2.0 * self.smooth_value(x)).max(0.0).sqrt();
        x.distance(&fixed) / (1.0 + x.norm() + loss)
    }
}
