use crate::linalg::{cholesky, smallest_eigenvalue, spectral_bound, DenseMatrix, DenseVector, LinalgError};

use super::{CompositeError, QuadraticCompositeProblem, Regularizer};

/// Retries allowed when `I − γĀ` fails the Cholesky test.
pub const MAX_GAMMA_HALVINGS: usize = 10;

const EIG_ITERS: usize = 2000;
const EIG_TOL: f64 = 1e-12;

/// The reduced `C^{1,1}` problem attached to a quadratic composite problem.
///
/// An optional Tikhonov `shift` ε replaces `P` by `P + εI` (equivalently `Q`
/// by `Q + εI`) inside `ψ`, `∇ψ` and Newton directions; [`recover_x`] always
/// uses the unshifted `Q`.
///
/// [`recover_x`]: MoreauReduction::recover_x
#[derive(Debug, Clone)]
pub struct MoreauReduction {
    gamma: f64,
    q: DenseMatrix,
    c: DenseVector,
    p: DenseMatrix,
    lip_ell: f64,
    kappa: Option<f64>,
    shift: f64,
}

impl MoreauReduction {
    /// Builds the reduction for a fixed `γ`, which must make `I − γĀ` positive definite.
    pub fn with_gamma(a_bar: &DenseMatrix, b_bar: &DenseVector, gamma: f64) -> Result<Self, LinalgError> {
        let n = a_bar.rows();
        if b_bar.dim() != n {
            return Err(LinalgError::DimensionMismatch {
                expected: n,
                got: b_bar.dim(),
            });
        }
        let resolvent = DenseMatrix::identity(n).combine(1.0, a_bar, -gamma);
        let chol = cholesky(&resolvent)?;
        let mut q = DenseMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            let col = chol.solve(&e);
            for i in 0..n {
                q.set(i, j, col[i]);
            }
            e[j] = 0.0;
        }
        let q = q.symmetrized();
        let c = q.matvec(b_bar).scaled(gamma);
        let p = q.add_diagonal(-1.0);
        let q_norm = spectral_bound(&q.transpose().matmul(&q)).sqrt();
        let kappa = smallest_eigenvalue(&p, EIG_ITERS, EIG_TOL).map(|lmin| 1.0 / lmin);
        Ok(Self {
            gamma,
            q,
            c,
            p,
            lip_ell: 1.0 + q_norm,
            kappa,
            shift: 0.0,
        })
    }

    /// Copy with `P` replaced by `P + εI`.
    pub fn with_shift(&self, shift: f64) -> Self {
        Self {
            shift,
            ..self.clone()
        }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `Q = (I − γĀ)⁻¹`, unshifted.
    pub fn q(&self) -> &DenseMatrix {
        &self.q
    }

    /// `P = Q − I`, unshifted.
    pub fn p(&self) -> &DenseMatrix {
        &self.p
    }

    pub fn c(&self) -> &DenseVector {
        &self.c
    }

    /// Lipschitz modulus `1 + ‖Q‖` of `∇ψ`.
    pub fn lip_ell(&self) -> f64 {
        self.lip_ell
    }

    /// `1/λ_min(P)` when `P` is positive definite.
    pub fn kappa(&self) -> Option<f64> {
        self.kappa
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn dim(&self) -> usize {
        self.c.dim()
    }

    /// `1/(2ℓκ)`, the Armijo constant bound under which superlinear
    /// convergence is guaranteed without further assumptions on `g`.
    pub fn sigma_bound(&self) -> Option<f64> {
        self.kappa.map(|kappa| 1.0 / (2.0 * self.lip_ell * kappa))
    }

    /// `(Q + εI) w`.
    pub fn apply_q(&self, w: &[f64]) -> DenseVector {
        let mut out = self.q.matvec(w);
        if self.shift != 0.0 {
            for (o, wi) in out.iter_mut().zip(w) {
                *o += self.shift * wi;
            }
        }
        out
    }

    /// `(P + εI) w`.
    pub fn apply_p(&self, w: &[f64]) -> DenseVector {
        let mut out = self.apply_q(w);
        for (o, wi) in out.iter_mut().zip(w) {
            *o -= wi;
        }
        out
    }

    fn check(&self, u: &DenseVector) -> Result<(), CompositeError> {
        if u.dim() == self.dim() {
            Ok(())
        } else {
            Err(CompositeError::DimensionMismatch {
                expected: self.dim(),
                got: u.dim(),
            })
        }
    }

    /// `ψ(u) = ½⟨Pu,u⟩ + ⟨c,u⟩ + γ g(v) + ½‖u − v‖²` with `v = Prox_γg(u)`.
    pub fn psi_value<R: Regularizer + ?Sized>(&self, reg: &R, u: &DenseVector) -> Result<f64, CompositeError> {
        self.check(u)?;
        Ok(self.psi_value_unchecked(reg, u))
    }

    pub(crate) fn psi_value_unchecked<R: Regularizer + ?Sized>(&self, reg: &R, u: &DenseVector) -> f64 {
        let v = reg.prox(u, self.gamma);
        let gap = u.distance(&v);
        0.5 * self.apply_p(u).dot(u) + self.c.dot(u) + self.gamma * reg.value(&v) + 0.5 * gap * gap
    }

    /// `∇ψ(u) = Qu − Prox_γg(u) + c`.
    pub fn psi_grad<R: Regularizer + ?Sized>(&self, reg: &R, u: &DenseVector) -> Result<DenseVector, CompositeError> {
        self.check(u)?;
        Ok(self.psi_grad_unchecked(reg, u))
    }

    pub(crate) fn psi_grad_unchecked<R: Regularizer + ?Sized>(&self, reg: &R, u: &DenseVector) -> DenseVector {
        let v = reg.prox(u, self.gamma);
        let mut grad = self.apply_q(u);
        for ((gi, vi), ci) in grad.iter_mut().zip(v.iter()).zip(self.c.iter()) {
            *gi += ci - vi;
        }
        grad
    }

    /// `x = Qu + c`.
    pub fn recover_x(&self, u: &DenseVector) -> Result<DenseVector, CompositeError> {
        self.check(u)?;
        Ok(self.q.matvec(u).add(&self.c))
    }
}

/// Chooses `γ = gamma_safety / λ̂_max(Ā)` (or `gamma_safety` when `Ā = 0`),
/// certifies `I − γĀ ≻ 0` by Cholesky, halving `γ` on failure.
pub fn build_reduction<R: Regularizer>(
    prob: &QuadraticCompositeProblem<R>,
    gamma_safety: f64,
) -> Result<MoreauReduction, CompositeError> {
    if !(gamma_safety > 0.0 && gamma_safety < 1.0) {
        return Err(crate::newton::ConfigError::GammaSafety(gamma_safety).into());
    }
    let lambda = spectral_bound(prob.a_bar());
    let mut gamma = if lambda > 0.0 { gamma_safety / lambda } else { gamma_safety };
    for _ in 0..=MAX_GAMMA_HALVINGS {
        match MoreauReduction::with_gamma(prob.a_bar(), prob.b_bar(), gamma) {
            Ok(reduction) => return Ok(reduction),
            Err(LinalgError::NotPositiveDefinite { .. }) => gamma *= 0.5,
            Err(other) => return Err(other.into()),
        }
    }
    Err(CompositeError::ReductionFailed {
        halvings: MAX_GAMMA_HALVINGS,
    })
}
