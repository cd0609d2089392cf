use serde::{Deserialize, Serialize};

use crate::linalg::DenseVector;
use crate::newton::{gdnm_solve, C11Oracle, DirectionError, NewtonDirection, SolveReport, SolverConfig};

use super::{build_reduction, CompositeError, MoreauReduction, NewtonRegularizer, QuadraticCompositeProblem};

/// The reduced objective `ψ` exposed as a [`C11Oracle`].
///
/// Its residual is the relative KKT residual of the original problem at
/// `x = Qu + c`, so the solver stops on `‖∇ψ(u)‖ ≤ ε` or `η(x) ≤ ε`.
pub struct ReducedOracle<'a, R> {
    problem: &'a QuadraticCompositeProblem<R>,
    reduction: &'a MoreauReduction,
}

impl<'a, R: NewtonRegularizer> ReducedOracle<'a, R> {
    pub fn new(problem: &'a QuadraticCompositeProblem<R>, reduction: &'a MoreauReduction) -> Self {
        Self { problem, reduction }
    }
}

impl<R: NewtonRegularizer> C11Oracle for ReducedOracle<'_, R> {
    fn value(&self, u: &DenseVector) -> f64 {
        self.reduction.psi_value_unchecked(self.problem.regularizer(), u)
    }

    fn gradient(&self, u: &DenseVector) -> DenseVector {
        self.reduction.psi_grad_unchecked(self.problem.regularizer(), u)
    }

    fn direction(&self, u: &DenseVector, grad: &DenseVector) -> Result<NewtonDirection, DirectionError> {
        let reg = self.problem.regularizer();
        let v = reg.prox(u, self.reduction.gamma());
        reg.newton_direction(self.reduction, u, &v, grad)
    }

    fn residual(&self, u: &DenseVector) -> Option<f64> {
        let x = self.reduction.q().matvec(u).add(self.reduction.c());
        Some(self.problem.kkt_residual(&x))
    }
}

/// Result of a composite solve: the reduced-problem report plus the recovered `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositeReport {
    /// Trace and iterates are in the reduced variable `u`.
    pub solve: SolveReport,
    /// `x = Qu + c` at the final `u`.
    pub x: DenseVector,
    /// Composite objective at `x`.
    pub objective: f64,
    /// Relative KKT residual at `x`.
    pub eta: f64,
    pub gamma: f64,
    pub lip_ell: f64,
    pub kappa: Option<f64>,
    /// `1/(2ℓκ)` when `κ` is available.
    pub sigma_bound: Option<f64>,
    /// Whether the configured `σ` lies below [`sigma_bound`](Self::sigma_bound).
    pub sigma_within_bound: Option<bool>,
}

/// Generalized damped Newton method on the reduced problem, started at `u = 0`.
pub fn gdnm_composite_solve<R: NewtonRegularizer>(
    prob: &QuadraticCompositeProblem<R>,
    cfg: &SolverConfig,
) -> Result<CompositeReport, CompositeError> {
    gdnm_composite_solve_from(prob, cfg, &DenseVector::zeros(prob.dim()))
}

pub fn gdnm_composite_solve_from<R: NewtonRegularizer>(
    prob: &QuadraticCompositeProblem<R>,
    cfg: &SolverConfig,
    u0: &DenseVector,
) -> Result<CompositeReport, CompositeError> {
    cfg.validate()?;
    prob.check_dim(u0)?;
    let reduction = build_reduction(prob, cfg.gamma_safety)?;
    solve_with_reduction(prob, &reduction, cfg, u0)
}

/// Runs the solver on an already built (possibly shifted) reduction.
pub fn solve_with_reduction<R: NewtonRegularizer>(
    prob: &QuadraticCompositeProblem<R>,
    reduction: &MoreauReduction,
    cfg: &SolverConfig,
    u0: &DenseVector,
) -> Result<CompositeReport, CompositeError> {
    prob.check_dim(u0)?;
    let oracle = ReducedOracle::new(prob, reduction);
    let solve = gdnm_solve(&oracle, u0, cfg)?;
    let x = reduction.recover_x(&solve.final_x)?;
    let sigma_bound = reduction.sigma_bound();
    Ok(CompositeReport {
        objective: prob.objective(&x),
        eta: prob.kkt_residual(&x),
        x,
        solve,
        gamma: reduction.gamma(),
        lip_ell: reduction.lip_ell(),
        kappa: reduction.kappa(),
        sigma_bound,
        sigma_within_bound: sigma_bound.map(|bound| cfg.sigma < bound),
    })
}
