use serde::{Deserialize, Serialize};

use crate::linalg::DenseVector;
use crate::newton::{SolveReport, SolveStatus, SolverConfig};

use super::{build_reduction, solve_with_reduction, CompositeError, NewtonRegularizer, QuadraticCompositeProblem};

/// Inner stages stop on `‖∇ψ_ε‖ ≤ STAGE_TOL_FACTOR · grad_tol` (or on the
/// unperturbed residual). A warm start is already near-stationary for the
/// next, slightly smaller `ε`, so the outer tolerance would end stages before
/// they move.
pub const STAGE_TOL_FACTOR: f64 = 1e-3;

/// `ε_j = 10^{−2−j}` for `j = 0..=6`.
pub fn default_schedule() -> Vec<f64> {
    (0..=6).map(|j| 10f64.powi(-2 - j)).collect()
}

/// One regularized subproblem of a Tikhonov run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TikhonovStage {
    pub eps: f64,
    pub report: SolveReport,
    /// KKT residual of the unperturbed problem at the stage solution.
    pub eta: f64,
    /// `‖u_j − u_{j−1}‖`, absent for the first stage.
    pub u_change: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TikhonovReport {
    pub status: SolveStatus,
    pub stages: Vec<TikhonovStage>,
    pub u: DenseVector,
    pub x: DenseVector,
    pub objective: f64,
    pub eta: f64,
    pub gamma: f64,
    /// Newton steps summed over all stages.
    pub iterations: usize,
    pub wall_seconds: f64,
}

/// Solves the reduced problem with `P` replaced by `P + εI` for each `ε` of a
/// strictly decreasing schedule, warm-starting every stage from the previous
/// solution.
///
/// Finishes `Converged` once the unperturbed KKT residual drops to
/// `cfg.grad_tol`, `ScheduleExhausted` if the schedule runs out first. A stage
/// that does not converge ends the run with that stage's status.
pub fn tikhonov_solve<R: NewtonRegularizer>(
    prob: &QuadraticCompositeProblem<R>,
    cfg: &SolverConfig,
    schedule: &[f64],
) -> Result<TikhonovReport, CompositeError> {
    cfg.validate()?;
    check_schedule(schedule)?;
    let start = std::time::Instant::now();
    let base = build_reduction(prob, cfg.gamma_safety)?;
    let stage_cfg = SolverConfig {
        grad_tol: cfg.grad_tol * STAGE_TOL_FACTOR,
        ..cfg.clone()
    };
    let mut u = DenseVector::zeros(prob.dim());
    let mut stages: Vec<TikhonovStage> = Vec::new();
    let mut status = SolveStatus::ScheduleExhausted;

    for &eps in schedule {
        let reduction = base.with_shift(eps);
        let stage = solve_with_reduction(prob, &reduction, &stage_cfg, &u)?;
        let u_change = stages.last().map(|prev| prev.report.final_x.distance(&stage.solve.final_x));
        let stage_status = stage.solve.status;
        stages.push(TikhonovStage {
            eps,
            eta: stage.eta,
            u_change,
            report: stage.solve,
        });
        u = stages.last().expect("just pushed").report.final_x.clone();
        if stage_status != SolveStatus::Converged {
            status = stage_status;
            break;
        }
        if stage.eta <= cfg.grad_tol {
            status = SolveStatus::Converged;
            break;
        }
    }

    let x = base.recover_x(&u)?;
    Ok(TikhonovReport {
        status,
        objective: prob.objective(&x),
        eta: prob.kkt_residual(&x),
        iterations: stages.iter().map(|s| s.report.iterations).sum(),
        stages,
        u,
        x,
        gamma: base.gamma(),
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

fn check_schedule(schedule: &[f64]) -> Result<(), CompositeError> {
    if schedule.is_empty() {
        return Err(CompositeError::Schedule("empty".into()));
    }
    if let Some(bad) = schedule.iter().find(|e| !(e.is_finite() && **e >= 0.0)) {
        return Err(CompositeError::Schedule(format!("entry {bad} is not a finite nonnegative number")));
    }
    if schedule.windows(2).any(|w| w[1] >= w[0]) {
        return Err(CompositeError::Schedule("must be strictly decreasing".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_schedule_spans_two_to_eight_decades() {
        let s = default_schedule();
        assert_eq!(s.len(), 7);
        assert_eq!(s[0], 1e-2);
        assert_eq!(s[6], 1e-8);
        assert!(check_schedule(&s).is_ok());
    }

    #[test]
    fn schedule_validation() {
        assert!(check_schedule(&[]).is_err());
        assert!(check_schedule(&[1e-2, 1e-2]).is_err());
        assert!(check_schedule(&[-1.0]).is_err());
        assert!(check_schedule(&[f64::NAN]).is_err());
        assert!(check_schedule(&[0.0]).is_ok());
    }
}
