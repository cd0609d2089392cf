//! First-order reference solvers for the Lasso: ISTA, FISTA, accelerated
//! proximal gradient with backtracking, and ADMM.
//!
//! All of them stop on the relative KKT residual `η ≤ eta_tol` and report
//! through [`SolveReport`] with one trace record per iterate and no stored
//! iterates.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lasso::{prox_l1, LassoError, LassoInstance};
use crate::linalg::{cholesky, spectral_bound, DenseMatrix, DenseVector, LinalgError};
use crate::newton::{IterationRecord, SolveReport, SolveStatus, StepRecord};

/// Cap on step-size increases within one APG iteration.
pub const MAX_APG_BACKTRACKS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub eta_tol: f64,
    pub max_iter: usize,
    pub max_wall_seconds: f64,
    pub admm_rho: f64,
    pub backtrack_beta: f64,
    /// Starting Lipschitz estimate for APG; defaults to 1.
    pub apg_initial_lipschitz: Option<f64>,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            eta_tol: 1e-6,
            max_iter: 100_000,
            max_wall_seconds: 600.0,
            admm_rho: 1.0,
            backtrack_beta: 0.5,
            apg_initial_lipschitz: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BaselineError {
    #[error("invalid baseline configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Lasso(#[from] LassoError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

impl BaselineConfig {
    pub fn validate(&self) -> Result<(), BaselineError> {
        let bad = |what: &str| Err(BaselineError::Config(what.to_string()));
        if !(self.eta_tol > 0.0 && self.eta_tol.is_finite()) {
            return bad("eta_tol must be positive");
        }
        if self.max_wall_seconds.is_nan() || self.max_wall_seconds <= 0.0 {
            return bad("max_wall_seconds must be positive");
        }
        if !(self.admm_rho > 0.0 && self.admm_rho.is_finite()) {
            return bad("admm_rho must be positive");
        }
        if !(self.backtrack_beta > 0.0 && self.backtrack_beta < 1.0) {
            return bad("backtrack_beta must lie in (0, 1)");
        }
        if let Some(l0) = self.apg_initial_lipschitz {
            if !(l0 > 0.0 && l0.is_finite()) {
                return bad("apg_initial_lipschitz must be positive");
            }
        }
        Ok(())
    }
}

/// Smooth part in Gram form: `∇f(x) = Āx + b̄` with `Ā = AᵀA`, `b̄ = −Aᵀb`.
struct Smooth {
    a_bar: DenseMatrix,
    b_bar: DenseVector,
}

impl Smooth {
    fn new(inst: &LassoInstance) -> Self {
        Self {
            a_bar: inst.a().gram(),
            b_bar: inst.a().transpose_matvec(inst.b()).scaled(-1.0),
        }
    }

    fn gradient(&self, x: &[f64]) -> DenseVector {
        self.a_bar.matvec(x).add(&self.b_bar)
    }

    /// `L = λ̂_max(Ā)`, or 1 when `Ā = 0`.
    fn lipschitz(&self) -> f64 {
        let l = spectral_bound(&self.a_bar);
        if l > 0.0 {
            l
        } else {
            1.0
        }
    }
}

/// Accumulates the trace and applies the shared stopping rules.
struct Tracker<'a> {
    inst: &'a LassoInstance,
    cfg: &'a BaselineConfig,
    start: Instant,
    trace: Vec<IterationRecord>,
}

impl<'a> Tracker<'a> {
    fn new(inst: &'a LassoInstance, cfg: &'a BaselineConfig) -> Self {
        Self {
            inst,
            cfg,
            start: Instant::now(),
            trace: Vec::new(),
        }
    }

    /// Records iterate `x`; returns a status when the run must stop there.
    fn observe(&mut self, x: &DenseVector) -> Option<SolveStatus> {
        let eval = self.inst.evaluate(x).expect("iterate dimension fixed by construction");
        let k = self.trace.len();
        let wall_seconds = self.start.elapsed().as_secs_f64();
        self.trace.push(IterationRecord {
            k,
            objective: eval.objective,
            grad_norm: None,
            residual: Some(eval.eta),
            wall_seconds,
            step: None,
        });
        if !eval.eta.is_finite() || !x.is_finite() {
            Some(SolveStatus::DirectionFailed)
        } else if eval.eta <= self.cfg.eta_tol {
            Some(SolveStatus::Converged)
        } else if k >= self.cfg.max_iter {
            Some(SolveStatus::MaxIterations)
        } else if wall_seconds >= self.cfg.max_wall_seconds {
            Some(SolveStatus::TimedOut)
        } else {
            None
        }
    }

    /// Attaches the step that left the latest iterate.
    fn record_step(&mut self, step: StepRecord) {
        if let Some(last) = self.trace.last_mut() {
            last.step = Some(step);
        }
    }

    fn finish(self, status: SolveStatus, message: Option<String>, x: DenseVector) -> SolveReport {
        SolveReport {
            status,
            message,
            final_x: x,
            iterations: self.trace.len() - 1,
            trace: self.trace,
            rate_diagnostics: Vec::new(),
            iterates: Vec::new(),
            wall_seconds: self.start.elapsed().as_secs_f64(),
        }
    }
}

fn gradient_step(step: f64, direction_norm: f64) -> StepRecord {
    StepRecord {
        tau: step,
        backtracks: 0,
        direction_norm,
        slope: None,
        fallback_used: false,
        inclusion_verified: None,
    }
}

/// Proximal gradient with constant step `1/L`, started at 0.
pub fn ista_solve(inst: &LassoInstance, cfg: &BaselineConfig) -> Result<SolveReport, BaselineError> {
    cfg.validate()?;
    let smooth = Smooth::new(inst);
    let l = smooth.lipschitz();
    let threshold = inst.mu() / l;
    let mut tracker = Tracker::new(inst, cfg);
    let mut x = DenseVector::zeros(inst.cols());
    loop {
        if let Some(status) = tracker.observe(&x) {
            return Ok(tracker.finish(status, None, x));
        }
        let grad = smooth.gradient(&x);
        let next = prox_l1(&x.add_scaled(-1.0 / l, &grad), threshold);
        tracker.record_step(gradient_step(1.0 / l, next.distance(&x)));
        x = next;
    }
}

/// FISTA with constant step `1/L`, started at 0.
pub fn fista_solve(inst: &LassoInstance, cfg: &BaselineConfig) -> Result<SolveReport, BaselineError> {
    cfg.validate()?;
    let smooth = Smooth::new(inst);
    let l = smooth.lipschitz();
    let threshold = inst.mu() / l;
    let mut tracker = Tracker::new(inst, cfg);
    let mut x = DenseVector::zeros(inst.cols());
    let mut y = x.clone();
    let mut t = 1.0_f64;
    loop {
        if let Some(status) = tracker.observe(&x) {
            return Ok(tracker.finish(status, None, x));
        }
        let grad = smooth.gradient(&y);
        let next = prox_l1(&y.add_scaled(-1.0 / l, &grad), threshold);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        y = next.add_scaled((t - 1.0) / t_next, &next.sub(&x));
        tracker.record_step(gradient_step(1.0 / l, next.distance(&x)));
        x = next;
        t = t_next;
    }
}

/// FISTA whose Lipschitz estimate grows by `1/backtrack_beta` until the
/// quadratic upper bound holds at the trial point.
pub fn apg_solve(inst: &LassoInstance, cfg: &BaselineConfig) -> Result<SolveReport, BaselineError> {
    cfg.validate()?;
    let smooth = Smooth::new(inst);
    let mut l = cfg.apg_initial_lipschitz.unwrap_or(1.0);
    let mut tracker = Tracker::new(inst, cfg);
    let mut x = DenseVector::zeros(inst.cols());
    let mut y = x.clone();
    let mut t = 1.0_f64;
    loop {
        if let Some(status) = tracker.observe(&x) {
            return Ok(tracker.finish(status, None, x));
        }
        let grad = smooth.gradient(&y);
        let mut backtracks = 0;
        let next = loop {
            let trial = prox_l1(&y.add_scaled(-1.0 / l, &grad), inst.mu() / l);
            let d = trial.sub(&y);
            // For quadratic f the test f(p) ≤ f(y) + ⟨∇f(y), p − y⟩ + L/2‖p − y‖²
            // reduces to ⟨Ā(p − y), p − y⟩ ≤ L‖p − y‖².
            if smooth.a_bar.matvec(&d).dot(&d) <= l * d.dot(&d) {
                break trial;
            }
            if backtracks == MAX_APG_BACKTRACKS {
                let msg = format!("no acceptable step after {MAX_APG_BACKTRACKS} backtracks");
                return Ok(tracker.finish(SolveStatus::LineSearchFailed, Some(msg), x));
            }
            l /= cfg.backtrack_beta;
            backtracks += 1;
        };
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        y = next.add_scaled((t - 1.0) / t_next, &next.sub(&x));
        tracker.record_step(StepRecord {
            backtracks,
            ..gradient_step(1.0 / l, next.distance(&x))
        });
        x = next;
        t = t_next;
    }
}

/// Scaled-form ADMM for `½‖Ax − b‖² + μ‖z‖₁` subject to `x = z`, with a
/// cached Cholesky factor of `Ā + ρI`. `η` is measured at the `x` iterate.
pub fn admm_solve(inst: &LassoInstance, cfg: &BaselineConfig) -> Result<SolveReport, BaselineError> {
    cfg.validate()?;
    let rho = cfg.admm_rho;
    let smooth = Smooth::new(inst);
    let factor = cholesky(&smooth.a_bar.add_diagonal(rho))?;
    let atb = smooth.b_bar.scaled(-1.0);
    let n = inst.cols();
    let mut tracker = Tracker::new(inst, cfg);
    let mut x = DenseVector::zeros(n);
    let mut z = DenseVector::zeros(n);
    let mut w = DenseVector::zeros(n);
    loop {
        if let Some(status) = tracker.observe(&x) {
            return Ok(tracker.finish(status, None, x));
        }
        let rhs = atb.add_scaled(rho, &z.sub(&w));
        let next = factor.solve(&rhs);
        z = prox_l1(&next.add(&w), inst.mu() / rho);
        w.axpy(1.0, &next.sub(&z));
        tracker.record_step(gradient_step(1.0, next.distance(&x)));
        x = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(mu: f64) -> LassoInstance {
        LassoInstance::new(
            DenseMatrix::from_rows(&[[1.0]]).unwrap(),
            DenseVector::new(vec![2.0]).unwrap(),
            mu,
        )
        .unwrap()
    }

    type Solver = fn(&LassoInstance, &BaselineConfig) -> Result<SolveReport, BaselineError>;
    const ALL: [(&str, Solver); 4] = [("ista", ista_solve), ("fista", fista_solve), ("apg", apg_solve), ("admm", admm_solve)];

    #[test]
    fn scalar_instance_closed_form() {
        let inst = scalar(0.5);
        // η = |x − 1.5|/3 here, so the tolerance is tightened to pin x to 1e-6
        let cfg = BaselineConfig {
            eta_tol: 1e-8,
            ..BaselineConfig::default()
        };
        for (name, solve) in ALL {
            let rep = solve(&inst, &cfg).unwrap();
            assert_eq!(rep.status, SolveStatus::Converged, "{name}");
            assert!((rep.final_x[0] - 1.5).abs() < 1e-6, "{name}: {}", rep.final_x[0]);
            assert!(rep.final_residual().unwrap() <= 1e-8);
            assert_eq!(rep.trace.len(), rep.iterations + 1);
        }
    }

    #[test]
    fn zero_mu_identity_is_least_squares() {
        let inst = LassoInstance::new(
            DenseMatrix::identity(3),
            DenseVector::new(vec![1.0, -2.0, 0.5]).unwrap(),
            0.0,
        )
        .unwrap();
        for (name, solve) in ALL {
            let rep = solve(&inst, &BaselineConfig::default()).unwrap();
            assert!(rep.converged(), "{name}");
            assert!(rep.final_x.distance(inst.b()) < 1e-5, "{name}");
        }
    }

    #[test]
    fn apg_accepts_first_step_with_upper_bound() {
        let inst = scalar(0.5);
        let cfg = BaselineConfig {
            apg_initial_lipschitz: Some(2.0),
            ..BaselineConfig::default()
        };
        let rep = apg_solve(&inst, &cfg).unwrap();
        assert!(rep.steps().all(|s| s.backtracks == 0));
    }

    #[test]
    fn apg_backtracks_from_small_estimate() {
        let inst = LassoInstance::new(
            DenseMatrix::from_rows(&[[3.0]]).unwrap(),
            DenseVector::new(vec![2.0]).unwrap(),
            0.1,
        )
        .unwrap();
        let cfg = BaselineConfig {
            apg_initial_lipschitz: Some(1.0),
            ..BaselineConfig::default()
        };
        let rep = apg_solve(&inst, &cfg).unwrap();
        assert!(rep.converged());
        // L must reach 9: 1 → 2 → 4 → 8 → 16
        assert_eq!(rep.trace[0].step.as_ref().unwrap().backtracks, 4);
    }

    #[test]
    fn iteration_cap_is_reported() {
        let inst = LassoInstance::new(
            DenseMatrix::from_rows(&[[1.0, 0.99], [0.99, 1.0]]).unwrap(),
            DenseVector::new(vec![1.0, -1.0]).unwrap(),
            1e-3,
        )
        .unwrap();
        let cfg = BaselineConfig {
            max_iter: 2,
            ..BaselineConfig::default()
        };
        let rep = ista_solve(&inst, &cfg).unwrap();
        assert_eq!(rep.status, SolveStatus::MaxIterations);
        assert_eq!(rep.iterations, 2);
    }

    #[test]
    fn config_validation() {
        let bad = BaselineConfig {
            admm_rho: 0.0,
            ..BaselineConfig::default()
        };
        assert!(matches!(bad.validate(), Err(BaselineError::Config(_))));
        let bad = BaselineConfig {
            eta_tol: 0.0,
            ..BaselineConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
