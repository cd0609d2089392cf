//! Globally convergent generalized damped Newton method for `C^{1,1}` objectives.
//!
//! The objective is supplied through [`C11Oracle`]: its value, its gradient and
//! a Newton direction `d` with `−∇φ(x) ∈ ∂²φ(x)(d)`. Which element of the
//! second-order subdifferential produces `d` is the oracle's choice; the solver
//! only checks that `d` is a descent direction and damps it with an Armijo
//! backtracking line search started at the unit step.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{DenseVector, LinalgError};

/// A Newton direction produced by an oracle.
#[derive(Debug, Clone)]
pub struct NewtonDirection {
    pub d: DenseVector,
    /// The linear solve behind `d` needed the ridge fallback.
    pub fallback_used: bool,
    /// Outcome of an explicit second-order inclusion check, when the oracle runs one.
    pub inclusion_verified: Option<bool>,
}

impl NewtonDirection {
    pub fn plain(d: DenseVector) -> Self {
        Self {
            d,
            fallback_used: false,
            inclusion_verified: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DirectionError {
    #[error("linear algebra failure: {0}")]
    Linalg(#[from] LinalgError),
    #[error("{0}")]
    Other(String),
}

/// Value, gradient and Newton-direction access to a `C^{1,1}` function.
pub trait C11Oracle {
    fn value(&self, x: &DenseVector) -> f64;

    fn gradient(&self, x: &DenseVector) -> DenseVector;

    /// Returns `d` with `−grad ∈ ∂²φ(x)(d)`.
    fn direction(&self, x: &DenseVector, grad: &DenseVector) -> Result<NewtonDirection, DirectionError>;

    /// Problem-specific optimality residual. When present it is recorded in the
    /// trace and `residual ≤ grad_tol` also stops the solver.
    fn residual(&self, _x: &DenseVector) -> Option<f64> {
        None
    }
}

/// Oracle assembled from closures.
pub struct FnOracle<V, G, D> {
    value: V,
    gradient: G,
    direction: D,
}

impl<V, G, D> FnOracle<V, G, D>
where
    V: Fn(&DenseVector) -> f64,
    G: Fn(&DenseVector) -> DenseVector,
    D: Fn(&DenseVector, &DenseVector) -> Result<NewtonDirection, DirectionError>,
{
    pub fn new(value: V, gradient: G, direction: D) -> Self {
        Self {
            value,
            gradient,
            direction,
        }
    }
}

impl<V, G, D> C11Oracle for FnOracle<V, G, D>
where
    V: Fn(&DenseVector) -> f64,
    G: Fn(&DenseVector) -> DenseVector,
    D: Fn(&DenseVector, &DenseVector) -> Result<NewtonDirection, DirectionError>,
{
    fn value(&self, x: &DenseVector) -> f64 {
        (self.value)(x)
    }

    fn gradient(&self, x: &DenseVector) -> DenseVector {
        (self.gradient)(x)
    }

    fn direction(&self, x: &DenseVector, grad: &DenseVector) -> Result<NewtonDirection, DirectionError> {
        (self.direction)(x, grad)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("sigma must lie in (0, 0.5), got {0}")]
    Sigma(f64),
    #[error("beta must lie in (0, 1), got {0}")]
    Beta(f64),
    #[error("grad_tol must be positive, got {0}")]
    GradTol(f64),
    #[error("tau_min must lie in (0, 1), got {0}")]
    TauMin(f64),
    #[error("max_iter and max_backtracks must be positive")]
    Caps,
    #[error("max_wall_seconds must be positive, got {0}")]
    WallClock(f64),
    #[error("gamma_safety must lie in (0, 1), got {0}")]
    GammaSafety(f64),
}

/// Parameters of the damped Newton iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Armijo sufficient-decrease constant, in `(0, ½)`.
    pub sigma: f64,
    /// Backtracking contraction factor, in `(0, 1)`.
    pub beta: f64,
    /// Stop once `‖∇φ‖ ≤ grad_tol`.
    pub grad_tol: f64,
    pub max_iter: usize,
    pub max_backtracks: usize,
    pub tau_min: f64,
    pub max_wall_seconds: f64,
    /// Fraction of `1/λ̂_max(Ā)` used as the Moreau parameter in composite solves.
    pub gamma_safety: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            sigma: 0.25,
            beta: 0.5,
            grad_tol: 1e-6,
            max_iter: 1000,
            max_backtracks: 60,
            tau_min: 1e-12,
            max_wall_seconds: 6000.0,
            gamma_safety: 0.95,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.sigma > 0.0 && self.sigma < 0.5) {
            return Err(ConfigError::Sigma(self.sigma));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(ConfigError::Beta(self.beta));
        }
        if !(self.grad_tol > 0.0) {
            return Err(ConfigError::GradTol(self.grad_tol));
        }
        if !(self.tau_min > 0.0 && self.tau_min < 1.0) {
            return Err(ConfigError::TauMin(self.tau_min));
        }
        if self.max_iter == 0 || self.max_backtracks == 0 {
            return Err(ConfigError::Caps);
        }
        if !(self.max_wall_seconds > 0.0) {
            return Err(ConfigError::WallClock(self.max_wall_seconds));
        }
        if !(self.gamma_safety > 0.0 && self.gamma_safety < 1.0) {
            return Err(ConfigError::GammaSafety(self.gamma_safety));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    LineSearchFailed,
    DirectionFailed,
    TimedOut,
    /// A Tikhonov schedule ran out before successive solutions stabilized.
    ScheduleExhausted,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Converged => "Converged",
            SolveStatus::MaxIterations => "MaxIterations",
            SolveStatus::LineSearchFailed => "LineSearchFailed",
            SolveStatus::DirectionFailed => "DirectionFailed",
            SolveStatus::TimedOut => "TimedOut",
            SolveStatus::ScheduleExhausted => "ScheduleExhausted",
        }
    }
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The step taken from an iterate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// Accepted step length; `β^j` for Newton steps.
    pub tau: f64,
    pub backtracks: usize,
    pub direction_norm: f64,
    /// `⟨∇φ(x^k), d^k⟩` when the method has a search direction.
    pub slope: Option<f64>,
    pub fallback_used: bool,
    pub inclusion_verified: Option<bool>,
}

/// State at one iterate `x^k`, plus the step that left it (absent at the last iterate).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    pub objective: f64,
    pub grad_norm: Option<f64>,
    pub residual: Option<f64>,
    pub wall_seconds: f64,
    pub step: Option<StepRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub message: Option<String>,
    pub final_x: DenseVector,
    /// Number of steps taken; `trace.len() == iterations + 1`.
    pub iterations: usize,
    pub trace: Vec<IterationRecord>,
    /// `‖x^{k+1} − x_final‖ / ‖x^k − x_final‖` for every step.
    pub rate_diagnostics: Vec<f64>,
    /// Every iterate, kept by the Newton solvers only.
    pub iterates: Vec<DenseVector>,
    pub wall_seconds: f64,
}

impl SolveReport {
    pub fn last_record(&self) -> &IterationRecord {
        self.trace.last().expect("trace always holds the initial iterate")
    }

    pub fn final_objective(&self) -> f64 {
        self.last_record().objective
    }

    pub fn final_residual(&self) -> Option<f64> {
        self.last_record().residual
    }

    pub fn steps(&self) -> impl Iterator<Item = &StepRecord> {
        self.trace.iter().filter_map(|r| r.step.as_ref())
    }

    /// Smallest accepted step length.
    pub fn min_tau(&self) -> Option<f64> {
        self.steps().map(|s| s.tau).reduce(f64::min)
    }

    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LineSearchError {
    #[error("not a descent direction: <grad, d> = {0}")]
    NotDescent(f64),
    #[error("step length fell below tau_min after {backtracks} backtracks")]
    StepTooSmall { backtracks: usize },
    #[error("exceeded {0} backtracks")]
    TooManyBacktracks(usize),
}

/// An accepted Armijo step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmijoStep {
    pub tau: f64,
    /// `φ(x + τ d)`.
    pub value: f64,
    pub backtracks: usize,
}

/// Backtracking from `τ = 1` until `φ(x+τd) ≤ φ(x) + σ τ ⟨∇φ(x), d⟩`.
pub fn armijo_backtrack<O: C11Oracle + ?Sized>(
    oracle: &O,
    x: &DenseVector,
    d: &DenseVector,
    fx: f64,
    gx: &DenseVector,
    cfg: &SolverConfig,
) -> Result<ArmijoStep, LineSearchError> {
    let slope = gx.dot(d);
    if !(slope < 0.0) {
        return Err(LineSearchError::NotDescent(slope));
    }
    let mut tau = 1.0;
    let mut backtracks = 0;
    loop {
        if tau < cfg.tau_min {
            return Err(LineSearchError::StepTooSmall { backtracks });
        }
        let value = oracle.value(&x.add_scaled(tau, d));
        if value <= fx + cfg.sigma * tau * slope {
            return Ok(ArmijoStep { tau, value, backtracks });
        }
        if backtracks == cfg.max_backtracks {
            return Err(LineSearchError::TooManyBacktracks(cfg.max_backtracks));
        }
        tau *= cfg.beta;
        backtracks += 1;
    }
}

/// Runs the damped Newton iteration from `x0`.
///
/// Stops with `Converged` once `‖∇φ(x^k)‖ ≤ grad_tol` (or the oracle residual
/// drops to `grad_tol`). Failures are reported through the status, never as
/// an `Err`; only an invalid configuration is rejected up front.
pub fn gdnm_solve<O: C11Oracle + ?Sized>(
    oracle: &O,
    x0: &DenseVector,
    cfg: &SolverConfig,
) -> Result<SolveReport, ConfigError> {
    cfg.validate()?;
    let start = Instant::now();
    let mut x = x0.clone();
    let mut fx = oracle.value(&x);
    let mut iterates = vec![x.clone()];
    let mut trace = Vec::new();
    let mut message = None;

    let status = loop {
        let k = trace.len();
        let grad = oracle.gradient(&x);
        let grad_norm = grad.norm();
        let residual = oracle.residual(&x);
        let mut record = IterationRecord {
            k,
            objective: fx,
            grad_norm: Some(grad_norm),
            residual,
            wall_seconds: start.elapsed().as_secs_f64(),
            step: None,
        };

        if !fx.is_finite() || !grad_norm.is_finite() {
            message = Some("objective or gradient is not finite".to_string());
            trace.push(record);
            break SolveStatus::DirectionFailed;
        }
        if grad_norm <= cfg.grad_tol || residual.is_some_and(|r| r <= cfg.grad_tol) {
            trace.push(record);
            break SolveStatus::Converged;
        }
        if k >= cfg.max_iter {
            trace.push(record);
            break SolveStatus::MaxIterations;
        }
        if record.wall_seconds >= cfg.max_wall_seconds {
            trace.push(record);
            break SolveStatus::TimedOut;
        }

        let direction = match oracle.direction(&x, &grad) {
            Ok(direction) => direction,
            Err(err) => {
                message = Some(err.to_string());
                trace.push(record);
                break SolveStatus::DirectionFailed;
            }
        };
        let slope = grad.dot(&direction.d);
        if !(slope < 0.0) {
            message = Some(LineSearchError::NotDescent(slope).to_string());
            trace.push(record);
            break SolveStatus::DirectionFailed;
        }
        let step = match armijo_backtrack(oracle, &x, &direction.d, fx, &grad, cfg) {
            Ok(step) => step,
            Err(err) => {
                message = Some(err.to_string());
                trace.push(record);
                break SolveStatus::LineSearchFailed;
            }
        };

        record.step = Some(StepRecord {
            tau: step.tau,
            backtracks: step.backtracks,
            direction_norm: direction.d.norm(),
            slope: Some(slope),
            fallback_used: direction.fallback_used,
            inclusion_verified: direction.inclusion_verified,
        });
        trace.push(record);
        x.axpy(step.tau, &direction.d);
        fx = step.value;
        iterates.push(x.clone());
    };

    let rate_diagnostics = error_ratios(&iterates, &x);
    Ok(SolveReport {
        status,
        message,
        final_x: x,
        iterations: trace.len() - 1,
        trace,
        rate_diagnostics,
        iterates,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Empirical convergence-rate class of an iterate sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RateClass {
    Sublinear,
    QLinear,
    QSuperlinearConsistent,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RateError {
    #[error("need at least {needed} iterates, got {got}")]
    InsufficientTrace { needed: usize, got: usize },
}

/// Ratios `‖x^{k+1} − x*‖ / ‖x^k − x*‖`; a zero denominator yields 0.
pub fn error_ratios(iterates: &[DenseVector], reference: &DenseVector) -> Vec<f64> {
    let errors: Vec<f64> = iterates.iter().map(|x| x.distance(reference)).collect();
    errors
        .windows(2)
        .map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 })
        .collect()
}

/// Ratios at or above this are treated as stagnation.
const SUBLINEAR_RATIO: f64 = 0.99;
/// A strictly increasing ratio tail ending above this is treated as creeping toward 1.
const CREEPING_RATIO: f64 = 0.5;
/// Last ratio needed for a superlinear-consistent verdict.
const SUPERLINEAR_LAST_RATIO: f64 = 0.1;

/// Classifies the tail of `iterates` relative to `reference`.
///
/// Uses the last `min(5, len − 1)` error ratios: strictly decreasing with a
/// final ratio below 0.1 is superlinear-consistent; ratios reaching 0.99, or
/// strictly increasing past 0.5, are sublinear; anything else is Q-linear.
pub fn estimate_rate(iterates: &[DenseVector], reference: &DenseVector) -> Result<RateClass, RateError> {
    if iterates.len() < 4 {
        return Err(RateError::InsufficientTrace {
            needed: 4,
            got: iterates.len(),
        });
    }
    let ratios = error_ratios(iterates, reference);
    let window = 5.min(iterates.len() - 1);
    let tail = &ratios[ratios.len() - window..];
    let last = tail[window - 1];
    let decreasing = tail.windows(2).all(|w| w[1] < w[0]);
    let increasing = tail.windows(2).all(|w| w[1] > w[0]);
    if decreasing && last < SUPERLINEAR_LAST_RATIO {
        return Ok(RateClass::QSuperlinearConsistent);
    }
    let worst = tail.iter().cloned().fold(0.0, f64::max);
    if worst >= SUBLINEAR_RATIO || (increasing && last > CREEPING_RATIO) {
        Ok(RateClass::Sublinear)
    } else {
        Ok(RateClass::QLinear)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> DenseVector {
        DenseVector::new(x.to_vec()).unwrap()
    }

    fn half_square() -> impl C11Oracle {
        FnOracle::new(
            |x: &DenseVector| 0.5 * x.dot(x),
            |x: &DenseVector| x.clone(),
            |_: &DenseVector, g: &DenseVector| Ok(NewtonDirection::plain(g.scaled(-1.0))),
        )
    }

    fn exponential() -> impl C11Oracle {
        FnOracle::new(
            |x: &DenseVector| x[0].exp(),
            |x: &DenseVector| v(&[x[0].exp()]),
            |x: &DenseVector, g: &DenseVector| Ok(NewtonDirection::plain(v(&[-g[0] / x[0].exp()]))),
        )
    }

    #[test]
    fn armijo_accepts_unit_step_on_quadratic() {
        let cfg = SolverConfig::default();
        let x = v(&[1.0]);
        let step = armijo_backtrack(&half_square(), &x, &v(&[-1.0]), 0.5, &x, &cfg).unwrap();
        assert_eq!(step.tau, 1.0);
        assert_eq!(step.value, 0.0);
    }

    #[test]
    fn armijo_unit_step_on_exponential() {
        let x = v(&[1.0]);
        let fx = 1f64.exp();
        for (sigma, beta) in [(0.01, 0.1), (0.25, 0.5), (0.49, 0.9)] {
            let cfg = SolverConfig {
                sigma,
                beta,
                ..SolverConfig::default()
            };
            let step = armijo_backtrack(&exponential(), &x, &v(&[-1.0]), fx, &v(&[fx]), &cfg).unwrap();
            assert_eq!(step.tau, 1.0);
        }
    }

    #[test]
    fn armijo_backtracks_three_times() {
        // τ=1: 40.5, τ=.5: 8, τ=.25: 1.125 all fail; τ=.125 gives 0.03125 ≤ 0.1875
        let cfg = SolverConfig::default();
        let x = v(&[1.0]);
        let step = armijo_backtrack(&half_square(), &x, &v(&[-10.0]), 0.5, &x, &cfg).unwrap();
        assert_eq!(step.tau, 0.125);
        assert_eq!(step.backtracks, 3);
    }

    #[test]
    fn armijo_rejects_ascent_and_reports_failure() {
        let cfg = SolverConfig::default();
        let x = v(&[1.0]);
        assert!(matches!(
            armijo_backtrack(&half_square(), &x, &v(&[1.0]), 0.5, &x, &cfg),
            Err(LineSearchError::NotDescent(_))
        ));
        let tight = SolverConfig {
            max_backtracks: 2,
            ..SolverConfig::default()
        };
        assert!(matches!(
            armijo_backtrack(&half_square(), &x, &v(&[-10.0]), 0.5, &x, &tight),
            Err(LineSearchError::TooManyBacktracks(2))
        ));
        let floor = SolverConfig {
            tau_min: 0.3,
            ..SolverConfig::default()
        };
        assert!(matches!(
            armijo_backtrack(&half_square(), &x, &v(&[-10.0]), 0.5, &x, &floor),
            Err(LineSearchError::StepTooSmall { backtracks: 2 })
        ));
    }

    #[test]
    fn exact_newton_on_quadratic_converges_in_one_step() {
        let report = gdnm_solve(&half_square(), &v(&[3.0, -4.0]), &SolverConfig::default()).unwrap();
        assert_eq!(report.status, SolveStatus::Converged);
        assert_eq!(report.iterations, 1);
        assert_eq!(report.final_x.as_slice(), &[0.0, 0.0]);
        assert_eq!(report.trace[0].step.as_ref().unwrap().tau, 1.0);
    }

    #[test]
    fn piecewise_quadratic_kink() {
        // φ(x) = ½x² + ½max(x,0)²
        let oracle = FnOracle::new(
            |x: &DenseVector| 0.5 * x[0] * x[0] + 0.5 * x[0].max(0.0).powi(2),
            |x: &DenseVector| v(&[x[0] + x[0].max(0.0)]),
            |x: &DenseVector, g: &DenseVector| {
                let curvature = if x[0] > 0.0 { 2.0 } else { 1.0 };
                Ok(NewtonDirection::plain(v(&[-g[0] / curvature])))
            },
        );
        let report = gdnm_solve(&oracle, &v(&[-1.0]), &SolverConfig::default()).unwrap();
        assert_eq!(report.status, SolveStatus::Converged);
        assert!(report.iterations <= 2);
        assert_eq!(report.final_x[0], 0.0);
    }

    #[test]
    fn exponential_diverges_linearly() {
        let cfg = SolverConfig {
            grad_tol: 1e-300,
            max_iter: 50,
            ..SolverConfig::default()
        };
        let report = gdnm_solve(&exponential(), &v(&[1.0]), &cfg).unwrap();
        assert_eq!(report.status, SolveStatus::MaxIterations);
        for (k, x) in report.iterates.iter().enumerate() {
            assert_eq!(x[0], 1.0 - k as f64);
        }
    }

    #[test]
    fn direction_failure_is_reported() {
        let oracle = FnOracle::new(
            |x: &DenseVector| 0.5 * x.dot(x),
            |x: &DenseVector| x.clone(),
            |_: &DenseVector, _: &DenseVector| Err(DirectionError::Other("no direction".into())),
        );
        let report = gdnm_solve(&oracle, &v(&[1.0]), &SolverConfig::default()).unwrap();
        assert_eq!(report.status, SolveStatus::DirectionFailed);
        assert_eq!(report.message.as_deref(), Some("no direction"));

        let ascent = FnOracle::new(
            |x: &DenseVector| 0.5 * x.dot(x),
            |x: &DenseVector| x.clone(),
            |_: &DenseVector, g: &DenseVector| Ok(NewtonDirection::plain(g.clone())),
        );
        let report = gdnm_solve(&ascent, &v(&[1.0]), &SolverConfig::default()).unwrap();
        assert_eq!(report.status, SolveStatus::DirectionFailed);
    }

    #[test]
    fn config_validation() {
        let bad = SolverConfig {
            sigma: 0.5,
            ..SolverConfig::default()
        };
        assert_eq!(bad.validate(), Err(ConfigError::Sigma(0.5)));
        let bad = SolverConfig {
            beta: 1.0,
            ..SolverConfig::default()
        };
        assert!(gdnm_solve(&half_square(), &v(&[1.0]), &bad).is_err());
    }

    fn scalar_iterates(errors: &[f64]) -> Vec<DenseVector> {
        errors.iter().map(|e| v(&[*e])).collect()
    }

    #[test]
    fn rate_classes() {
        let zero = v(&[0.0]);
        let geometric: Vec<f64> = (0..10).map(|k| 0.5f64.powi(k)).collect();
        assert_eq!(estimate_rate(&scalar_iterates(&geometric), &zero), Ok(RateClass::QLinear));

        let fast = [1e-1, 1e-2, 1e-4, 1e-8];
        assert_eq!(
            estimate_rate(&scalar_iterates(&fast), &zero),
            Ok(RateClass::QSuperlinearConsistent)
        );

        let harmonic: Vec<f64> = (1..=20).map(|k| 1.0 / k as f64).collect();
        assert_eq!(estimate_rate(&scalar_iterates(&harmonic), &zero), Ok(RateClass::Sublinear));

        assert_eq!(
            estimate_rate(&scalar_iterates(&[1.0, 0.5, 0.25]), &zero),
            Err(RateError::InsufficientTrace { needed: 4, got: 3 })
        );
    }
}
