//! Seeded random Lasso instances and multi-solver benchmark runs.

use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::{admm_solve, apg_solve, fista_solve, ista_solve, BaselineConfig};
use crate::composite::{default_schedule, gdnm_composite_solve, tikhonov_solve, CompositeError};
use crate::lasso::{LassoError, LassoInstance};
use crate::linalg::{DenseMatrix, DenseVector};
use crate::newton::{SolveStatus, SolverConfig};

/// Generator identifier written into every report.
pub const PRNG_ID: &str = "chacha20 (rand_chacha 0.9) + ziggurat StandardNormal (rand_distr 0.5); A row-major, then b";

/// Status string of a row whose solver could not be set up.
pub const ERROR_STATUS: &str = "Error";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BenchError {
    #[error("invalid size {m}x{n}: both dimensions must be at least 1")]
    InvalidSize { m: usize, n: usize },
    #[error("unknown solver '{0}'")]
    UnknownSolver(String),
    #[error("invalid mu mode '{0}'")]
    InvalidMuMode(String),
    #[error("invalid size token '{0}'")]
    InvalidSizeToken(String),
    #[error(transparent)]
    Lasso(#[from] LassoError),
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

/// `A ∈ ℝ^{m×n}` and `b ∈ ℝ^m` with i.i.d. standard normal entries.
pub fn gen_data(m: usize, n: usize, seed: u64) -> Result<(DenseMatrix, DenseVector), BenchError> {
    if m == 0 || n == 0 {
        return Err(BenchError::InvalidSize { m, n });
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut draw = |len: usize| -> Vec<f64> { (0..len).map(|_| StandardNormal.sample(&mut rng)).collect() };
    let a = DenseMatrix::new(m, n, draw(m * n)).expect("shape matches");
    let b = DenseVector::new(draw(m)).expect("normal draws are finite");
    Ok((a, b))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "value")]
pub enum MuMode {
    Fixed(f64),
    /// `μ = 10⁻³ ‖Aᵀb‖_∞`.
    Relative,
}

impl FromStr for MuMode {
    type Err = BenchError;

    /// `relative` or `fixed:<value>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || BenchError::InvalidMuMode(s.to_string());
        if s == "relative" {
            return Ok(MuMode::Relative);
        }
        let value: f64 = s.strip_prefix("fixed:").ok_or_else(bad)?.parse().map_err(|_| bad())?;
        if value.is_finite() && value > 0.0 {
            Ok(MuMode::Fixed(value))
        } else {
            Err(bad())
        }
    }
}

impl std::fmt::Display for MuMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MuMode::Fixed(v) => write!(f, "fixed:{v}"),
            MuMode::Relative => f.write_str("relative"),
        }
    }
}

pub fn gen_instance(m: usize, n: usize, seed: u64, mu_mode: MuMode) -> Result<LassoInstance, BenchError> {
    let (a, b) = gen_data(m, n, seed)?;
    let inst = match mu_mode {
        MuMode::Fixed(mu) => LassoInstance::new(a, b, mu)?,
        MuMode::Relative => LassoInstance::with_relative_mu(a, b)?,
    };
    Ok(inst)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Gdnm,
    Ista,
    Fista,
    Apg,
    Admm,
}

impl SolverKind {
    pub const ALL: [SolverKind; 5] = [
        SolverKind::Gdnm,
        SolverKind::Ista,
        SolverKind::Fista,
        SolverKind::Apg,
        SolverKind::Admm,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SolverKind::Gdnm => "gdnm",
            SolverKind::Ista => "ista",
            SolverKind::Fista => "fista",
            SolverKind::Apg => "apg",
            SolverKind::Admm => "admm",
        }
    }
}

impl FromStr for SolverKind {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SolverKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| BenchError::UnknownSolver(s.to_string()))
    }
}

impl std::fmt::Display for SolverKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Parses `1024x256,512x512`.
pub fn parse_sizes(s: &str) -> Result<Vec<(usize, usize)>, BenchError> {
    s.split(',')
        .map(|token| {
            let token = token.trim();
            let bad = || BenchError::InvalidSizeToken(token.to_string());
            let (m, n) = token.split_once(['x', 'X']).ok_or_else(bad)?;
            let m: usize = m.trim().parse().map_err(|_| bad())?;
            let n: usize = n.trim().parse().map_err(|_| bad())?;
            if m == 0 || n == 0 {
                return Err(BenchError::InvalidSize { m, n });
            }
            Ok((m, n))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSpec {
    pub sizes: Vec<(usize, usize)>,
    pub mu_mode: MuMode,
    pub seed: u64,
    pub solvers: Vec<SolverKind>,
    pub eta_tol: f64,
    pub max_wall_seconds: f64,
    /// Worker threads; `None` uses one per logical processor.
    pub threads: Option<usize>,
}

impl BenchSpec {
    pub fn validate(&self) -> Result<(), BenchError> {
        if let Some(&(m, n)) = self.sizes.iter().find(|(m, n)| *m == 0 || *n == 0) {
            return Err(BenchError::InvalidSize { m, n });
        }
        Ok(())
    }

    pub fn newton_config(&self) -> SolverConfig {
        SolverConfig {
            grad_tol: self.eta_tol,
            max_wall_seconds: self.max_wall_seconds,
            ..SolverConfig::default()
        }
    }

    pub fn baseline_config(&self) -> BaselineConfig {
        BaselineConfig {
            eta_tol: self.eta_tol,
            max_wall_seconds: self.max_wall_seconds,
            ..BaselineConfig::default()
        }
    }
}

/// One table row. `final_eta` and `final_objective` are absent only for
/// [`ERROR_STATUS`] rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub m: usize,
    pub n: usize,
    pub solver: SolverKind,
    pub iterations: usize,
    pub wall_seconds: f64,
    pub final_eta: Option<f64>,
    pub final_objective: Option<f64>,
    pub status: String,
}

/// A row together with the data behind it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchCell {
    pub row: BenchRow,
    pub mu: Option<f64>,
    /// GDNM on `m < n` goes through the Tikhonov schedule.
    pub tikhonov: bool,
    pub final_x: Option<DenseVector>,
    /// Error ratios of the Newton iterates, when available.
    pub rate_diagnostics: Vec<f64>,
    pub message: Option<String>,
}

struct Outcome {
    iterations: usize,
    eta: f64,
    objective: f64,
    status: SolveStatus,
    x: DenseVector,
    rates: Vec<f64>,
    message: Option<String>,
}

fn run_solver(inst: &LassoInstance, solver: SolverKind, spec: &BenchSpec, tikhonov: bool) -> Result<Outcome, String> {
    let done = |rep: crate::newton::SolveReport| {
        let eval = inst.evaluate(&rep.final_x).map_err(|e| e.to_string())?;
        Ok(Outcome {
            iterations: rep.iterations,
            eta: eval.eta,
            objective: eval.objective,
            status: rep.status,
            x: rep.final_x,
            rates: Vec::new(),
            message: rep.message,
        })
    };
    let base = spec.baseline_config();
    let err = |e: &dyn std::fmt::Display| e.to_string();
    match solver {
        SolverKind::Gdnm => {
            let prob = inst.to_composite().map_err(|e: CompositeError| e.to_string())?;
            let cfg = spec.newton_config();
            if tikhonov {
                let rep = tikhonov_solve(&prob, &cfg, &default_schedule()).map_err(|e| e.to_string())?;
                Ok(Outcome {
                    iterations: rep.iterations,
                    eta: rep.eta,
                    objective: rep.objective,
                    status: rep.status,
                    x: rep.x,
                    rates: Vec::new(),
                    message: None,
                })
            } else {
                let rep = gdnm_composite_solve(&prob, &cfg).map_err(|e| e.to_string())?;
                Ok(Outcome {
                    iterations: rep.solve.iterations,
                    eta: rep.eta,
                    objective: rep.objective,
                    status: rep.solve.status,
                    rates: rep.solve.rate_diagnostics,
                    message: rep.solve.message,
                    x: rep.x,
                })
            }
        }
        SolverKind::Ista => done(ista_solve(inst, &base).map_err(|e| err(&e))?),
        SolverKind::Fista => done(fista_solve(inst, &base).map_err(|e| err(&e))?),
        SolverKind::Apg => done(apg_solve(inst, &base).map_err(|e| err(&e))?),
        SolverKind::Admm => done(admm_solve(inst, &base).map_err(|e| err(&e))?),
    }
}

fn run_cell(spec: &BenchSpec, m: usize, n: usize, solver: SolverKind) -> BenchCell {
    let tikhonov = solver == SolverKind::Gdnm && m < n;
    let failed = |wall_seconds: f64, mu: Option<f64>, message: String| BenchCell {
        row: BenchRow {
            m,
            n,
            solver,
            iterations: 0,
            wall_seconds,
            final_eta: None,
            final_objective: None,
            status: ERROR_STATUS.to_string(),
        },
        mu,
        tikhonov,
        final_x: None,
        rate_diagnostics: Vec::new(),
        message: Some(message),
    };
    let inst = match gen_instance(m, n, spec.seed, spec.mu_mode) {
        Ok(inst) => inst,
        Err(e) => return failed(0.0, None, e.to_string()),
    };
    let start = Instant::now();
    let outcome = run_solver(&inst, solver, spec, tikhonov);
    let wall_seconds = start.elapsed().as_secs_f64();
    match outcome {
        Ok(out) => BenchCell {
            row: BenchRow {
                m,
                n,
                solver,
                iterations: out.iterations,
                wall_seconds,
                final_eta: Some(out.eta),
                final_objective: Some(out.objective),
                status: out.status.as_str().to_string(),
            },
            mu: Some(inst.mu()),
            tikhonov,
            final_x: Some(out.x),
            rate_diagnostics: out.rates,
            message: out.message,
        },
        Err(message) => failed(wall_seconds, Some(inst.mu()), message),
    }
}

/// Runs every (size, solver) cell, in parallel, and returns them in spec order.
pub fn run_bench_detailed(spec: &BenchSpec) -> Result<Vec<BenchCell>, BenchError> {
    spec.validate()?;
    let cells: Vec<(usize, usize, SolverKind)> = spec
        .sizes
        .iter()
        .flat_map(|&(m, n)| spec.solvers.iter().map(move |&s| (m, n, s)))
        .collect();
    if cells.is_empty() {
        return Ok(Vec::new());
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(threads) = spec.threads {
        builder = builder.num_threads(threads.max(1));
    }
    let pool = builder.build().map_err(|e| BenchError::ThreadPool(e.to_string()))?;
    Ok(pool.install(|| {
        cells
            .par_iter()
            .map(|&(m, n, solver)| run_cell(spec, m, n, solver))
            .collect()
    }))
}

pub fn run_bench(spec: &BenchSpec) -> Result<Vec<BenchRow>, BenchError> {
    Ok(run_bench_detailed(spec)?.into_iter().map(|c| c.row).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_and_determinism() {
        let (a, b) = gen_data(2, 3, 42).unwrap();
        assert_eq!(a.shape(), (2, 3));
        assert_eq!(b.dim(), 2);
        let (a2, b2) = gen_data(2, 3, 42).unwrap();
        assert_eq!(a, a2);
        assert_eq!(b, b2);
        let (a3, _) = gen_data(2, 3, 43).unwrap();
        assert_ne!(a, a3);
        assert!(gen_data(0, 3, 1).is_err());
    }

    #[test]
    fn entries_look_standard_normal() {
        let (a, _) = gen_data(1000, 10, 5).unwrap();
        let xs = a.as_slice();
        let len = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / len;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (len - 1.0);
        assert!(mean.abs() <= 0.1, "mean {mean}");
        assert!((0.9..=1.1).contains(&var), "var {var}");
    }

    #[test]
    fn parsing() {
        assert_eq!(parse_sizes("1024x256, 512x512").unwrap(), vec![(1024, 256), (512, 512)]);
        assert!(matches!(parse_sizes("12by3"), Err(BenchError::InvalidSizeToken(_))));
        assert!(parse_sizes("0x3").is_err());
        assert_eq!("fixed:1e-3".parse::<MuMode>().unwrap(), MuMode::Fixed(1e-3));
        assert_eq!("relative".parse::<MuMode>().unwrap(), MuMode::Relative);
        assert!("fixed:-1".parse::<MuMode>().is_err());
        assert_eq!("fista".parse::<SolverKind>().unwrap(), SolverKind::Fista);
        assert!("ssnal".parse::<SolverKind>().is_err());
    }

    fn spec(sizes: Vec<(usize, usize)>, solvers: Vec<SolverKind>) -> BenchSpec {
        BenchSpec {
            sizes,
            mu_mode: MuMode::Relative,
            seed: 3,
            solvers,
            eta_tol: 1e-6,
            max_wall_seconds: 60.0,
            threads: Some(2),
        }
    }

    #[test]
    fn empty_solver_list_gives_no_rows() {
        assert!(run_bench(&spec(vec![(8, 4)], vec![])).unwrap().is_empty());
    }

    #[test]
    fn rows_follow_spec_order_and_repeat() {
        let s = spec(vec![(20, 5), (12, 4)], vec![SolverKind::Fista, SolverKind::Gdnm]);
        let rows = run_bench(&s).unwrap();
        let order: Vec<_> = rows.iter().map(|r| (r.m, r.solver)).collect();
        assert_eq!(
            order,
            vec![(20, SolverKind::Fista), (20, SolverKind::Gdnm), (12, SolverKind::Fista), (12, SolverKind::Gdnm)]
        );
        let again = run_bench(&s).unwrap();
        for (a, b) in rows.iter().zip(&again) {
            assert_eq!(a.iterations, b.iterations);
            assert_eq!(a.final_eta, b.final_eta);
        }
    }

    #[test]
    fn wide_gdnm_is_routed_to_tikhonov() {
        let cells = run_bench_detailed(&spec(vec![(6, 10)], vec![SolverKind::Gdnm])).unwrap();
        assert!(cells[0].tikhonov);
    }
}
