//! Command implementations behind the `gdnm` binary.
//!
//! Exit codes: 0 on success, 1 on input errors, 2 when a solve ends in any
//! status other than `Converged`.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use gdnm_core::baselines::{admm_solve, apg_solve, fista_solve, ista_solve, BaselineConfig, BaselineError};
use gdnm_core::bench::{gen_data, parse_sizes, run_bench_detailed, BenchRow, BenchSpec, MuMode, SolverKind, PRNG_ID};
use gdnm_core::composite::{default_schedule, gdnm_composite_solve, tikhonov_solve};
use gdnm_core::lasso::{mu_default, LassoInstance};
use gdnm_core::linalg::{format_f64, load_matrix, load_vector, write_matrix, write_vector, DenseVector};
use gdnm_core::newton::{IterationRecord, SolveReport, SolveStatus, SolverConfig};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SCHEMA_VERSION: &str = "1";
pub const THREADS_ENV: &str = "GDNM_THREADS";

#[derive(Debug, Parser)]
#[command(name = "gdnm", version, about = "Generalized damped Newton solvers for Lasso problems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a Lasso instance given as CSV files.
    Solve(SolveArgs),
    /// Write a seeded random instance as CSV files.
    Gen(GenArgs),
    /// Run solvers over a grid of random instances.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long)]
    pub rhs: PathBuf,
    /// Regularization weight; defaults to the relative rule.
    #[arg(long, allow_negative_numbers = true, conflicts_with = "mu_relative")]
    pub mu: Option<f64>,
    /// mu = 1e-3 * ||A^T b||_inf.
    #[arg(long)]
    pub mu_relative: bool,
    #[arg(long, default_value = "gdnm")]
    pub solver: String,
    #[arg(long, default_value_t = 1e-6, allow_negative_numbers = true)]
    pub eps: f64,
    #[arg(long, default_value_t = 0.25, allow_negative_numbers = true)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    pub beta: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_iter: usize,
    /// Solve through the Tikhonov schedule (always used when m < n).
    #[arg(long)]
    pub tikhonov: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub seed: u64,
    /// Files are written to PREFIX_A.csv and PREFIX_b.csv.
    #[arg(long)]
    pub out_prefix: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Comma-separated MxN tokens, e.g. 1024x256,512x512.
    #[arg(long)]
    pub sizes: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "gdnm,ista,fista,apg,admm")]
    pub solvers: String,
    /// fixed:VALUE or relative.
    #[arg(long, default_value = "relative")]
    pub mu_mode: String,
    #[arg(long, default_value_t = 1e-6, allow_negative_numbers = true)]
    pub eta_tol: f64,
    #[arg(long, default_value_t = 600.0, allow_negative_numbers = true)]
    pub max_wall_seconds: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    fn input(e: impl std::fmt::Display) -> Self {
        CliError::Input(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildInfo {
    pub package: String,
    pub version: String,
    pub profile: String,
}

impl BuildInfo {
    pub fn current() -> Self {
        Self {
            package: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            profile: if cfg!(debug_assertions) { "debug" } else { "release" }.to_string(),
        }
    }
}

/// Effective configuration of a `solve` run, defaults included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveEcho {
    pub matrix: PathBuf,
    pub rhs: PathBuf,
    pub m: usize,
    pub n: usize,
    pub mu: f64,
    pub mu_relative: bool,
    pub solver: SolverKind,
    pub tikhonov: bool,
    pub tikhonov_schedule: Option<Vec<f64>>,
    pub newton: SolverConfig,
    pub baseline: BaselineConfig,
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceEcho {
    pub m: usize,
    pub n: usize,
    pub mu: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchEcho {
    pub spec: BenchSpec,
    pub newton: SolverConfig,
    pub baseline: BaselineConfig,
    /// Effective `μ` per size.
    pub instances: Vec<InstanceEcho>,
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum ConfigEcho {
    Solve(SolveEcho),
    Bench(BenchEcho),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTrace {
    pub eps: f64,
    pub status: SolveStatus,
    pub iterations: usize,
    pub eta: f64,
    pub trace: Vec<IterationRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverRun {
    pub solver: SolverKind,
    pub status: SolveStatus,
    pub message: Option<String>,
    pub iterations: usize,
    pub wall_seconds: f64,
    pub x: DenseVector,
    pub eta: f64,
    pub objective: f64,
    /// Per-iterate records; Tikhonov runs keep theirs in `stages`.
    pub trace: Vec<IterationRecord>,
    pub stages: Vec<StageTrace>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema_version: String,
    pub config: ConfigEcho,
    pub runs: Vec<SolverRun>,
    pub bench_rows: Vec<BenchRow>,
    pub prng_id: String,
    pub build: BuildInfo,
}

impl ReportDocument {
    fn new(config: ConfigEcho, runs: Vec<SolverRun>, bench_rows: Vec<BenchRow>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.to_string(),
            config,
            runs,
            bench_rows,
            prng_id: PRNG_ID.to_string(),
            build: BuildInfo::current(),
        }
    }
}

/// Runs a parsed command and returns its exit code.
pub fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Solve(args) => cmd_solve(&args),
        Command::Gen(args) => cmd_gen(&args).map(|()| 0),
        Command::Bench(args) => cmd_bench(&args).map(|()| 0),
    }
}

fn run_from_report(solver: SolverKind, inst: &LassoInstance, rep: SolveReport) -> SolverRun {
    let eval = inst.evaluate(&rep.final_x).expect("solver keeps the dimension");
    SolverRun {
        solver,
        status: rep.status,
        message: rep.message,
        iterations: rep.iterations,
        wall_seconds: rep.wall_seconds,
        x: rep.final_x,
        eta: eval.eta,
        objective: eval.objective,
        trace: rep.trace,
        stages: Vec::new(),
    }
}

pub fn cmd_solve(args: &SolveArgs) -> Result<i32, CliError> {
    let solver: SolverKind = args.solver.parse().map_err(CliError::input)?;
    if let Some(mu) = args.mu {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(CliError::Input("mu must be positive".into()));
        }
    }
    let a = load_matrix(&args.matrix).map_err(|e| CliError::Input(format!("{}: {e}", args.matrix.display())))?;
    let b = load_vector(&args.rhs).map_err(|e| CliError::Input(format!("{}: {e}", args.rhs.display())))?;
    if a.rows() != b.dim() {
        return Err(CliError::Input(format!(
            "dimension mismatch: matrix has {} rows, rhs has {} entries",
            a.rows(),
            b.dim()
        )));
    }
    let mu = match args.mu {
        Some(mu) => mu,
        None => mu_default(&a, &b).map_err(CliError::input)?,
    };
    let (m, n) = a.shape();
    let inst = LassoInstance::new(a, b, mu).map_err(CliError::input)?;
    let tikhonov = args.tikhonov || (solver == SolverKind::Gdnm && m < n);
    if tikhonov && solver != SolverKind::Gdnm {
        return Err(CliError::Input("--tikhonov applies to the gdnm solver only".into()));
    }
    let newton = SolverConfig {
        sigma: args.sigma,
        beta: args.beta,
        grad_tol: args.eps,
        max_iter: args.max_iter,
        ..SolverConfig::default()
    };
    newton.validate().map_err(CliError::input)?;
    let baseline = BaselineConfig {
        eta_tol: args.eps,
        max_iter: args.max_iter,
        ..BaselineConfig::default()
    };
    baseline.validate().map_err(CliError::input)?;
    let schedule = default_schedule();

    let baseline_run = |f: fn(&LassoInstance, &BaselineConfig) -> Result<SolveReport, BaselineError>| {
        f(&inst, &baseline).map(|rep| run_from_report(solver, &inst, rep)).map_err(CliError::input)
    };
    let run = match solver {
        SolverKind::Gdnm if tikhonov => {
            let prob = inst.to_composite().map_err(CliError::input)?;
            let rep = tikhonov_solve(&prob, &newton, &schedule).map_err(CliError::input)?;
            SolverRun {
                solver,
                status: rep.status,
                message: None,
                iterations: rep.iterations,
                wall_seconds: rep.wall_seconds,
                eta: inst.evaluate(&rep.x).map_err(CliError::input)?.eta,
                objective: inst.objective(&rep.x).map_err(CliError::input)?,
                x: rep.x,
                trace: Vec::new(),
                stages: rep
                    .stages
                    .into_iter()
                    .map(|s| StageTrace {
                        eps: s.eps,
                        status: s.report.status,
                        iterations: s.report.iterations,
                        eta: s.eta,
                        trace: s.report.trace,
                    })
                    .collect(),
            }
        }
        SolverKind::Gdnm => {
            let prob = inst.to_composite().map_err(CliError::input)?;
            let rep = gdnm_composite_solve(&prob, &newton).map_err(CliError::input)?;
            SolverRun {
                solver,
                status: rep.solve.status,
                message: rep.solve.message,
                iterations: rep.solve.iterations,
                wall_seconds: rep.solve.wall_seconds,
                x: rep.x,
                eta: rep.eta,
                objective: rep.objective,
                trace: rep.solve.trace,
                stages: Vec::new(),
            }
        }
        SolverKind::Ista => baseline_run(ista_solve)?,
        SolverKind::Fista => baseline_run(fista_solve)?,
        SolverKind::Apg => baseline_run(apg_solve)?,
        SolverKind::Admm => baseline_run(admm_solve)?,
    };

    let status = run.status;
    let echo = SolveEcho {
        matrix: args.matrix.clone(),
        rhs: args.rhs.clone(),
        m,
        n,
        mu,
        mu_relative: args.mu.is_none(),
        solver,
        tikhonov,
        tikhonov_schedule: tikhonov.then_some(schedule),
        newton,
        baseline,
        format: args.format,
    };
    let doc = ReportDocument::new(ConfigEcho::Solve(echo), vec![run], Vec::new());
    match args.format {
        Format::Json => emit(args.out.as_deref(), |w| write_json(&doc, w))?,
        Format::Csv => {
            emit(args.out.as_deref(), |w| write_trace_csv(&doc.runs[0], w))?;
            if let Some(out) = &args.out {
                let x_path = sidecar(out, "_x.csv");
                emit(Some(&x_path), |w| write_vector(&doc.runs[0].x, w))?;
            }
        }
    }
    Ok(if status == SolveStatus::Converged { 0 } else { 2 })
}

/// `report.csv` → `report_x.csv`.
pub fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

pub fn cmd_gen(args: &GenArgs) -> Result<(), CliError> {
    let (a, b) = gen_data(args.m, args.n, args.seed).map_err(CliError::input)?;
    let prefix = args.out_prefix.to_string_lossy();
    let a_path = PathBuf::from(format!("{prefix}_A.csv"));
    let b_path = PathBuf::from(format!("{prefix}_b.csv"));
    emit(Some(&a_path), |w| write_matrix(&a, w))?;
    emit(Some(&b_path), |w| write_vector(&b, w))?;
    Ok(())
}

fn threads_from_env() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(t) if t >= 1 => Ok(Some(t)),
            _ => Err(CliError::Input(format!("{THREADS_ENV} must be a positive integer, got '{v}'"))),
        },
        Err(_) => Ok(None),
    }
}

pub fn cmd_bench(args: &BenchArgs) -> Result<(), CliError> {
    let sizes = parse_sizes(&args.sizes).map_err(CliError::input)?;
    let solvers = args
        .solvers
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::parse::<SolverKind>)
        .collect::<Result<Vec<_>, _>>()
        .map_err(CliError::input)?;
    let mu_mode: MuMode = args.mu_mode.parse().map_err(CliError::input)?;
    if !(args.eta_tol > 0.0 && args.eta_tol.is_finite()) {
        return Err(CliError::Input("eta-tol must be positive".into()));
    }
    if !(args.max_wall_seconds > 0.0) {
        return Err(CliError::Input("max-wall-seconds must be positive".into()));
    }
    let spec = BenchSpec {
        sizes,
        mu_mode,
        seed: args.seed,
        solvers,
        eta_tol: args.eta_tol,
        max_wall_seconds: args.max_wall_seconds,
        threads: threads_from_env()?,
    };
    let cells = run_bench_detailed(&spec).map_err(CliError::input)?;
    let instances = spec
        .sizes
        .iter()
        .map(|&(m, n)| InstanceEcho {
            m,
            n,
            mu: cells.iter().find(|c| c.row.m == m && c.row.n == n).and_then(|c| c.mu).or(match mu_mode {
                MuMode::Fixed(v) => Some(v),
                MuMode::Relative => None,
            }),
        })
        .collect();
    let rows: Vec<BenchRow> = cells.into_iter().map(|c| c.row).collect();
    match args.format {
        Format::Csv => emit(args.out.as_deref(), |w| write_bench_csv(&rows, w))?,
        Format::Json => {
            let echo = BenchEcho {
                newton: spec.newton_config(),
                baseline: spec.baseline_config(),
                spec,
                instances,
                format: args.format,
            };
            let doc = ReportDocument::new(ConfigEcho::Bench(echo), Vec::new(), rows);
            emit(args.out.as_deref(), |w| write_json(&doc, w))?;
        }
    }
    Ok(())
}

/// Writes to `path`, or to stdout when absent.
fn emit(path: Option<&Path>, body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<(), CliError> {
    let result = match path {
        Some(p) => File::create(p).and_then(|f| {
            let mut w = BufWriter::new(f);
            body(&mut w)?;
            w.flush()
        }),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            body(&mut lock).and_then(|()| lock.flush())
        }
    };
    result.map_err(|e| {
        let target = path.map_or("stdout".to_string(), |p| p.display().to_string());
        CliError::Io(format!("cannot write {target}: {e}"))
    })
}

fn write_json(doc: &ReportDocument, w: &mut dyn Write) -> std::io::Result<()> {
    serde_json::to_writer_pretty(&mut *w, doc)?;
    writeln!(w)
}

fn opt(v: Option<f64>) -> String {
    v.map(format_f64).unwrap_or_default()
}

pub const BENCH_HEADER: [&str; 8] = [
    "m",
    "n",
    "solver",
    "iterations",
    "wall_seconds",
    "final_eta",
    "final_objective",
    "status",
];

pub fn write_bench_csv(rows: &[BenchRow], w: &mut dyn Write) -> std::io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(BENCH_HEADER)?;
    for r in rows {
        out.write_record([
            r.m.to_string(),
            r.n.to_string(),
            r.solver.to_string(),
            r.iterations.to_string(),
            format_f64(r.wall_seconds),
            opt(r.final_eta),
            opt(r.final_objective),
            r.status.clone(),
        ])?;
    }
    out.flush()
}

pub fn read_bench_csv<R: std::io::Read>(reader: R) -> Result<Vec<BenchRow>, csv::Error> {
    csv::Reader::from_reader(reader).deserialize().collect()
}

pub const TRACE_HEADER: [&str; 9] = [
    "stage_eps",
    "k",
    "objective",
    "grad_norm",
    "residual",
    "wall_seconds",
    "tau",
    "backtracks",
    "slope",
];

/// One row per iterate; Tikhonov stages are concatenated and tagged by `ε`.
pub fn write_trace_csv(run: &SolverRun, w: &mut dyn Write) -> std::io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(TRACE_HEADER)?;
    let mut write_rows = |eps: Option<f64>, trace: &[IterationRecord]| -> std::io::Result<()> {
        for r in trace {
            let step = r.step.as_ref();
            out.write_record([
                opt(eps),
                r.k.to_string(),
                format_f64(r.objective),
                opt(r.grad_norm),
                opt(r.residual),
                format_f64(r.wall_seconds),
                opt(step.map(|s| s.tau)),
                step.map(|s| s.backtracks.to_string()).unwrap_or_default(),
                opt(step.and_then(|s| s.slope)),
            ])?;
        }
        Ok(())
    };
    write_rows(None, &run.trace)?;
    for stage in &run.stages {
        write_rows(Some(stage.eps), &stage.trace)?;
    }
    out.flush()
}
