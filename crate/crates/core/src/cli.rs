//! Command-line harness: order-condition audits, convergence studies, single
//! runs, timing benchmarks and tree listings, all emitting CSV.
//!
//! Exit codes: 0 success, 1 condition or convergence failure, 2 usage error.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use num::{BigRational, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::btrees::enumerate;
use crate::conditions::{check_scheme, CheckOptions, DEFAULT_MODEL_DIM, DEFAULT_SEED};
use crate::error::{Error, Result};
use crate::integrator::{
    integrate_with, precompute, precompute_spectral, spectral_for, step_count, ExecMode,
    PhiBackend, StepContext, TrajectoryResult,
};
use crate::phi::PhiMethod;
use crate::problems::{self, error_at, SemilinearProblem};
use crate::tableaus::Scheme;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

pub const DEFAULT_STEPS: &str = "1/2,1/4,1/8,1/16,1/32";
pub const DEFAULT_GRID: usize = 200;

#[derive(Parser, Debug)]
#[command(name = "exprk", version, about = "Sixth-order exponential Runge-Kutta toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Audit the stiff order conditions of a scheme.
    Check(CheckArgs),
    /// Fixed-step convergence study against the exact solution.
    Converge(RunArgs),
    /// Integrate once and print the final state.
    Integrate(RunArgs),
    /// Time sequential against concurrent stage evaluation.
    Bench(BenchArgs),
    /// List the rooted trees up to a given order.
    Trees(TreesArgs),
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    #[arg(long)]
    pub scheme: String,
    #[arg(long, default_value_t = 6)]
    pub order: usize,
    #[arg(long, default_value = "strong")]
    pub mode: String,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Number of random models, seeded `seed, seed + 1, …`.
    #[arg(long, default_value_t = 3)]
    pub seeds: u64,
    /// Dimension of the random model.
    #[arg(long, default_value_t = DEFAULT_MODEL_DIM)]
    pub n: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[arg(long)]
    pub scheme: String,
    #[arg(long, default_value = "heat1d")]
    pub problem: String,
    /// Comma-separated step sizes, e.g. `1/2,1/4`.
    #[arg(long, default_value = DEFAULT_STEPS)]
    pub steps: String,
    /// Interior grid points.
    #[arg(long, default_value_t = DEFAULT_GRID)]
    pub n: usize,
    #[arg(long, default_value = "seq")]
    pub exec: String,
    #[arg(long, default_value_t = 1.0)]
    pub t_end: f64,
    /// Fail (exit 1) when the last observed order is below this value.
    #[arg(long)]
    pub min_order: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long)]
    pub scheme: String,
    #[arg(long, default_value = "heat1d")]
    pub problem: String,
    #[arg(long, default_value = "1/32")]
    pub steps: String,
    #[arg(long, default_value_t = DEFAULT_GRID)]
    pub n: usize,
    #[arg(long, default_value_t = 5)]
    pub reps: usize,
    #[arg(long, default_value_t = 1.0)]
    pub t_end: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[cfg(feature = "fault-injection")]
    #[arg(long, hide = true)]
    pub inject_mismatch: bool,
}

#[derive(Args, Debug)]
pub struct TreesArgs {
    #[arg(long, default_value_t = 6)]
    pub order: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Scheme lookup; `expk2` uses `c_2 = 1`.
pub fn scheme_by_name(name: &str) -> Result<Scheme> {
    Scheme::by_name(name)
}

/// Parses `1/2,1/4,…` into exact rationals.
pub fn parse_steps(list: &str) -> Result<Vec<BigRational>> {
    list.split(',')
        .map(|s| {
            let s = s.trim();
            BigRational::from_str(s).map_err(|_| Error::invalid(format!("bad step size `{s}`")))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub scheme: String,
    pub problem: String,
    pub h: String,
    pub steps: usize,
    pub error: f64,
    pub wall_time_s: f64,
    pub p_obs: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct ConvergenceReport {
    pub scheme: String,
    pub problem: String,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceReport {
    pub fn last_order(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.p_obs)
    }

    pub fn errors_decrease(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].error < w[0].error)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_rows(out, &self.rows)
    }

    pub fn read_csv<R: io::Read>(input: R) -> Result<Vec<ConvergenceRow>> {
        read_rows(input)
    }
}

fn write_rows<W: Write, T: Serialize>(out: W, rows: &[T]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn read_rows<R: io::Read, T: for<'de> Deserialize<'de>>(input: R) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_reader(input);
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// Contexts for several step sizes sharing one eigendecomposition when `A`
/// is symmetric.
struct ContextFactory<'a> {
    scheme: &'a Scheme,
    problem: &'a dyn SemilinearProblem,
    spectral: Option<(crate::phi::SpectralOperator, u64)>,
}

impl<'a> ContextFactory<'a> {
    fn new(scheme: &'a Scheme, problem: &'a dyn SemilinearProblem) -> Result<Self> {
        Ok(ContextFactory {
            scheme,
            problem,
            spectral: spectral_for(problem)?,
        })
    }

    fn context(&self, h: f64) -> Result<StepContext<'a>> {
        match &self.spectral {
            Some((sp, id)) => precompute_spectral(self.scheme, sp, *id, h),
            None => precompute(
                self.scheme,
                self.problem.dense_operator(),
                h,
                PhiBackend::Dense(PhiMethod::Augmented),
            ),
        }
    }
}

/// Integrates to `t_end` for every step size and tabulates errors.
pub fn converge(
    scheme: &Scheme,
    problem: &dyn SemilinearProblem,
    steps: &[BigRational],
    t_end: f64,
    mode: ExecMode,
) -> Result<ConvergenceReport> {
    let factory = ContextFactory::new(scheme, problem)?;
    let t0 = problem.t0();
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    for hr in steps {
        let h = hr.to_f64().unwrap_or(f64::NAN);
        let count = step_count(t0, t_end, h)?;
        let start = Instant::now();
        let ctx = factory.context(h)?;
        let run = integrate_with(&ctx, problem, t0, count, mode).map_err(|e| match e {
            Error::Divergence { stage, step } => Error::invalid(format!(
                "divergence at h = {hr} (stage {stage}, step {})",
                step.unwrap_or(0)
            )),
            other => other,
        })?;
        let wall = start.elapsed().as_secs_f64();
        let error = error_at(problem, &run.state.view(), run.t_end)?;
        let p_obs = rows.last().map(|prev| {
            let ratio = prev.h.parse::<BigRational>().ok().and_then(|p| (p / hr).to_f64());
            (prev.error / error).log2() / ratio.unwrap_or(2.0).log2()
        });
        rows.push(ConvergenceRow {
            scheme: scheme.name.clone(),
            problem: problem.name().to_string(),
            h: hr.to_string(),
            steps: count,
            error,
            wall_time_s: wall,
            p_obs,
        });
    }
    Ok(ConvergenceReport {
        scheme: scheme.name.clone(),
        problem: problem.name().to_string(),
        rows,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub scheme: String,
    pub problem: String,
    pub h: String,
    pub n: usize,
    pub mode: String,
    pub reps: usize,
    pub median_s: f64,
    pub min_s: f64,
    pub identical: bool,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct BenchOptions {
    pub reps: usize,
    /// Perturbs the concurrent result before comparison.
    pub inject_mismatch: bool,
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 0 {
        0.5 * (xs[m - 1] + xs[m])
    } else {
        xs[m]
    }
}

/// Times both execution modes and fails unless their final states agree
/// bit for bit.
pub fn bench(
    scheme: &Scheme,
    problem: &dyn SemilinearProblem,
    h: &BigRational,
    t_end: f64,
    opts: BenchOptions,
) -> Result<Vec<BenchRow>> {
    if opts.reps < 3 {
        return Err(Error::invalid("bench needs at least 3 repetitions"));
    }
    let hf = h.to_f64().unwrap_or(f64::NAN);
    let t0 = problem.t0();
    let count = step_count(t0, t_end, hf)?;
    let ctx = ContextFactory::new(scheme, problem)?.context(hf)?;
    let mut rows = Vec::new();
    let mut states: Vec<TrajectoryResult> = Vec::new();
    for mode in [ExecMode::Sequential, ExecMode::Concurrent] {
        let mut times = Vec::with_capacity(opts.reps);
        let mut last = None;
        for _ in 0..opts.reps {
            let run = integrate_with(&ctx, problem, t0, count, mode)?;
            times.push(run.total_time());
            last = Some(run);
        }
        let mut run = last.expect("reps >= 3");
        if mode == ExecMode::Concurrent && opts.inject_mismatch {
            run.state[0] = f64::from_bits(run.state[0].to_bits() ^ 1);
        }
        states.push(run);
        rows.push(BenchRow {
            scheme: scheme.name.clone(),
            problem: problem.name().to_string(),
            h: h.to_string(),
            n: problem.dim(),
            mode: mode.as_str().to_string(),
            reps: opts.reps,
            median_s: median(times.clone()),
            min_s: times.iter().copied().fold(f64::INFINITY, f64::min),
            identical: false,
        });
    }
    let identical = bitwise_equal(&states[0].state, &states[1].state);
    if !identical {
        return Err(Error::invalid(
            "sequential and concurrent final states differ; refusing to report timings",
        ));
    }
    for r in &mut rows {
        r.identical = true;
    }
    Ok(rows)
}

pub fn bitwise_equal(a: &crate::linalg::Vector, b: &crate::linalg::Vector) -> bool {
    a.len() == b.len() && a.iter().zip(b.iter()).all(|(x, y)| x.to_bits() == y.to_bits())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeRow {
    pub number: usize,
    pub order: usize,
    pub symmetry: u64,
    pub kind: String,
    pub tree: String,
}

pub fn tree_rows(order: usize) -> Result<Vec<TreeRow>> {
    let table = enumerate(order)?;
    Ok(table
        .trees()
        .iter()
        .enumerate()
        .map(|(k, t)| TreeRow {
            number: k + 1,
            order: t.order(),
            symmetry: t.symmetry(),
            kind: if t.is_t1() { "T1" } else { "T2" }.to_string(),
            tree: t.to_string(),
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateRow {
    pub index: usize,
    pub x: f64,
    pub value: f64,
    pub exact: Option<f64>,
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::UnknownScheme(_)
        | Error::UnknownProblem(_)
        | Error::InvalidArgument(_)
        | Error::TreeSyntax(_) => EXIT_USAGE,
        _ => EXIT_FAILURE,
    }
}

fn with_output<F>(path: &Option<PathBuf>, stdout: &mut dyn Write, f: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> Result<()>,
{
    match path {
        Some(p) => {
            let mut file = File::create(p)?;
            f(&mut file)
        }
        None => f(stdout),
    }
}

fn single_step_size(list: &str) -> Result<BigRational> {
    let steps = parse_steps(list)?;
    match steps.as_slice() {
        [h] => Ok(h.clone()),
        _ => Err(Error::invalid("expected exactly one step size")),
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(cli.command, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cmd: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Check(a) => {
            let scheme = scheme_by_name(&a.scheme)?;
            if a.order > 6 {
                return Err(Error::invalid("check supports orders up to 6"));
            }
            let opts = CheckOptions {
                order: a.order,
                mode: a.mode.parse()?,
                seeds: (0..a.seeds.max(1)).map(|k| a.seed + k).collect(),
                dim: a.n,
                ..CheckOptions::default()
            };
            let report = check_scheme(&scheme, &opts)?;
            with_output(&a.out, stdout, |w| report.write_csv(w))?;
            let failing = report.failing();
            let _ = writeln!(
                stderr,
                "{} {} order {}: {} conditions, failing {:?}",
                scheme.name,
                opts.mode.as_str(),
                a.order,
                report.rows.len(),
                failing
            );
            Ok(if failing.is_empty() { EXIT_OK } else { EXIT_FAILURE })
        }
        Command::Converge(a) => {
            let scheme = scheme_by_name(&a.scheme)?;
            let problem = problems::by_name(&a.problem, a.n)?;
            let mode: ExecMode = a.exec.parse()?;
            let steps = parse_steps(&a.steps)?;
            if steps.windows(2).any(|w| w[1] >= w[0]) {
                return Err(Error::invalid("step sizes must be strictly decreasing"));
            }
            let report = converge(&scheme, problem.as_ref(), &steps, a.t_end, mode)?;
            with_output(&a.out, stdout, |w| report.write_csv(w))?;
            let mut ok = report.errors_decrease();
            if let (Some(min), Some(p)) = (a.min_order, report.last_order()) {
                ok &= p >= min;
            }
            Ok(if ok { EXIT_OK } else { EXIT_FAILURE })
        }
        Command::Integrate(a) => {
            let scheme = scheme_by_name(&a.scheme)?;
            let problem = problems::by_name(&a.problem, a.n)?;
            let mode: ExecMode = a.exec.parse()?;
            let h = single_step_size(&a.steps)?;
            let hf = h.to_f64().unwrap_or(f64::NAN);
            let t0 = problem.t0();
            let count = step_count(t0, a.t_end, hf)?;
            let ctx = ContextFactory::new(&scheme, problem.as_ref())?.context(hf)?;
            let run = integrate_with(&ctx, problem.as_ref(), t0, count, mode)?;
            let exact = problem.exact(run.t_end);
            let dx = problem.dx();
            let rows: Vec<StateRow> = run
                .state
                .iter()
                .enumerate()
                .map(|(k, &v)| StateRow {
                    index: k,
                    x: (k + 1) as f64 * dx,
                    value: v,
                    exact: exact.as_ref().map(|e| e[k]),
                })
                .collect();
            with_output(&a.out, stdout, |w| write_rows(w, &rows))?;
            if exact.is_some() {
                let err = error_at(problem.as_ref(), &run.state.view(), run.t_end)?;
                let _ = writeln!(stderr, "error at t = {}: {err:.6e}", run.t_end);
            }
            Ok(EXIT_OK)
        }
        Command::Bench(a) => {
            let scheme = scheme_by_name(&a.scheme)?;
            let problem = problems::by_name(&a.problem, a.n)?;
            let h = single_step_size(&a.steps)?;
            if a.reps < 3 {
                return Err(Error::invalid("bench needs at least 3 repetitions"));
            }
            #[cfg(feature = "fault-injection")]
            let inject_mismatch = a.inject_mismatch;
            #[cfg(not(feature = "fault-injection"))]
            let inject_mismatch = false;
            let opts = BenchOptions {
                reps: a.reps,
                inject_mismatch,
            };
            let rows = match bench(&scheme, problem.as_ref(), &h, a.t_end, opts) {
                Ok(r) => r,
                Err(e) => {
                    let _ = writeln!(stderr, "error: {e}");
                    return Ok(EXIT_FAILURE);
                }
            };
            with_output(&a.out, stdout, |w| write_rows(w, &rows))?;
            let _ = writeln!(
                stderr,
                "workers: {}",
                std::thread::available_parallelism().map_or(1, |n| n.get())
            );
            Ok(EXIT_OK)
        }
        Command::Trees(a) => {
            let rows = tree_rows(a.order)?;
            with_output(&a.out, stdout, |w| write_rows(w, &rows))?;
            let mut counts = std::collections::BTreeMap::new();
            for r in &rows {
                *counts.entry(r.order).or_insert(0usize) += 1;
            }
            let summary: Vec<String> = counts.iter().map(|(o, c)| format!("{o}:{c}")).collect();
            let _ = writeln!(stderr, "{} trees; by order {}", rows.len(), summary.join(" "));
            Ok(EXIT_OK)
        }
    }
}

/// Read back the CSV written by `bench`.
pub fn read_bench_csv<R: io::Read>(input: R) -> Result<Vec<BenchRow>> {
    read_rows(input)
}

pub fn read_tree_csv<R: io::Read>(input: R) -> Result<Vec<TreeRow>> {
    read_rows(input)
}

pub fn read_state_csv<R: io::Read>(input: R) -> Result<Vec<StateRow>> {
    read_rows(input)
}
