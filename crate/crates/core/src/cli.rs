//! `cpcsim` command-line front end.
//!
//! Every subcommand writes CSV (header plus rows) by default, or one flat JSON
//! object per line with `--json`. Exit codes: 0 success, 2 usage or parse
//! error, 3 numeric failure, 4 racing-environment failure.

use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::distributions::Distribution;
use crate::monte_carlo::{self, CurvePoint, DenominatorMode, MonteCarloError, SimConfig, SimTemplate};
use crate::order_stats::{self, Method, MinQuery, OrderStatsError};
use crate::racer::{self, RaceConfig, RaceResult, Task};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_RACE: i32 = 4;

pub const SEED_ENV: &str = "CPCSIM_SEED";

#[derive(Debug, Parser)]
#[command(name = "cpcsim", version, about = "Speedup of first-wins parallel execution")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Analytic expected minimum and speedup.
    Predict(PredictArgs),
    /// Monte Carlo estimate of the expected minimum and speedup.
    Simulate(SimulateArgs),
    /// Speedup curve over core counts, Erlang phases or hyperexponential shapes.
    Sweep(SweepArgs),
    /// Race real concurrent replicas and measure the speedup.
    Race(RaceArgs),
}

#[derive(Debug, Args)]
struct Format {
    /// One JSON object per line.
    #[arg(long, conflicts_with = "csv")]
    json: bool,
    /// CSV with header (default).
    #[arg(long)]
    csv: bool,
}

#[derive(Debug, Args)]
struct PredictArgs {
    /// exp:<lambda> | erlang:<k>:<lambda> | hyper:<a>:<lambda> | uniform:<lo>:<hi>
    dist: Distribution,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    cores: u64,
    #[command(flatten)]
    format: Format,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Denominator {
    Analytic,
    Simulated,
}

impl From<Denominator> for DenominatorMode {
    fn from(d: Denominator) -> Self {
        match d {
            Denominator::Analytic => DenominatorMode::AnalyticMean,
            Denominator::Simulated => DenominatorMode::SimulatedMean,
        }
    }
}

#[derive(Debug, Args)]
struct SimulateArgs {
    dist: Distribution,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    cores: u64,
    #[arg(long, default_value_t = monte_carlo::DEFAULT_STEPS, value_parser = clap::value_parser!(u64).range(1..))]
    steps: u64,
    #[arg(long, env = SEED_ENV, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Denominator::Analytic)]
    denominator: Denominator,
    #[command(flatten)]
    format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Family {
    Cores,
    ErlangK,
    HyperA,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Analytic,
    /// Monte Carlo columns (the analytic column is always present).
    Mc,
    Both,
}

/// Inclusive range `start..end[:step]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRange {
    pub start: f64,
    pub end: f64,
    pub step: f64,
}

impl FromStr for SweepRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("invalid range '{s}', expected start..end[:step]");
        let (span, step) = match s.split_once(':') {
            Some((span, step)) => (span, step.trim().parse::<f64>().map_err(|_| bad())?),
            None => (s, 1.0),
        };
        let (a, b) = span.split_once("..").ok_or_else(bad)?;
        let start: f64 = a.trim().parse().map_err(|_| bad())?;
        let end: f64 = b.trim().parse().map_err(|_| bad())?;
        if !(start.is_finite() && end.is_finite() && step.is_finite() && step > 0.0 && end >= start) {
            return Err(bad());
        }
        Ok(Self { start, end, step })
    }
}

impl SweepRange {
    pub fn values(&self) -> Vec<f64> {
        let count = ((self.end - self.start) / self.step + 1e-9).floor() as u64;
        (0..=count).map(|i| self.start + i as f64 * self.step).collect()
    }

    /// Values as positive integers; fails on fractional or nonpositive values.
    pub fn integers(&self) -> Result<Vec<u64>, String> {
        self.values()
            .into_iter()
            .map(|v| {
                if v >= 1.0 && v.fract() == 0.0 {
                    Ok(v as u64)
                } else {
                    Err(format!("range value {v} is not a positive integer"))
                }
            })
            .collect()
    }
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long, value_enum)]
    family: Family,
    /// Distribution for `--family cores`.
    #[arg(long)]
    dist: Option<Distribution>,
    #[arg(long)]
    range: SweepRange,
    /// Core count for the erlang-k and hyper-a families.
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    cores: u64,
    /// Rate of the mean for the erlang-k and hyper-a families.
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, value_enum, default_value_t = Mode::Analytic)]
    mode: Mode,
    #[arg(long, default_value_t = monte_carlo::DEFAULT_STEPS, value_parser = clap::value_parser!(u64).range(1..))]
    steps: u64,
    #[arg(long, env = SEED_ENV, default_value_t = 1)]
    seed: u64,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    format: Format,
}

#[derive(Debug, Args)]
struct RaceArgs {
    /// Distribution of the synthetic task.
    #[arg(required_unless_present = "cmd", conflicts_with = "cmd")]
    dist: Option<Distribution>,
    /// External command template; `{i}` becomes the replica index.
    #[arg(long)]
    cmd: Option<String>,
    #[arg(long, default_value_t = 4)]
    replicas: usize,
    #[arg(long, default_value_t = 100)]
    rounds: usize,
    /// Milliseconds per model time unit.
    #[arg(long, default_value_t = 20.0)]
    unit_ms: f64,
    #[arg(long, env = SEED_ENV, default_value_t = 1)]
    seed: u64,
    /// Time allowed for losers to stop, in milliseconds.
    #[arg(long, default_value_t = 500)]
    grace_ms: u64,
    /// Pin replica i to CPU i (best effort).
    #[arg(long)]
    pin: bool,
    #[command(flatten)]
    format: Format,
}

/// Output row of `predict`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictRecord {
    pub dist: String,
    pub cores: u64,
    pub mean: f64,
    pub cv: f64,
    pub expected_min: f64,
    pub expected_min_error: f64,
    pub method: String,
    pub speedup: f64,
}

/// Output row of `race`. Times are measured wall-clock seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RaceRecord {
    pub replicas: usize,
    pub rounds: usize,
    pub failed_rounds: usize,
    pub measured_mean_winner_time_s: f64,
    pub mean_single_time_s: f64,
    pub measured_empirical_speedup: f64,
    pub model_speedup: Option<f64>,
    pub measured_overhead_s: f64,
}

impl From<&RaceResult> for RaceRecord {
    fn from(r: &RaceResult) -> Self {
        Self {
            replicas: r.replicas,
            rounds: r.rounds.len(),
            failed_rounds: r.failed_rounds,
            measured_mean_winner_time_s: r.mean_winner_time,
            mean_single_time_s: r.mean_single_time,
            measured_empirical_speedup: r.empirical_speedup,
            model_speedup: r.model_speedup,
            measured_overhead_s: r.overhead_estimate,
        }
    }
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Numeric(String),
    #[error("{0}")]
    Race(#[from] racer::RaceError),
    #[error("output error: {0}")]
    Io(#[from] io::Error),
    #[error("output error: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Numeric(_) => EXIT_NUMERIC,
            CliError::Race(racer::RaceError::InvalidConfig(_)) => EXIT_USAGE,
            CliError::Race(_) => EXIT_RACE,
            CliError::Io(_) | CliError::Csv(_) => 1,
        }
    }
}

fn numeric<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Numeric(e.to_string())
}

impl From<MonteCarloError> for CliError {
    fn from(e: MonteCarloError) -> Self {
        match e {
            MonteCarloError::OrderStats(OrderStatsError::Quadrature(_)) => CliError::Numeric(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

/// Writes `records` as CSV with a header, or as JSON lines.
pub fn write_records<T: Serialize, W: Write>(records: &[T], json: bool, out: W) -> io::Result<()> {
    if json {
        let mut out = out;
        for r in records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        out.flush()
    } else {
        let mut w = csv::Writer::from_writer(out);
        for r in records {
            w.serialize(r).map_err(io::Error::other)?;
        }
        w.flush()
    }
}

/// Parses `args` (including the program name) and runs the subcommand,
/// writing results to `out`. Returns the process exit code.
pub fn run<I, T, W>(args: I, out: &mut W) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
    W: Write,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Cmd::Predict(a) => predict(a, out),
        Cmd::Simulate(a) => simulate(a, out),
        Cmd::Sweep(a) => sweep(a, out),
        Cmd::Race(a) => race(a, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("cpcsim: {e}");
            e.code()
        }
    }
}

fn predict<W: Write>(a: PredictArgs, out: &mut W) -> Result<(), CliError> {
    let q = MinQuery::new(a.dist, a.cores).map_err(numeric)?;
    let est = order_stats::expected_min_detailed(&q).map_err(numeric)?;
    let mean = a.dist.mean();
    let rec = PredictRecord {
        dist: a.dist.to_string(),
        cores: a.cores,
        mean,
        cv: a.dist.cv(),
        expected_min: est.value,
        expected_min_error: est.error,
        method: match est.method {
            Method::ClosedForm => "closed-form",
            Method::BinomialSum => "binomial-sum",
            Method::Quadrature => "quadrature",
        }
        .to_string(),
        speedup: mean / est.value,
    };
    write_records(&[rec], a.format.json, out)?;
    Ok(())
}

fn simulate<W: Write>(a: SimulateArgs, out: &mut W) -> Result<(), CliError> {
    let mut cfg = SimConfig::new(a.dist, a.cores, a.steps, a.seed);
    cfg.denominator = a.denominator.into();
    let r = monte_carlo::simulate(&cfg)?;
    write_records(&[r], a.format.json, out)?;
    Ok(())
}

fn sweep<W: Write>(a: SweepArgs, out: &mut W) -> Result<(), CliError> {
    let sim = (a.mode != Mode::Analytic).then(|| SimTemplate::new(a.steps, a.seed));
    let points: Vec<CurvePoint> = match a.family {
        Family::Cores => {
            let dist = a
                .dist
                .ok_or_else(|| CliError::Usage("--family cores needs --dist".into()))?;
            let ns = a.range.integers().map_err(CliError::Usage)?;
            monte_carlo::sweep_cores(dist, &ns, sim)?
        }
        Family::ErlangK => {
            let ks = a
                .range
                .integers()
                .map_err(CliError::Usage)?
                .into_iter()
                .map(|k| u32::try_from(k).map_err(|_| CliError::Usage(format!("phase count {k} too large"))))
                .collect::<Result<Vec<_>, _>>()?;
            monte_carlo::sweep_erlang_k(&ks, a.lambda, a.cores, sim)?
        }
        Family::HyperA => monte_carlo::sweep_hyper_a(&a.range.values(), a.lambda, a.cores, sim)?,
    };
    match &a.out {
        Some(path) => write_records(&points, a.format.json, File::create(path)?)?,
        None => write_records(&points, a.format.json, out)?,
    }
    Ok(())
}

fn race<W: Write>(a: RaceArgs, out: &mut W) -> Result<(), CliError> {
    let task = match (&a.dist, &a.cmd) {
        (_, Some(template)) => Task::command_from_template(template)?,
        (Some(dist), None) => {
            if !(a.unit_ms.is_finite() && a.unit_ms > 0.0) {
                return Err(CliError::Usage("--unit-ms must be > 0".into()));
            }
            Task::Synthetic {
                dist: *dist,
                time_unit: Duration::from_secs_f64(a.unit_ms / 1000.0),
            }
        }
        (None, None) => return Err(CliError::Usage("need a distribution or --cmd".into())),
    };
    let cfg = RaceConfig {
        replicas: a.replicas,
        rounds: a.rounds,
        task,
        seed: a.seed,
        cancel_grace: Duration::from_millis(a.grace_ms),
        overhead: None,
        pin_cores: a.pin,
    };
    let r = racer::race(&cfg)?;
    write_records(&[RaceRecord::from(&r)], a.format.json, out)?;
    Ok(())
}
