//! Monte Carlo estimate of the expected minimum, and the parameter sweeps
//! built on it.
//!
//! Each step draws `n` fresh execution times, keeps the smallest and adds it
//! to a running total; the estimate is the average over all steps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{Distribution, DistributionError};
use crate::order_stats::{self, MinQuery, OrderStatsError};
use crate::rng::{derive_seed, SimRng};

/// Default number of steps, matching the reference experiments.
pub const DEFAULT_STEPS: u64 = 100_000;

/// Largest core count accepted by the sweeps.
pub const MAX_SWEEP_CORES: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MonteCarloError {
    #[error("steps must be >= 1")]
    ZeroSteps,
    #[error("cores must be >= 1")]
    ZeroCores,
    #[error("core count {0} outside the sweep range [1, 1000000]")]
    CoresOutOfRange(u64),
    #[error("sweep needs at least one point")]
    EmptySweep,
    #[error(transparent)]
    Distribution(#[from] DistributionError),
    #[error(transparent)]
    OrderStats(#[from] OrderStatsError),
}

/// What the speedup estimate divides by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DenominatorMode {
    /// Exact `E[Y_1]`, the distribution mean.
    #[default]
    AnalyticMean,
    /// `E[Y_1]` estimated by a second single-core simulation on its own stream.
    SimulatedMean,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub steps: u64,
    pub dist: Distribution,
    pub cores: u64,
    pub seed: u64,
    pub denominator: DenominatorMode,
}

impl SimConfig {
    pub fn new(dist: Distribution, cores: u64, steps: u64, seed: u64) -> Self {
        Self {
            steps,
            dist,
            cores,
            seed,
            denominator: DenominatorMode::AnalyticMean,
        }
    }

    fn validate(&self) -> Result<(), MonteCarloError> {
        if self.steps == 0 {
            return Err(MonteCarloError::ZeroSteps);
        }
        if self.cores == 0 {
            return Err(MonteCarloError::ZeroCores);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub dist: String,
    pub cores: u64,
    pub steps: u64,
    pub seed: u64,
    pub denominator: DenominatorMode,
    /// Estimate of `E[Y_n]`.
    pub mean_min: f64,
    /// Sample standard deviation of the per-step minima over `sqrt(N)`.
    pub stderr: f64,
    /// The `E[Y_1]` actually divided by.
    pub single_mean: f64,
    pub speedup_estimate: f64,
    pub speedup_stderr: f64,
}

/// One row of a sweep. `x` is the swept quantity: a core count, an Erlang
/// phase count or a hyperexponential shape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub x: f64,
    pub cv: f64,
    pub analytic_speedup: f64,
    pub mc_speedup: Option<f64>,
    pub mc_stderr: Option<f64>,
}

impl CurvePoint {
    pub fn analytic(x: f64, cv: f64, analytic_speedup: f64) -> Self {
        Self {
            x,
            cv,
            analytic_speedup,
            mc_speedup: None,
            mc_stderr: None,
        }
    }
}

/// Monte Carlo settings applied to every point of a sweep. Point `i` runs on
/// seed `derive_seed(seed, i)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimTemplate {
    pub steps: u64,
    pub seed: u64,
    pub denominator: DenominatorMode,
}

impl SimTemplate {
    pub fn new(steps: u64, seed: u64) -> Self {
        Self {
            steps,
            seed,
            denominator: DenominatorMode::AnalyticMean,
        }
    }
}

// Welford accumulator
#[derive(Default)]
struct Running {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Running {
    fn push(&mut self, v: f64) {
        self.count += 1;
        let delta = v - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (v - self.mean);
    }

    fn stderr(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let var = self.m2 / (self.count - 1) as f64;
        (var / self.count as f64).sqrt()
    }
}

fn run_minima(dist: Distribution, cores: u64, steps: u64, rng: &mut SimRng) -> Running {
    let mut acc = Running::default();
    for _ in 0..steps {
        let mut best = f64::INFINITY;
        for _ in 0..cores {
            best = best.min(dist.sample(rng));
        }
        acc.push(best);
    }
    acc
}

/// Runs the simulation. Output is a pure function of `cfg`.
pub fn simulate(cfg: &SimConfig) -> Result<SimResult, MonteCarloError> {
    cfg.validate()?;
    let mut rng = SimRng::with_stream(cfg.seed, 0);
    let minima = run_minima(cfg.dist, cfg.cores, cfg.steps, &mut rng);
    let (mean_min, stderr) = (minima.mean, minima.stderr());

    let (single_mean, speedup_estimate, speedup_stderr) = match cfg.denominator {
        DenominatorMode::AnalyticMean => {
            let m1 = cfg.dist.mean();
            (m1, m1 / mean_min, m1 / (mean_min * mean_min) * stderr)
        }
        DenominatorMode::SimulatedMean => {
            let mut rng1 = SimRng::with_stream(cfg.seed, 1);
            let single = run_minima(cfg.dist, 1, cfg.steps, &mut rng1);
            let (m1, se1) = (single.mean, single.stderr());
            let s = m1 / mean_min;
            let rel = ((se1 / m1).powi(2) + (stderr / mean_min).powi(2)).sqrt();
            (m1, s, s * rel)
        }
    };

    Ok(SimResult {
        dist: cfg.dist.to_string(),
        cores: cfg.cores,
        steps: cfg.steps,
        seed: cfg.seed,
        denominator: cfg.denominator,
        mean_min,
        stderr,
        single_mean,
        speedup_estimate,
        speedup_stderr,
    })
}

// Shared driver: `points[i]` is (x, distribution, cores).
fn sweep_points(
    points: Vec<(f64, Distribution, u64)>,
    sim: Option<SimTemplate>,
) -> Result<Vec<CurvePoint>, MonteCarloError> {
    if points.is_empty() {
        return Err(MonteCarloError::EmptySweep);
    }
    points
        .into_par_iter()
        .enumerate()
        .map(|(i, (x, dist, cores))| {
            let analytic = order_stats::speedup(&MinQuery::new(dist, cores)?)?;
            let mut point = CurvePoint::analytic(x, dist.cv(), analytic);
            if let Some(t) = sim {
                let cfg = SimConfig {
                    steps: t.steps,
                    dist,
                    cores,
                    seed: derive_seed(t.seed, i as u64),
                    denominator: t.denominator,
                };
                let r = simulate(&cfg)?;
                point.mc_speedup = Some(r.speedup_estimate);
                point.mc_stderr = Some(r.speedup_stderr);
            }
            Ok(point)
        })
        .collect()
}

fn check_cores(n: u64) -> Result<u64, MonteCarloError> {
    if (1..=MAX_SWEEP_CORES).contains(&n) {
        Ok(n)
    } else {
        Err(MonteCarloError::CoresOutOfRange(n))
    }
}

/// Speedup against core count for one distribution.
pub fn sweep_cores(
    dist: Distribution,
    n_values: &[u64],
    sim: Option<SimTemplate>,
) -> Result<Vec<CurvePoint>, MonteCarloError> {
    let points = n_values
        .iter()
        .map(|&n| Ok((n as f64, dist, check_cores(n)?)))
        .collect::<Result<Vec<_>, MonteCarloError>>()?;
    sweep_points(points, sim)
}

/// Speedup at a fixed core count against the Erlang phase count, in
/// increasing `k`.
pub fn sweep_erlang_k(
    k_values: &[u32],
    lambda: f64,
    cores: u64,
    sim: Option<SimTemplate>,
) -> Result<Vec<CurvePoint>, MonteCarloError> {
    let cores = check_cores(cores)?;
    let mut ks = k_values.to_vec();
    ks.sort_unstable();
    let points = ks
        .into_iter()
        .map(|k| Ok((f64::from(k), Distribution::erlang(k, lambda)?, cores)))
        .collect::<Result<Vec<_>, MonteCarloError>>()?;
    sweep_points(points, sim)
}

/// Speedup at a fixed core count against the hyperexponential shape, in
/// increasing `a`.
pub fn sweep_hyper_a(
    a_values: &[f64],
    lambda: f64,
    cores: u64,
    sim: Option<SimTemplate>,
) -> Result<Vec<CurvePoint>, MonteCarloError> {
    let cores = check_cores(cores)?;
    let mut as_ = a_values.to_vec();
    as_.sort_by(f64::total_cmp);
    let points = as_
        .into_iter()
        .map(|a| Ok((a, Distribution::hyperexponential(a, lambda)?, cores)))
        .collect::<Result<Vec<_>, MonteCarloError>>()?;
    sweep_points(points, sim)
}
