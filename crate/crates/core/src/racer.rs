//! First-wins racing harness.
//!
//! Each round starts `n` replicas of a task together, adopts the first one to
//! finish and cancels the rest. Synthetic tasks run on threads and wait out a
//! duration drawn from a [`Distribution`]; command tasks run as child
//! processes. The measured speedup can then be compared with
//! [`order_stats::speedup`].

use std::process::{Child, Command, Stdio};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc::{self, RecvTimeoutError};
use std::sync::{Arc, Barrier, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::distributions::Distribution;
use crate::order_stats::{self, MinQuery};
use crate::rng::SimRng;

/// Synthetic workers sleep until this close to their deadline, then spin.
const SPIN_WINDOW: Duration = Duration::from_millis(2);
/// Longest sleep between cancellation checks.
const CANCEL_POLL: Duration = Duration::from_millis(1);
/// Required ratio between mean task duration and per-replica overhead.
const MIN_DURATION_OVERHEAD_RATIO: f64 = 10.0;

pub const DEFAULT_CANCEL_GRACE: Duration = Duration::from_millis(500);

/// Placeholder in command arguments replaced by the replica index.
pub const REPLICA_TOKEN: &str = "{i}";

#[derive(Debug, thiserror::Error)]
pub enum RaceError {
    #[error("invalid race configuration: {0}")]
    InvalidConfig(String),
    #[error("mean task duration {mean:?} is below {ratio}x the measured per-replica overhead {overhead:?}")]
    Calibration {
        mean: Duration,
        overhead: Duration,
        ratio: f64,
    },
    #[error("round {round}: a losing replica outlived the cancel grace of {grace:?}")]
    CancelTimeout { round: usize, grace: Duration },
    #[error("every round failed ({failed} rounds had no successful replica)")]
    CommandFailure { failed: usize },
    #[error("failed to start replica: {0}")]
    Spawn(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Task {
    /// Wait for a sampled duration; `time_unit` is the wall time of one model
    /// time unit.
    Synthetic {
        dist: Distribution,
        time_unit: Duration,
    },
    /// Run `program args...`; exit status 0 counts as completion.
    Command { program: String, args: Vec<String> },
}

impl Task {
    /// Splits a whitespace-separated template such as `"worker --id {i}"`.
    pub fn command_from_template(template: &str) -> Result<Self, RaceError> {
        let mut words = template.split_whitespace().map(str::to_string);
        let program = words
            .next()
            .ok_or_else(|| RaceError::InvalidConfig("empty command template".into()))?;
        Ok(Task::Command {
            program,
            args: words.collect(),
        })
    }
}

#[derive(Debug, Clone)]
pub struct RaceConfig {
    pub replicas: usize,
    pub rounds: usize,
    pub task: Task,
    pub seed: u64,
    pub cancel_grace: Duration,
    /// Per-replica overhead; measured with [`calibrate`] when absent.
    pub overhead: Option<Duration>,
    /// Best-effort pinning of replica `i` to CPU `i mod ncpu` (Linux only).
    pub pin_cores: bool,
}

impl RaceConfig {
    pub fn synthetic(dist: Distribution, time_unit: Duration, replicas: usize, rounds: usize, seed: u64) -> Self {
        Self {
            replicas,
            rounds,
            task: Task::Synthetic { dist, time_unit },
            seed,
            cancel_grace: DEFAULT_CANCEL_GRACE,
            overhead: None,
            pin_cores: false,
        }
    }

    fn validate(&self) -> Result<(), RaceError> {
        if self.replicas == 0 {
            return Err(RaceError::InvalidConfig("replicas must be >= 1".into()));
        }
        if self.rounds == 0 {
            return Err(RaceError::InvalidConfig("rounds must be >= 1".into()));
        }
        if let Task::Synthetic { time_unit, .. } = &self.task {
            if time_unit.is_zero() {
                return Err(RaceError::InvalidConfig("time unit must be > 0".into()));
            }
        }
        Ok(())
    }
}

/// One completed round. Times are seconds since the round's start signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub winner: usize,
    pub winner_time: f64,
    /// Replicas that also completed before observing cancellation.
    pub loser_completions: Vec<(usize, f64)>,
    /// Single-replica time for this round.
    pub single_time: f64,
    /// Time from cancellation until every loser was gone.
    pub teardown: f64,
    /// Workers still alive after teardown, from the liveness probe.
    pub live_after_teardown: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RaceResult {
    pub replicas: usize,
    pub rounds: Vec<RoundRecord>,
    pub failed_rounds: usize,
    pub mean_winner_time: f64,
    pub mean_single_time: f64,
    pub empirical_speedup: f64,
    /// Analytic speedup, synthetic tasks only.
    pub model_speedup: Option<f64>,
    pub overhead_estimate: f64,
}

/// Intended durations, in model units, for every (round, replica). Depends
/// only on the distribution, the shape and the seed.
pub fn duration_schedule(dist: Distribution, replicas: usize, rounds: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = SimRng::new(seed);
    (0..rounds)
        .map(|_| (0..replicas).map(|_| dist.sample(&mut rng)).collect())
        .collect()
}

/// Per-replica cost of starting and reaping a replica, from racing
/// zero-duration synthetic tasks.
pub fn calibrate() -> Duration {
    const REPLICAS: usize = 4;
    const ROUNDS: usize = 16;
    let zeros = vec![0.0; REPLICAS];
    let mut samples: Vec<Duration> = (0..ROUNDS)
        .filter_map(|_| {
            let begin = Instant::now();
            synthetic_round(&zeros, Duration::from_millis(1), DEFAULT_CANCEL_GRACE, false, 0).ok()?;
            Some(begin.elapsed() / REPLICAS as u32)
        })
        .collect();
    samples.sort();
    samples.get(samples.len() / 2).copied().unwrap_or_default()
}

pub fn race(cfg: &RaceConfig) -> Result<RaceResult, RaceError> {
    cfg.validate()?;
    let overhead = cfg.overhead.unwrap_or_else(calibrate);
    match &cfg.task {
        Task::Synthetic { dist, time_unit } => race_synthetic(cfg, *dist, *time_unit, overhead),
        Task::Command { program, args } => race_commands(cfg, program, args, overhead),
    }
}

fn race_synthetic(
    cfg: &RaceConfig,
    dist: Distribution,
    unit: Duration,
    overhead: Duration,
) -> Result<RaceResult, RaceError> {
    let mean = unit.mul_f64(dist.mean());
    if mean.as_secs_f64() < MIN_DURATION_OVERHEAD_RATIO * overhead.as_secs_f64() {
        return Err(RaceError::Calibration {
            mean,
            overhead,
            ratio: MIN_DURATION_OVERHEAD_RATIO,
        });
    }
    let schedule = duration_schedule(dist, cfg.replicas, cfg.rounds, cfg.seed);
    let mut rounds = Vec::with_capacity(cfg.rounds);
    for (idx, row) in schedule.iter().enumerate() {
        let mut rec = synthetic_round(row, unit, cfg.cancel_grace, cfg.pin_cores, idx)?;
        rec.single_time = unit.as_secs_f64() * row[0];
        rounds.push(rec);
    }
    let model = order_stats::speedup(&MinQuery::new(dist, cfg.replicas as u64).expect("replicas >= 1")).ok();
    Ok(summarize(cfg.replicas, rounds, 0, model, overhead))
}

#[derive(Default)]
struct Finish {
    winner: Option<(usize, Instant)>,
    later: Vec<(usize, Instant)>,
}

fn synthetic_round(
    row: &[f64],
    unit: Duration,
    grace: Duration,
    pin: bool,
    round: usize,
) -> Result<RoundRecord, RaceError> {
    let n = row.len();
    let start = Arc::new(Barrier::new(n + 1));
    let cancel = Arc::new(AtomicBool::new(false));
    let finish = Arc::new(Mutex::new(Finish::default()));
    let live = Arc::new(AtomicUsize::new(0));
    let (won_tx, won_rx) = mpsc::channel::<()>();
    let (exit_tx, exit_rx) = mpsc::channel::<usize>();

    let handles: Vec<_> = row
        .iter()
        .enumerate()
        .map(|(i, &units)| {
            let (start, cancel, finish, live) = (start.clone(), cancel.clone(), finish.clone(), live.clone());
            let (won_tx, exit_tx) = (won_tx.clone(), exit_tx.clone());
            let target = unit.mul_f64(units);
            live.fetch_add(1, Ordering::SeqCst);
            thread::spawn(move || {
                if pin {
                    pin_to_cpu(i);
                }
                start.wait();
                let deadline = Instant::now() + target;
                if wait_until(deadline, &cancel) {
                    let mut f = finish.lock().expect("finish lock");
                    let at = Instant::now();
                    if f.winner.is_none() {
                        f.winner = Some((i, at));
                        let _ = won_tx.send(());
                    } else {
                        f.later.push((i, at));
                    }
                }
                live.fetch_sub(1, Ordering::SeqCst);
                let _ = exit_tx.send(i);
            })
        })
        .collect();
    drop(won_tx);
    drop(exit_tx);

    start.wait();
    let epoch = Instant::now();
    won_rx.recv().expect("some replica finishes");
    cancel.store(true, Ordering::SeqCst);
    let cancelled_at = Instant::now();

    for _ in 0..n {
        let left = grace.saturating_sub(cancelled_at.elapsed());
        match exit_rx.recv_timeout(left) {
            Ok(_) => {}
            Err(RecvTimeoutError::Timeout) => return Err(RaceError::CancelTimeout { round, grace }),
            Err(RecvTimeoutError::Disconnected) => break,
        }
    }
    for h in handles {
        let _ = h.join();
    }
    let teardown = cancelled_at.elapsed().as_secs_f64();

    let f = finish.lock().expect("finish lock");
    let (winner, won_at) = f.winner.expect("winner recorded");
    let since = |t: Instant| t.saturating_duration_since(epoch).as_secs_f64();
    Ok(RoundRecord {
        winner,
        winner_time: since(won_at),
        loser_completions: f.later.iter().map(|&(i, t)| (i, since(t))).collect(),
        single_time: 0.0,
        teardown,
        live_after_teardown: live.load(Ordering::SeqCst),
    })
}

/// Sleeps towards `deadline`, spinning for the last stretch. Returns false if
/// cancelled first.
fn wait_until(deadline: Instant, cancel: &AtomicBool) -> bool {
    loop {
        if cancel.load(Ordering::Relaxed) {
            return false;
        }
        let now = Instant::now();
        if now >= deadline {
            return true;
        }
        let left = deadline - now;
        if left > SPIN_WINDOW {
            thread::sleep((left - SPIN_WINDOW).min(CANCEL_POLL));
        } else {
            thread::yield_now();
        }
    }
}

#[cfg(target_os = "linux")]
fn pin_to_cpu(i: usize) {
    let ncpu = thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    // SAFETY: cpu_set_t is plain data; the calls only touch the local set and
    // the calling thread's affinity.
    unsafe {
        let mut set: libc::cpu_set_t = std::mem::zeroed();
        libc::CPU_SET(i % ncpu, &mut set);
        libc::sched_setaffinity(0, std::mem::size_of::<libc::cpu_set_t>(), &set);
    }
}

#[cfg(not(target_os = "linux"))]
fn pin_to_cpu(_i: usize) {}

fn replica_command(program: &str, args: &[String], i: usize) -> Command {
    let mut cmd = Command::new(program);
    cmd.args(args.iter().map(|a| a.replace(REPLICA_TOKEN, &i.to_string())))
        .stdin(Stdio::null())
        .stdout(Stdio::null())
        .stderr(Stdio::null());
    cmd
}

fn race_commands(cfg: &RaceConfig, program: &str, args: &[String], overhead: Duration) -> Result<RaceResult, RaceError> {
    let mut rounds = Vec::new();
    let mut failed = 0;
    for round in 0..cfg.rounds {
        // baseline: replica 0 on its own
        let begin = Instant::now();
        let status = replica_command(program, args, 0).status()?;
        let single_time = begin.elapsed().as_secs_f64();
        if !status.success() {
            failed += 1;
            continue;
        }
        match command_round(program, args, cfg.replicas, cfg.cancel_grace, round)? {
            Some(mut rec) => {
                rec.single_time = single_time;
                rounds.push(rec);
            }
            None => failed += 1,
        }
    }
    if rounds.is_empty() {
        return Err(RaceError::CommandFailure { failed });
    }
    Ok(summarize(cfg.replicas, rounds, failed, None, overhead))
}

/// Returns `None` when no replica exits successfully.
fn command_round(
    program: &str,
    args: &[String],
    n: usize,
    grace: Duration,
    round: usize,
) -> Result<Option<RoundRecord>, RaceError> {
    let epoch = Instant::now();
    let mut children: Vec<Option<Child>> = Vec::with_capacity(n);
    for i in 0..n {
        match replica_command(program, args, i).spawn() {
            Ok(c) => children.push(Some(c)),
            Err(e) => {
                for c in children.iter_mut().flatten() {
                    let _ = c.kill();
                    let _ = c.wait();
                }
                return Err(e.into());
            }
        }
    }

    let mut winner: Option<(usize, f64)> = None;
    let mut later = Vec::new();
    while winner.is_none() && children.iter().any(Option::is_some) {
        for (i, slot) in children.iter_mut().enumerate() {
            let Some(child) = slot else { continue };
            if let Some(status) = child.try_wait()? {
                *slot = None;
                if status.success() {
                    let t = epoch.elapsed().as_secs_f64();
                    if winner.is_none() {
                        winner = Some((i, t));
                    } else {
                        later.push((i, t));
                    }
                }
            }
        }
        if winner.is_none() {
            thread::sleep(Duration::from_micros(200));
        }
    }

    let cancelled_at = Instant::now();
    let live = terminate_all(&mut children, grace);
    let teardown = cancelled_at.elapsed().as_secs_f64();
    if live > 0 {
        return Err(RaceError::CancelTimeout { round, grace });
    }
    Ok(winner.map(|(winner, winner_time)| RoundRecord {
        winner,
        winner_time,
        loser_completions: later,
        single_time: 0.0,
        teardown,
        live_after_teardown: live,
    }))
}

/// Asks every live child to stop, escalates to a kill after half the grace
/// period, and returns how many are still running once the grace is spent.
fn terminate_all(children: &mut [Option<Child>], grace: Duration) -> usize {
    let begin = Instant::now();
    for child in children.iter_mut().flatten() {
        soft_terminate(child);
    }
    let mut escalated = false;
    loop {
        for slot in children.iter_mut() {
            if let Some(child) = slot {
                if matches!(child.try_wait(), Ok(Some(_)) | Err(_)) {
                    *slot = None;
                }
            }
        }
        let live = children.iter().filter(|c| c.is_some()).count();
        if live == 0 || begin.elapsed() >= grace {
            return live;
        }
        if !escalated && begin.elapsed() >= grace / 2 {
            for child in children.iter_mut().flatten() {
                let _ = child.kill();
            }
            escalated = true;
        }
        thread::sleep(Duration::from_micros(500));
    }
}

#[cfg(unix)]
fn soft_terminate(child: &mut Child) {
    // SAFETY: sending a signal to a pid we spawned and have not yet reaped.
    unsafe {
        libc::kill(child.id() as libc::pid_t, libc::SIGTERM);
    }
}

#[cfg(not(unix))]
fn soft_terminate(child: &mut Child) {
    let _ = child.kill();
}

fn summarize(
    replicas: usize,
    rounds: Vec<RoundRecord>,
    failed_rounds: usize,
    model_speedup: Option<f64>,
    overhead: Duration,
) -> RaceResult {
    let k = rounds.len() as f64;
    let mean_winner_time = rounds.iter().map(|r| r.winner_time).sum::<f64>() / k;
    let mean_single_time = rounds.iter().map(|r| r.single_time).sum::<f64>() / k;
    RaceResult {
        replicas,
        failed_rounds,
        mean_winner_time,
        mean_single_time,
        empirical_speedup: mean_single_time / mean_winner_time,
        model_speedup,
        overhead_estimate: overhead.as_secs_f64(),
        rounds,
    }
}
