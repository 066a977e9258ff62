//! Speedup prediction for competitive (first-wins) parallel execution.
//!
//! Identical copies of a task run on `n` cores; the first to finish is kept
//! and the rest are cancelled. With i.i.d. per-core execution times `X`, the
//! overall time is `Y_n = min(X_1, ..., X_n)` and the speedup is
//! `E[Y_1] / E[Y_n]`.
//!
//! * [`distributions`]: execution-time laws and their samplers.
//! * [`order_stats`]: analytic minimum statistics and speedup.
//! * [`monte_carlo`]: simulated estimates and parameter sweeps.
//! * [`racer`]: a real racing harness with cancellation.
//! * [`cli`]: the `cpcsim` command line.

pub mod cli;
pub mod distributions;
pub mod monte_carlo;
pub mod order_stats;
pub mod quadrature;
pub mod racer;
pub mod rng;

pub use distributions::{Distribution, DistributionError, Law};
pub use monte_carlo::{CurvePoint, DenominatorMode, SimConfig, SimResult, SimTemplate};
pub use order_stats::{expected_min, min_cdf, min_pdf, speedup, speedup_curve, MinQuery};
pub use racer::{RaceConfig, RaceResult};
pub use rng::SimRng;
