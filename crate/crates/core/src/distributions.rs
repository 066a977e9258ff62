//! Per-core execution-time laws.
//!
//! Four families are supported, all with nonnegative support:
//!
//! * exponential with rate `lambda`,
//! * Erlang with `k` phases, each of rate `k * lambda` (mean `1 / lambda`),
//! * the two-branch hyperexponential with shape `a > 1/2`: branch
//!   probabilities `1/2`, branch rates `a * lambda` and
//!   `a * lambda / (2a - 1)` (mean `1 / lambda`),
//! * uniform on `[lo, hi]`.
//!
//! The text form `exp:<lambda> | erlang:<k>:<lambda> | hyper:<a>:<lambda> |
//! uniform:<lo>:<hi>` is accepted by [`Distribution::from_str`] and produced by
//! `Display`.

use std::f64::consts::LN_2;
use std::fmt;
use std::str::FromStr;

use crate::rng::SimRng;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DistributionError {
    #[error("rate must be finite and > 0, got {0}")]
    InvalidRate(f64),
    #[error("Erlang phase count must be >= 1")]
    InvalidPhases,
    #[error("hyperexponential shape must be finite and > 1/2, got {0}")]
    InvalidShape(f64),
    #[error("uniform bounds must satisfy 0 <= lo < hi (finite), got lo={lo}, hi={hi}")]
    InvalidBounds { lo: f64, hi: f64 },
    #[error("coefficient of variation {0} has no two-branch hyperexponential with a >= 1 (need 1 <= cv < sqrt 3)")]
    UnreachableCv(f64),
    #[error("cannot parse distribution '{input}': {reason}")]
    Parse { input: String, reason: String },
}

/// Parameters of a distribution, as validated at construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Law {
    Exponential { lambda: f64 },
    Erlang { k: u32, lambda: f64 },
    Hyperexponential { a: f64, lambda: f64 },
    Uniform { lo: f64, hi: f64 },
}

/// A validated execution-time distribution. Immutable and `Copy`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Distribution(Law);

fn check_rate(lambda: f64) -> Result<f64, DistributionError> {
    if lambda.is_finite() && lambda > 0.0 {
        Ok(lambda)
    } else {
        Err(DistributionError::InvalidRate(lambda))
    }
}

impl Distribution {
    pub fn exponential(lambda: f64) -> Result<Self, DistributionError> {
        Ok(Self(Law::Exponential {
            lambda: check_rate(lambda)?,
        }))
    }

    /// Erlang-`k` with mean `1 / lambda`.
    pub fn erlang(k: u32, lambda: f64) -> Result<Self, DistributionError> {
        if k == 0 {
            return Err(DistributionError::InvalidPhases);
        }
        Ok(Self(Law::Erlang {
            k,
            lambda: check_rate(lambda)?,
        }))
    }

    /// Two-branch hyperexponential with mean `1 / lambda`.
    pub fn hyperexponential(a: f64, lambda: f64) -> Result<Self, DistributionError> {
        if !(a.is_finite() && a > 0.5) {
            return Err(DistributionError::InvalidShape(a));
        }
        Ok(Self(Law::Hyperexponential {
            a,
            lambda: check_rate(lambda)?,
        }))
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self, DistributionError> {
        if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && hi > lo) {
            return Err(DistributionError::InvalidBounds { lo, hi });
        }
        Ok(Self(Law::Uniform { lo, hi }))
    }

    pub fn law(&self) -> Law {
        self.0
    }

    /// Branch rates `(a*lambda, a*lambda/(2a-1))` of a hyperexponential.
    pub fn hyper_branch_rates(a: f64, lambda: f64) -> (f64, f64) {
        let r1 = a * lambda;
        (r1, r1 / (2.0 * a - 1.0))
    }

    /// Shape `a >= 1` whose hyperexponential has coefficient of variation
    /// `cv`. Solves `(3 - cv^2) a^2 - 4a + 2 = 0` and keeps the larger root;
    /// the other root `a / (2a - 1)` describes the same mixture with its
    /// branches swapped.
    pub fn hyper_shape_for_cv(cv: f64) -> Result<f64, DistributionError> {
        let c2 = cv * cv;
        if !(cv.is_finite() && cv >= 1.0 && c2 < 3.0) {
            return Err(DistributionError::UnreachableCv(cv));
        }
        Ok((2.0 + (2.0 * c2 - 2.0).sqrt()) / (3.0 - c2))
    }

    pub fn mean(&self) -> f64 {
        match self.0 {
            Law::Exponential { lambda }
            | Law::Erlang { lambda, .. }
            | Law::Hyperexponential { lambda, .. } => 1.0 / lambda,
            Law::Uniform { lo, hi } => 0.5 * (lo + hi),
        }
    }

    pub fn variance(&self) -> f64 {
        match self.0 {
            Law::Exponential { lambda } => 1.0 / (lambda * lambda),
            Law::Erlang { k, lambda } => 1.0 / (f64::from(k) * lambda * lambda),
            Law::Hyperexponential { a, lambda } => {
                let b = 2.0 * a - 1.0;
                let second = (1.0 + b * b) / (a * a * lambda * lambda);
                second - 1.0 / (lambda * lambda)
            }
            Law::Uniform { lo, hi } => (hi - lo) * (hi - lo) / 12.0,
        }
    }

    /// Coefficient of variation, standard deviation over mean.
    pub fn cv(&self) -> f64 {
        match self.0 {
            Law::Exponential { .. } => 1.0,
            Law::Erlang { k, .. } => 1.0 / f64::from(k).sqrt(),
            Law::Hyperexponential { a, .. } => {
                let b = 2.0 * a - 1.0;
                ((1.0 + b * b) / (a * a) - 1.0).sqrt()
            }
            Law::Uniform { lo, hi } => (hi - lo) / (3f64.sqrt() * (hi + lo)),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self.0 {
            Law::Uniform { lo, hi } => {
                if x <= lo {
                    0.0
                } else if x >= hi {
                    1.0
                } else {
                    (x - lo) / (hi - lo)
                }
            }
            _ if x <= 0.0 => 0.0,
            _ if x == f64::INFINITY => 1.0,
            Law::Exponential { lambda } => -(-lambda * x).exp_m1(),
            Law::Erlang { k, lambda } => {
                let z = f64::from(k) * lambda * x;
                if z < f64::from(k) {
                    erlang_lower_tail(k, z)
                } else {
                    1.0 - erlang_ln_survival(k, z).exp()
                }
            }
            Law::Hyperexponential { a, lambda } => {
                let (r1, r2) = Self::hyper_branch_rates(a, lambda);
                -0.5 * ((-r1 * x).exp_m1() + (-r2 * x).exp_m1())
            }
        }
    }

    pub fn survival(&self, x: f64) -> f64 {
        match self.0 {
            Law::Uniform { lo, hi } => {
                if x <= lo {
                    1.0
                } else if x >= hi {
                    0.0
                } else {
                    (hi - x) / (hi - lo)
                }
            }
            _ => self.ln_survival(x).exp(),
        }
    }

    /// Natural log of the survival function; `-inf` outside the support's
    /// upper end. The min-statistics engine raises survival to the n-th power
    /// through this.
    pub fn ln_survival(&self, x: f64) -> f64 {
        match self.0 {
            Law::Uniform { .. } => self.survival(x).ln(),
            _ if x <= 0.0 => 0.0,
            _ if x == f64::INFINITY => f64::NEG_INFINITY,
            Law::Exponential { lambda } => -lambda * x,
            Law::Erlang { k, lambda } => erlang_ln_survival(k, f64::from(k) * lambda * x),
            Law::Hyperexponential { a, lambda } => {
                let (r1, r2) = Self::hyper_branch_rates(a, lambda);
                // r1 >= r2 iff a >= 1; log-sum-exp around the slower branch
                let (fast, slow) = if r1 >= r2 { (r1, r2) } else { (r2, r1) };
                -LN_2 - slow * x + (-(fast - slow) * x).exp().ln_1p()
            }
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match self.0 {
            Law::Uniform { lo, hi } => {
                if x >= lo && x <= hi {
                    1.0 / (hi - lo)
                } else {
                    0.0
                }
            }
            _ if x < 0.0 || x == f64::INFINITY => 0.0,
            Law::Exponential { lambda } => lambda * (-lambda * x).exp(),
            Law::Erlang { k, lambda } => {
                let rate = f64::from(k) * lambda;
                if k == 1 {
                    return rate * (-rate * x).exp();
                }
                if x == 0.0 {
                    return 0.0;
                }
                let z = rate * x;
                let km1 = f64::from(k - 1);
                (rate.ln() + km1 * z.ln() - ln_factorial(k - 1) - z).exp()
            }
            Law::Hyperexponential { a, lambda } => {
                let (r1, r2) = Self::hyper_branch_rates(a, lambda);
                0.5 * (r1 * (-r1 * x).exp() + r2 * (-r2 * x).exp())
            }
        }
    }

    /// Exact draw. Exponential by inverse transform, Erlang as a sum of `k`
    /// exponentials of rate `k * lambda`, hyperexponential by a fair branch
    /// choice followed by an exponential draw, uniform by scaling.
    pub fn sample(&self, rng: &mut SimRng) -> f64 {
        match self.0 {
            Law::Exponential { lambda } => -rng.open01().ln() / lambda,
            Law::Erlang { k, lambda } => {
                let rate = f64::from(k) * lambda;
                let mut total = 0.0;
                for _ in 0..k {
                    total -= rng.open01().ln();
                }
                total / rate
            }
            Law::Hyperexponential { a, lambda } => {
                let (r1, r2) = Self::hyper_branch_rates(a, lambda);
                let rate = if rng.open01() < 0.5 { r1 } else { r2 };
                -rng.open01().ln() / rate
            }
            Law::Uniform { lo, hi } => lo + (hi - lo) * rng.open01(),
        }
    }
}

/// `ln(n!)` by direct summation; exact enough for the phase counts used here.
pub(crate) fn ln_factorial(n: u32) -> f64 {
    (2..=n).map(|i| f64::from(i).ln()).sum()
}

/// `ln( e^{-z} * sum_{r<k} z^r / r! )`, evaluated around the largest term so
/// that neither the exponential nor the partial sum over- or underflows.
fn erlang_ln_survival(k: u32, z: f64) -> f64 {
    if z <= 0.0 {
        return 0.0;
    }
    if z < f64::from(k) {
        // near the origin the partial sum cancels against e^{-z}
        let lower = erlang_lower_tail(k, z);
        if lower < 0.5 {
            return (-lower).ln_1p();
        }
    }
    let top = k - 1;
    let peak = (z.floor().min(f64::from(top))) as u32;
    let ln_peak = f64::from(peak) * z.ln() - ln_factorial(peak) - z;

    // sum of term_r / term_peak over r in [0, top]
    let mut sum = 1.0;
    let mut ratio = 1.0;
    for r in (1..=peak).rev() {
        ratio *= f64::from(r) / z;
        sum += ratio;
        if ratio < sum * 1e-17 {
            break;
        }
    }
    ratio = 1.0;
    for r in peak..top {
        ratio *= z / f64::from(r + 1);
        sum += ratio;
        if ratio < sum * 1e-17 {
            break;
        }
    }
    ln_peak + sum.ln()
}

/// `e^{-z} * sum_{r>=k} z^r / r!` for `z < k`, where the series decays
/// geometrically from its first term.
fn erlang_lower_tail(k: u32, z: f64) -> f64 {
    let ln_first = f64::from(k) * z.ln() - ln_factorial(k) - z;
    let mut sum = 1.0;
    let mut term = 1.0;
    let mut r = k;
    loop {
        r += 1;
        term *= z / f64::from(r);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    (ln_first + sum.ln()).exp()
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Law::Exponential { lambda } => write!(f, "exp:{lambda}"),
            Law::Erlang { k, lambda } => write!(f, "erlang:{k}:{lambda}"),
            Law::Hyperexponential { a, lambda } => write!(f, "hyper:{a}:{lambda}"),
            Law::Uniform { lo, hi } => write!(f, "uniform:{lo}:{hi}"),
        }
    }
}

impl FromStr for Distribution {
    type Err = DistributionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let fail = |reason: &str| DistributionError::Parse {
            input: s.to_string(),
            reason: reason.to_string(),
        };
        let num = |t: &str| -> Result<f64, DistributionError> {
            let v: f64 = t
                .trim()
                .parse()
                .map_err(|_| fail(&format!("'{t}' is not a decimal number")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(fail(&format!("'{t}' is not finite")))
            }
        };
        let parts: Vec<&str> = s.trim().split(':').collect();
        match parts.as_slice() {
            ["exp", l] => Self::exponential(num(l)?),
            ["erlang", k, l] => {
                let k: u32 = k
                    .trim()
                    .parse()
                    .map_err(|_| fail(&format!("'{k}' is not a positive integer")))?;
                Self::erlang(k, num(l)?)
            }
            ["hyper", a, l] => Self::hyperexponential(num(a)?, num(l)?),
            ["uniform", lo, hi] => Self::uniform(num(lo)?, num(hi)?),
            _ => Err(fail(
                "expected exp:<lambda> | erlang:<k>:<lambda> | hyper:<a>:<lambda> | uniform:<lo>:<hi>",
            )),
        }
    }
}
