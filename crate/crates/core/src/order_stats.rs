//! Minimum of `n` i.i.d. execution times.
//!
//! With survival function `S`, the minimum `Y_n` has CDF `1 - S(y)^n` and
//! density `n S(y)^{n-1} f(y)`. Powers of `S` are always taken as
//! `exp(n ln S)`. The expected minimum uses a closed form where one exists
//! and otherwise integrates the tail, `E[Y_n] = int_0^inf S(y)^n dy`.

use crate::distributions::{Distribution, Law};
use crate::monte_carlo::CurvePoint;
use crate::quadrature::{self, Integral, QuadratureError, Tolerance};

/// Largest core count evaluated by the hyperexponential binomial sum; larger
/// counts integrate numerically.
pub const BINOMIAL_SUM_MAX_CORES: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OrderStatsError {
    #[error("core count must be >= 1")]
    ZeroCores,
    #[error("no core counts given")]
    EmptyCurve,
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// The minimum over `n` cores of i.i.d. draws from `dist`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinQuery {
    dist: Distribution,
    n: u64,
}

impl MinQuery {
    pub fn new(dist: Distribution, n: u64) -> Result<Self, OrderStatsError> {
        if n == 0 {
            return Err(OrderStatsError::ZeroCores);
        }
        Ok(Self { dist, n })
    }

    pub fn dist(&self) -> Distribution {
        self.dist
    }

    pub fn cores(&self) -> u64 {
        self.n
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ClosedForm,
    BinomialSum,
    Quadrature,
}

/// Expected minimum together with how it was obtained. `error` is zero for
/// closed forms and the quadrature's own estimate otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinEstimate {
    pub value: f64,
    pub error: f64,
    pub method: Method,
}

pub fn min_cdf(q: &MinQuery, y: f64) -> f64 {
    let ln_s = q.dist.ln_survival(y);
    if ln_s == f64::NEG_INFINITY {
        return 1.0;
    }
    -(q.n as f64 * ln_s).exp_m1()
}

pub fn min_pdf(q: &MinQuery, y: f64) -> f64 {
    let f = q.dist.pdf(y);
    if q.n == 1 || f == 0.0 {
        return f;
    }
    let n = q.n as f64;
    let ln_s = q.dist.ln_survival(y);
    if ln_s == f64::NEG_INFINITY {
        return 0.0;
    }
    n * ((n - 1.0) * ln_s).exp() * f
}

pub fn expected_min(q: &MinQuery) -> Result<f64, OrderStatsError> {
    expected_min_detailed(q).map(|e| e.value)
}

pub fn expected_min_detailed(q: &MinQuery) -> Result<MinEstimate, OrderStatsError> {
    let exact = |value| MinEstimate {
        value,
        error: 0.0,
        method: Method::ClosedForm,
    };
    if q.n == 1 {
        return Ok(exact(q.dist.mean()));
    }
    let n = q.n as f64;
    match q.dist.law() {
        Law::Exponential { lambda } => Ok(exact(1.0 / (lambda * n))),
        Law::Uniform { lo, hi } => Ok(exact(lo + (hi - lo) / (n + 1.0))),
        Law::Hyperexponential { a, lambda } if q.n <= BINOMIAL_SUM_MAX_CORES => Ok(MinEstimate {
            value: hyper_binomial_sum(a, lambda, q.n),
            error: 0.0,
            method: Method::BinomialSum,
        }),
        _ => expected_min_by_quadrature(q).map(|r| MinEstimate {
            value: r.value,
            error: r.error,
            method: Method::Quadrature,
        }),
    }
}

/// `sum_j C(n,j) 2^-n / (j r1 + (n-j) r2)`: the minimum of `n` draws is
/// exponential at the summed rate of the branches that were picked. The
/// binomial weights follow `p_{j+1} = p_j (n-j)/(j+1)`, carried in log form so
/// that `2^-n` does not underflow.
fn hyper_binomial_sum(a: f64, lambda: f64, n: u64) -> f64 {
    let (r1, r2) = Distribution::hyper_branch_rates(a, lambda);
    let nf = n as f64;
    let mut ln_p = -nf * std::f64::consts::LN_2;
    let mut total = 0.0;
    for j in 0..=n {
        let jf = j as f64;
        total += ln_p.exp() / (jf * r1 + (nf - jf) * r2);
        ln_p += ((nf - jf) / (jf + 1.0)).ln();
    }
    total
}

/// `E[Y_n]` by integrating `S(y)^n` over `[0, inf)`, mapped onto `[0, 1)`
/// through `y = t / (1 - t)`. Available for every family so closed forms can
/// be checked against it.
pub fn expected_min_by_quadrature(q: &MinQuery) -> Result<Integral, OrderStatsError> {
    let n = q.n as f64;
    let dist = q.dist;
    let integrand = |t: f64| {
        let y = t / (1.0 - t);
        let ln_s = dist.ln_survival(y);
        if ln_s == f64::NEG_INFINITY {
            return 0.0;
        }
        let jac = 1.0 / ((1.0 - t) * (1.0 - t));
        (n * ln_s).exp() * jac
    };

    // geometric seed partition around the expected scale of the minimum
    let scale = dist.mean() / n;
    let mut ys: Vec<f64> = (-12..=12).map(|j| scale * 4f64.powi(j)).collect();
    if let Law::Uniform { lo, hi } = dist.law() {
        ys.extend([lo, hi]);
        ys.extend((-12..=0).map(|j| lo + (hi - lo) * 4f64.powi(j)));
    }
    let mut ts: Vec<f64> = ys
        .into_iter()
        .filter(|y| *y > 0.0 && y.is_finite())
        .map(|y| y / (1.0 + y))
        .filter(|t| *t > 0.0 && *t < 1.0)
        .collect();
    ts.push(0.0);
    ts.push(1.0);
    ts.sort_by(f64::total_cmp);
    ts.dedup();

    Ok(quadrature::integrate(integrand, &ts, Tolerance::default())?)
}

/// `E[Y_1] / E[Y_n]`, exactly 1 at `n = 1`.
pub fn speedup(q: &MinQuery) -> Result<f64, OrderStatsError> {
    Ok(q.dist.mean() / expected_min(q)?)
}

/// Analytic speedup for each requested core count.
pub fn speedup_curve(dist: Distribution, n_values: &[u64]) -> Result<Vec<CurvePoint>, OrderStatsError> {
    if n_values.is_empty() {
        return Err(OrderStatsError::EmptyCurve);
    }
    let cv = dist.cv();
    n_values
        .iter()
        .map(|&n| {
            let s = speedup(&MinQuery::new(dist, n)?)?;
            Ok(CurvePoint::analytic(n as f64, cv, s))
        })
        .collect()
}
