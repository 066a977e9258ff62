//! Test-only oracles, independent of the library's numerical paths.
#![allow(dead_code)]

use cpcsim::{Distribution, Law, SimRng};

pub fn builtins() -> Vec<Distribution> {
    vec![
        Distribution::exponential(1.0).unwrap(),
        Distribution::exponential(3.0).unwrap(),
        Distribution::erlang(1, 1.0).unwrap(),
        Distribution::erlang(2, 1.0).unwrap(),
        Distribution::erlang(3, 1.0).unwrap(),
        Distribution::erlang(10, 1.0).unwrap(),
        Distribution::hyperexponential(1.0, 1.0).unwrap(),
        Distribution::hyperexponential(5.0, 1.0).unwrap(),
        Distribution::hyperexponential(10.0, 1.0).unwrap(),
        Distribution::hyperexponential(0.7, 2.0).unwrap(),
        Distribution::uniform(0.0, 2.0).unwrap(),
        Distribution::uniform(0.5, 1.5).unwrap(),
    ]
}

/// Composite Simpson rule with `panels` (even) subintervals.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let panels = panels + panels % 2;
    let h = (b - a) / panels as f64;
    let mut s = f(a) + f(b);
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Interval outside of which the density is negligible (< 1e-16 of mass),
/// from hand-derived tail bounds.
pub fn support(d: &Distribution) -> (f64, f64) {
    match d.law() {
        Law::Exponential { lambda } => (0.0, 40.0 / lambda),
        Law::Erlang { k, lambda } => {
            let sd = 1.0 / (lambda * f64::from(k).sqrt());
            (0.0, 1.0 / lambda + 60.0 * sd + 40.0 / (lambda * f64::from(k)))
        }
        Law::Hyperexponential { a, lambda } => {
            let slow = (a * lambda).min(a * lambda / (2.0 * a - 1.0));
            (0.0, 45.0 / slow)
        }
        Law::Uniform { lo, hi } => (lo, hi),
    }
}

/// Integral of `g(x) * pdf(x)` over the support by Simpson's rule, split at
/// a few interior points so sharp peaks near the origin are resolved.
pub fn moment<G: Fn(f64) -> f64>(d: &Distribution, g: G) -> f64 {
    let (lo, hi) = support(d);
    let cuts = [lo, lo + (hi - lo) * 0.01, lo + (hi - lo) * 0.1, hi];
    cuts.windows(2)
        .map(|w| simpson(|x| g(x) * d.pdf(x), w[0], w[1], 200_000))
        .sum()
}

pub fn draws(d: &Distribution, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = SimRng::new(seed);
    (0..n).map(|_| d.sample(&mut rng)).collect()
}

/// One-sample Kolmogorov-Smirnov statistic against `cdf`.
pub fn ks_one_sample<F: Fn(f64) -> f64>(mut xs: Vec<f64>, cdf: F) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_two_sample(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// KS critical value at alpha ~ 0.001 for a sample of size `n`.
pub fn ks_critical(n: usize) -> f64 {
    1.95 / (n as f64).sqrt()
}

pub fn ks_critical_two(n: usize, m: usize) -> f64 {
    1.95 * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

/// Speedups at 100 cores computed offline with 30-digit arithmetic
/// (binomial sum for the hyperexponential, adaptive quadrature of the
/// survival power for Erlang).
pub mod frozen {
    pub const HYPER_A5_N100: f64 = 275.976_727_672_752_4;
    pub const HYPER_A10_N100: f64 = 521.981_361_290_871_8;
    pub const ERLANG_K2_N100: f64 = 15.140_090_542_172_19;
    pub const ERLANG_K3_N100: f64 = 7.699_283_164_386_46;
    pub const ERLANG_K10_N100: f64 = 2.582_510_832_190_789;
    pub const ERLANG_K50_N100: f64 = 1.466_724_180_241_239;
    pub const ERLANG_K100_N100: f64 = 1.302_983_558_937_961;
    /// Shapes recovered from CV 1.59, 1.70, 1.72 and their speedups.
    pub const HYPER_CV_INVERSION: [(f64, f64, f64); 3] = [
        (1.59, 7.942_782_524_544_029, 420.529_480_419_396_1),
        (1.70, 35.856_565_541_112_24, 1_800.662_440_788_754_5),
        (1.72, 95.651_218_757_126_15, 4_759.655_241_749_562),
    ];
}
