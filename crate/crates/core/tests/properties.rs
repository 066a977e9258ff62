mod common;

use common::*;
use cpcsim::monte_carlo::{simulate, sweep_erlang_k, sweep_hyper_a, SimConfig};
use cpcsim::order_stats::{expected_min, expected_min_by_quadrature, min_cdf, min_pdf, speedup, MinQuery};
use cpcsim::{Distribution, SimRng};
use proptest::prelude::*;

#[test]
fn densities_integrate_to_one_with_matching_moments() {
    for d in builtins() {
        let mass = moment(&d, |_| 1.0);
        assert!((mass - 1.0).abs() < 1e-8, "{d}: mass {mass}");
        let m1 = moment(&d, |x| x);
        assert!((m1 - d.mean()).abs() / d.mean() < 1e-6, "{d}: mean {m1}");
        let m2 = moment(&d, |x| x * x);
        let var = m2 - m1 * m1;
        assert!((var - d.variance()).abs() / d.variance() < 1e-6, "{d}: var {var}");
    }
}

#[test]
fn erlang_cdf_matches_integrated_pdf() {
    let d = Distribution::erlang(2, 1.0).unwrap();
    let integrated = simpson(|x| d.pdf(x), 0.0, 1.0, 100_000);
    assert!((integrated - d.cdf(1.0)).abs() < 1e-12);
    assert!((d.cdf(1.0) - 0.59399).abs() < 5e-6);
}

#[test]
fn min_density_integrates_to_one() {
    for d in builtins() {
        for n in [1u64, 10, 100] {
            let q = MinQuery::new(d, n).unwrap();
            let (lo, hi) = support(&d);
            // exponential-tailed minima concentrate near the origin; the
            // uniform's minimum keeps mass up to `hi`
            let top = match d.law() {
                cpcsim::Law::Uniform { .. } => hi,
                _ => lo + (hi - lo) / (n as f64).sqrt(),
            };
            let cuts = [lo, lo + (top - lo) * 0.001, lo + (top - lo) * 0.02, lo + (top - lo) * 0.2, top];
            let mass: f64 = cuts
                .windows(2)
                .map(|w| simpson(|y| min_pdf(&q, y), w[0], w[1], 100_000))
                .sum();
            assert!((mass - 1.0).abs() < 1e-8, "{d} n={n}: {mass}");
        }
    }
}

#[test]
fn samplers_pass_kolmogorov_smirnov() {
    const N: usize = 100_000;
    for (i, d) in builtins().into_iter().enumerate() {
        let stat = ks_one_sample(draws(&d, N, 1000 + i as u64), |x| d.cdf(x));
        assert!(stat < ks_critical(N), "{d}: D = {stat}");
    }
}

#[test]
fn exponential_sample_mean() {
    let d = Distribution::exponential(1.0).unwrap();
    let xs = draws(&d, 100_000, 5);
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    assert!((mean - 1.0).abs() < 4.0 * 0.003_162_3);
}

#[test]
fn erlang_one_phase_is_exponential() {
    let e = Distribution::exponential(1.7).unwrap();
    let k1 = Distribution::erlang(1, 1.7).unwrap();
    let d = ks_two_sample(draws(&e, 50_000, 1), draws(&k1, 50_000, 2));
    assert!(d < ks_critical_two(50_000, 50_000), "D = {d}");
}

#[test]
fn minimum_of_exponentials_is_exponential() {
    let lambda = 1.5;
    let e = Distribution::exponential(lambda).unwrap();
    for n in [2usize, 5, 20] {
        let mut rng = SimRng::new(n as u64);
        let mins: Vec<f64> = (0..50_000)
            .map(|_| (0..n).map(|_| e.sample(&mut rng)).fold(f64::INFINITY, f64::min))
            .collect();
        let target = Distribution::exponential(lambda * n as f64).unwrap();
        let stat = ks_one_sample(mins, |y| target.cdf(y));
        assert!(stat < ks_critical(50_000), "n={n}: D = {stat}");
    }
}

#[test]
fn quadrature_agrees_with_closed_forms() {
    for d in builtins() {
        if matches!(d.law(), cpcsim::Law::Erlang { .. }) {
            continue;
        }
        for n in [1u64, 10, 100] {
            let q = MinQuery::new(d, n).unwrap();
            let closed = expected_min(&q).unwrap();
            let quad = expected_min_by_quadrature(&q).unwrap().value;
            assert!((closed - quad).abs() / closed < 1e-6, "{d} n={n}");
        }
    }
}

#[test]
fn erlang_speedups_match_high_precision_values() {
    for (k, frozen) in [
        (2, frozen::ERLANG_K2_N100),
        (3, frozen::ERLANG_K3_N100),
        (10, frozen::ERLANG_K10_N100),
        (50, frozen::ERLANG_K50_N100),
        (100, frozen::ERLANG_K100_N100),
    ] {
        let s = speedup(&MinQuery::new(Distribution::erlang(k, 1.0).unwrap(), 100).unwrap()).unwrap();
        assert!((s - frozen).abs() / frozen < 1e-8, "k={k}: {s} vs {frozen}");
    }
    for (a, frozen) in [(5.0, frozen::HYPER_A5_N100), (10.0, frozen::HYPER_A10_N100)] {
        let s = speedup(&MinQuery::new(Distribution::hyperexponential(a, 1.0).unwrap(), 100).unwrap()).unwrap();
        assert!((s - frozen).abs() / frozen < 1e-12, "a={a}: {s}");
    }
}

#[test]
fn uniform_expected_min_by_brute_force() {
    let u = Distribution::uniform(0.0, 2.0).unwrap();
    let r = simulate(&SimConfig::new(u, 3, 10_000_000, 99)).unwrap();
    assert!((r.mean_min - 0.5).abs() < 4.0 * r.stderr);
    let order_integral = simpson(|y| (1.0 - y / 2.0).powi(3), 0.0, 2.0, 1000);
    assert!((order_integral - 0.5).abs() < 1e-12);
    assert_eq!(expected_min(&MinQuery::new(u, 3).unwrap()).unwrap(), 0.5);

    let r = simulate(&SimConfig::new(u, 100, 200_000, 7)).unwrap();
    let analytic = speedup(&MinQuery::new(u, 100).unwrap()).unwrap();
    assert_eq!(analytic, 50.5);
    assert!((r.speedup_estimate - 50.5).abs() < 4.0 * r.speedup_stderr);
}

#[test]
fn monte_carlo_matches_analytic_over_seeds() {
    let dists = [
        Distribution::exponential(1.0).unwrap(),
        Distribution::erlang(3, 1.0).unwrap(),
        Distribution::erlang(10, 1.0).unwrap(),
        Distribution::hyperexponential(5.0, 1.0).unwrap(),
        Distribution::hyperexponential(10.0, 1.0).unwrap(),
        Distribution::uniform(0.0, 2.0).unwrap(),
    ];
    for d in dists {
        for n in [1u64, 2, 10, 100] {
            let exact = expected_min(&MinQuery::new(d, n).unwrap()).unwrap();
            let misses = (0..5u64)
                .filter(|seed| {
                    let r = simulate(&SimConfig::new(d, n, 100_000, 31 * seed + n)).unwrap();
                    (r.mean_min - exact).abs() > 4.0 * r.stderr
                })
                .count();
            assert!(misses <= 1, "{d} n={n}: {misses} excursions");
        }
    }
}

#[test]
fn erlang_sweep_decreases_and_hyper_sweep_increases() {
    let ks: Vec<u32> = (1..=60).collect();
    let pts = sweep_erlang_k(&ks, 1.0, 100, None).unwrap();
    assert!((pts[0].analytic_speedup - 100.0).abs() < 1e-9);
    for w in pts.windows(2) {
        assert!(w[1].analytic_speedup < w[0].analytic_speedup);
        assert!(w[1].cv < w[0].cv);
    }
    for p in &pts {
        assert_eq!(p.cv, Distribution::erlang(p.x as u32, 1.0).unwrap().cv());
    }

    let a: Vec<f64> = (1..=100).map(f64::from).collect();
    let pts = sweep_hyper_a(&a, 1.0, 100, None).unwrap();
    assert!((pts[0].analytic_speedup - 100.0).abs() < 1e-9);
    for w in pts.windows(2) {
        assert!(w[1].analytic_speedup > w[0].analytic_speedup);
    }
}

fn any_distribution() -> impl Strategy<Value = Distribution> {
    prop_oneof![
        (0.05f64..20.0).prop_map(|l| Distribution::exponential(l).unwrap()),
        (1u32..200, 0.05f64..20.0).prop_map(|(k, l)| Distribution::erlang(k, l).unwrap()),
        (0.51f64..200.0, 0.05f64..20.0).prop_map(|(a, l)| Distribution::hyperexponential(a, l).unwrap()),
        (0.0f64..5.0, 0.01f64..5.0).prop_map(|(lo, w)| Distribution::uniform(lo, lo + w).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn cdf_is_monotone_and_bounded(d in any_distribution(), x1 in 0.0f64..50.0, dx in 0.0f64..10.0) {
        let x2 = x1 + dx;
        let (c1, c2) = (d.cdf(x1), d.cdf(x2));
        prop_assert!((0.0..=1.0).contains(&c1) && (0.0..=1.0).contains(&c2));
        prop_assert!(c1 <= c2 + 1e-15);
        let s = d.survival(x1);
        if c1 >= 1e-8 && s >= 1e-8 {
            prop_assert!((c1 + s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn more_cores_dominate(d in any_distribution(), n in 1u64..10_000, y in 0.0f64..10.0) {
        let a = min_cdf(&MinQuery::new(d, n).unwrap(), y);
        let b = min_cdf(&MinQuery::new(d, n + 1).unwrap(), y);
        prop_assert!(b >= a - 1e-15);
        prop_assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn speedup_is_nondecreasing_in_cores(d in any_distribution(), n in 1u64..300) {
        let s1 = speedup(&MinQuery::new(d, n).unwrap()).unwrap();
        let s2 = speedup(&MinQuery::new(d, n + 1).unwrap()).unwrap();
        prop_assert!(s2 >= s1 * (1.0 - 1e-9));
        prop_assert!(s1 >= 1.0 - 1e-9);
    }

    #[test]
    fn text_form_round_trips(d in any_distribution()) {
        prop_assert_eq!(d.to_string().parse::<Distribution>().unwrap(), d);
    }

    #[test]
    fn simulation_is_deterministic(seed in any::<u64>(), n in 1u64..8) {
        let cfg = SimConfig::new(Distribution::hyperexponential(3.0, 1.0).unwrap(), n, 200, seed);
        prop_assert_eq!(simulate(&cfg).unwrap(), simulate(&cfg).unwrap());
    }
}

#[test]
fn cv_inverted_shapes_match_high_precision_values() {
    for (cv, a_frozen, s_frozen) in frozen::HYPER_CV_INVERSION {
        let a = Distribution::hyper_shape_for_cv(cv).unwrap();
        assert!((a - a_frozen).abs() / a_frozen < 1e-12, "cv {cv}: a = {a}");
        let d = Distribution::hyperexponential(a, 1.0).unwrap();
        let s = speedup(&MinQuery::new(d, 100).unwrap()).unwrap();
        assert!((s - s_frozen).abs() / s_frozen < 1e-10, "cv {cv}: {s}");
        // the other root of the quadratic swaps the branches and gives the same law
        let twin = Distribution::hyperexponential(a / (2.0 * a - 1.0), 1.0).unwrap();
        let st = speedup(&MinQuery::new(twin, 100).unwrap()).unwrap();
        assert!((st - s).abs() / s < 1e-10);
    }
}
