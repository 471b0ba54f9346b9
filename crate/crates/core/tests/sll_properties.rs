use proptest::prelude::*;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use reconcile_core::sll::{solve_sll, QuantileTriplet, SllParams};
use reconcile_core::standardize::{back_transform, standardize_triplet, DecisionMakerPrior};

/// Composite Gauss-Legendre (5 points) over `n` equal panels.
fn gauss_legendre(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    const X: [f64; 5] = [
        0.0,
        0.538_469_310_105_683_1,
        -0.538_469_310_105_683_1,
        0.906_179_845_938_664,
        -0.906_179_845_938_664,
    ];
    const W: [f64; 5] = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_1,
        0.236_926_885_056_189_1,
    ];
    let h = (b - a) / n as f64;
    (0..n)
        .map(|i| {
            let c = a + (i as f64 + 0.5) * h;
            X.iter().zip(W).map(|(x, w)| w * f(c + 0.5 * h * x)).sum::<f64>() * 0.5 * h
        })
        .sum()
}

/// ∫ pdf over the real line, via x = μ + σ·tan(t) which maps tails to a finite interval.
fn total_mass(p: &SllParams) -> f64 {
    let (mu, s) = (p.location, p.scale);
    let half = std::f64::consts::FRAC_PI_2;
    gauss_legendre(
        |t| {
            let c = t.cos();
            p.pdf(mu + s * t.tan()) * s / (c * c)
        },
        -half,
        half,
        4000,
    )
}

#[test]
fn pdf_integrates_to_one() {
    for (mu, sigma, gamma) in [
        (2.0, 0.47081, 0.23539),
        (0.0, 1.0, 0.0),
        (-3.0, 0.2, -0.4),
        (5.0, 2.0, 0.05),
    ] {
        let p = SllParams::new(mu, sigma, gamma).unwrap();
        let m = total_mass(&p);
        assert!((m - 1.0).abs() < 1e-6, "({mu}, {sigma}, {gamma}) mass {m}");
    }
}

#[test]
fn cdf_is_integral_of_pdf() {
    let p = SllParams::new(2.0, 0.47081, 0.23539).unwrap();
    let (lo, _) = p.support();
    for x in [1.0, 2.0, 3.5, 6.0] {
        let integral = gauss_legendre(|t| p.pdf(t), lo, x, 2000);
        assert!((integral - p.cdf(x)).abs() < 1e-8, "x={x}: {integral} vs {}", p.cdf(x));
    }
}

#[test]
fn sampled_quantiles_match_quantile_function() {
    let p = solve_sll(&QuantileTriplet::new(1.0, 2.0, 4.0, 0.05).unwrap()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 1_000_000;
    let mut xs: Vec<f64> = (0..n)
        .map(|_| {
            let u: f64 = rng.random_range(f64::EPSILON..1.0);
            p.sample(u).unwrap()
        })
        .collect();
    xs.sort_by(f64::total_cmp);
    for q in [0.05, 0.5, 0.95] {
        let emp = xs[(q * n as f64) as usize];
        // binomial SE of the empirical quantile, in probability units
        let se = (q * (1.0 - q) / n as f64).sqrt();
        assert!((p.cdf(emp) - q).abs() < 5.0 * se, "q={q}: cdf(emp)={}", p.cdf(emp));
    }
}

#[test]
fn near_symmetric_triplets_approach_symmetric_scale() {
    let p_low: f64 = 0.05;
    let lp = (p_low / (1.0 - p_low)).ln();
    for eps in [1e-4, 1e-6, 1e-8, 1e-10] {
        let t = QuantileTriplet::new(-1.0, 0.0, 1.0 + eps, p_low).unwrap();
        let s = solve_sll(&t).unwrap();
        let sym = -1.0 / lp;
        if s.shape.abs() < 1e-6 {
            assert!(((s.scale - sym) / sym).abs() < 1e-4, "eps={eps}");
        }
    }
}

fn triplet_strategy() -> impl Strategy<Value = QuantileTriplet> {
    (
        -1e3f64..1e3,
        1e-3f64..1e2,
        1e-3f64..1e2,
        prop_oneof![Just(0.01), Just(0.05), Just(0.1)],
    )
        .prop_map(|(m, a, b, p)| QuantileTriplet::new(m - a, m, m + b, p).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn solve_then_quantile_recovers_triplet(t in triplet_strategy()) {
        let p = solve_sll(&t).unwrap();
        let scale = t.low.abs().max(t.median.abs()).max(t.high.abs());
        let got = [
            p.quantile(t.p_low).unwrap(),
            p.quantile(0.5).unwrap(),
            p.quantile(1.0 - t.p_low).unwrap(),
        ];
        for (g, w) in got.iter().zip([t.low, t.median, t.high]) {
            prop_assert!((g - w).abs() <= 1e-9 * scale, "{g} vs {w}");
        }
    }

    #[test]
    fn cdf_inverts_quantile(t in triplet_strategy(), q in 0.001f64..0.999) {
        let p = solve_sll(&t).unwrap();
        let x = p.quantile(q).unwrap();
        prop_assert!((p.cdf(x) - q).abs() < 1e-9);
    }

    #[test]
    fn pdf_nonnegative(t in triplet_strategy(), q in 0.0f64..1.0) {
        let p = solve_sll(&t).unwrap();
        let (lo, hi) = p.support();
        let span = (t.high - t.low) * 4.0;
        let x = lo.max(t.low - span) + q * (hi.min(t.high + span) - lo.max(t.low - span));
        prop_assert!(p.pdf(x) >= 0.0);
    }

    #[test]
    fn standardize_round_trips(
        lo in 0.0f64..50.0,
        w1 in 0.5f64..20.0,
        w2 in 0.5f64..20.0,
        p in prop_oneof![Just(0.05), Just(0.1)],
    ) {
        let prior = DecisionMakerPrior::uniform(-10.0, 100.0).unwrap();
        let t = QuantileTriplet::new(lo, lo + w1, lo + w1 + w2, p).unwrap();
        let s = standardize_triplet(&prior, &t).unwrap();
        prop_assert!(s.clamped.is_empty());
        let back = back_transform(&prior, s.triplet.z_low(), s.triplet.z_median, s.triplet.z_high(), p).unwrap();
        for (g, w) in [back.low, back.median, back.high].iter().zip([t.low, t.median, t.high]) {
            prop_assert!((g - w).abs() < 1e-9 * 100.0, "{g} vs {w}");
        }
    }

    #[test]
    fn table_prior_round_trips(x in 0.5f64..9.5) {
        let prior = DecisionMakerPrior::table(vec![0.0, 2.0, 5.0, 10.0], vec![0.0, 0.1, 0.7, 1.0]).unwrap();
        let y = prior.cdf(x);
        prop_assert!((prior.inverse_cdf(y) - x).abs() < 1e-12);
    }
}
