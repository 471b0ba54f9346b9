use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use reconcile_core::continuous::{reconciled_params, run_continuous, ContinuousModelSpec};
use reconcile_core::evaluate::{
    avg_log_score, calibration_curve, equal_weights_pdf, fit_expert, paired_score_comparison, Density,
    ScoredForecaster, SllMixture, UniformDensity, COMPARISON_PRIOR_MEAN_VAR, COMPARISON_PRIOR_SCALE,
    COMPARISON_PRIOR_SHAPE,
};
use reconcile_core::judgement::QuantileJudgement;
use reconcile_core::sll::{QuantileTriplet, SllParams};
use reconcile_core::standardize::{dm_range_from_panel, DEFAULT_PADDING};

/// Pr(μ > 0 | d) with the variance integrated out, by a fine midpoint rule.
///
/// π(μ | d) ∝ N(μ; 0, V₀) · (β₀ + Σ(d − μ)²/2)^−(α₀ + n/2)
fn comparison_oracle(d: &[f64]) -> f64 {
    let n = d.len() as f64;
    let m = d.iter().sum::<f64>() / n;
    let sd = (d.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt().max(1e-3);
    let (lo, hi) = (m - 40.0 * sd / n.sqrt(), m + 40.0 * sd / n.sqrt());
    let steps = 400_000;
    let h = (hi - lo) / steps as f64;
    let log_post = |mu: f64| {
        let ss: f64 = d.iter().map(|x| (x - mu).powi(2)).sum();
        -mu * mu / (2.0 * COMPARISON_PRIOR_MEAN_VAR)
            - (COMPARISON_PRIOR_SHAPE + n / 2.0) * (COMPARISON_PRIOR_SCALE + ss / 2.0).ln()
    };
    let peak = log_post(m);
    let (mut total, mut positive) = (0.0, 0.0);
    for i in 0..steps {
        let mu = lo + (i as f64 + 0.5) * h;
        let w = (log_post(mu) - peak).exp();
        total += w;
        if mu > 0.0 {
            positive += w;
        }
    }
    positive / total
}

#[test]
fn paired_comparison_matches_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(45);
    let noise = Normal::new(0.0, 1.0).unwrap();
    for shift in [0.05, 0.15, 0.3] {
        let b: Vec<f64> = (0..45).map(|_| noise.sample(&mut rng)).collect();
        let a: Vec<f64> = b.iter().map(|x| x + shift + 0.8 * noise.sample(&mut rng)).collect();
        let d: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        let got = paired_score_comparison(&a, &b, 3).unwrap();
        let oracle = comparison_oracle(&d);
        assert!((got - oracle).abs() < 0.01, "shift {shift}: {got} vs {oracle}");
        let swapped = paired_score_comparison(&b, &a, 4).unwrap();
        assert!((got + swapped - 1.0).abs() < 0.01);
    }
}

#[test]
fn paired_comparison_extremes() {
    let b: Vec<f64> = (0..45).map(|i| (i as f64 * 0.37).sin()).collect();
    assert_eq!(paired_score_comparison(&b, &b, 1).unwrap(), 0.5);
    let a: Vec<f64> = b.iter().map(|x| x + 10.0).collect();
    assert!(paired_score_comparison(&a, &b, 1).unwrap() > 0.999);
    assert!(paired_score_comparison(&a[..2], &b[..2], 1).is_err());
}

fn gl_integral(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    const X: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
    const W: [f64; 3] = [0.555_555_555_555_555_6, 0.888_888_888_888_889, 0.555_555_555_555_555_6];
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|i| {
            let c = a + (i as f64 + 0.5) * h;
            X.iter().zip(W).map(|(x, w)| w * f(c + 0.5 * h * x)).sum::<f64>() * 0.5 * h
        })
        .sum()
}

#[test]
fn equal_weights_pool_has_unit_mass() {
    let experts: Vec<SllParams> = [(1.0, 2.0, 4.0), (0.0, 3.0, 3.9), (2.5, 2.8, 3.6), (-4.0, -1.0, 2.0)]
        .iter()
        .map(|&(l, m, u)| fit_expert(&QuantileTriplet::new(l, m, u, 0.05).unwrap()).unwrap())
        .collect();
    // x = 1 + 3·tan(t) maps the polynomial tails onto a finite interval
    let half = std::f64::consts::FRAC_PI_2;
    let mass = gl_integral(
        |t| {
            let c = t.cos();
            equal_weights_pdf(&experts, 1.0 + 3.0 * t.tan()).unwrap() * 3.0 / (c * c)
        },
        -half,
        half,
        200_000,
    );
    assert!((mass - 1.0).abs() < 1e-6, "{mass}");
    let mixture = SllMixture::new(experts.clone()).unwrap();
    assert!((mixture.mass(1e-9).unwrap() - 1.0).abs() < 1e-6);
    assert_eq!(equal_weights_pdf(&experts[..1], 3.0).unwrap(), experts[0].pdf(3.0));
    let doubled = [experts[1], experts[1]];
    assert_eq!(equal_weights_pdf(&doubled, 3.2).unwrap(), experts[1].pdf(3.2));
}

/// sup_x |F_J(x) − x| evaluated on a dense grid including both sides of each jump.
fn brute_force_ks(values: &[f64]) -> f64 {
    let j = values.len() as f64;
    let ecdf =
        |x: f64, strict: bool| values.iter().filter(|&&v| if strict { v < x } else { v <= x }).count() as f64 / j;
    let mut grid: Vec<f64> = (0..=20_000).map(|k| k as f64 / 20_000.0).collect();
    grid.extend_from_slice(values);
    grid.iter()
        .flat_map(|&x| [(ecdf(x, false) - x).abs(), (ecdf(x, true) - x).abs()])
        .fold(0.0, f64::max)
}

#[test]
fn calibration_deviation_matches_direct_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for j in [1, 5, 11, 40] {
        let values: Vec<f64> = (0..j).map(|_| rng.random::<f64>()).collect();
        let curve = calibration_curve(&values).unwrap();
        assert!((curve.max_deviation - brute_force_ks(&values)).abs() < 1e-12, "J={j}");
    }
    let mut perfect: Vec<f64> = (1..=11).map(|i| i as f64 / 11.0).collect();
    perfect.reverse();
    let curve = calibration_curve(&perfect).unwrap();
    assert!(curve.points.iter().all(|(x, y)| (x - y).abs() < 1e-15));
    let worst = calibration_curve(&[0.99; 11]).unwrap();
    assert!((worst.max_deviation - 0.99).abs() < 1e-12);
}

#[test]
fn log_score_is_order_invariant() {
    let pairs: Vec<(f64, f64, f64)> = vec![(0.0, 10.0, 5.0), (0.0, 2.0, 1.0), (-1.0, 3.0, 0.0), (4.0, 5.0, 4.5)];
    let build = |ps: &[(f64, f64, f64)]| {
        let f = ScoredForecaster {
            name: "u".into(),
            densities: ps
                .iter()
                .map(|&(l, h, _)| Box::new(UniformDensity { low: l, high: h }) as Box<dyn Density>)
                .collect(),
        };
        avg_log_score(&f, &ps.iter().map(|p| p.2).collect::<Vec<_>>(), false)
            .unwrap()
            .value
    };
    let forward = build(&pairs);
    let mut reversed = pairs.clone();
    reversed.reverse();
    assert!((forward - build(&reversed)).abs() < 1e-15);
}

/// Studies of eight quantities scored by average log score. Experts in three
/// groups state 90% intervals about ±1.1 wide while their errors (group bias
/// plus individual noise) have sd ≈ 7, so intervals cover the truth roughly
/// 12% of the time.
#[test]
fn reconciled_beats_equal_weights_on_overconfident_panels() {
    let spec = ContinuousModelSpec {
        warmup: 500,
        kept: 1000,
        chains: 2,
        ..Default::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let (studies, quantities) = (25, 8);
    let error = Normal::new(0.0, 5.0).unwrap();
    let mut wins = 0;
    for s in 0..studies {
        let (mut reconciled_score, mut pooled_score) = (0.0, 0.0);
        for q in 0..quantities {
            let truth: f64 = rng.random_range(30.0..70.0);
            let mut panel = Vec::new();
            for g in 0..3 {
                let bias = error.sample(&mut rng);
                for i in 0..3 {
                    let m = truth + bias + error.sample(&mut rng);
                    panel.push(QuantileJudgement {
                        expert: format!("e{g}{i}"),
                        group: format!("g{g}"),
                        quantity: format!("q{q}"),
                        round: 1,
                        triplet: QuantileTriplet::new(m - 1.0, m, m + 1.2, 0.05).unwrap(),
                        plausible_low: Some(m - 15.0),
                        plausible_high: Some(m + 15.0),
                    });
                }
            }
            let prior = dm_range_from_panel(&panel, DEFAULT_PADDING).unwrap();
            let seed = (s * quantities + q) as u64;
            let run = run_continuous(&panel, &prior, &ContinuousModelSpec { seed, ..spec.clone() }).unwrap();
            let reconciled = SllMixture::new(reconciled_params(&run.chain, &prior, 0.05).unwrap()).unwrap();
            let experts: Vec<SllParams> = panel.iter().map(|j| fit_expert(&j.triplet).unwrap()).collect();
            reconciled_score += reconciled.pdf(truth).ln() / quantities as f64;
            pooled_score += equal_weights_pdf(&experts, truth).unwrap().ln() / quantities as f64;
        }
        if reconciled_score >= pooled_score {
            wins += 1;
        }
    }
    assert!(
        wins as f64 >= 0.6 * studies as f64,
        "reconciled won {wins} of {studies}"
    );
}
