mod common;

use common::{leptokurtic_model, normal_pdf, random_model, simpson};
use proptest::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};
use thorne::risk::max_drawdown_distribution;
use thorne::stochastic::SdeSpec;
use thorne::{expected_shortfall, risk_report, value_at_risk, Tail, ThorneModel};

#[test]
fn var_approaches_the_median_of_a_symmetric_model() {
    let model = leptokurtic_model();
    for tail in [Tail::Lower, Tail::Upper] {
        let v = value_at_risk(&model, 0.4999, tail).unwrap();
        assert!(v.abs() < 1e-2, "{v}");
    }
    assert!(value_at_risk(&model, 0.5, Tail::Lower).is_err());
}

#[test]
fn lower_var_is_monotone_in_the_level() {
    let model = leptokurtic_model();
    let levels = [0.001, 0.005, 0.01, 0.05, 0.1, 0.25, 0.45];
    let vars: Vec<f64> = levels.iter().map(|&a| value_at_risk(&model, a, Tail::Lower).unwrap()).collect();
    assert!(vars.windows(2).all(|w| w[0] <= w[1]), "{vars:?}");
}

#[test]
fn var_matches_a_bisection_oracle() {
    let model = ThorneModel::single(0.5, 0.2, 1.3).unwrap();
    let n = model.normalization_constant().unwrap();
    // Independent cdf: Simpson on a wide finite window.
    let cdf = |x: f64| simpson(|t| model.pdf_unnormalized(t) / n, -30.0, x, 20_000);
    let (mut lo, mut hi) = (-30.0, 0.2);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < 0.01 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let v = value_at_risk(&model, 0.01, Tail::Lower).unwrap();
    assert!((v - 0.5 * (lo + hi)).abs() < 1e-6, "{v} vs {}", 0.5 * (lo + hi));
}

#[test]
fn shortfall_lies_beyond_var() {
    let model = leptokurtic_model().shifted(0.7).unwrap();
    for a in [0.001, 0.01, 0.05, 0.2] {
        let lower = risk_report(&model, a, Tail::Lower).unwrap();
        let upper = risk_report(&model, a, Tail::Upper).unwrap();
        assert!(lower.expected_shortfall <= lower.var);
        assert!(upper.expected_shortfall >= upper.var);
    }
}

#[test]
fn shortfall_equals_its_tail_integral() {
    let model = leptokurtic_model();
    let n = model.normalization_constant().unwrap();
    let alpha = 0.01;
    let var = value_at_risk(&model, alpha, Tail::Lower).unwrap();
    let integral = simpson(|x| x * model.pdf_unnormalized(x) / n, -400.0, var, 400_000);
    let es = expected_shortfall(&model, alpha, Tail::Lower).unwrap();
    assert!((alpha * es - integral).abs() < 1e-8, "{} vs {integral}", alpha * es);
}

#[test]
fn leptokurtic_shortfall_exceeds_matched_gaussian() {
    let model = leptokurtic_model();
    let m = model.moments().unwrap();
    assert!(m.kurtosis.unwrap() > 3.0);
    let z = Normal::new(0.0, 1.0).unwrap().inverse_cdf(0.01);
    let gaussian_es = m.mean - m.std_dev * normal_pdf(z) / 0.01;
    let es = expected_shortfall(&model, 0.01, Tail::Lower).unwrap();
    assert!(es.abs() > gaussian_es.abs(), "{es} vs {gaussian_es}");
}

#[test]
fn two_sided_average_tends_to_the_mean() {
    let model = leptokurtic_model().shifted(-1.5).unwrap();
    let lower = expected_shortfall(&model, 0.49, Tail::Lower).unwrap();
    let upper = expected_shortfall(&model, 0.49, Tail::Upper).unwrap();
    assert!((0.5 * (lower + upper) + 1.5).abs() < 1e-6);
}

#[test]
fn max_drawdowns_are_nonnegative() {
    let spec = SdeSpec::from_model(&leptokurtic_model(), 1.0, 1e-4, 200).unwrap();
    let dd = max_drawdown_distribution(&spec, 64, 3).unwrap();
    assert_eq!(dd.len(), 64);
    // Paths that cross zero can lose more than their peak.
    assert!(dd.iter().all(|d| d.is_finite() && *d >= 0.0));
    assert!(dd.iter().any(|d| *d > 0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn translation_equivariance(seed in any::<u64>(), shift in -50.0f64..50.0, alpha in 0.005f64..0.2) {
        let model = random_model(seed, false);
        let moved = model.shifted(shift).unwrap();
        for tail in [Tail::Lower, Tail::Upper] {
            let a = risk_report(&model, alpha, tail).unwrap();
            let b = risk_report(&moved, alpha, tail).unwrap();
            let scale = 1.0 + a.var.abs() + shift.abs();
            prop_assert!((b.var - a.var - shift).abs() < 1e-8 * scale);
            prop_assert!((b.expected_shortfall - a.expected_shortfall - shift).abs() < 1e-8 * scale);
        }
    }

    #[test]
    fn positive_homogeneity(seed in any::<u64>(), factor in 0.1f64..10.0, alpha in 0.005f64..0.2) {
        let model = random_model(seed, false);
        let scaled = model.rescaled(factor).unwrap();
        for tail in [Tail::Lower, Tail::Upper] {
            let a = risk_report(&model, alpha, tail).unwrap();
            let b = risk_report(&scaled, alpha, tail).unwrap();
            prop_assert!((b.var - factor * a.var).abs() < 1e-6 * (1.0 + (factor * a.var).abs()));
            let es = factor * a.expected_shortfall;
            prop_assert!((b.expected_shortfall - es).abs() < 1e-6 * (1.0 + es.abs()));
        }
    }

    #[test]
    fn shortfall_is_further_from_the_mean_than_var(seed in any::<u64>(), alpha in 0.001f64..0.3) {
        let model = random_model(seed, false);
        let mean = model.moments().unwrap().mean;
        for tail in [Tail::Lower, Tail::Upper] {
            let r = risk_report(&model, alpha, tail).unwrap();
            prop_assert!((r.expected_shortfall - mean).abs() >= (r.var - mean).abs() - 1e-9 * (1.0 + mean.abs()));
        }
    }
}
