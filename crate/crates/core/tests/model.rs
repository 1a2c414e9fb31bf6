mod common;

use common::{leptokurtic_model, random_model, simpson, table_model};
use proptest::prelude::*;
use thorne::geometry::{analyze_component_geometry, generate_components, ComponentGeometry};
use thorne::io::{model_from_json, model_to_json};
use thorne::quadrature::{integrate, integrate_real_line, Tolerance};
use thorne::truncated::{thorne_constant, thorne_constant_on, TruncatedModel, PRINTED_THORNE_CONSTANT};
use thorne::validation::ks_distance;
use thorne::{ComponentGaussian, ModelOptions, ThorneModel};

const DAILY: [(f64, f64); 3] = [(0.98951, 8.6495), (4.9413, 63.184), (18.165, 253.60)];
const MINUTE: [(f64, f64); 3] = [(0.75463, 1.8916), (1.5102, 3.7854), (4.1436, 10.386)];

fn unit() -> ThorneModel {
    ThorneModel::single(1.0, 0.0, 1.0).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

#[test]
fn log_sum_vanishes_far_out() {
    let m = unit();
    assert!(m.log_sum(50.0) < 1e-300 && m.log_sum(-50.0) < 1e-300);
    assert!(m.log_sum(50.0) >= 0.0);
    assert_eq!(m.pdf_unnormalized(60.0), 0.0);
}

#[test]
fn log_sum_dominated_by_narrow_component() {
    let m = leptokurtic_model();
    let c = m.components()[0];
    assert!(m.log_sum(c.mean) >= c.value(c.mean));
}

#[test]
fn table_model_sum_at_zero() {
    // mpmath at 40 digits
    let s = table_model().log_sum(0.0);
    assert!(rel(s, 16.590_757_046_559_576) < 1e-14, "{s}");
}

#[test]
fn unit_pdf_at_peak() {
    // exp(1/sqrt(2 pi)) - 1 at 40 digits
    let v = unit().pdf_unnormalized(0.0);
    assert!(rel(v, 0.490_247_599_631_719_4) < 1e-15, "{v}");
}

#[test]
fn overflow_is_reported() {
    let r = ThorneModel::single(1e4, 0.0, 1.0);
    assert!(matches!(r, Err(thorne::Error::Overflow { .. })));
}

#[test]
fn invalid_components_rejected() {
    assert!(ComponentGaussian::new(0.0, 0.0, 1.0).is_err());
    assert!(ComponentGaussian::new(1.0, 0.0, -1.0).is_err());
    let decreasing = vec![ComponentGaussian::new(2.0, 0.0, 1.0).unwrap(), ComponentGaussian::new(1.0, 0.0, 2.0).unwrap()];
    assert!(ThorneModel::new(decreasing.clone()).is_err());
    assert!(ThorneModel::with_options(decreasing, ModelOptions { monotone_weights: false }).is_ok());
}

#[test]
fn unit_normalization_is_the_constant() {
    let n = unit().normalization_constant().unwrap();
    assert!(rel(n, thorne_constant()) < 1e-9, "{n}");
}

#[test]
fn table_model_normalization_golden() {
    // mpmath quadrature at 40 digits
    let golden = 28_513_241.426_228_950;
    let n = table_model().normalization_constant().unwrap();
    assert!(rel(n, golden) < 1e-9, "{n}");
    let m = table_model();
    let simpson_n = simpson(|x| m.pdf_unnormalized(x), -2000.0, 2000.0, 400_000);
    assert!(rel(simpson_n, golden) < 1e-9, "{simpson_n}");
}

#[test]
fn pdf_integrates_to_one_and_is_nonnegative() {
    let m = leptokurtic_model();
    let total = integrate_real_line(|x| m.pdf(x).unwrap(), 0.0, 1.0, &[], Tolerance::relative(1e-10)).unwrap().value;
    assert!((total - 1.0).abs() < 1e-6);
    let r = random_model(5, false);
    for k in 0..10_000 {
        let x = -500.0 + k as f64 * 0.1;
        assert!(r.pdf(x).unwrap() >= 0.0);
    }
}

#[test]
fn symmetric_model_is_even() {
    let m = leptokurtic_model().shifted(1.5).unwrap();
    for d in [0.1, 1.0, 7.3, 40.0] {
        assert!(rel(m.pdf_unnormalized(1.5 + d), m.pdf_unnormalized(1.5 - d)) < 1e-14);
    }
    assert!((m.cdf(1.5).unwrap() - 0.5).abs() < 1e-8);
    assert!((m.quantile(0.5).unwrap() - 1.5).abs() < 1e-6);
}

#[test]
fn cdf_limits_and_intervals() {
    let m = random_model(11, false);
    let wide = m.components()[m.len() - 1].width;
    assert!(m.cdf(-1e6 * wide).unwrap() < 1e-9);
    assert!(m.cdf(1e6 * wide).unwrap() > 1.0 - 1e-9);
    let n = m.normalization_constant().unwrap();
    for (a, b) in [(-3.0, -1.0), (-0.5, 0.7), (2.0, 30.0)] {
        let direct = integrate(|x| m.pdf_unnormalized(x) / n, a, b, Tolerance::relative(1e-12)).unwrap().value;
        let diff = m.cdf(b).unwrap() - m.cdf(a).unwrap();
        assert!((diff - direct).abs() < 1e-8, "{a} {b}: {diff} vs {direct}");
    }
}

#[test]
fn quantile_rejects_bad_probabilities() {
    for p in [0.0, 1.0, -0.2, f64::NAN] {
        assert!(unit().quantile(p).is_err());
    }
}

#[test]
fn leptokurtic_extreme_quantile_beyond_gaussian() {
    let m = leptokurtic_model();
    let mo = m.moments().unwrap();
    let z = (mo.mean - m.quantile(1e-4).unwrap()) / mo.std_dev;
    assert!(z > 3.719, "{z}");
}

#[test]
fn moments_of_single_component() {
    let m = ThorneModel::single(1.0, 2.5, 1.0).unwrap();
    let mo = m.moments().unwrap();
    assert!((mo.mean - 2.5).abs() < 1e-8);
    assert!(mo.skew.abs() < 1e-8);
    // mpmath: variance 0.92934255921758548, kurtosis 3.1112957854536838
    assert!(rel(mo.std_dev * mo.std_dev, 0.929_342_559_217_585_5) < 1e-8);
    let k = mo.kurtosis.unwrap();
    assert!(k > 3.0 && (k - 3.111_295_785_453_684).abs() < 1e-6, "{k}");
}

#[test]
fn asymmetric_model_has_skew() {
    let m = ThorneModel::new(vec![
        ComponentGaussian::new(1.0, -1.0, 0.5).unwrap(),
        ComponentGaussian::new(2.0, 1.0, 2.0).unwrap(),
    ])
    .unwrap();
    assert!(m.moments().unwrap().skew.abs() > 1e-3);
}

#[test]
fn constant_window_stable() {
    let a = thorne_constant_on(40.0).unwrap();
    let b = thorne_constant_on(80.0).unwrap();
    assert!(rel(a, b) < 1e-12);
    assert!(rel(a, thorne_constant()) < 1e-12);
}

/// `Σ_k (2π)^{(1−k)/2} k^{−1/2} / k!`.
fn constant_series() -> f64 {
    let mut sum = 0.0;
    let mut fact = 1.0;
    for k in 1..60 {
        fact *= k as f64;
        let term = (2.0 * std::f64::consts::PI).powf((1.0 - k as f64) / 2.0) / (k as f64).sqrt() / fact;
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
    }
    sum
}

#[test]
fn constant_matches_series() {
    let series = constant_series();
    assert!((thorne_constant() - series).abs() < 1e-10, "{} vs {series}", thorne_constant());
    let gap = PRINTED_THORNE_CONSTANT / thorne_constant();
    println!("computed {:.15} printed {PRINTED_THORNE_CONSTANT} ratio {gap:.6}", thorne_constant());
    assert!(gap > 3.0, "the printed constant is not reproduced by the defining integral");
}

#[test]
fn truncated_law() {
    let t = TruncatedModel::new(1.0, 2.0).unwrap();
    let total = integrate(|x| t.pdf(x), f64::NEG_INFINITY, f64::INFINITY, Tolerance::relative(1e-12)).unwrap().value;
    assert!((total - 1.0).abs() < 1e-8);
    assert_eq!(t.pdf(1.0 + 0.7), t.pdf(1.0 - 0.7));
    assert!(t.pdf(1.0) > t.pdf(1.01));
    let base = TruncatedModel::new(0.0, 1.0).unwrap();
    assert!(rel(t.pdf(1.0), base.pdf(0.0) / 2.0) < 1e-15);
}

#[test]
fn generated_components_lie_on_the_line() {
    let g = ComponentGeometry::from_seed(DAILY[0], DAILY[1], 3.488).unwrap();
    let comps = generate_components(&g, 6, 0.0, None).unwrap();
    for c in &comps {
        assert!((c.weight - (g.slope * c.width + g.intercept)).abs() < 1e-12 * c.weight);
    }
    let seg: Vec<f64> = comps.windows(2).map(|w| (w[1].width - w[0].width).hypot(w[1].weight - w[0].weight)).collect();
    for s in seg.windows(2) {
        assert!((s[1] / s[0] - 3.488).abs() < 1e-12);
    }
}

#[test]
fn daily_third_point_from_seed_geometry() {
    // The line through the first two points alone misses the third width by
    // about 3%; the fitted line of the triple with the first width and first
    // segment length reproduces both coordinates.
    let two_point = ComponentGeometry::from_seed(DAILY[0], DAILY[1], 3.488).unwrap();
    let third = generate_components(&two_point, 3, 0.0, None).unwrap()[2];
    assert!(rel(third.weight, DAILY[2].1) < 0.02);
    assert!(rel(third.width, DAILY[2].0) > 0.02);

    let mut g = analyze_component_geometry(&DAILY).unwrap().geometry;
    g.segment_ratio = 3.488;
    let third = generate_components(&g, 3, 0.0, None).unwrap()[2];
    assert!(rel(third.width, DAILY[2].0) < 0.02, "{}", third.width);
    assert!(rel(third.weight, DAILY[2].1) < 0.02, "{}", third.weight);
}

#[test]
fn geometry_rejects_nonpositive_output() {
    let g = ComponentGeometry::from_seed((1.0, 1.0), (2.0, 0.5), 2.0).unwrap();
    assert!(matches!(generate_components(&g, 4, 0.0, None), Err(thorne::Error::InvalidComponent { .. })));
    assert!(analyze_component_geometry(&[(1.0, 1.0), (1.0, 1.0), (1.0, 1.0)]).is_err());
}

#[test]
fn published_triples() {
    let pts = [(1.0, 2.0), (2.0, 4.5), (5.0, 12.0)];
    assert!((analyze_component_geometry(&pts).unwrap().r_squared - 1.0).abs() < 1e-12);
    let daily = analyze_component_geometry(&DAILY).unwrap().segment_ratios[0];
    // direct Euclidean lengths
    let len = |a: (f64, f64), b: (f64, f64)| (b.0 - a.0).hypot(b.1 - a.1);
    let oracle = len(DAILY[1], DAILY[2]) / len(DAILY[0], DAILY[1]);
    assert!(rel(daily, oracle) < 1e-14);
    assert!(rel(daily, 3.488) < 5e-3);
    let minute = analyze_component_geometry(&MINUTE).unwrap().segment_ratios[0];
    assert!(rel(minute, daily) < 2e-3);
    // the minute-interval ratio comes out smaller than the daily one
    assert!(minute < daily);
}

#[test]
fn sampling_is_deterministic_and_faithful() {
    let m = leptokurtic_model();
    assert_eq!(m.sample(100, 9).unwrap(), m.sample(100, 9).unwrap());
    assert_ne!(m.sample(100, 9).unwrap(), m.sample(100, 10).unwrap());
    let draws = m.sample(100_000, 2).unwrap();
    let mo = m.moments().unwrap();
    let mean = draws.iter().sum::<f64>() / draws.len() as f64;
    assert!((mean - mo.mean).abs() < 4.0 * mo.std_dev / (draws.len() as f64).sqrt());
    let d = ks_distance(&draws, |x| m.cdf(x).unwrap());
    assert!(d < 0.01, "{d}");
}

#[test]
fn json_round_trip() {
    let m = table_model();
    m.normalization_constant().unwrap();
    let back = model_from_json(&model_to_json(&m).unwrap()).unwrap();
    assert_eq!(back, m);
    assert_eq!(back.cached_normalization(), m.cached_normalization());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn log_identity(seed in any::<u64>(), x in -300.0f64..300.0) {
        let m = random_model(seed, false);
        prop_assert!((m.pdf_unnormalized(x).ln_1p() - m.log_sum(x)).abs() < 1e-12);
    }

    #[test]
    fn tail_reverts_to_the_sum(seed in any::<u64>(), x in -2000.0f64..2000.0) {
        let m = random_model(seed, false);
        let s = m.log_sum(x);
        if s > 0.0 && s < 1e-3 {
            prop_assert!((m.pdf_unnormalized(x) / s - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn normalized_density_has_unit_mass(seed in any::<u64>()) {
        let m = random_model(seed, false);
        let n = m.normalization_constant().unwrap();
        let mean = m.components()[0].mean;
        let total = integrate_real_line(|x| m.pdf_unnormalized(x) / n, mean, m.components()[0].width, &[], Tolerance::relative(1e-10))
            .unwrap()
            .value;
        prop_assert!((total - 1.0).abs() < 1e-6, "{}", total);
    }

    #[test]
    fn normalization_translation_invariant(seed in any::<u64>(), c in -100.0f64..100.0) {
        let m = random_model(seed, false);
        let a = m.normalization_constant().unwrap();
        let b = m.shifted(c).unwrap().normalization_constant().unwrap();
        prop_assert!((a / b - 1.0).abs() < 1e-9);
    }

    #[test]
    fn cdf_monotone_and_invertible(seed in any::<u64>()) {
        let m = random_model(seed, false);
        let mut prev = 0.0;
        for k in 0..200 {
            let x = -60.0 + 0.6 * k as f64;
            let c = m.cdf(x).unwrap();
            prop_assert!(c >= prev);
            prev = c;
        }
        for p in [1e-6, 0.01, 0.3, 0.5, 0.77, 0.999] {
            let x = m.quantile(p).unwrap();
            prop_assert!((m.cdf(x).unwrap() - p).abs() < 1e-9);
            prop_assert!((m.quantile(m.cdf(x).unwrap()).unwrap() - x).abs() < 1e-6 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn symmetric_quantiles_and_skew(seed in any::<u64>(), p in 0.001f64..0.499) {
        let m = random_model(seed, true);
        let mu = m.components()[0].mean;
        let mo = m.moments().unwrap();
        let q = m.quantile(p).unwrap() + m.quantile(1.0 - p).unwrap();
        prop_assert!((q - 2.0 * mu).abs() < 1e-6 * (1.0 + mo.std_dev));
        prop_assert!(mo.skew.abs() < 1e-8);
    }

    #[test]
    fn geometry_round_trip(a in 1.0f64..20.0, b in -1.0f64..5.0, s1 in 0.2f64..2.0, rho in 1.5f64..5.0, n in 3usize..7) {
        let first = 0.5 * s1 * (1.0 + a * a).sqrt();
        let g = ComponentGeometry { slope: a, intercept: b, base_width: s1, first_segment: first, segment_ratio: rho };
        if let Ok(comps) = generate_components(&g, n, 0.0, None) {
            let pts: Vec<(f64, f64)> = comps.iter().map(|c| (c.width, c.weight)).collect();
            let r = analyze_component_geometry(&pts).unwrap();
            prop_assert!((r.geometry.slope - a).abs() < 1e-9 * a);
            prop_assert!((r.geometry.intercept - b).abs() < 1e-9 * (1.0 + a));
            for q in &r.segment_ratios {
                prop_assert!((q - rho).abs() < 1e-9 * rho);
            }
        }
    }
}
