#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thorne::{ComponentGaussian, ThorneModel};

/// Published six-component fit with fixed center 0: (weight, width).
pub const TABLE_MODEL: [(f64, f64); 6] = [
    (2.41381, 0.767862),
    (12.2881, 1.80448),
    (41.7928, 4.80233),
    (96.2524, 12.35919),
    (203.2462, 28.50726),
    (517.6616, 64.59965),
];

pub fn table_model() -> ThorneModel {
    ThorneModel::new(TABLE_MODEL.iter().map(|&(w, s)| ComponentGaussian::new(w, 0.0, s).unwrap()).collect()).unwrap()
}

/// Random model with 1 to 8 components, widths spanning three decades,
/// increasing weights and means in [-2, 2] (or a common mean).
pub fn random_model(seed: u64, symmetric: bool) -> ThorneModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=8);
    let mut widths: Vec<f64> = (0..n).map(|_| 10f64.powf(rng.random_range(-1.0..2.0))).collect();
    let mut weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..20.0)).collect();
    widths.sort_by(f64::total_cmp);
    weights.sort_by(f64::total_cmp);
    let common = rng.random_range(-2.0..2.0);
    let comps = widths
        .iter()
        .zip(&weights)
        .map(|(&s, &w)| {
            let m = if symmetric { common } else { rng.random_range(-2.0..2.0) };
            ComponentGaussian::new(w, m, s).unwrap()
        })
        .collect();
    ThorneModel::new(comps).unwrap()
}

/// Three-component model with markedly heavier tails than its central part.
pub fn leptokurtic_model() -> ThorneModel {
    ThorneModel::new(vec![
        ComponentGaussian::new(1.0, 0.0, 0.5).unwrap(),
        ComponentGaussian::new(3.0, 0.0, 2.0).unwrap(),
        ComponentGaussian::new(6.0, 0.0, 8.0).unwrap(),
    ])
    .unwrap()
}

/// Composite Simpson rule on `[a, b]` with `n` (even) intervals.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        s += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// Standard normal CDF via the complementary error function.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-z / std::f64::consts::SQRT_2)
}

pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}
