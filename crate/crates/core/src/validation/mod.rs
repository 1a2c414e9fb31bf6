//! Synthetic validation law, its rejection sampler, density comparison
//! statistics and the small-sample benchmark.
//!
//! The validation law is `f(x) = c·(1 + x²)^(−7/4)` with
//! `c = Γ(7/4)/(√π·Γ(5/4))`: a Student-t with 5/2 degrees of freedom rescaled
//! by `1/√(5/2)`, so it has variance 2, a Gaussian-like center and a
//! `|x|^(−7/2)` tail.

mod benchmark;
mod report;

use std::f64::consts::PI;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF, StudentsT};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::quadrature::{integrate_real_line, Tolerance};

pub use benchmark::{amise_benchmark, benchmark_csv, BenchmarkConfig, BenchmarkRow, Estimator};
pub use report::{
    run_validation, tail_slope, Comparison, Status, ValidationReport, DAILY_TRIPLE, FULL_SCALE_SAMPLES, MINUTE_TRIPLE,
    PRINTED_REJECTION_THRESHOLD, PUBLISHED_COMPONENTS,
};

const NU: f64 = 2.5;

/// `Γ(7/4)/(√π·Γ(5/4))`.
pub fn synthetic_constant() -> f64 {
    static C: OnceLock<f64> = OnceLock::new();
    *C.get_or_init(|| (ln_gamma(1.75) - ln_gamma(1.25)).exp() / PI.sqrt())
}

pub fn synthetic_pdf(x: f64) -> f64 {
    synthetic_constant() * (1.0 + x * x).powf(-1.75)
}

pub fn synthetic_cdf(x: f64) -> f64 {
    let t = StudentsT::new(0.0, 1.0, NU).expect("valid Student-t");
    t.cdf(x * NU.sqrt())
}

pub fn synthetic_quantile(p: f64) -> f64 {
    let t = StudentsT::new(0.0, 1.0, NU).expect("valid Student-t");
    t.inverse_cdf(p) / NU.sqrt()
}

/// Cauchy envelope density with the given location and scale.
fn cauchy_pdf(x: f64, location: f64, scale: f64) -> f64 {
    let z = (x - location) / scale;
    1.0 / (PI * scale * (1.0 + z * z))
}

/// Rejection sampler for the synthetic law under a Cauchy(0, 1/2) envelope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RejectionSampler {
    pub envelope_location: f64,
    pub envelope_scale: f64,
    pub threshold: f64,
}

/// Draws with bookkeeping of the proposals consumed.
#[derive(Debug, Clone, PartialEq)]
pub struct RejectionRun {
    pub draws: Vec<f64>,
    pub proposals: u64,
}

impl RejectionRun {
    pub fn acceptance_rate(&self) -> f64 {
        self.draws.len() as f64 / self.proposals as f64
    }
}

impl Default for RejectionSampler {
    fn default() -> Self {
        Self::new()
    }
}

impl RejectionSampler {
    /// Threshold from the analytic maximizer of `f/g`, at `x² = 3/4`,
    /// inflated by `1e-9`.
    pub fn new() -> Self {
        let (location, scale) = (0.0, 0.5);
        let x = 0.75f64.sqrt();
        let ratio = synthetic_pdf(x) / cauchy_pdf(x, location, scale);
        Self { envelope_location: location, envelope_scale: scale, threshold: ratio * (1.0 + 1e-9) }
    }

    pub fn envelope(&self, x: f64) -> f64 {
        cauchy_pdf(x, self.envelope_location, self.envelope_scale)
    }

    /// Largest `f/g` on a grid of `points` abscissae over `[-span, span]`.
    pub fn grid_max_ratio(&self, span: f64, points: usize) -> f64 {
        (0..points)
            .map(|k| -span + 2.0 * span * k as f64 / (points - 1) as f64)
            .map(|x| synthetic_pdf(x) / self.envelope(x))
            .fold(0.0, f64::max)
    }

    /// Accepts `count` draws; a proposal where `f > M·g` aborts the run.
    pub fn run(&self, count: usize, seed: u64) -> Result<RejectionRun> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draws = Vec::with_capacity(count);
        let mut proposals = 0u64;
        while draws.len() < count {
            let u: f64 = rng.random();
            let v: f64 = rng.random();
            let x = self.envelope_location + self.envelope_scale * (PI * (u - 0.5)).tan();
            proposals += 1;
            if !x.is_finite() {
                continue;
            }
            let f = synthetic_pdf(x);
            let bound = self.threshold * self.envelope(x);
            if f > bound {
                return Err(Error::EnvelopeViolation { x, ratio: f / self.envelope(x), threshold: self.threshold });
            }
            if v * bound <= f {
                draws.push(x);
            }
        }
        Ok(RejectionRun { draws, proposals })
    }

    /// Runs exactly `proposals` proposals and counts acceptances.
    pub fn acceptance_count(&self, proposals: u64, seed: u64) -> Result<u64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut accepted = 0;
        for _ in 0..proposals {
            let u: f64 = rng.random();
            let v: f64 = rng.random();
            let x = self.envelope_location + self.envelope_scale * (PI * (u - 0.5)).tan();
            let f = synthetic_pdf(x);
            let bound = self.threshold * self.envelope(x);
            if f > bound {
                return Err(Error::EnvelopeViolation { x, ratio: f / self.envelope(x), threshold: self.threshold });
            }
            if v * bound <= f {
                accepted += 1;
            }
        }
        Ok(accepted)
    }
}

/// `count` draws from the synthetic law; deterministic in `seed`.
pub fn synthetic_sample(count: usize, seed: u64) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::InvalidParameter("sample count must be positive".into()));
    }
    Ok(RejectionSampler::new().run(count, seed)?.draws)
}

/// Integrated squared error `∫(f − g)²` over the real line. `center` and
/// `scale` seed the integration window; `breaks` marks discontinuities.
pub fn ise_with<F, G>(f: F, g: G, center: f64, scale: f64, breaks: &[f64]) -> Result<f64>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    let d = |x: f64| (f(x) - g(x)).powi(2);
    Ok(integrate_real_line(d, center, scale, breaks, Tolerance::relative(1e-8).with_abs(1e-16))?.value)
}

/// Integrated squared error with a unit-scale window around zero.
pub fn ise<F, G>(f: F, g: G) -> Result<f64>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    ise_with(f, g, 0.0, 1.0, &[])
}

/// Chi-square comparison of a candidate density `f` against a reference `g`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// `(level, rejected)` for 10%, 5% and 1%.
    pub verdicts: Vec<(f64, bool)>,
    pub points: Vec<f64>,
    /// Multiplier on `Σ (f − g)²/g`.
    pub scale_factor: f64,
}

/// Chi-square settings; see [`chi_square_gof`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquareConfig {
    pub points: usize,
    /// Sample size the candidate was estimated from.
    pub sample_size: f64,
    /// Bin width at which counts are compared; the statistic is that of a
    /// histogram with this width and `sample_size` draws.
    pub bin_width: f64,
    /// Reference densities below this floor bound the comparison region.
    pub floor: f64,
}

impl ChiSquareConfig {
    pub fn new(sample_size: f64, bin_width: f64) -> Self {
        Self { points: 21, sample_size, bin_width, floor: 1e-9 }
    }
}

/// Evaluates both densities at equally spaced abscissae across the region
/// where `g > floor` (searched outward from `center`) and forms
/// `N·Δ·Σ (f − g)²/g`: the Pearson statistic of `N` draws binned at width
/// `Δ`, so each term has unit variance under sampling noise.
pub fn chi_square_gof<F, G>(f: F, g: G, center: f64, cfg: &ChiSquareConfig) -> Result<ChiSquareResult>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    if cfg.points < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 points, got {}", cfg.points)));
    }
    if !(cfg.sample_size > 0.0 && cfg.bin_width > 0.0) {
        return Err(Error::InvalidParameter("sample size and bin width must be positive".into()));
    }
    if !(g(center) > cfg.floor) {
        return Err(Error::DegenerateData("reference density is below the floor at the center".into()));
    }
    let edge = |dir: f64| -> f64 {
        let mut inside = 0.0;
        let mut step = cfg.bin_width.max(f64::MIN_POSITIVE);
        while g(center + dir * step) > cfg.floor && step < 1e12 {
            inside = step;
            step *= 2.0;
        }
        let mut outside = step;
        for _ in 0..100 {
            let mid = 0.5 * (inside + outside);
            if g(center + dir * mid) > cfg.floor {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        center + dir * inside
    };
    let (lo, hi) = (edge(-1.0), edge(1.0));
    let points: Vec<f64> = (0..cfg.points).map(|k| lo + (hi - lo) * k as f64 / (cfg.points - 1) as f64).collect();
    let scale_factor = cfg.sample_size * cfg.bin_width;
    let raw: f64 = points
        .iter()
        .map(|&x| {
            let gx = g(x);
            if gx > 0.0 {
                (f(x) - gx).powi(2) / gx
            } else {
                0.0
            }
        })
        .sum();
    let statistic = scale_factor * raw;
    let dof = cfg.points - 1;
    let chi = ChiSquared::new(dof as f64).expect("positive dof");
    let p_value = 1.0 - chi.cdf(statistic);
    let verdicts = [0.10, 0.05, 0.01].iter().map(|&a| (a, p_value < a)).collect();
    Ok(ChiSquareResult { statistic, dof, p_value, verdicts, points, scale_factor })
}

/// Upper-tail chi-square critical value.
pub fn chi_square_critical(level: f64, dof: usize) -> f64 {
    ChiSquared::new(dof as f64).expect("positive dof").inverse_cdf(1.0 - level)
}

/// Kolmogorov–Smirnov distance between a sample and a continuous CDF.
pub fn ks_distance<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> f64 {
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = cdf(x);
            (c - i as f64 / n).abs().max((c - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

/// Two-sample Kolmogorov–Smirnov distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
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
