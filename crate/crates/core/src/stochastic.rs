//! Paths of `dX = Σ w_i (μ_i X dt + σ_i X dW)`, where every component shares
//! one Wiener process.
//!
//! [`simulate_euler`] steps the equation directly. [`simulate_closed_form`]
//! evaluates the per-component solution
//! `X(t) = X₀ Σ w_i exp((μ_i − σ_i²/2) t + σ_i W_t)`; the literal variant
//! instead evaluates `X₀ Σ w_i exp(μ_i − σ_i²/2)(dt + σ_i W_t)` for
//! comparison.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::ThorneModel;

/// One term of the equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdeComponent {
    pub weight: f64,
    pub drift: f64,
    pub diffusion: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdeSpec {
    pub components: Vec<SdeComponent>,
    pub x0: f64,
    pub dt: f64,
    pub steps: usize,
}

impl SdeSpec {
    pub fn new(components: Vec<SdeComponent>, x0: f64, dt: f64, steps: usize) -> Result<Self> {
        let spec = Self { components, x0, dt, steps };
        spec.validate()?;
        Ok(spec)
    }

    /// Reuses a model's `(w, μ, σ)` as `(weight, drift, diffusion)`, with the
    /// weights rescaled to sum to one.
    pub fn from_model(model: &ThorneModel, x0: f64, dt: f64, steps: usize) -> Result<Self> {
        let total: f64 = model.components().iter().map(|c| c.weight).sum();
        let comps = model
            .components()
            .iter()
            .map(|c| SdeComponent { weight: c.weight / total, drift: c.mean, diffusion: c.width })
            .collect();
        Self::new(comps, x0, dt, steps)
    }

    pub fn validate(&self) -> Result<()> {
        if self.components.is_empty() {
            return Err(Error::InvalidParameter("at least one component is required".into()));
        }
        if !(self.x0 > 0.0 && self.x0.is_finite()) {
            return Err(Error::InvalidParameter(format!("initial value must be positive, got {}", self.x0)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("time step must be positive, got {}", self.dt)));
        }
        for (i, c) in self.components.iter().enumerate() {
            if !(c.diffusion >= 0.0 && c.diffusion.is_finite() && c.weight.is_finite() && c.drift.is_finite()) {
                return Err(Error::InvalidComponent { index: i, reason: "diffusion must be finite and nonnegative".into() });
            }
        }
        Ok(())
    }

    pub fn weight_sum(&self) -> f64 {
        self.components.iter().map(|c| c.weight).sum()
    }

    /// Aggregate drift and diffusion `(Σ w_i μ_i, Σ w_i σ_i)`.
    fn aggregate(&self) -> (f64, f64) {
        self.components
            .iter()
            .fold((0.0, 0.0), |(m, s), c| (m + c.weight * c.drift, s + c.weight * c.diffusion))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Steps at which the value crossed from positive to nonpositive.
    pub zero_crossings: usize,
}

impl SamplePath {
    pub fn terminal(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Largest peak-to-trough fractional decline.
    pub fn max_drawdown(&self) -> f64 {
        let mut peak = f64::NEG_INFINITY;
        let mut worst = 0.0f64;
        for &v in &self.values {
            peak = peak.max(v);
            if peak > 0.0 {
                worst = worst.max((peak - v) / peak);
            }
        }
        worst
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("time,value\n");
        for (t, v) in self.times.iter().zip(&self.values) {
            let _ = writeln!(out, "{t:.14e},{v:.14e}");
        }
        out
    }
}

/// Standard normal increments for `steps` steps.
pub fn wiener_increments(steps: usize, dt: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sd = dt.sqrt();
    (0..steps)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            sd * z
        })
        .collect()
}

/// Euler–Maruyama with one common increment per step.
pub fn simulate_euler(spec: &SdeSpec, seed: u64) -> Result<SamplePath> {
    spec.validate()?;
    Ok(euler_with(spec, &wiener_increments(spec.steps, spec.dt, seed)))
}

/// Euler–Maruyama driven by the given Wiener increments.
pub fn euler_with(spec: &SdeSpec, dw: &[f64]) -> SamplePath {
    let (drift, diffusion) = spec.aggregate();
    let mut times = Vec::with_capacity(dw.len() + 1);
    let mut values = Vec::with_capacity(dw.len() + 1);
    let mut x = spec.x0;
    let mut crossings = 0;
    times.push(0.0);
    values.push(x);
    for (k, &w) in dw.iter().enumerate() {
        let next = x + drift * x * spec.dt + diffusion * x * w;
        if x > 0.0 && next <= 0.0 {
            crossings += 1;
        }
        x = next;
        times.push((k + 1) as f64 * spec.dt);
        values.push(x);
    }
    SamplePath { times, values, zero_crossings: crossings }
}

/// Closed-form path at `times` (increasing from 0). `corrected` selects the
/// per-component solution; otherwise the literal printed form is used with
/// `dt` taken from the spec.
pub fn simulate_closed_form(spec: &SdeSpec, times: &[f64], seed: u64, corrected: bool) -> Result<SamplePath> {
    spec.validate()?;
    if times.first() != Some(&0.0) || times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter("times must increase strictly from 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = vec![0.0; times.len()];
    for k in 1..times.len() {
        let z: f64 = StandardNormal.sample(&mut rng);
        w[k] = w[k - 1] + (times[k] - times[k - 1]).sqrt() * z;
    }
    closed_form_with(spec, times, &w, corrected)
}

/// Closed-form values for a given Wiener path `w` sampled at `times`.
pub fn closed_form_with(spec: &SdeSpec, times: &[f64], w: &[f64], corrected: bool) -> Result<SamplePath> {
    if corrected && (spec.weight_sum() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!("weights must sum to 1, got {}", spec.weight_sum())));
    }
    if w.len() != times.len() {
        return Err(Error::InvalidParameter("Wiener path and times differ in length".into()));
    }
    let values = times
        .iter()
        .zip(w)
        .map(|(&t, &wt)| {
            spec.x0
                * spec
                    .components
                    .iter()
                    .map(|c| {
                        let half = c.drift - 0.5 * c.diffusion * c.diffusion;
                        if corrected {
                            c.weight * (half * t + c.diffusion * wt).exp()
                        } else {
                            c.weight * half.exp() * (spec.dt + c.diffusion * wt)
                        }
                    })
                    .sum::<f64>()
        })
        .collect();
    Ok(SamplePath { times: times.to_vec(), values, zero_crossings: 0 })
}

/// `paths` independent Euler paths, path `i` seeded from `(seed, i)`.
pub fn simulate_ensemble(spec: &SdeSpec, paths: usize, seed: u64) -> Result<Vec<SamplePath>> {
    spec.validate()?;
    Ok((0..paths)
        .into_par_iter()
        .map(|i| euler_with(spec, &wiener_increments(spec.steps, spec.dt, path_seed(seed, i))))
        .collect())
}

/// Splitmix-style derivation of per-path seeds.
pub fn path_seed(seed: u64, index: usize) -> u64 {
    let mut z = seed.wrapping_add((index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `path_id,time,value` rows for an ensemble.
pub fn ensemble_csv(paths: &[SamplePath]) -> String {
    let mut out = String::from("path_id,time,value\n");
    for (i, p) in paths.iter().enumerate() {
        for (t, v) in p.times.iter().zip(&p.values) {
            let _ = writeln!(out, "{i},{t:.14e},{v:.14e}");
        }
    }
    out
}
