//! The exponentiated Gaussian-sum density and its evaluations.
//!
//! The log-density sum `S(x) = Σ w_i φ((x − μ_i)/σ_i)/σ_i` is a positive
//! weighted sum of Gaussians; the unnormalized density is `exp(S) − 1` and
//! the model density divides that by `N = ∫ (exp(S) − 1) dx`.
//!
//! Normalization and the cumulative profile used by [`ThorneModel::cdf`] and
//! [`ThorneModel::quantile`] are computed on first use and cached; the cache
//! is write-once, so concurrent readers all observe the same value.

use std::sync::{Arc, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quadrature::{self, Integral, Mapping, Tolerance, Window};

pub(crate) const SQRT_2PI: f64 = 2.506_628_274_631_000_7;

/// Largest admissible peak of the log-density sum; `exp` of anything above
/// this is within a factor of ~e^9 of overflow.
pub const MAX_LOG_SUM: f64 = 700.0;

/// Relative accuracy of the normalization integral.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// One `(weight, mean, width)` term of the log-density sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComponentGaussian {
    pub weight: f64,
    pub mean: f64,
    pub width: f64,
}

impl ComponentGaussian {
    pub fn new(weight: f64, mean: f64, width: f64) -> Result<Self> {
        let c = Self { weight, mean, width };
        c.validate(0)?;
        Ok(c)
    }

    fn validate(&self, index: usize) -> Result<()> {
        let bad = |reason: &str| Err(Error::InvalidComponent { index, reason: reason.into() });
        if !(self.weight.is_finite() && self.weight > 0.0) {
            return bad(&format!("weight must be positive and finite, got {}", self.weight));
        }
        if !(self.width.is_finite() && self.width > 0.0) {
            return bad(&format!("width must be positive and finite, got {}", self.width));
        }
        if !self.mean.is_finite() {
            return bad(&format!("mean must be finite, got {}", self.mean));
        }
        Ok(())
    }

    /// This component's summand of the log-density sum at `x`.
    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        let z = (x - self.mean) / self.width;
        self.weight / (self.width * SQRT_2PI) * (-0.5 * z * z).exp()
    }

    /// Height of the summand at its own mean.
    pub fn peak(&self) -> f64 {
        self.weight / (self.width * SQRT_2PI)
    }
}

/// Construction options for [`ThorneModel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelOptions {
    /// Require weights to increase strictly with width.
    pub monotone_weights: bool,
}

impl Default for ModelOptions {
    fn default() -> Self {
        Self { monotone_weights: true }
    }
}

/// Cumulative mass profile built from the leaves of the normalization
/// integral.
#[derive(Debug)]
struct Profile {
    window: Window,
    knots: Vec<f64>,
    /// Unnormalized mass below `knots[k]`, left tail included.
    cumulative: Vec<f64>,
    total: f64,
}

/// The fitted distribution: components ordered by strictly increasing width.
#[derive(Debug, Clone)]
pub struct ThorneModel {
    components: Vec<ComponentGaussian>,
    options: ModelOptions,
    normalization: OnceLock<f64>,
    profile: OnceLock<Arc<Profile>>,
}

impl PartialEq for ThorneModel {
    fn eq(&self, other: &Self) -> bool {
        self.components == other.components
    }
}

/// First four moment summaries. `kurtosis` is `None` when the fourth-moment
/// integral fails the window-doubling convergence test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSummary {
    pub mean: f64,
    pub std_dev: f64,
    pub skew: f64,
    pub kurtosis: Option<f64>,
}

impl ThorneModel {
    /// Builds a model with the default options (monotone weights enforced).
    pub fn new(components: Vec<ComponentGaussian>) -> Result<Self> {
        Self::with_options(components, ModelOptions::default())
    }

    /// Builds a model; components are sorted by width before validation.
    pub fn with_options(mut components: Vec<ComponentGaussian>, options: ModelOptions) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidParameter("a model needs at least one component".into()));
        }
        for (i, c) in components.iter().enumerate() {
            c.validate(i)?;
        }
        components.sort_by(|a, b| a.width.total_cmp(&b.width));
        for i in 1..components.len() {
            if components[i].width <= components[i - 1].width {
                return Err(Error::InvalidComponent {
                    index: i,
                    reason: format!("widths must be strictly increasing, repeated {}", components[i].width),
                });
            }
            if options.monotone_weights && components[i].weight <= components[i - 1].weight {
                return Err(Error::InvalidComponent {
                    index: i,
                    reason: format!(
                        "weights must increase with width ({} after {})",
                        components[i].weight,
                        components[i - 1].weight
                    ),
                });
            }
        }
        let peak: f64 = components.iter().map(ComponentGaussian::peak).sum();
        if peak > MAX_LOG_SUM {
            return Err(Error::Overflow { peak });
        }
        Ok(Self { components, options, normalization: OnceLock::new(), profile: OnceLock::new() })
    }

    /// Single-component convenience constructor.
    pub fn single(weight: f64, mean: f64, width: f64) -> Result<Self> {
        Self::new(vec![ComponentGaussian::new(weight, mean, width)?])
    }

    pub fn components(&self) -> &[ComponentGaussian] {
        &self.components
    }

    pub fn options(&self) -> ModelOptions {
        self.options
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Whether every component shares one mean.
    pub fn is_symmetric(&self) -> bool {
        let m = self.components[0].mean;
        self.components.iter().all(|c| c.mean == m)
    }

    /// Normalization value if it has already been computed or loaded.
    pub fn cached_normalization(&self) -> Option<f64> {
        self.normalization.get().copied()
    }

    /// Seeds the normalization cache with a previously computed value.
    pub(crate) fn preset_normalization(&self, n: f64) -> Result<()> {
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::InvalidParameter(format!("normalization must be positive, got {n}")));
        }
        let _ = self.normalization.set(n);
        Ok(())
    }

    /// Log-density sum `S(x)`.
    #[inline]
    pub fn log_sum(&self, x: f64) -> f64 {
        self.components.iter().map(|c| c.value(x)).sum()
    }

    /// `exp(S(x)) − 1`, never negative.
    #[inline]
    pub fn pdf_unnormalized(&self, x: f64) -> f64 {
        self.log_sum(x).exp_m1()
    }

    /// `(S, S', S'')` at `x`.
    pub fn log_sum_derivatives(&self, x: f64) -> (f64, f64, f64) {
        self.components.iter().fold((0.0, 0.0, 0.0), |(s, d1, d2), c| {
            let v = c.value(x);
            let z = (x - c.mean) / c.width;
            let inv = 1.0 / c.width;
            (s + v, d1 - v * z * inv, d2 + v * (z * z - 1.0) * inv * inv)
        })
    }

    /// `N = ∫ (exp(S) − 1) dx` over the real line.
    pub fn normalization_constant(&self) -> Result<f64> {
        if let Some(&n) = self.normalization.get() {
            return Ok(n);
        }
        let total = self.profile()?.total;
        let _ = self.normalization.set(total);
        Ok(*self.normalization.get().expect("normalization just set"))
    }

    /// Normalized density.
    pub fn pdf(&self, x: f64) -> Result<f64> {
        Ok(self.pdf_unnormalized(x) / self.normalization_constant()?)
    }

    /// Adaptive integration window for this model's integrands.
    pub fn window(&self) -> Window {
        let narrow = self.components[0].width;
        let center = self.peak_location();
        let mut extra = Vec::with_capacity(self.components.len() * 9);
        for c in &self.components {
            for k in [0.0, 1.0, 2.0, 4.0, 8.0] {
                extra.push(c.mean - k * c.width);
                extra.push(c.mean + k * c.width);
            }
        }
        Window::grow(&|x| self.pdf_unnormalized(x), center, narrow, &extra)
    }

    fn peak_location(&self) -> f64 {
        let total: f64 = self.components.iter().map(ComponentGaussian::peak).sum();
        self.components.iter().map(|c| c.mean * c.peak()).sum::<f64>() / total
    }

    fn profile(&self) -> Result<&Profile> {
        if let Some(p) = self.profile.get() {
            return Ok(p);
        }
        let window = self.window();
        let f = |x: f64| self.pdf_unnormalized(x);
        let integral = window.integrate(f, Tolerance::relative(NORMALIZATION_TOL))?;
        let built = Arc::new(Self::profile_from(window, integral)?);
        let _ = self.profile.set(built);
        Ok(self.profile.get().expect("profile just set"))
    }

    fn profile_from(window: Window, integral: Integral) -> Result<Profile> {
        let mut lower_tail = 0.0;
        let mut upper_tail = 0.0;
        let mut knots = Vec::new();
        let mut cumulative = Vec::new();
        for seg in &integral.segments {
            match seg.mapping {
                Mapping::Lower { .. } => lower_tail += seg.value,
                Mapping::Upper { .. } => upper_tail += seg.value,
                Mapping::Identity => {
                    if knots.is_empty() {
                        knots.push(seg.a);
                        cumulative.push(lower_tail);
                    }
                    let last = *cumulative.last().expect("nonempty");
                    knots.push(seg.b);
                    cumulative.push(last + seg.value);
                }
            }
        }
        let total = cumulative.last().copied().unwrap_or(lower_tail) + upper_tail;
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::Quadrature { estimate: total, error: integral.error });
        }
        Ok(Profile { window, knots, cumulative, total })
    }

    /// Unnormalized mass below `x`.
    fn mass_below(&self, x: f64) -> Result<f64> {
        let p = self.profile()?;
        let f = |t: f64| self.pdf_unnormalized(t);
        let tol = Tolerance::relative(1e-13).with_abs(1e-14 * p.total);
        if x.is_nan() {
            return Err(Error::InvalidParameter("cdf evaluated at NaN".into()));
        }
        if x <= p.knots[0] {
            return Ok(quadrature::integrate(f, f64::NEG_INFINITY, x, tol)?.value);
        }
        let last = p.knots.len() - 1;
        if x >= p.knots[last] {
            let above = quadrature::integrate(f, x, f64::INFINITY, tol)?.value;
            return Ok(p.total - above);
        }
        let k = p.knots.partition_point(|&k| k <= x) - 1;
        let partial = quadrature::integrate(f, p.knots[k], x, tol)?.value;
        Ok(p.cumulative[k] + partial)
    }

    /// Cumulative distribution function.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        let n = self.normalization_constant()?;
        Ok((self.mass_below(x)? / n).clamp(0.0, 1.0))
    }

    /// Inverse CDF: returns `x` with `|cdf(x) − p| < 1e-9`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::ProbabilityOutOfRange(p));
        }
        let prof = self.profile()?;
        let n = self.normalization_constant()?;
        let target = p * prof.total;
        let last = prof.knots.len() - 1;

        let (mut lo, mut hi, mass_lo) = if target < prof.cumulative[0] {
            let mut step = prof.window.tail_scale;
            let mut lo = prof.knots[0] - step;
            while self.mass_below(lo)? > target {
                step *= 2.0;
                lo = prof.knots[0] - step;
                if !lo.is_finite() {
                    return Err(Error::RootFinding(format!("no lower bracket for p = {p}")));
                }
            }
            let m = self.mass_below(lo)?;
            (lo, prof.knots[0], m)
        } else if target > prof.cumulative[last] {
            let mut step = prof.window.tail_scale;
            let mut hi = prof.knots[last] + step;
            while self.mass_below(hi)? < target {
                step *= 2.0;
                hi = prof.knots[last] + step;
                if !hi.is_finite() {
                    return Err(Error::RootFinding(format!("no upper bracket for p = {p}")));
                }
            }
            (prof.knots[last], hi, prof.cumulative[last])
        } else {
            let k = prof.cumulative.partition_point(|&c| c <= target).clamp(1, last) - 1;
            (prof.knots[k], prof.knots[k + 1], prof.cumulative[k])
        };

        // Safeguarded Newton on G(x) = mass(lo..x) + mass_lo − target.
        let f = |t: f64| self.pdf_unnormalized(t);
        let tol = Tolerance::relative(1e-13).with_abs(1e-14 * prof.total);
        let origin = lo;
        let mut x = 0.5 * (lo + hi);
        for _ in 0..200 {
            let g = mass_lo + quadrature::integrate(f, origin, x, tol)?.value - target;
            if (g / n).abs() < 1e-12 {
                return Ok(x);
            }
            if g > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let slope = self.pdf_unnormalized(x);
            let newton = x - g / slope;
            x = if slope > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            if hi - lo <= 4.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE) {
                return Ok(x);
            }
        }
        Ok(x)
    }

    /// Mean, standard deviation, skew and kurtosis by quadrature; central
    /// moments are taken about the distribution mean.
    pub fn moments(&self) -> Result<MomentSummary> {
        let n = self.normalization_constant()?;
        let window = self.profile()?.window.clone();
        let f = |x: f64| self.pdf_unnormalized(x);
        let spread = self.components.last().expect("nonempty").width;
        let center = self.peak_location();

        let first = window
            .integrate(|x| (x - center) * f(x), Tolerance::relative(1e-13).with_abs(1e-14 * n * spread))?
            .value;
        let mean = center + first / n;

        let m2 = window.integrate(|x| (x - mean).powi(2) * f(x), Tolerance::relative(1e-12))?.value / n;
        let sd = m2.sqrt();
        let abs3 = 1e-10 * sd.powi(3) * n;
        let m3 = window
            .integrate(|x| (x - mean).powi(3) * f(x), Tolerance::relative(1e-12).with_abs(abs3))?
            .value
            / n;

        let fourth = |x: f64| (x - mean).powi(4) * f(x);
        let tol4 = Tolerance::relative(1e-12).with_abs(1e-11 * m2 * m2 * n);
        let core = window.integrate_core(fourth, tol4)?.value;
        let wide = window.doubled().integrate_core(fourth, tol4)?.value;
        let kurtosis = if (wide - core).abs() > 1e-3 * wide.abs() {
            None
        } else {
            Some(window.integrate(fourth, tol4)?.value / n / (m2 * m2))
        };

        Ok(MomentSummary { mean, std_dev: sd, skew: m3 / m2.powf(1.5), kurtosis })
    }

    /// Draws `count` variates by inverse-CDF sampling; deterministic in `seed`.
    pub fn sample(&self, count: usize, seed: u64) -> Result<Vec<f64>> {
        self.normalization_constant()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let uniforms: Vec<f64> = (0..count)
            .map(|_| loop {
                let u: f64 = rng.random();
                if u > 0.0 {
                    break u;
                }
            })
            .collect();
        uniforms.par_iter().map(|&u| self.quantile(u)).collect()
    }

    /// Model with every mean shifted by `offset`.
    pub fn shifted(&self, offset: f64) -> Result<Self> {
        let comps = self
            .components
            .iter()
            .map(|c| ComponentGaussian { mean: c.mean + offset, ..*c })
            .collect();
        Self::with_options(comps, self.options)
    }

    /// Model of the variate `λ·X`: means, widths and weights all scale by
    /// `λ`, so the new log-density sum is `S(x/λ)`.
    pub fn rescaled(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::InvalidParameter(format!("scale factor must be positive, got {factor}")));
        }
        let comps = self
            .components
            .iter()
            .map(|c| ComponentGaussian { weight: c.weight * factor, mean: c.mean * factor, width: c.width * factor })
            .collect();
        Self::with_options(comps, self.options)
    }
}
