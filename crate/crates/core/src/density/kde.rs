//! Observation-point kernel estimator with a model-shaped kernel.
//!
//! The kernel is the pilot density standardized to zero mean and unit
//! variance, `K(z) = s·p(m + s·z)`. Each observation gets the largest
//! bandwidth whose leading bias term stays within a fraction `ε` of the
//! density: `(h²/2)·|p''(X_i)| ≤ ε·p(X_i)`, so `h = √(2ε·p/|p''|)`, clamped
//! to `[floor, ceiling]`.

use rayon::prelude::*;

use crate::density::check_data;
use crate::error::{Error, Result};
use crate::model::ThorneModel;

#[derive(Debug, Clone)]
pub struct KdeConfig {
    pub pilot: ThorneModel,
    pub bias_tolerance: f64,
    pub bandwidth_floor: f64,
    /// Upper clamp for bandwidths where the pilot is nearly linear.
    pub bandwidth_ceiling: f64,
    /// Uses one bandwidth for every observation, bypassing the bias rule.
    pub fixed_bandwidth: Option<f64>,
}

impl KdeConfig {
    /// Default tolerances: `ε = 0.05`, floor 2% and ceiling 100% of the
    /// pilot's standard deviation.
    pub fn new(pilot: ThorneModel) -> Result<Self> {
        let sd = pilot.moments()?.std_dev;
        Ok(Self { pilot, bias_tolerance: 0.05, bandwidth_floor: 0.02 * sd, bandwidth_ceiling: sd, fixed_bandwidth: None })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bias_tolerance > 0.0 && self.bias_tolerance.is_finite()) {
            return Err(Error::InvalidParameter(format!("bias tolerance must be positive, got {}", self.bias_tolerance)));
        }
        if !(self.bandwidth_floor > 0.0 && self.bandwidth_floor <= self.bandwidth_ceiling) {
            return Err(Error::InvalidParameter("bandwidth floor must be positive and below the ceiling".into()));
        }
        if let Some(h) = self.fixed_bandwidth {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::InvalidParameter(format!("fixed bandwidth must be positive, got {h}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ZeroBiasKde {
    data: Vec<f64>,
    bandwidths: Vec<f64>,
    pilot: ThorneModel,
    normalization: f64,
    kernel_mean: f64,
    kernel_scale: f64,
}

impl ZeroBiasKde {
    pub fn new(data: &[f64], cfg: &KdeConfig) -> Result<Self> {
        check_data(data)?;
        cfg.validate()?;
        let pilot = cfg.pilot.clone();
        let normalization = pilot.normalization_constant()?;
        let moments = pilot.moments()?;
        let bandwidths = match cfg.fixed_bandwidth {
            Some(h) => vec![h; data.len()],
            None => data
                .par_iter()
                .enumerate()
                .map(|(i, &x)| bias_bandwidth(&pilot, cfg, i, x))
                .collect::<Result<Vec<_>>>()?,
        };
        Ok(Self {
            data: data.to_vec(),
            bandwidths,
            pilot,
            normalization,
            kernel_mean: moments.mean,
            kernel_scale: moments.std_dev,
        })
    }

    pub fn bandwidths(&self) -> &[f64] {
        &self.bandwidths
    }

    /// Unit-variance kernel `K(z)`.
    pub fn kernel(&self, z: f64) -> f64 {
        let s = self.kernel_scale;
        s * self.pilot.pdf_unnormalized(self.kernel_mean + s * z) / self.normalization
    }

    pub fn density(&self, x: f64) -> f64 {
        let sum: f64 = self
            .data
            .iter()
            .zip(&self.bandwidths)
            .map(|(&xi, &h)| self.kernel((x - xi) / h) / h)
            .sum();
        sum / self.data.len() as f64
    }

    /// Range outside which every kernel is negligible.
    pub fn support(&self) -> (f64, f64) {
        let w = self.pilot.window();
        let reach_lo = (self.kernel_mean - w.lo()) / self.kernel_scale;
        let reach_hi = (w.hi() - self.kernel_mean) / self.kernel_scale;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (&x, &h) in self.data.iter().zip(&self.bandwidths) {
            lo = lo.min(x - reach_hi * h);
            hi = hi.max(x + reach_lo * h);
        }
        (lo, hi)
    }
}

fn bias_bandwidth(pilot: &ThorneModel, cfg: &KdeConfig, index: usize, x: f64) -> Result<f64> {
    let (s, d1, d2) = pilot.log_sum_derivatives(x);
    let value = s.exp_m1();
    // p ∝ e^S − 1 and p'' ∝ e^S (S'' + S'²); the normalization cancels.
    let ratio = if value > 0.0 {
        value / (s.exp() * (d2 + d1 * d1)).abs()
    } else {
        // Far tail where S underflows: the broadest component's limit.
        let c = pilot.components()[pilot.len() - 1];
        let z = (x - c.mean) / c.width;
        c.width * c.width / (z * z - 1.0).abs()
    };
    let h = (2.0 * cfg.bias_tolerance * ratio).sqrt();
    if h.is_nan() {
        return Err(Error::Bandwidth { index, x, reason: "bias bound is undefined".into() });
    }
    Ok(h.clamp(cfg.bandwidth_floor, cfg.bandwidth_ceiling))
}

/// One-shot evaluation of the estimator at `x`.
pub fn zero_bias_kde(data: &[f64], cfg: &KdeConfig, x: f64) -> Result<f64> {
    Ok(ZeroBiasKde::new(data, cfg)?.density(x))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pilot() -> ThorneModel {
        ThorneModel::single(1.0, 0.0, 1.0).unwrap()
    }

    #[test]
    fn kernel_has_unit_variance() {
        let cfg = KdeConfig::new(pilot()).unwrap();
        let kde = ZeroBiasKde::new(&[0.0], &cfg).unwrap();
        let m2 = crate::quadrature::integrate(|z| z * z * kde.kernel(z), f64::NEG_INFINITY, f64::INFINITY, Default::default())
            .unwrap()
            .value;
        assert!((m2 - 1.0).abs() < 1e-8, "{m2}");
    }

    #[test]
    fn rejects_bad_config() {
        let mut cfg = KdeConfig::new(pilot()).unwrap();
        cfg.bias_tolerance = 0.0;
        assert!(ZeroBiasKde::new(&[1.0], &cfg).is_err());
        let cfg = KdeConfig::new(pilot()).unwrap();
        assert!(ZeroBiasKde::new(&[], &cfg).is_err());
    }

    #[test]
    fn far_observations_get_the_floor() {
        let cfg = KdeConfig::new(pilot()).unwrap();
        let kde = ZeroBiasKde::new(&[0.0, 1e3], &cfg).unwrap();
        assert_eq!(kde.bandwidths()[1], cfg.bandwidth_floor);
    }

    #[test]
    fn bandwidths_respect_clamp() {
        let cfg = KdeConfig::new(pilot()).unwrap();
        let data: Vec<f64> = (-20..=20).map(|k| k as f64 * 0.2).collect();
        let kde = ZeroBiasKde::new(&data, &cfg).unwrap();
        for &h in kde.bandwidths() {
            assert!(h >= cfg.bandwidth_floor && h <= cfg.bandwidth_ceiling);
        }
    }
}
