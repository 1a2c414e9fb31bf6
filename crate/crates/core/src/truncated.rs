//! Single-component special case and its normalizing constant.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::model::SQRT_2PI;
use crate::quadrature::{self, Tolerance};

/// The value printed alongside the constant's defining integral in the
/// literature. Kept for comparison only; [`thorne_constant`] is always the
/// computed value.
pub const PRINTED_THORNE_CONSTANT: f64 = 3.697_252_480_597_963;

fn integrand(z: f64) -> f64 {
    ((-0.5 * z * z).exp() / SQRT_2PI).exp_m1()
}

/// `C_T = ∫ (exp(φ(z)) − 1) dz` with `φ` the standard normal density,
/// evaluated by adaptive quadrature to 1e-12 relative tolerance.
pub fn thorne_constant() -> f64 {
    static VALUE: OnceLock<f64> = OnceLock::new();
    *VALUE.get_or_init(|| {
        quadrature::integrate_real_line(integrand, 0.0, 1.0, &[], Tolerance::relative(1e-13))
            .expect("the constant's integrand is smooth and Gaussian-decaying")
            .value
    })
}

/// The same integral restricted to `[-half_width, half_width]`.
pub fn thorne_constant_on(half_width: f64) -> Result<f64> {
    Ok(quadrature::integrate(integrand, -half_width, half_width, Tolerance::relative(1e-13))?.value)
}

/// Single-component density `(exp(φ((x − μ)/σ)) − 1)/(C_T·σ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedModel {
    pub mean: f64,
    pub width: f64,
    pub constant: f64,
}

impl TruncatedModel {
    pub fn new(mean: f64, width: f64) -> Result<Self> {
        if !mean.is_finite() {
            return Err(Error::InvalidParameter(format!("mean must be finite, got {mean}")));
        }
        if !(width.is_finite() && width > 0.0) {
            return Err(Error::InvalidParameter(format!("width must be positive, got {width}")));
        }
        Ok(Self { mean, width, constant: thorne_constant() })
    }

    pub fn pdf(&self, x: f64) -> f64 {
        integrand((x - self.mean) / self.width) / (self.constant * self.width)
    }
}
