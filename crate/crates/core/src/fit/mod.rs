//! Least-squares fitting of the log-density sum to a transformed histogram.
//!
//! A density histogram is scaled by its smallest positive density, shifted
//! by one and logged; the resulting ordinates are fitted by a positive
//! Gaussian sum with Levenberg–Marquardt. Components are added one at a
//! time and the fit with the largest regression F-statistic is kept.

mod diagnostics;
mod ladder;
mod lm;
mod pipeline;

use crate::density::DensityHistogram;
use crate::error::{Error, Result};
use crate::model::ThorneModel;

pub use diagnostics::{anderson_darling, Normality, ParameterStat};
pub use ladder::auto_fit;
pub use lm::{fit_fixed_n, FitProblem};
pub use pipeline::{fit_data, PipelineConfig, PipelineResult, TailSubstitution};

/// Histogram ordinates `ln(density/d_min + 1)` at the bin centers.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformedHistogram {
    pub centers: Vec<f64>,
    pub widths: Vec<f64>,
    pub ordinates: Vec<f64>,
    pub d_min: f64,
    /// Whether the source histogram had unit mass.
    pub normalized: bool,
}

impl TransformedHistogram {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Densities recovered from the ordinates.
    pub fn densities(&self) -> Vec<f64> {
        self.ordinates.iter().map(|y| y.exp_m1() * self.d_min).collect()
    }
}

pub fn transform_histogram(h: &DensityHistogram) -> Result<TransformedHistogram> {
    let d_min = h
        .densities()
        .iter()
        .copied()
        .filter(|d| *d > 0.0)
        .fold(f64::INFINITY, f64::min);
    if !d_min.is_finite() {
        return Err(Error::DegenerateData("histogram has no positive density".into()));
    }
    Ok(TransformedHistogram {
        centers: h.centers(),
        widths: h.widths(),
        ordinates: h.densities().iter().map(|d| (d / d_min).ln_1p()).collect(),
        d_min,
        normalized: (h.total_probability() - 1.0).abs() < 1e-9,
    })
}

/// `x ↦ (exp(curve(x)) − 1)·d_min`.
pub fn back_transform<F: Fn(f64) -> f64>(curve: F, d_min: f64) -> impl Fn(f64) -> f64 {
    move |x| curve(x).exp_m1() * d_min
}

/// Settings shared by [`fit_fixed_n`] and [`auto_fit`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Fix every mean at `center`.
    pub symmetric: bool,
    /// Common mean in symmetric mode; `None` uses the ordinate-weighted mean
    /// of the bin centers.
    pub center: Option<f64>,
    pub max_iterations: usize,
    pub max_components: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { symmetric: false, center: None, max_iterations: 500, max_components: 10 }
    }
}

/// A converged (or best-effort) fit with its diagnostics.
#[derive(Debug, Clone)]
pub struct FitReport {
    pub model: ThorneModel,
    pub n_components: usize,
    pub r2: f64,
    pub r2_adjusted: f64,
    pub std_error: f64,
    pub f_statistic: f64,
    pub sse: f64,
    /// `Σ (ordinate − S)²·Δx` over the bins.
    pub ise_transformed: f64,
    /// `Σ (density − pdf)²·Δx` against the normalized model.
    pub ise_density: f64,
    /// `None` when the normal matrix is singular.
    pub t_stats: Option<Vec<ParameterStat>>,
    pub residuals: Vec<f64>,
    pub fitted: Vec<f64>,
    pub normality: Normality,
    pub converged: bool,
    pub iterations: usize,
    pub ill_conditioned: bool,
    /// `(n, F)` for every rung of the component ladder that was fitted.
    pub f_sequence: Vec<(usize, f64)>,
    pub d_min: f64,
    pub bin_count: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transform_round_trip() {
        let h = DensityHistogram::new(vec![0.0, 1.0, 2.0, 3.0], vec![0.2, 0.0, 0.8], 10).unwrap();
        let t = transform_histogram(&h).unwrap();
        assert!((t.ordinates[0] - 2f64.ln()).abs() < 1e-15);
        assert_eq!(t.ordinates[1], 0.0);
        for (a, b) in t.densities().iter().zip(h.densities()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(t.normalized);
    }

    #[test]
    fn all_zero_histogram_rejected() {
        let h = DensityHistogram::new(vec![0.0, 1.0], vec![0.0], 0).unwrap();
        assert!(matches!(transform_histogram(&h), Err(Error::DegenerateData(_))));
    }

    #[test]
    fn back_transform_limits() {
        let zero = back_transform(|_| 0.0, 0.3);
        assert_eq!(zero(1.0), 0.0);
        let at_min = back_transform(|_| 2f64.ln(), 0.3);
        assert!((at_min(0.0) - 0.3).abs() < 1e-15);
    }
}
