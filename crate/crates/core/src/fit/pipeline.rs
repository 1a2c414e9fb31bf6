//! Raw data to fitted model: optimized histogram, optional kernel-estimated
//! tails, transform and component ladder.

use crate::density::{optimize_histogram, DensityHistogram, HistogramOptions, KdeConfig, OptimizedHistogram, TailWeightConfig, ZeroBiasKde};
use crate::error::Result;
use crate::fit::{auto_fit, transform_histogram, FitOptions, FitReport, TransformedHistogram};
use crate::model::ThorneModel;

/// How the histogram's extreme tails are estimated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailSubstitution {
    /// Keep the optimized histogram everywhere.
    None,
    /// Replace bins beyond the tail onsets with a zero-bias kernel estimate
    /// whose kernel is a pilot fitted to the central 98% of the data.
    Kernel { bias_tolerance: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    /// Tail exponent for the smoothness weights; `None` estimates it.
    pub alpha: Option<f64>,
    pub histogram: HistogramOptions,
    pub fit: FitOptions,
    pub tails: TailSubstitution,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self { alpha: None, histogram: HistogramOptions::default(), fit: FitOptions::default(), tails: TailSubstitution::None }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineResult {
    pub optimized: OptimizedHistogram,
    /// The histogram that was transformed and fitted.
    pub histogram: DensityHistogram,
    pub transformed: TransformedHistogram,
    pub report: FitReport,
    pub pilot: Option<ThorneModel>,
}

impl PipelineResult {
    pub fn model(&self) -> &ThorneModel {
        &self.report.model
    }
}

/// Runs the full estimation pipeline on raw variates.
pub fn fit_data(data: &[f64], cfg: &PipelineConfig) -> Result<PipelineResult> {
    let tail = match cfg.alpha {
        Some(a) => TailWeightConfig::with_alpha(data, a)?,
        None => TailWeightConfig::estimate(data)?,
    };
    let optimized = optimize_histogram(data, &tail, &cfg.histogram)?;
    let (histogram, pilot) = match cfg.tails {
        TailSubstitution::None => (optimized.histogram.clone(), None),
        TailSubstitution::Kernel { bias_tolerance } => {
            let pilot = central_pilot(data, &tail, cfg)?;
            let mut kde_cfg = KdeConfig::new(pilot.clone())?;
            kde_cfg.bias_tolerance = bias_tolerance;
            let kde = ZeroBiasKde::new(data, &kde_cfg)?;
            (substitute_tails(&optimized.histogram, &tail, &kde)?, Some(pilot))
        }
    };
    let transformed = transform_histogram(&histogram)?;
    let report = auto_fit(&transformed, &cfg.fit)?;
    Ok(PipelineResult { optimized, histogram, transformed, report, pilot })
}

fn central_pilot(data: &[f64], tail: &TailWeightConfig, cfg: &PipelineConfig) -> Result<ThorneModel> {
    let central: Vec<f64> = data
        .iter()
        .copied()
        .filter(|x| *x >= tail.lower_onset && *x <= tail.upper_onset)
        .collect();
    let h = optimize_histogram(&central, tail, &cfg.histogram)?;
    let th = transform_histogram(&h.histogram)?;
    Ok(auto_fit(&th, &cfg.fit)?.model)
}

/// Bins beyond the onsets take the kernel estimate at their center, floored
/// at the histogram's smallest density; the result is renormalized to unit
/// mass.
fn substitute_tails(h: &DensityHistogram, tail: &TailWeightConfig, kde: &ZeroBiasKde) -> Result<DensityHistogram> {
    let floor = h.densities().iter().copied().filter(|d| *d > 0.0).fold(f64::INFINITY, f64::min);
    let mut densities = h.densities().to_vec();
    for (d, x) in densities.iter_mut().zip(h.centers()) {
        if x < tail.lower_onset || x > tail.upper_onset {
            *d = kde.density(x).max(floor);
        }
    }
    let mass: f64 = densities.iter().zip(h.widths()).map(|(d, w)| d * w).sum();
    for d in &mut densities {
        *d /= mass;
    }
    DensityHistogram::new(h.edges().to_vec(), densities, h.sample_count())
}
