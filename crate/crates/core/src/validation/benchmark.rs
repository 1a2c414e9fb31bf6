//! Small-sample accuracy benchmark of the fitted model against kernel and
//! histogram baselines on the synthetic law.

use std::fmt::{self, Write as _};

use rayon::prelude::*;

use crate::density::{freedman_diaconis_bins, plain_histogram, SheatherJones};
use crate::error::{Error, Result};
use crate::fit::{fit_data, PipelineConfig};
use crate::validation::{ise_with, synthetic_pdf, synthetic_sample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Estimator {
    Thorne,
    SheatherJones,
    Histogram,
}

impl Estimator {
    pub const ALL: [Estimator; 3] = [Estimator::Thorne, Estimator::SheatherJones, Estimator::Histogram];

    pub fn name(&self) -> &'static str {
        match self {
            Estimator::Thorne => "thorne",
            Estimator::SheatherJones => "sheather-jones",
            Estimator::Histogram => "histogram",
        }
    }

    /// ISE of this estimator built from `sample` against the synthetic law.
    pub fn ise(&self, sample: &[f64], pipeline: &PipelineConfig) -> Result<f64> {
        match self {
            Estimator::Thorne => {
                let fit = fit_data(sample, pipeline)?;
                let model = fit.model();
                let n = model.normalization_constant()?;
                let scale = model.components()[0].width;
                let breaks: Vec<f64> = model.components().iter().map(|c| c.mean).collect();
                ise_with(|x| model.pdf_unnormalized(x) / n, synthetic_pdf, breaks[0], scale, &breaks)
            }
            Estimator::SheatherJones => {
                let kde = SheatherJones::new(sample)?;
                ise_with(|x| kde.density(x), synthetic_pdf, 0.0, kde.bandwidth(), &[])
            }
            Estimator::Histogram => {
                let h = plain_histogram(sample, freedman_diaconis_bins(sample))?;
                let width = h.widths()[0];
                ise_with(|x| h.density_at(x), synthetic_pdf, 0.0, width, h.edges())
            }
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone)]
pub struct BenchmarkConfig {
    pub sizes: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub estimators: Vec<Estimator>,
    pub pipeline: PipelineConfig,
}

impl BenchmarkConfig {
    pub fn new(sizes: Vec<usize>, trials: usize, seed: u64) -> Self {
        let mut pipeline = PipelineConfig::default();
        pipeline.fit.symmetric = true;
        pipeline.fit.center = Some(0.0);
        Self { sizes, trials, seed, estimators: Estimator::ALL.to_vec(), pipeline }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkRow {
    pub estimator: Estimator,
    pub sample_size: usize,
    /// Mean ISE over the successful trials.
    pub mean_ise: f64,
    /// `√(mean ISE)`, the root of the finite-sample MISE.
    pub rmise: f64,
    /// Standard error of `mean_ise`.
    pub std_error: f64,
    pub trials: usize,
    pub failures: usize,
    /// Sample size this estimator needs to match the fitted model's error at
    /// `sample_size`, divided by `sample_size`; interpolated log-log over the
    /// benchmarked sizes and extrapolated beyond them.
    pub points_ratio_vs_thorne: Option<f64>,
}

/// Deterministic per-trial seed.
fn trial_seed(seed: u64, size: usize, trial: usize) -> u64 {
    let mut z = seed
        .wrapping_add((size as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add((trial as u64).wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mean ISE of each estimator at each size over independent trials.
pub fn amise_benchmark(cfg: &BenchmarkConfig) -> Result<Vec<BenchmarkRow>> {
    if cfg.sizes.is_empty() || cfg.trials == 0 {
        return Err(Error::InvalidParameter("need at least one size and one trial".into()));
    }
    let mut rows = Vec::new();
    for &size in &cfg.sizes {
        let samples: Vec<Vec<f64>> = (0..cfg.trials)
            .into_par_iter()
            .map(|t| synthetic_sample(size, trial_seed(cfg.seed, size, t)))
            .collect::<Result<_>>()?;
        for &est in &cfg.estimators {
            let errors: Vec<Option<f64>> = samples.par_iter().map(|s| est.ise(s, &cfg.pipeline).ok()).collect();
            let ok: Vec<f64> = errors.iter().flatten().copied().collect();
            let k = ok.len() as f64;
            let mean = ok.iter().sum::<f64>() / k;
            let var = if ok.len() > 1 { ok.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (k - 1.0) } else { 0.0 };
            rows.push(BenchmarkRow {
                estimator: est,
                sample_size: size,
                mean_ise: mean,
                rmise: mean.sqrt(),
                std_error: (var / k).sqrt(),
                trials: cfg.trials,
                failures: cfg.trials - ok.len(),
                points_ratio_vs_thorne: None,
            });
        }
    }
    fill_ratios(&mut rows);
    Ok(rows)
}

fn fill_ratios(rows: &mut [BenchmarkRow]) {
    let curve = |est: Estimator, rows: &[BenchmarkRow]| -> Vec<(f64, f64)> {
        let mut c: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.estimator == est && r.mean_ise.is_finite() && r.mean_ise > 0.0)
            .map(|r| ((r.sample_size as f64).ln(), r.mean_ise.ln()))
            .collect();
        c.sort_by(|a, b| a.0.total_cmp(&b.0));
        c
    };
    let thorne = curve(Estimator::Thorne, rows);
    let snapshot = rows.to_vec();
    for row in rows.iter_mut() {
        let Some(&(_, target)) = thorne.iter().find(|(ln_n, _)| (ln_n.exp() - row.sample_size as f64).abs() < 0.5) else {
            continue;
        };
        let own = curve(row.estimator, &snapshot);
        if let Some(ln_needed) = invert_curve(&own, target) {
            row.points_ratio_vs_thorne = Some(ln_needed.exp() / row.sample_size as f64);
        }
    }
}

/// `ln n` at which a decreasing log-log error curve reaches `target`.
fn invert_curve(curve: &[(f64, f64)], target: f64) -> Option<f64> {
    match curve.len() {
        0 => None,
        // Single size: assume the n^(-4/5) rate of kernel estimators.
        1 => Some(curve[0].0 + (curve[0].1 - target) / 0.8),
        _ => {
            let seg = curve
                .windows(2)
                .find(|w| (w[0].1 - target) * (w[1].1 - target) <= 0.0)
                .unwrap_or(if target < curve[curve.len() - 1].1 { &curve[curve.len() - 2..] } else { &curve[..2] });
            let slope = (seg[1].1 - seg[0].1) / (seg[1].0 - seg[0].0);
            if !(slope < 0.0) {
                return None;
            }
            Some(seg[0].0 + (target - seg[0].1) / slope)
        }
    }
}

/// Delimiter-separated table: estimator, size, error, ratio.
pub fn benchmark_csv(rows: &[BenchmarkRow]) -> String {
    let mut out = String::from("estimator,size,mean_ise,rmise,std_error,failures,points_ratio\n");
    for r in rows {
        let ratio = r.points_ratio_vs_thorne.map_or(String::from("NA"), |v| format!("{v:.6e}"));
        let _ = writeln!(
            out,
            "{},{},{:.14e},{:.14e},{:.14e},{},{}",
            r.estimator, r.sample_size, r.mean_ise, r.rmise, r.std_error, r.failures, ratio
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inversion_interpolates_in_log_space() {
        let curve = [(100f64.ln(), 1e-2f64.ln()), (1000f64.ln(), 1e-3f64.ln())];
        let n = invert_curve(&curve, 1e-3f64.ln() + 0.5 * (1e-2f64.ln() - 1e-3f64.ln())).unwrap().exp();
        assert!((n / 1e5f64.sqrt() - 1.0).abs() < 1e-9, "{n}");
        // extrapolation beyond the last size
        let far = invert_curve(&curve, 1e-4f64.ln()).unwrap().exp();
        assert!((far / 1e4 - 1.0).abs() < 1e-9, "{far}");
    }

    #[test]
    fn seeds_differ_per_trial() {
        assert_ne!(trial_seed(1, 100, 0), trial_seed(1, 100, 1));
        assert_ne!(trial_seed(1, 100, 0), trial_seed(1, 1000, 0));
    }
}
