//! Density estimates built directly from samples.
//!
//! * [`plain_histogram`]: equal-width counting histogram.
//! * [`optimized_histogram`]: penalized maximum-likelihood log-density on an
//!   `asinh` grid with tail-weighted smoothness and exact unit mass.
//! * [`ZeroBiasKde`]: observation-point kernel estimator whose kernel is a
//!   standardized model density and whose bandwidths come from a bias bound.
//! * [`SheatherJones`]: Gaussian KDE with the solve-the-equation plug-in
//!   bandwidth, used as a benchmark baseline.

mod kde;
mod penalized;
mod sheather_jones;

use std::fmt::Write as _;

use crate::error::{Error, Result};

pub use kde::{zero_bias_kde, KdeConfig, ZeroBiasKde};
pub use penalized::{optimize_histogram, optimized_histogram, HistogramOptions, OptimizedHistogram, TailWeightConfig};
pub use sheather_jones::{sheather_jones_bandwidth, sheather_jones_density, SheatherJones};

/// Piecewise-constant density on strictly increasing bin edges.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityHistogram {
    edges: Vec<f64>,
    densities: Vec<f64>,
    sample_count: usize,
}

impl DensityHistogram {
    pub fn new(edges: Vec<f64>, densities: Vec<f64>, sample_count: usize) -> Result<Self> {
        if edges.len() < 2 || densities.len() + 1 != edges.len() {
            return Err(Error::InvalidParameter(format!(
                "{} edges do not bound {} bins",
                edges.len(),
                densities.len()
            )));
        }
        if edges.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("bin edges must be strictly increasing".into()));
        }
        if densities.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(Error::InvalidParameter("densities must be finite and nonnegative".into()));
        }
        Ok(Self { edges, densities, sample_count })
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn densities(&self) -> &[f64] {
        &self.densities
    }

    pub fn sample_count(&self) -> usize {
        self.sample_count
    }

    pub fn bin_count(&self) -> usize {
        self.densities.len()
    }

    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    pub fn widths(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// `Σ density·width`.
    pub fn total_probability(&self) -> f64 {
        self.densities.iter().zip(self.widths()).map(|(d, w)| d * w).sum()
    }

    /// Step-function value at `x`; zero outside the edges.
    pub fn density_at(&self, x: f64) -> f64 {
        let last = self.edges.len() - 1;
        if !(x >= self.edges[0] && x <= self.edges[last]) {
            return 0.0;
        }
        let k = self.edges.partition_point(|&e| e <= x).clamp(1, last) - 1;
        self.densities[k]
    }

    /// Discrete roughness `Σ (f'')²·Δ` from second divided differences of the
    /// bin densities at the bin centers.
    pub fn roughness(&self) -> f64 {
        let c = self.centers();
        let d = &self.densities;
        (1..d.len().saturating_sub(1))
            .map(|j| {
                let h0 = c[j] - c[j - 1];
                let h1 = c[j + 1] - c[j];
                let second = 2.0 * (h0 * d[j + 1] - (h0 + h1) * d[j] + h1 * d[j - 1]) / (h0 * h1 * (h0 + h1));
                second * second * 0.5 * (h0 + h1)
            })
            .sum()
    }

    /// Delimiter-separated export: `edge_low,edge_high,density` at 15
    /// significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("edge_low,edge_high,density\n");
        for (w, d) in self.edges.windows(2).zip(&self.densities) {
            let _ = writeln!(out, "{:.14e},{:.14e},{:.14e}", w[0], w[1], d);
        }
        out
    }
}

fn check_data(data: &[f64]) -> Result<()> {
    if data.is_empty() {
        return Err(Error::DegenerateData("empty data".into()));
    }
    if let Some(x) = data.iter().find(|x| !x.is_finite()) {
        return Err(Error::DegenerateData(format!("non-finite value {x}")));
    }
    Ok(())
}

/// Equal-width histogram over `[min, max]` normalized to unit probability.
pub fn plain_histogram(data: &[f64], bin_count: usize) -> Result<DensityHistogram> {
    check_data(data)?;
    if bin_count == 0 {
        return Err(Error::InvalidParameter("bin count must be positive".into()));
    }
    let (lo, hi) = min_max(data);
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
    let width = (hi - lo) / bin_count as f64;
    let mut counts = vec![0usize; bin_count];
    for &x in data {
        let k = (((x - lo) / width) as usize).min(bin_count - 1);
        counts[k] += 1;
    }
    let n = data.len() as f64;
    let edges = (0..=bin_count).map(|k| if k == bin_count { hi } else { lo + k as f64 * width }).collect();
    let densities = counts.iter().map(|&c| c as f64 / (n * width)).collect();
    DensityHistogram::new(edges, densities, data.len())
}

/// Freedman–Diaconis bin count for [`plain_histogram`].
pub fn freedman_diaconis_bins(data: &[f64]) -> usize {
    let mut sorted = data.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
    if iqr <= 0.0 || hi <= lo {
        return 1;
    }
    let width = 2.0 * iqr / (data.len() as f64).cbrt();
    (((hi - lo) / width).ceil() as usize).clamp(1, 1_000_000)
}

pub(crate) fn min_max(data: &[f64]) -> (f64, f64) {
    data.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

/// Linear-interpolation quantile of sorted data (type 7).
pub(crate) fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Robust scale: `IQR/1.349`, falling back to the standard deviation.
pub(crate) fn robust_scale(sorted: &[f64]) -> f64 {
    let iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
    if iqr > 0.0 {
        return iqr / 1.349;
    }
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    (sorted.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_histogram_errors() {
        assert!(matches!(plain_histogram(&[], 3), Err(Error::DegenerateData(_))));
        assert!(plain_histogram(&[1.0, 2.0], 0).is_err());
        assert!(plain_histogram(&[1.0, f64::NAN], 2).is_err());
    }

    #[test]
    fn plain_histogram_has_unit_mass() {
        let data = [0.3, 1.2, 1.25, 2.0, 7.5, -3.0];
        for bins in [1, 2, 7, 50] {
            let h = plain_histogram(&data, bins).unwrap();
            assert!((h.total_probability() - 1.0).abs() < 1e-12);
        }
        let constant = plain_histogram(&[2.0; 5], 4).unwrap();
        assert!((constant.total_probability() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn step_lookup_and_csv() {
        let h = DensityHistogram::new(vec![0.0, 1.0, 3.0], vec![0.5, 0.25], 4).unwrap();
        assert_eq!(h.density_at(0.5), 0.5);
        assert_eq!(h.density_at(2.0), 0.25);
        assert_eq!(h.density_at(3.0), 0.25);
        assert_eq!(h.density_at(-1.0), 0.0);
        let csv = h.to_csv();
        assert!(csv.starts_with("edge_low,edge_high,density\n0.00000000000000e0,1.00000000000000e0,5.00000000000000e-1"));
        assert!(DensityHistogram::new(vec![0.0, 0.0], vec![1.0], 1).is_err());
    }

    #[test]
    fn quantile_interpolates() {
        let s = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&s, 0.5), 2.5);
        assert_eq!(quantile_sorted(&s, 1.0), 4.0);
    }
}
