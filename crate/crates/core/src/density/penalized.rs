//! Penalized maximum-likelihood density histogram.
//!
//! Bins are equal-width in `u = asinh((x − c)/s)` (median `c`, robust scale
//! `s`), which is linear through the center and logarithmic in the tails.
//! The unknowns are the bin log-densities `θ`; the objective is the Poisson
//! form of the multinomial likelihood
//!
//! ```text
//! F(θ) = −Σ n_j θ_j + N Σ exp(θ_j) Δx_j + λ Σ ω_j (θ_{j−1} − 2θ_j + θ_{j+1})² / Δu³
//! ```
//!
//! whose stationarity in the constant direction forces `Σ exp(θ_j) Δx_j = 1`.
//! Smoothness weights `ω` are 1 in the center and grow as `|x|^(1+α)` past the
//! tail onsets. `λ` is set by the discrepancy principle: the Poisson deviance
//! between the estimate and the raw counts equals its expectation.

use crate::density::{check_data, quantile_sorted, robust_scale, DensityHistogram};
use crate::error::{Error, Result};

/// Tail exponent and onsets for the smoothness weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailWeightConfig {
    /// Local tail exponent: densities fall as `|x|^-(1+alpha)`.
    pub alpha: f64,
    pub lower_onset: f64,
    pub upper_onset: f64,
}

impl TailWeightConfig {
    pub fn new(alpha: f64, lower_onset: f64, upper_onset: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidParameter(format!("tail exponent must be positive, got {alpha}")));
        }
        if !(lower_onset < upper_onset) {
            return Err(Error::InvalidParameter("lower onset must lie below upper onset".into()));
        }
        Ok(Self { alpha, lower_onset, upper_onset })
    }

    /// Onsets at the 1st/99th percentiles, `alpha` from a Hill estimate on
    /// the outer 2% of each side.
    pub fn estimate(data: &[f64]) -> Result<Self> {
        check_data(data)?;
        let mut sorted = data.to_vec();
        sorted.sort_by(f64::total_cmp);
        let alpha = hill_alpha(&sorted).unwrap_or(2.0);
        Self::from_sorted(&sorted, alpha)
    }

    /// Default onsets with a caller-supplied exponent.
    pub fn with_alpha(data: &[f64], alpha: f64) -> Result<Self> {
        check_data(data)?;
        let mut sorted = data.to_vec();
        sorted.sort_by(f64::total_cmp);
        Self::from_sorted(&sorted, alpha)
    }

    fn from_sorted(sorted: &[f64], alpha: f64) -> Result<Self> {
        let lo = quantile_sorted(sorted, 0.01);
        let hi = quantile_sorted(sorted, 0.99);
        if !(hi > lo) {
            return Err(Error::DegenerateData("no spread between 1st and 99th percentiles".into()));
        }
        Self::new(alpha, lo, hi)
    }

    fn weight(&self, x: f64, center: f64) -> f64 {
        let p = 1.0 + self.alpha;
        if x > self.upper_onset && self.upper_onset > center {
            ((x - center) / (self.upper_onset - center)).powf(p)
        } else if x < self.lower_onset && self.lower_onset < center {
            ((center - x) / (center - self.lower_onset)).powf(p)
        } else {
            1.0
        }
    }
}

/// Hill estimate of the tail index, averaged over both sides.
fn hill_alpha(sorted: &[f64]) -> Option<f64> {
    let n = sorted.len();
    let median = quantile_sorted(sorted, 0.5);
    let k = ((0.02 * n as f64).ceil() as usize).max(5);
    let side = |excess: Vec<f64>| -> Option<f64> {
        let mut e: Vec<f64> = excess.into_iter().filter(|v| *v > 0.0).collect();
        if e.len() <= k {
            return None;
        }
        e.sort_by(|a, b| b.total_cmp(a));
        let threshold = e[k];
        let s: f64 = e[..k].iter().map(|v| (v / threshold).ln()).sum();
        (s > 0.0).then(|| k as f64 / s)
    };
    let upper = side(sorted.iter().map(|x| x - median).collect());
    let lower = side(sorted.iter().map(|x| median - x).collect());
    match (upper, lower) {
        (Some(a), Some(b)) => Some(0.5 * (a + b)),
        (a, b) => a.or(b),
    }
}

/// Grid and solver settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramOptions {
    /// Bins per unit of `asinh((x − c)/s)`; `None` picks `0.7·n^(1/3)`
    /// clamped to `[3, 40]`.
    pub bins_per_unit: Option<f64>,
    pub max_bins: usize,
    pub max_newton: usize,
}

impl Default for HistogramOptions {
    fn default() -> Self {
        Self { bins_per_unit: None, max_bins: 2000, max_newton: 200 }
    }
}

/// Optimized histogram together with the smoothing diagnostics.
#[derive(Debug, Clone)]
pub struct OptimizedHistogram {
    pub histogram: DensityHistogram,
    pub lambda: f64,
    pub deviance: f64,
    pub expected_deviance: f64,
    pub center: f64,
    pub scale: f64,
    pub tail: TailWeightConfig,
}

/// Penalized log-density histogram with default grid options.
pub fn optimized_histogram(data: &[f64], tail: &TailWeightConfig) -> Result<DensityHistogram> {
    Ok(optimize_histogram(data, tail, &HistogramOptions::default())?.histogram)
}

struct Problem {
    counts: Vec<f64>,
    dx: Vec<f64>,
    /// ω_j / Δu³ for each interior second difference centred at bin j.
    penalty: Vec<f64>,
    n: f64,
}

impl Problem {
    fn objective(&self, theta: &[f64], lambda: f64) -> f64 {
        let mut f = 0.0;
        for j in 0..theta.len() {
            f += -self.counts[j] * theta[j] + self.n * theta[j].exp() * self.dx[j];
        }
        f + lambda * self.roughness(theta)
    }

    fn roughness(&self, theta: &[f64]) -> f64 {
        (1..theta.len() - 1)
            .map(|j| self.penalty[j] * (theta[j - 1] - 2.0 * theta[j] + theta[j + 1]).powi(2))
            .sum()
    }

    /// Gradient and the pentadiagonal Hessian (diagonal, first and second
    /// super-diagonals).
    fn derivatives(&self, theta: &[f64], lambda: f64) -> (Vec<f64>, [Vec<f64>; 3]) {
        let k = theta.len();
        let mut g = vec![0.0; k];
        let mut d0 = vec![0.0; k];
        let mut d1 = vec![0.0; k];
        let mut d2 = vec![0.0; k];
        for j in 0..k {
            let mu = self.n * theta[j].exp() * self.dx[j];
            g[j] = mu - self.counts[j];
            d0[j] = mu;
        }
        for j in 1..k - 1 {
            let w = 2.0 * lambda * self.penalty[j];
            let r = theta[j - 1] - 2.0 * theta[j] + theta[j + 1];
            g[j - 1] += w * r;
            g[j] -= 2.0 * w * r;
            g[j + 1] += w * r;
            // stencil (1, -2, 1) outer product
            d0[j - 1] += w;
            d0[j] += 4.0 * w;
            d0[j + 1] += w;
            d1[j - 1] -= 2.0 * w;
            d1[j] -= 2.0 * w;
            d2[j - 1] += w;
        }
        (g, [d0, d1, d2])
    }

    fn solve(&self, theta: &mut [f64], lambda: f64, max_iter: usize) -> Result<()> {
        let mut f = self.objective(theta, lambda);
        for _ in 0..max_iter {
            let (g, h) = self.derivatives(theta, lambda);
            let step = solve_pentadiagonal(&h, &g)?;
            let decrement: f64 = g.iter().zip(&step).map(|(a, b)| a * b).sum();
            if decrement < 1e-10 * (1.0 + f.abs()) {
                return Ok(());
            }
            let mut t = 1.0;
            loop {
                let trial: Vec<f64> = theta.iter().zip(&step).map(|(x, s)| x - t * s).collect();
                let ft = self.objective(&trial, lambda);
                if ft <= f - 1e-4 * t * decrement {
                    theta.copy_from_slice(&trial);
                    f = ft;
                    break;
                }
                t *= 0.5;
                if t < 1e-12 {
                    return Ok(());
                }
            }
        }
        Err(Error::NotConverged { iterations: max_iter, objective: f })
    }

    fn deviance(&self, theta: &[f64]) -> (f64, f64) {
        let mut dev = 0.0;
        let mut expected = 0.0;
        for j in 0..theta.len() {
            let mu = self.n * theta[j].exp() * self.dx[j];
            let c = self.counts[j];
            dev += 2.0 * (if c > 0.0 { c * (c / mu).ln() } else { 0.0 } - (c - mu));
            expected += expected_poisson_deviance(mu);
        }
        (dev, expected)
    }
}

/// `E[2(n ln(n/μ) − (n − μ))]` for `n ~ Poisson(μ)`.
fn expected_poisson_deviance(mu: f64) -> f64 {
    if mu < 1e-12 {
        return 2.0 * mu;
    }
    if mu > 50.0 {
        return 1.0 + 1.0 / (6.0 * mu) + 1.0 / (6.0 * mu * mu);
    }
    let upper = (mu + 15.0 * mu.sqrt() + 15.0).ceil() as usize;
    let mut pmf = (-mu).exp();
    let mut sum = pmf * 2.0 * mu;
    for n in 1..=upper {
        pmf *= mu / n as f64;
        let c = n as f64;
        sum += pmf * 2.0 * (c * (c / mu).ln() - (c - mu));
    }
    sum
}

/// Solves a symmetric positive definite pentadiagonal system by banded
/// LDLᵀ factorization.
fn solve_pentadiagonal(h: &[Vec<f64>; 3], rhs: &[f64]) -> Result<Vec<f64>> {
    let k = rhs.len();
    let (a, b, c) = (&h[0], &h[1], &h[2]);
    let mut d = vec![0.0; k];
    let mut l1 = vec![0.0; k];
    let mut l2 = vec![0.0; k];
    for i in 0..k {
        let mut di = a[i];
        if i >= 1 {
            di -= l1[i - 1] * l1[i - 1] * d[i - 1];
        }
        if i >= 2 {
            di -= l2[i - 2] * l2[i - 2] * d[i - 2];
        }
        if !(di > 0.0) {
            return Err(Error::NotConverged { iterations: 0, objective: f64::NAN });
        }
        d[i] = di;
        if i + 1 < k {
            let mut v = b[i];
            if i >= 1 {
                v -= l2[i - 1] * l1[i - 1] * d[i - 1];
            }
            l1[i] = v / di;
        }
        if i + 2 < k {
            l2[i] = c[i] / di;
        }
    }
    let mut y = rhs.to_vec();
    for i in 0..k {
        if i >= 1 {
            y[i] -= l1[i - 1] * y[i - 1];
        }
        if i >= 2 {
            y[i] -= l2[i - 2] * y[i - 2];
        }
    }
    for i in 0..k {
        y[i] /= d[i];
    }
    for i in (0..k).rev() {
        if i + 1 < k {
            y[i] -= l1[i] * y[i + 1];
        }
        if i + 2 < k {
            y[i] -= l2[i] * y[i + 2];
        }
    }
    Ok(y)
}

/// Penalized log-density histogram.
pub fn optimize_histogram(data: &[f64], tail: &TailWeightConfig, opts: &HistogramOptions) -> Result<OptimizedHistogram> {
    check_data(data)?;
    let mut sorted = data.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let (min, max) = (sorted[0], sorted[n - 1]);
    if !(max > min) {
        return Err(Error::DegenerateData("all observations are equal".into()));
    }
    let center = quantile_sorted(&sorted, 0.5);
    let scale = robust_scale(&sorted);
    if !(scale > 0.0) {
        return Err(Error::DegenerateData("zero spread".into()));
    }

    let to_u = |x: f64| ((x - center) / scale).asinh();
    let per_unit = opts.bins_per_unit.unwrap_or_else(|| (0.7 * (n as f64).cbrt()).clamp(3.0, 40.0));
    let (u_lo, u_hi) = (to_u(min), to_u(max));
    let bins = (((u_hi - u_lo) * per_unit).ceil() as usize).clamp(3, opts.max_bins.max(3));
    let du = (u_hi - u_lo) / bins as f64;
    // Half a bin of padding keeps the extreme observations off the outer edges.
    let (u0, du) = (u_lo - 0.5 * du, du * (bins as f64 + 1.0) / bins as f64);
    let edges: Vec<f64> = (0..=bins).map(|k| center + scale * (u0 + k as f64 * du).sinh()).collect();

    let mut counts = vec![0.0; bins];
    for &x in &sorted {
        let k = (((to_u(x) - u0) / du) as usize).min(bins - 1);
        counts[k] += 1.0;
    }
    let dx: Vec<f64> = edges.windows(2).map(|w| w[1] - w[0]).collect();
    let du3 = du * du * du;
    let penalty: Vec<f64> = (0..bins)
        .map(|j| tail.weight(0.5 * (edges[j] + edges[j + 1]), center) / du3)
        .collect();
    let problem = Problem { counts, dx, penalty, n: n as f64 };

    // Start from a heavily smoothed solution and walk λ down.
    let mut theta: Vec<f64> = problem
        .counts
        .iter()
        .zip(&problem.dx)
        .map(|(c, w)| ((c + 0.5) / (problem.n * w)).ln())
        .collect();
    let discrepancy = |theta: &mut Vec<f64>, log_lambda: f64| -> Result<(f64, f64, f64)> {
        problem.solve(theta, log_lambda.exp(), opts.max_newton)?;
        let (dev, expected) = problem.deviance(theta);
        Ok((dev - expected, dev, expected))
    };

    let mut hi = (problem.n * du3).ln() + 10.0;
    let (mut f_hi, _, _) = discrepancy(&mut theta, hi)?;
    let mut expand = 0;
    while f_hi < 0.0 && expand < 8 {
        hi += 5.0;
        f_hi = discrepancy(&mut theta, hi)?.0;
        expand += 1;
    }
    let smooth_theta = theta.clone();
    let mut lo = hi - 5.0;
    let mut f_lo = discrepancy(&mut theta, lo)?.0;
    let mut shrink = 0;
    while f_lo > 0.0 && shrink < 12 {
        hi = lo;
        lo -= 5.0;
        f_lo = discrepancy(&mut theta, lo)?.0;
        shrink += 1;
    }

    let log_lambda = if f_hi < 0.0 {
        // Data cannot be distinguished from the smoothest admissible shape.
        theta = smooth_theta;
        hi
    } else if f_lo > 0.0 {
        lo
    } else {
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            let f_mid = discrepancy(&mut theta, mid)?.0;
            if f_mid > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo < 1e-3 {
                break;
            }
        }
        hi
    };
    let (_, deviance, expected_deviance) = discrepancy(&mut theta, log_lambda)?;

    let mut densities: Vec<f64> = theta.iter().map(|t| t.exp()).collect();
    let mass: f64 = densities.iter().zip(&problem.dx).map(|(d, w)| d * w).sum();
    for d in &mut densities {
        *d /= mass;
    }
    Ok(OptimizedHistogram {
        histogram: DensityHistogram::new(edges, densities, n)?,
        lambda: log_lambda.exp(),
        deviance,
        expected_deviance,
        center,
        scale,
        tail: *tail,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pentadiagonal_solver_matches_dense() {
        let k = 6;
        let d0 = vec![6.0, 7.0, 8.0, 7.5, 9.0, 6.5];
        let d1 = vec![-1.0, 0.5, -2.0, 1.0, -0.5, 0.0];
        let d2 = vec![0.3, -0.2, 0.4, 0.1, 0.0, 0.0];
        let rhs = vec![1.0, -2.0, 0.5, 3.0, -1.0, 2.0];
        let x = solve_pentadiagonal(&[d0.clone(), d1.clone(), d2.clone()], &rhs).unwrap();
        for i in 0..k {
            let mut s = d0[i] * x[i];
            if i + 1 < k {
                s += d1[i] * x[i + 1];
            }
            if i >= 1 {
                s += d1[i - 1] * x[i - 1];
            }
            if i + 2 < k {
                s += d2[i] * x[i + 2];
            }
            if i >= 2 {
                s += d2[i - 2] * x[i - 2];
            }
            assert!((s - rhs[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn expected_deviance_limits() {
        assert!((expected_poisson_deviance(1e-14) - 2e-14).abs() < 1e-20);
        let big = expected_poisson_deviance(49.9);
        assert!((big - 1.003_409_653_519_001).abs() < 1e-11, "{big}");
        // direct sums from an independent script
        assert!((expected_poisson_deviance(1.0) - 1.146_805_618_245_240).abs() < 1e-12);
        assert!((expected_poisson_deviance(3.0) - 1.094_585_089_529_006).abs() < 1e-12);
    }

    #[test]
    fn hill_on_pareto_sample() {
        // exact Pareto(α = 3) quantiles on both sides
        let n = 5000;
        let mut data: Vec<f64> = (1..=n)
            .flat_map(|i| {
                let u = i as f64 / (n + 1) as f64;
                let x = (1.0 - u).powf(-1.0 / 3.0);
                [x, -x]
            })
            .collect();
        data.sort_by(f64::total_cmp);
        let a = hill_alpha(&data).unwrap();
        assert!((a - 3.0).abs() < 0.3, "{a}");
    }

    #[test]
    fn rejects_constant_data() {
        let tail = TailWeightConfig::new(2.0, -1.0, 1.0).unwrap();
        assert!(matches!(optimized_histogram(&[1.0; 20], &tail), Err(Error::DegenerateData(_))));
        assert!(TailWeightConfig::new(0.0, -1.0, 1.0).is_err());
        assert!(TailWeightConfig::new(1.0, 1.0, -1.0).is_err());
    }
}
