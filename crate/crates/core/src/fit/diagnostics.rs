use nalgebra::DMatrix;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::fit::lm::{FitProblem, LmOutcome};
use crate::fit::{FitReport, TransformedHistogram};
use crate::model::{ComponentGaussian, ModelOptions, ThorneModel};

/// Estimate, standard error and t-statistic of one natural parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterStat {
    pub component: usize,
    /// `"weight"`, `"mean"` or `"width"`.
    pub name: &'static str,
    pub value: f64,
    pub std_error: f64,
    pub t: f64,
}

/// Residual-normality verdict.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normality {
    /// Anderson–Darling `A*²` with the small-sample correction.
    pub statistic: f64,
    pub p_value: f64,
    /// Normal probability plot correlation coefficient.
    pub ppcc: f64,
    /// `true` when normality is not rejected at 5%.
    pub normal: bool,
}

/// Anderson–Darling test of normality with estimated mean and variance.
pub fn anderson_darling(values: &[f64]) -> Normality {
    let n = values.len();
    if n < 3 {
        return Normality { statistic: f64::NAN, p_value: f64::NAN, ppcc: f64::NAN, normal: false };
    }
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0)).sqrt();
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let std = Normal::new(0.0, 1.0).expect("standard normal");
    if !(sd > 0.0) {
        return Normality { statistic: 0.0, p_value: 1.0, ppcc: 1.0, normal: true };
    }

    let cdf: Vec<f64> = sorted.iter().map(|v| std.cdf((v - mean) / sd).clamp(1e-300, 1.0 - 1e-16)).collect();
    let s: f64 = (0..n)
        .map(|i| (2 * i + 1) as f64 * (cdf[i].ln() + (1.0 - cdf[n - 1 - i]).ln()))
        .sum();
    let a2 = -nf - s / nf;
    let a = a2 * (1.0 + 0.75 / nf + 2.25 / (nf * nf));
    let p_value = if a >= 0.6 {
        (1.2937 - 5.709 * a + 0.0186 * a * a).exp()
    } else if a >= 0.34 {
        (0.9177 - 4.279 * a - 1.38 * a * a).exp()
    } else if a >= 0.2 {
        1.0 - (-8.318 + 42.796 * a - 59.938 * a * a).exp()
    } else {
        1.0 - (-13.436 + 101.14 * a - 223.73 * a * a).exp()
    };

    // Blom plotting positions.
    let q: Vec<f64> = (0..n).map(|i| std.inverse_cdf((i as f64 + 0.625) / (nf + 0.25))).collect();
    let qm = q.iter().sum::<f64>() / nf;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in q.iter().zip(&sorted) {
        sxy += (x - qm) * (y - mean);
        sxx += (x - qm).powi(2);
        syy += (y - mean).powi(2);
    }
    Normality { statistic: a, p_value: p_value.clamp(0.0, 1.0), ppcc: sxy / (sxx * syy).sqrt(), normal: a < 0.752 }
}

pub(crate) fn model_from(comps: Vec<ComponentGaussian>) -> Result<ThorneModel> {
    match ThorneModel::new(comps.clone()) {
        Err(Error::InvalidComponent { reason, .. }) if reason.starts_with("weights") => {
            ThorneModel::with_options(comps, ModelOptions { monotone_weights: false })
        }
        other => other,
    }
}

fn parameter_stats(problem: &FitProblem, params: &[f64], sse: f64) -> Option<Vec<ParameterStat>> {
    let comps = problem.unpack(params);
    let mut j = problem.jacobian(params);
    let stride = problem.stride();
    // Chain rule from (ln w, ln σ) to (w, σ).
    for (k, c) in comps.iter().enumerate() {
        let col = k * stride;
        j.column_mut(col).scale_mut(1.0 / c.weight);
        j.column_mut(col + stride - 1).scale_mut(1.0 / c.width);
    }
    let dof = problem.x.len() as f64 - params.len() as f64;
    let s2 = sse / dof;
    let normal: DMatrix<f64> = j.transpose() * &j;
    let cov = normal.cholesky()?.inverse() * s2;
    let mut out = Vec::with_capacity(params.len());
    for (k, c) in comps.iter().enumerate() {
        let col = k * stride;
        let mut push = |offset: usize, name: &'static str, value: f64| {
            let se = cov[(col + offset, col + offset)].sqrt();
            out.push(ParameterStat { component: k, name, value, std_error: se, t: value / se });
        };
        push(0, "weight", c.weight);
        if stride == 3 {
            push(1, "mean", c.mean);
        }
        push(stride - 1, "width", c.width);
    }
    out.iter().all(|s| s.std_error.is_finite()).then_some(out)
}

pub(crate) fn build_report(th: &TransformedHistogram, problem: &FitProblem, outcome: &LmOutcome) -> Result<FitReport> {
    let comps = problem.unpack(&outcome.params);
    let n = comps.len();
    let model = model_from(comps)?;
    let residuals = problem.residuals(&outcome.params);
    let fitted: Vec<f64> = th.ordinates.iter().zip(&residuals).map(|(y, r)| y - r).collect();
    let m = th.len() as f64;
    let p = outcome.params.len() as f64;
    let sse: f64 = residuals.iter().map(|r| r * r).sum();
    let mean_y = th.ordinates.iter().sum::<f64>() / m;
    let sst: f64 = th.ordinates.iter().map(|y| (y - mean_y).powi(2)).sum();
    let r2 = if sst > 0.0 { (1.0 - sse / sst).clamp(0.0, 1.0) } else { 1.0 };
    let r2_adjusted = 1.0 - (1.0 - r2) * (m - 1.0) / (m - p - 1.0);
    let std_error = (sse / (m - p)).sqrt();
    let f_statistic = if r2 < 1.0 { (r2 / p) / ((1.0 - r2) / (m - p - 1.0)) } else { f64::INFINITY };

    let ise_transformed: f64 = residuals.iter().zip(&th.widths).map(|(r, w)| r * r * w).sum();
    let norm = model.normalization_constant()?;
    let ise_density: f64 = th
        .densities()
        .iter()
        .zip(&th.centers)
        .zip(&th.widths)
        .map(|((d, &x), w)| (d - model.pdf_unnormalized(x) / norm).powi(2) * w)
        .sum();
    let t_stats = parameter_stats(problem, &outcome.params, sse);

    Ok(FitReport {
        ill_conditioned: t_stats.is_none(),
        t_stats,
        normality: anderson_darling(&residuals),
        model,
        n_components: n,
        r2,
        r2_adjusted,
        std_error,
        f_statistic,
        sse,
        ise_transformed,
        ise_density,
        residuals,
        fitted,
        converged: outcome.converged,
        iterations: outcome.iterations,
        f_sequence: vec![(n, f_statistic)],
        d_min: th.d_min,
        bin_count: th.len(),
    })
}
