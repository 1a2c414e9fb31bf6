use crate::error::{Error, Result};
use crate::fit::lm::{fit_fixed_n, resolve_center, weighted_center};
use crate::fit::{FitOptions, FitReport, TransformedHistogram};
use crate::model::ComponentGaussian;

/// Single-component start from the ordinate curve's area, centroid and
/// spread.
fn initial_component(th: &TransformedHistogram, mean: f64) -> ComponentGaussian {
    let (mut area, mut var) = (0.0, 0.0);
    for ((x, y), w) in th.centers.iter().zip(&th.ordinates).zip(&th.widths) {
        area += y * w;
        var += y * w * (x - mean).powi(2);
    }
    ComponentGaussian { weight: area, mean, width: (var / area).sqrt() }
}

fn with_extra(comps: &[ComponentGaussian], extra: ComponentGaussian) -> Vec<ComponentGaussian> {
    let mut out = comps.to_vec();
    out.push(extra);
    out
}

/// A component wider than the data acts as a constant offset on the
/// ordinates and spreads mass far beyond the observations.
fn within_span(report: &FitReport, span: f64) -> bool {
    report.model.components().iter().all(|c| c.width <= span)
}

/// Fits the component ladder `n = 1, 2, …` and returns the fit with the
/// largest F-statistic. Each rung tries one component narrower than the
/// narrowest (width/3, weight/5) and one broader than the broadest
/// (width×3, weight×2.5); the ladder stops after F declines twice in a row.
pub fn auto_fit(th: &TransformedHistogram, opts: &FitOptions) -> Result<FitReport> {
    if th.len() < 7 {
        return Err(Error::DegenerateData(format!("need at least 7 bins, got {}", th.len())));
    }
    if th.ordinates.iter().all(|y| *y == 0.0) {
        return Err(Error::DegenerateData("all ordinates are zero".into()));
    }
    let mean = resolve_center(th, opts).unwrap_or_else(|| weighted_center(th));
    let stride = if opts.symmetric { 2 } else { 3 };
    let span = th.centers[th.len() - 1] - th.centers[0];

    let mut current = fit_fixed_n(th, &[initial_component(th, mean)], opts)?;
    let mut best = current.clone();
    let mut sequence = vec![(1, current.f_statistic)];
    let mut declines = 0;

    for n in 2..=opts.max_components {
        if th.len() < n * stride + 2 {
            break;
        }
        let comps = current.model.components().to_vec();
        let narrow = comps[0];
        let broad = comps[comps.len() - 1];
        let narrower = ComponentGaussian { weight: narrow.weight / 5.0, mean: narrow.mean, width: narrow.width / 3.0 };
        let broader = ComponentGaussian { weight: broad.weight * 2.5, mean: broad.mean, width: broad.width * 3.0 };
        let (a, b) = rayon::join(
            || fit_fixed_n(th, &with_extra(&comps, narrower), opts),
            || fit_fixed_n(th, &with_extra(&comps, broader), opts),
        );
        let mut candidates: Vec<FitReport> = [a, b].into_iter().filter_map(Result::ok).collect();
        // Nested fallback: a faint extra component starts at the previous
        // optimum, so the residual sum cannot grow.
        if candidates.iter().all(|c| c.sse > current.sse) {
            let faint = ComponentGaussian { weight: narrow.weight * 1e-3, mean: narrow.mean, width: narrow.width / 2.0 };
            candidates.extend(fit_fixed_n(th, &with_extra(&comps, faint), opts).ok());
        }
        let Some(next) = candidates
            .into_iter()
            .filter(|c| (c.f_statistic.is_finite() || c.r2 == 1.0) && within_span(c, span))
            .max_by(|x, y| x.f_statistic.total_cmp(&y.f_statistic))
        else {
            break;
        };
        sequence.push((n, next.f_statistic));
        if next.f_statistic < current.f_statistic {
            declines += 1;
        } else {
            declines = 0;
        }
        if next.f_statistic > best.f_statistic {
            best = next.clone();
        }
        current = next;
        if declines >= 2 {
            break;
        }
    }
    best.f_sequence = sequence;
    Ok(best)
}
