//! Linear weight–width geometry of component sequences.
//!
//! When fitted components fall on a line `w = a·σ + b` in the (width, weight)
//! plane and consecutive segment lengths along that line grow by a fixed
//! ratio, a whole component ladder follows from five numbers: the line, the
//! first width, the first segment length and the ratio.

use crate::error::{Error, Result};
use crate::model::ComponentGaussian;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComponentGeometry {
    pub slope: f64,
    pub intercept: f64,
    pub base_width: f64,
    /// Length of the segment from component 1 to component 2 in the
    /// (width, weight) plane.
    pub first_segment: f64,
    pub segment_ratio: f64,
}

/// Output of [`analyze_component_geometry`].
#[derive(Debug, Clone, PartialEq)]
pub struct GeometryAnalysis {
    pub geometry: ComponentGeometry,
    /// `len(segment k+1) / len(segment k)` for each adjacent pair.
    pub segment_ratios: Vec<f64>,
    pub segment_lengths: Vec<f64>,
    pub r_squared: f64,
}

impl ComponentGeometry {
    /// Line through two seed points with the given ratio.
    pub fn from_seed(p1: (f64, f64), p2: (f64, f64), segment_ratio: f64) -> Result<Self> {
        let dx = p2.0 - p1.0;
        if dx == 0.0 {
            return Err(Error::InvalidParameter("seed points share a width".into()));
        }
        let slope = (p2.1 - p1.1) / dx;
        Ok(Self {
            slope,
            intercept: p1.1 - slope * p1.0,
            base_width: p1.0,
            first_segment: dx.hypot(p2.1 - p1.1),
            segment_ratio,
        })
    }

    fn width_step(&self) -> f64 {
        self.first_segment / self.slope.hypot(1.0)
    }

    /// Widths of the first `n` components.
    pub fn widths(&self, n: usize) -> Vec<f64> {
        let step = self.width_step();
        let mut out = Vec::with_capacity(n);
        let mut width = self.base_width;
        let mut seg = step;
        for _ in 0..n {
            out.push(width);
            width += seg;
            seg *= self.segment_ratio;
        }
        out
    }
}

/// Generates `n` components on the geometry's line; all means are `mean`
/// unless per-component `means` are given.
pub fn generate_components(
    geom: &ComponentGeometry,
    n: usize,
    mean: f64,
    means: Option<&[f64]>,
) -> Result<Vec<ComponentGaussian>> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 components, got {n}")));
    }
    if !(geom.segment_ratio > 0.0 && geom.first_segment > 0.0) {
        return Err(Error::InvalidParameter("segment ratio and first segment must be positive".into()));
    }
    if let Some(m) = means {
        if m.len() != n {
            return Err(Error::InvalidParameter(format!("{} means for {n} components", m.len())));
        }
    }
    geom.widths(n)
        .into_iter()
        .enumerate()
        .map(|(i, width)| {
            let weight = geom.slope * width + geom.intercept;
            if !(width > 0.0 && weight > 0.0) {
                return Err(Error::InvalidComponent {
                    index: i,
                    reason: format!("generated width {width} / weight {weight} not positive"),
                });
            }
            let mean = means.map_or(mean, |m| m[i]);
            Ok(ComponentGaussian { weight, mean, width })
        })
        .collect()
}

/// Least-squares line `weight = a·width + b` through `(width, weight)`
/// points, with segment-length ratios between consecutive points.
pub fn analyze_component_geometry(points: &[(f64, f64)]) -> Result<GeometryAnalysis> {
    if points.len() < 3 {
        return Err(Error::InvalidParameter(format!("need at least 3 points, got {}", points.len())));
    }
    let lengths: Vec<f64> = points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0).hypot(w[1].1 - w[0].1))
        .collect();
    if let Some(i) = lengths.iter().position(|&l| l == 0.0) {
        return Err(Error::InvalidComponent { index: i + 1, reason: "duplicate point".into() });
    }

    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("all points share one width".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };

    let segment_ratios: Vec<f64> = lengths.windows(2).map(|w| w[1] / w[0]).collect();
    let log_mean = segment_ratios.iter().map(|r| r.ln()).sum::<f64>() / segment_ratios.len() as f64;

    Ok(GeometryAnalysis {
        geometry: ComponentGeometry {
            slope,
            intercept,
            base_width: points[0].0,
            first_segment: lengths[0],
            segment_ratio: log_mean.exp(),
        },
        segment_ratios,
        segment_lengths: lengths,
        r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_input() {
        assert!(analyze_component_geometry(&[(1.0, 1.0), (2.0, 2.0)]).is_err());
        assert!(analyze_component_geometry(&[(1.0, 1.0), (1.0, 1.0), (2.0, 2.0)]).is_err());
        let g = ComponentGeometry::from_seed((1.0, 1.0), (2.0, 3.0), 2.0).unwrap();
        assert!(generate_components(&g, 1, 0.0, None).is_err());
    }

    #[test]
    fn negative_generated_weight_names_index() {
        let g = ComponentGeometry { slope: -1.0, intercept: 3.0, base_width: 1.0, first_segment: 2.0f64.sqrt(), segment_ratio: 2.0 };
        match generate_components(&g, 4, 0.0, None) {
            Err(Error::InvalidComponent { index, .. }) => assert_eq!(index, 2),
            other => panic!("unexpected {other:?}"),
        }
    }
}
