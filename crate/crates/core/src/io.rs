//! JSON documents for models and fit reports.
//!
//! Reals are written with 17 significant digits, which round-trips every
//! `f64` exactly.

use std::io;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, Serializer};

use crate::error::{Error, Result};
use crate::fit::FitReport;
use crate::model::{ComponentGaussian, ModelOptions, ThorneModel};
use crate::risk::{RiskReport, Tail};

pub const SCHEMA_VERSION: u32 = 1;

/// JSON formatter writing floats as `d.dddddddddddddddde±x`.
#[derive(Debug, Clone, Copy, Default)]
pub struct PreciseFormatter;

impl Formatter for PreciseFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

/// Serializes with [`PreciseFormatter`].
pub fn to_precise_json<T: Serialize>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = Serializer::with_formatter(&mut out, PreciseFormatter);
    value.serialize(&mut ser).map_err(|e| Error::Parse(e.to_string()))?;
    String::from_utf8(out).map_err(|e| Error::Parse(e.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentDoc {
    pub weight: f64,
    pub mean: f64,
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDoc {
    pub schema_version: u32,
    pub components: Vec<ComponentDoc>,
    #[serde(default = "default_true")]
    pub monotone_weights: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalization: Option<f64>,
}

fn default_true() -> bool {
    true
}

impl ModelDoc {
    pub fn from_model(model: &ThorneModel) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            components: model
                .components()
                .iter()
                .map(|c| ComponentDoc { weight: c.weight, mean: c.mean, width: c.width })
                .collect(),
            monotone_weights: model.options().monotone_weights,
            normalization: model.cached_normalization(),
        }
    }

    pub fn to_model(&self) -> Result<ThorneModel> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Parse(format!("unsupported schema_version {}", self.schema_version)));
        }
        let comps = self
            .components
            .iter()
            .map(|c| ComponentGaussian::new(c.weight, c.mean, c.width))
            .collect::<Result<Vec<_>>>()?;
        let model = ThorneModel::with_options(comps, ModelOptions { monotone_weights: self.monotone_weights })?;
        if let Some(n) = self.normalization {
            model.preset_normalization(n)?;
        }
        Ok(model)
    }
}

pub fn model_to_json(model: &ThorneModel) -> Result<String> {
    to_precise_json(&ModelDoc::from_model(model))
}

pub fn model_from_json(text: &str) -> Result<ThorneModel> {
    let doc: ModelDoc = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    doc.to_model()
}

/// One row of the component table, in weight, center, width order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentRow {
    pub weight: f64,
    pub center: f64,
    pub width: f64,
    pub weight_t: Option<f64>,
    pub center_t: Option<f64>,
    pub width_t: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalityDoc {
    pub anderson_darling: f64,
    pub p_value: f64,
    pub ppcc: f64,
    pub normal_at_5pct: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskDoc {
    pub level: f64,
    pub tail: String,
    pub var: f64,
    pub expected_shortfall: f64,
}

impl From<&RiskReport> for RiskDoc {
    fn from(r: &RiskReport) -> Self {
        let tail = match r.tail {
            Tail::Lower => "lower",
            Tail::Upper => "upper",
        };
        Self { level: r.level, tail: tail.into(), var: r.var, expected_shortfall: r.expected_shortfall }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReportDoc {
    pub schema_version: u32,
    pub model: ModelDoc,
    pub n_components: usize,
    pub components: Vec<ComponentRow>,
    pub r2: f64,
    pub r2_adjusted: f64,
    pub std_error: f64,
    pub f_statistic: f64,
    pub sse: f64,
    pub ise_transformed: f64,
    pub ise_density: f64,
    pub normality: NormalityDoc,
    pub converged: bool,
    pub iterations: usize,
    pub ill_conditioned: bool,
    pub f_sequence: Vec<(usize, f64)>,
    pub d_min: f64,
    pub bin_count: usize,
    /// Bin centers at which `fitted` and `residuals` are given.
    pub centers: Vec<f64>,
    pub fitted: Vec<f64>,
    pub residuals: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub risk: Vec<RiskDoc>,
    /// Free-form provenance such as the bin policy and tail exponent.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<(String, String)>,
}

impl FitReportDoc {
    pub fn new(report: &FitReport, centers: &[f64]) -> Self {
        let components = report
            .model
            .components()
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let t = |name: &str| {
                    report
                        .t_stats
                        .as_ref()
                        .and_then(|s| s.iter().find(|p| p.component == i && p.name == name))
                        .map(|p| p.t)
                };
                ComponentRow {
                    weight: c.weight,
                    center: c.mean,
                    width: c.width,
                    weight_t: t("weight"),
                    center_t: t("mean"),
                    width_t: t("width"),
                }
            })
            .collect();
        Self {
            schema_version: SCHEMA_VERSION,
            model: ModelDoc::from_model(&report.model),
            n_components: report.n_components,
            components,
            r2: report.r2,
            r2_adjusted: report.r2_adjusted,
            std_error: report.std_error,
            f_statistic: report.f_statistic,
            sse: report.sse,
            ise_transformed: report.ise_transformed,
            ise_density: report.ise_density,
            normality: NormalityDoc {
                anderson_darling: report.normality.statistic,
                p_value: report.normality.p_value,
                ppcc: report.normality.ppcc,
                normal_at_5pct: report.normality.normal,
            },
            converged: report.converged,
            iterations: report.iterations,
            ill_conditioned: report.ill_conditioned,
            f_sequence: report.f_sequence.clone(),
            d_min: report.d_min,
            bin_count: report.bin_count,
            centers: centers.to_vec(),
            fitted: report.fitted.clone(),
            residuals: report.residuals.clone(),
            risk: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        to_precise_json(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }
}
