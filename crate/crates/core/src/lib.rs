//! Exponentiated Gaussian-sum ("log-log tiered Gaussian") densities for
//! heavy-tailed data.
//!
//! A model's log-density-plus-one is a positive weighted sum of Gaussians,
//! `ln(f(x) + 1) = Σ w_i φ((x − μ_i)/σ_i)/σ_i`. The crate covers evaluation
//! ([`model`]), density estimation from raw data ([`density`]), least-squares
//! fitting with F-statistic model selection ([`fit`]), path simulation
//! ([`stochastic`]), risk measures ([`risk`]) and a synthetic validation and
//! benchmark harness ([`validation`]).

pub mod density;
pub mod error;
pub mod fit;
pub mod geometry;
pub mod io;
pub mod model;
pub mod quadrature;
pub mod risk;
pub mod stochastic;
pub mod truncated;
pub mod validation;

pub use error::{Error, Result};
pub use geometry::{analyze_component_geometry, generate_components, ComponentGeometry, GeometryAnalysis};
pub use io::{model_from_json, model_to_json, FitReportDoc, ModelDoc};
pub use model::{ComponentGaussian, ModelOptions, MomentSummary, ThorneModel};
pub use truncated::{thorne_constant, TruncatedModel, PRINTED_THORNE_CONSTANT};
pub use risk::{expected_shortfall, risk_report, value_at_risk, RiskReport, Tail};
pub use stochastic::{simulate_closed_form, simulate_euler, SamplePath, SdeComponent, SdeSpec};
