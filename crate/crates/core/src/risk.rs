//! Value-at-Risk and Expected Shortfall of a fitted model, with losses
//! taken as the variate itself.

use crate::error::{Error, Result};
use crate::model::ThorneModel;
use crate::quadrature::{integrate, Tolerance};
use crate::stochastic::{simulate_ensemble, SdeSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tail {
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskReport {
    pub level: f64,
    pub tail: Tail,
    pub var: f64,
    pub expected_shortfall: f64,
}

fn check_level(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(Error::ProbabilityOutOfRange(alpha));
    }
    Ok(())
}

/// `quantile(α)` for the lower tail, `quantile(1 − α)` for the upper.
pub fn value_at_risk(model: &ThorneModel, alpha: f64, tail: Tail) -> Result<f64> {
    check_level(alpha)?;
    match tail {
        Tail::Lower => model.quantile(alpha),
        Tail::Upper => model.quantile(1.0 - alpha),
    }
}

/// `(1/α)·∫ x·pdf(x)` over the tail beyond the VaR.
pub fn expected_shortfall(model: &ThorneModel, alpha: f64, tail: Tail) -> Result<f64> {
    Ok(tail_integral(model, alpha, tail)?.1 / alpha)
}

/// `(VaR, ∫_tail x·pdf)`.
pub(crate) fn tail_integral(model: &ThorneModel, alpha: f64, tail: Tail) -> Result<(f64, f64)> {
    let var = value_at_risk(model, alpha, tail)?;
    let n = model.normalization_constant()?;
    let f = |x: f64| x * model.pdf_unnormalized(x) / n;
    let scale = var.abs().max(model.components()[model.len() - 1].width);
    let tol = Tolerance::relative(1e-12).with_abs(1e-15 * alpha * scale);
    let integral = match tail {
        Tail::Lower => integrate(f, f64::NEG_INFINITY, var, tol)?,
        Tail::Upper => integrate(f, var, f64::INFINITY, tol)?,
    };
    if !integral.value.is_finite() {
        return Err(Error::Quadrature { estimate: integral.value, error: integral.error });
    }
    Ok((var, integral.value))
}

pub fn risk_report(model: &ThorneModel, alpha: f64, tail: Tail) -> Result<RiskReport> {
    let (var, integral) = tail_integral(model, alpha, tail)?;
    Ok(RiskReport { level: alpha, tail, var, expected_shortfall: integral / alpha })
}

/// Maximum drawdown of each of `paths` simulated paths.
pub fn max_drawdown_distribution(spec: &SdeSpec, paths: usize, seed: u64) -> Result<Vec<f64>> {
    Ok(simulate_ensemble(spec, paths, seed)?.iter().map(|p| p.max_drawdown()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_checked() {
        let m = ThorneModel::single(1.0, 0.0, 1.0).unwrap();
        for a in [0.0, 0.5, -0.1, f64::NAN] {
            assert!(matches!(value_at_risk(&m, a, Tail::Lower), Err(Error::ProbabilityOutOfRange(_))));
        }
    }

    #[test]
    fn shortfall_beyond_var() {
        let m = ThorneModel::single(2.0, 0.3, 1.0).unwrap();
        let r = risk_report(&m, 0.05, Tail::Lower).unwrap();
        assert!(r.expected_shortfall <= r.var);
        let u = risk_report(&m, 0.05, Tail::Upper).unwrap();
        assert!(u.expected_shortfall >= u.var);
    }
}
