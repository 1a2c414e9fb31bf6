use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fit::diagnostics::build_report;
use crate::fit::{FitOptions, FitReport, TransformedHistogram};
use crate::model::{ComponentGaussian, MAX_LOG_SUM, SQRT_2PI};

/// Least-squares objective `Σ (y_j − S(x_j))²` over packed parameters
/// `[ln w, μ, ln σ]` per component (`μ` omitted in symmetric mode).
#[derive(Debug, Clone)]
pub struct FitProblem<'a> {
    pub x: &'a [f64],
    pub y: &'a [f64],
    pub n: usize,
    /// Common mean when symmetric.
    pub fixed_center: Option<f64>,
}

impl<'a> FitProblem<'a> {
    pub fn new(th: &'a TransformedHistogram, n: usize, fixed_center: Option<f64>) -> Self {
        Self { x: &th.centers, y: &th.ordinates, n, fixed_center }
    }

    pub fn stride(&self) -> usize {
        if self.fixed_center.is_some() {
            2
        } else {
            3
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.n * self.stride()
    }

    pub fn pack(&self, comps: &[ComponentGaussian]) -> Vec<f64> {
        comps
            .iter()
            .flat_map(|c| match self.fixed_center {
                Some(_) => vec![c.weight.ln(), c.width.ln()],
                None => vec![c.weight.ln(), c.mean, c.width.ln()],
            })
            .collect()
    }

    pub fn unpack(&self, p: &[f64]) -> Vec<ComponentGaussian> {
        p.chunks(self.stride())
            .map(|c| match self.fixed_center {
                Some(m) => ComponentGaussian { weight: c[0].exp(), mean: m, width: c[1].exp() },
                None => ComponentGaussian { weight: c[0].exp(), mean: c[1], width: c[2].exp() },
            })
            .collect()
    }

    /// Residuals `y − S` and, if requested, the Jacobian of `S`.
    fn evaluate(&self, p: &[f64], jacobian: Option<&mut DMatrix<f64>>) -> Vec<f64> {
        let comps = self.unpack(p);
        let stride = self.stride();
        let mut jac = jacobian;
        self.x
            .iter()
            .zip(self.y)
            .enumerate()
            .map(|(row, (&x, &y))| {
                let mut s = 0.0;
                for (k, c) in comps.iter().enumerate() {
                    let z = (x - c.mean) / c.width;
                    let v = c.weight / (c.width * SQRT_2PI) * (-0.5 * z * z).exp();
                    s += v;
                    if let Some(j) = jac.as_deref_mut() {
                        let col = k * stride;
                        j[(row, col)] = v;
                        if stride == 3 {
                            j[(row, col + 1)] = v * z / c.width;
                            j[(row, col + 2)] = v * (z * z - 1.0);
                        } else {
                            j[(row, col + 1)] = v * (z * z - 1.0);
                        }
                    }
                }
                y - s
            })
            .collect()
    }

    pub fn residuals(&self, p: &[f64]) -> Vec<f64> {
        self.evaluate(p, None)
    }

    /// Jacobian of `S` with respect to the packed parameters.
    pub fn jacobian(&self, p: &[f64]) -> DMatrix<f64> {
        let mut j = DMatrix::zeros(self.x.len(), p.len());
        self.evaluate(p, Some(&mut j));
        j
    }

    /// Whether the parameters give a curve whose exponential is finite.
    pub fn representable(&self, p: &[f64]) -> bool {
        let peak: f64 = self.unpack(p).iter().map(ComponentGaussian::peak).sum();
        peak <= MAX_LOG_SUM
    }

    pub fn objective(&self, p: &[f64]) -> f64 {
        self.residuals(p).iter().map(|r| r * r).sum()
    }

    /// Analytic gradient `−2·Jᵀr`.
    pub fn gradient(&self, p: &[f64]) -> Vec<f64> {
        let mut j = DMatrix::zeros(self.x.len(), p.len());
        let r = DVector::from_vec(self.evaluate(p, Some(&mut j)));
        (j.transpose() * r * -2.0).iter().copied().collect()
    }
}

/// Outcome of a Levenberg–Marquardt run.
#[derive(Debug, Clone)]
pub(crate) struct LmOutcome {
    pub params: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

pub(crate) fn levenberg_marquardt(problem: &FitProblem, start: Vec<f64>, max_iter: usize) -> LmOutcome {
    let mut p = start;
    let mut sse = problem.objective(&p);
    let mut damping = 1e-3;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let mut j = DMatrix::zeros(problem.x.len(), p.len());
        let r = DVector::from_vec(problem.evaluate(&p, Some(&mut j)));
        let jtj = j.transpose() * &j;
        let jtr = j.transpose() * r;
        let mut a = jtj.clone();
        for i in 0..p.len() {
            a[(i, i)] += damping * jtj[(i, i)].max(1e-300);
        }
        let step = match a.cholesky() {
            Some(ch) => ch.solve(&jtr),
            None => {
                damping *= 10.0;
                if damping > 1e16 {
                    break;
                }
                continue;
            }
        };
        let step_norm = step.norm();
        let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
        let trial_sse = problem.objective(&trial);
        let p_norm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
        if trial_sse.is_finite() && trial_sse <= sse && problem.representable(&trial) {
            let decrease = sse - trial_sse;
            p = trial;
            sse = trial_sse;
            damping = (damping / 10.0).max(1e-15);
            if decrease <= 1e-12 * sse || step_norm < 1e-10 * (p_norm + 1e-10) {
                return LmOutcome { params: p, iterations, converged: true };
            }
        } else {
            if step_norm < 1e-10 * (p_norm + 1e-10) {
                return LmOutcome { params: p, iterations, converged: true };
            }
            damping *= 10.0;
            if damping > 1e16 {
                break;
            }
        }
    }
    LmOutcome { params: p, iterations, converged: false }
}

/// Fits `init.len()` components from the given starting point.
pub fn fit_fixed_n(th: &TransformedHistogram, init: &[ComponentGaussian], opts: &FitOptions) -> Result<FitReport> {
    let n = init.len();
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one initial component".into()));
    }
    let center = resolve_center(th, opts);
    let problem = FitProblem::new(th, n, center);
    let p = problem.parameter_count();
    if th.len() < p + 2 {
        return Err(Error::DegenerateData(format!("{} bins cannot support {p} parameters", th.len())));
    }
    let start = problem.pack(init);
    if start.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("initial components must have positive weights and widths".into()));
    }
    let outcome = levenberg_marquardt(&problem, start, opts.max_iterations);
    build_report(th, &problem, &outcome)
}

pub(crate) fn resolve_center(th: &TransformedHistogram, opts: &FitOptions) -> Option<f64> {
    if !opts.symmetric {
        return None;
    }
    Some(opts.center.unwrap_or_else(|| weighted_center(th)))
}

pub(crate) fn weighted_center(th: &TransformedHistogram) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for ((x, y), w) in th.centers.iter().zip(&th.ordinates).zip(&th.widths) {
        num += x * y * w;
        den += y * w;
    }
    num / den
}
