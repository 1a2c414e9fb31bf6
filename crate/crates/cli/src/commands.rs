use std::fmt::{self, Write as _};
use std::fs;
use std::path::Path;

use serde::Serialize;
use thorne::density::HistogramOptions;
use thorne::fit::{fit_data, FitOptions, PipelineConfig, PipelineResult, TailSubstitution};
use thorne::io::{to_precise_json, FitReportDoc, RiskDoc};
use thorne::stochastic::{ensemble_csv, path_seed, simulate_closed_form, simulate_ensemble, SdeSpec};
use thorne::validation::{amise_benchmark, benchmark_csv, run_validation, synthetic_pdf, BenchmarkConfig};
use thorne::{model_from_json, model_to_json, risk_report, Error, Tail, ThorneModel};

use crate::input::{log_returns, read_numbers};
use crate::{
    BenchmarkArgs, Command, EvalArgs, FitArgs, ModelArgs, RiskArgs, RiskTail, SampleArgs, SimulateArgs, TailMode,
    ValidateArgs,
};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Numerical(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::InvalidParameter(_) | Error::InvalidComponent { .. } | Error::ProbabilityOutOfRange(_) => {
                CliError::Usage(msg)
            }
            Error::DegenerateData(_) | Error::Parse(_) => CliError::Data(msg),
            Error::Quadrature { .. }
            | Error::Overflow { .. }
            | Error::RootFinding(_)
            | Error::NotConverged { .. }
            | Error::Bandwidth { .. }
            | Error::EnvelopeViolation { .. } => CliError::Numerical(msg),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Fit(a) => {
            let dir = a.output.clone();
            with_diagnostics(Some(&dir), fit(a))
        }
        Command::Eval(a) => eval(a),
        Command::Sample(a) => sample(a),
        Command::Moments(a) => moments(a),
        Command::Risk(a) => risk(a),
        Command::Simulate(a) => simulate(a),
        Command::Validate(a) => {
            let dir = a.output.clone();
            with_diagnostics(dir.as_deref(), validate(a))
        }
        Command::Benchmark(a) => benchmark(a),
    }
}

/// Writes `diagnostics.txt` into `dir` on numerical failure.
fn with_diagnostics(dir: Option<&Path>, result: Result<()>) -> Result<()> {
    if let (Some(dir), Err(CliError::Numerical(msg))) = (dir, &result) {
        if fs::create_dir_all(dir).is_ok() {
            let _ = fs::write(dir.join("diagnostics.txt"), format!("numerical failure: {msg}\n"));
        }
    }
    result
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}

fn emit(output: Option<&Path>, contents: &str) -> Result<()> {
    match output {
        Some(p) => write_file(p, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Usage(format!("cannot create {}: {e}", dir.display())))
}

fn load_model(args: &ModelArgs) -> Result<ThorneModel> {
    let text = fs::read_to_string(&args.model)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", args.model.display())))?;
    Ok(model_from_json(&text)?)
}

fn json<T: Serialize>(value: &T) -> Result<String> {
    Ok(to_precise_json(value)? + "\n")
}

fn fit(a: FitArgs) -> Result<()> {
    if a.max_components == 0 {
        return Err(CliError::Usage("--max-components must be at least 1".into()));
    }
    let raw = read_numbers(&a.input)?;
    let data = if a.log_returns { log_returns(&raw)? } else { raw };
    let cfg = PipelineConfig {
        alpha: a.alpha,
        histogram: HistogramOptions { bins_per_unit: a.bins, ..HistogramOptions::default() },
        fit: FitOptions { symmetric: a.symmetric, max_components: a.max_components, ..FitOptions::default() },
        tails: match a.tail {
            TailMode::None => TailSubstitution::None,
            TailMode::Kernel => TailSubstitution::Kernel { bias_tolerance: 0.05 },
        },
    };
    let result = fit_data(&data, &cfg)?;
    result.model().normalization_constant()?;
    create_dir(&a.output)?;
    let mut doc = FitReportDoc::new(&result.report, &result.transformed.centers);
    let o = &result.optimized;
    doc.notes = vec![
        ("input".into(), a.input.display().to_string()),
        ("log_returns".into(), a.log_returns.to_string()),
        ("sample_count".into(), data.len().to_string()),
        ("bin_policy".into(), a.bins.map_or("default".into(), |b| format!("{b} bins per robust scale unit"))),
        ("tail_alpha".into(), format!("{:.16e}", o.tail.alpha)),
        ("tail_onsets".into(), format!("{:.16e},{:.16e}", o.tail.lower_onset, o.tail.upper_onset)),
        ("smoothing_lambda".into(), format!("{:.16e}", o.lambda)),
        ("tails".into(), format!("{:?}", a.tail).to_lowercase()),
    ];
    for tail in [Tail::Lower, Tail::Upper] {
        if let Ok(r) = risk_report(result.model(), 0.01, tail) {
            doc.risk.push(RiskDoc::from(&r));
        }
    }
    write_file(&a.output.join("report.json"), &(doc.to_json()? + "\n"))?;
    write_file(&a.output.join("model.json"), &(model_to_json(result.model())? + "\n"))?;
    write_plot_data(&a.output, &result, None)
}

/// Histogram, curve overlays (linear and log10 columns) and transformed fit.
fn write_plot_data(dir: &Path, result: &PipelineResult, reference: Option<&dyn Fn(f64) -> f64>) -> Result<()> {
    let model = result.model();
    let n = model.normalization_constant()?;
    let h = &result.histogram;
    write_file(&dir.join("histogram.csv"), &h.to_csv())?;

    let log10 = |v: f64| if v > 0.0 { format!("{:.14e}", v.log10()) } else { "NA".into() };
    let mut overlay = String::from("x,histogram_density,model_density,log10_histogram,log10_model");
    if reference.is_some() {
        overlay.push_str(",reference_density,log10_reference");
    }
    overlay.push('\n');
    for (x, d) in h.centers().into_iter().zip(h.densities()) {
        let m = model.pdf_unnormalized(x) / n;
        let _ = write!(overlay, "{x:.14e},{d:.14e},{m:.14e},{},{}", log10(*d), log10(m));
        if let Some(r) = reference {
            let g = r(x);
            let _ = write!(overlay, ",{g:.14e},{}", log10(g));
        }
        overlay.push('\n');
    }
    write_file(&dir.join("overlay.csv"), &overlay)?;

    let (lo, hi) = (h.edges()[0], h.edges()[h.edges().len() - 1]);
    let pad = 0.1 * (hi - lo);
    let mut curve = String::from("x,density,log10_density\n");
    for k in 0..=2000 {
        let x = lo - pad + (hi - lo + 2.0 * pad) * k as f64 / 2000.0;
        let m = model.pdf_unnormalized(x) / n;
        let _ = writeln!(curve, "{x:.14e},{m:.14e},{}", log10(m));
    }
    write_file(&dir.join("curve.csv"), &curve)?;

    let t = &result.transformed;
    let mut tr = String::from("center,ordinate,fitted,residual\n");
    for ((x, y), (f, r)) in t.centers.iter().zip(&t.ordinates).zip(result.report.fitted.iter().zip(&result.report.residuals)) {
        let _ = writeln!(tr, "{x:.14e},{y:.14e},{f:.14e},{r:.14e}");
    }
    write_file(&dir.join("transformed.csv"), &tr)
}

fn eval(a: EvalArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let xs = read_numbers(&a.input)?;
    let n = model.normalization_constant()?;
    let mut out = String::from("x,log_sum,pdf,cdf\n");
    for x in xs {
        let cdf = model.cdf(x)?;
        let _ = writeln!(out, "{x:.16e},{:.16e},{:.16e},{cdf:.16e}", model.log_sum(x), model.pdf_unnormalized(x) / n);
    }
    emit(a.model.output.as_deref(), &out)
}

fn sample(a: SampleArgs) -> Result<()> {
    if a.count == 0 {
        return Err(CliError::Usage("--count must be at least 1".into()));
    }
    let model = load_model(&a.model)?;
    let mut out = String::new();
    for v in model.sample(a.count, a.seed)? {
        let _ = writeln!(out, "{v:.16e}");
    }
    emit(a.model.output.as_deref(), &out)
}

#[derive(Serialize)]
struct MomentsDoc {
    mean: f64,
    std_dev: f64,
    skew: f64,
    /// `null` when the fourth moment fails the convergence test.
    kurtosis: Option<f64>,
    normalization: f64,
}

fn moments(a: ModelArgs) -> Result<()> {
    let model = load_model(&a)?;
    let m = model.moments()?;
    let doc = MomentsDoc {
        mean: m.mean,
        std_dev: m.std_dev,
        skew: m.skew,
        kurtosis: m.kurtosis,
        normalization: model.normalization_constant()?,
    };
    emit(a.output.as_deref(), &json(&doc)?)
}

fn risk(a: RiskArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let tails: &[Tail] = match a.tail {
        RiskTail::Lower => &[Tail::Lower],
        RiskTail::Upper => &[Tail::Upper],
        RiskTail::Both => &[Tail::Lower, Tail::Upper],
    };
    let docs = tails
        .iter()
        .map(|&t| Ok(RiskDoc::from(&risk_report(&model, a.level, t)?)))
        .collect::<Result<Vec<_>>>()?;
    emit(a.model.output.as_deref(), &json(&docs)?)
}

fn simulate(a: SimulateArgs) -> Result<()> {
    if a.count == 0 {
        return Err(CliError::Usage("--count must be at least 1".into()));
    }
    let model = load_model(&a.model)?;
    let spec = SdeSpec::from_model(&model, a.x0, a.dt, a.steps)?;
    let paths = if a.closed_form {
        let times: Vec<f64> = (0..=a.steps).map(|k| k as f64 * a.dt).collect();
        (0..a.count)
            .map(|i| simulate_closed_form(&spec, &times, path_seed(a.seed, i), !a.literal))
            .collect::<thorne::Result<Vec<_>>>()?
    } else {
        simulate_ensemble(&spec, a.count, a.seed)?
    };
    let crossings: usize = paths.iter().map(|p| p.zero_crossings).sum();
    if crossings > 0 {
        eprintln!("warning: {crossings} zero crossings across {} paths", paths.len());
    }
    emit(a.model.output.as_deref(), &ensemble_csv(&paths))
}

fn validate(a: ValidateArgs) -> Result<()> {
    if a.samples < 1000 {
        return Err(CliError::Usage("--samples must be at least 1000".into()));
    }
    let report = run_validation(a.samples, a.seed)?;
    let text = json(&report)?;
    let mut summary = String::new();
    for c in &report.comparisons {
        let published = c.published.map_or("-".into(), |p| format!("{p}"));
        let _ = writeln!(
            summary,
            "[{:?}] step {} {}: computed {:.6e}, published {published} ({})",
            c.status, c.step, c.quantity, c.computed, c.criterion
        );
    }
    match &a.output {
        Some(dir) => {
            create_dir(dir)?;
            write_file(&dir.join("validation.json"), &text)?;
            write_file(&dir.join("model.json"), &(model_to_json(report.pipeline.model())? + "\n"))?;
            write_plot_data(dir, &report.pipeline, Some(&synthetic_pdf))?;
            print!("{summary}");
        }
        None => print!("{text}"),
    }
    if report.passed() {
        Ok(())
    } else {
        Err(CliError::Numerical("one or more validation checks failed".into()))
    }
}

fn benchmark(a: BenchmarkArgs) -> Result<()> {
    if a.sizes.is_empty() || a.sizes.contains(&0) || a.trials == 0 {
        return Err(CliError::Usage("--sizes and --trials must be positive".into()));
    }
    let mut cfg = BenchmarkConfig::new(a.sizes.clone(), a.trials, a.seed);
    cfg.sizes.sort_unstable();
    let rows = amise_benchmark(&cfg)?;
    emit(a.output.as_deref(), &benchmark_csv(&rows))
}
