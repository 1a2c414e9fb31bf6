mod commands;
mod input;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Fit, evaluate, sample and validate exponentiated Gaussian-sum densities.
#[derive(Debug, Parser)]
#[command(name = "thorne", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a model to variates, one per line.
    Fit(FitArgs),
    /// Evaluate a model at abscissae read from a file.
    Eval(EvalArgs),
    /// Draw variates from a model.
    Sample(SampleArgs),
    /// Mean, standard deviation, skew and kurtosis of a model.
    Moments(ModelArgs),
    /// Value-at-Risk and Expected Shortfall of a model.
    Risk(RiskArgs),
    /// Simulate stochastic paths driven by a model's components.
    Simulate(SimulateArgs),
    /// Run the synthetic end-to-end validation.
    Validate(ValidateArgs),
    /// Compare estimator errors over sample sizes.
    Benchmark(BenchmarkArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TailMode {
    /// Optimized histogram everywhere.
    None,
    /// Zero-bias kernel estimate beyond the tail onsets.
    Kernel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RiskTail {
    Lower,
    Upper,
    Both,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Output directory for the report, model and plot data.
    #[arg(long)]
    pub output: PathBuf,
    /// Fit differences of logs of successive positive values.
    #[arg(long)]
    pub log_returns: bool,
    /// Fit a common center for all components.
    #[arg(long)]
    pub symmetric: bool,
    #[arg(long, default_value_t = 10)]
    pub max_components: usize,
    /// Tail exponent for the histogram smoothness weights; estimated when absent.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, value_enum, default_value_t = TailMode::None)]
    pub tail: TailMode,
    /// Histogram bins per robust scale unit.
    #[arg(long)]
    pub bins: Option<f64>,
    /// Accepted for uniformity; fitting draws no random numbers.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Write here instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Abscissae, one per line.
    #[arg(long)]
    pub input: PathBuf,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct RiskArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Tail probability in (0, 0.5).
    #[arg(long, default_value_t = 0.01)]
    pub level: f64,
    #[arg(long, value_enum, default_value_t = RiskTail::Both)]
    pub tail: RiskTail,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 1.0)]
    pub x0: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    #[arg(long, default_value_t = 1000)]
    pub steps: usize,
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Print the per-component closed form instead of Euler paths.
    #[arg(long)]
    pub closed_form: bool,
    /// With --closed-form, evaluate the expression exactly as published.
    #[arg(long, requires = "closed_form")]
    pub literal: bool,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    /// Output directory for the report and plot data.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [100, 1000, 10000])]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
