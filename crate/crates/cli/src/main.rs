use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use scrateless::density_evolution::DeConfig;
use scrateless::{EnsembleParams, Error};

mod commands;
mod output;

#[derive(Parser, Debug)]
#[command(
    name = "scrateless",
    version,
    about = "Density evolution thresholds, stability bounds and Monte Carlo runs for spatially-coupled precoded rateless codes on the erasure channel"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Overhead threshold of one ensemble by density evolution.
    Threshold(ThresholdArgs),
    /// Stability lower bounds and spectral sandwich for one or more L.
    Bounds(BoundsArgs),
    /// Monte Carlo decoding of sampled finite-length codes.
    Simulate(SimulateArgs),
    /// Threshold sweep over an L grid, optionally for several d_r.
    Sweep(SweepArgs),
}

#[derive(Args, Debug, Clone)]
struct EnsembleArgs {
    /// Precode bit degree.
    #[arg(long, default_value_t = 2)]
    dl: usize,
    /// Precode check degree.
    #[arg(long, default_value_t = 3)]
    dr: usize,
    /// Channel node degree.
    #[arg(long)]
    dg: usize,
    /// Coupling width.
    #[arg(long, default_value_t = 2)]
    w: usize,
    /// Channel erasure probability.
    #[arg(long, default_value_t = 0.5)]
    eps: f64,
}

#[derive(Args, Debug, Clone)]
struct DeArgs {
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    fp_tol: Option<f64>,
    #[arg(long)]
    success_target: Option<f64>,
    #[arg(long)]
    bisect_tol: Option<f64>,
    /// Run density evolution even with d_g = 1 (the threshold does not exist there).
    #[arg(long)]
    allow_dg1: bool,
}

impl DeArgs {
    fn config(&self) -> DeConfig {
        let d = DeConfig::default();
        DeConfig {
            max_iterations: self.max_iter.unwrap_or(d.max_iterations),
            fixed_point_tol: self.fp_tol.unwrap_or(d.fixed_point_tol),
            success_target: self.success_target.unwrap_or(d.success_target),
            bisection_tol: self.bisect_tol.unwrap_or(d.bisection_tol),
            allow_degree_one: self.allow_dg1,
        }
    }
}

#[derive(Args, Debug, Clone)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct ThresholdArgs {
    #[command(flatten)]
    ensemble: EnsembleArgs,
    /// Coupling length.
    #[arg(long = "L")]
    l: usize,
    #[command(flatten)]
    de: DeArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct BoundsArgs {
    #[command(flatten)]
    ensemble: EnsembleArgs,
    #[arg(long = "L", conflicts_with = "l_grid")]
    l: Option<usize>,
    /// Comma-separated coupling lengths.
    #[arg(long = "L-grid", value_delimiter = ',')]
    l_grid: Vec<usize>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    ensemble: EnsembleArgs,
    /// Comma-separated coupling lengths.
    #[arg(long = "L-grid", value_delimiter = ',', required = true)]
    l_grid: Vec<usize>,
    /// Comma-separated check degrees; one threshold column per value.
    #[arg(long = "dr-grid", value_delimiter = ',')]
    dr_grid: Vec<usize>,
    #[command(flatten)]
    de: DeArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    ensemble: EnsembleArgs,
    #[arg(long = "L")]
    l: usize,
    /// Bits per section.
    #[arg(long = "M")]
    m: usize,
    #[arg(long, allow_negative_numbers = true, conflicts_with = "alpha_grid")]
    alpha: Option<f64>,
    /// Comma-separated overheads.
    #[arg(
        long = "alpha-grid",
        value_delimiter = ',',
        allow_negative_numbers = true
    )]
    alpha_grid: Vec<f64>,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Largest unresolved bit fraction counted as a success.
    #[arg(long, default_value_t = scrateless::codec::DEFAULT_RESIDUAL_TOLERANCE)]
    residual_tol: f64,
    /// Transmit the all-zero codeword instead of encoding random information bits.
    #[arg(long)]
    all_zero: bool,
    /// Allow M d_l not divisible by d_r by leaving a few checks one socket short.
    #[arg(long)]
    pad_checks: bool,
    #[command(flatten)]
    output: OutputArgs,
}

/// Everything needed to rerun an experiment; written into every output header.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentSpec {
    pub command: &'static str,
    pub dl: usize,
    pub dr: usize,
    pub dg: usize,
    pub w: usize,
    pub eps: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub l_values: Vec<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub dr_values: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub de: Option<DeConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationSpec>,
    pub format: Format,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationSpec {
    pub m: usize,
    pub alphas: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub residual_tolerance: f64,
    pub all_zero: bool,
    pub pad_checks: bool,
}

impl ExperimentSpec {
    fn new(command: &'static str, e: &EnsembleArgs, o: &OutputArgs) -> Self {
        Self {
            command,
            dl: e.dl,
            dr: e.dr,
            dg: e.dg,
            w: e.w,
            eps: e.eps,
            l_values: Vec::new(),
            dr_values: Vec::new(),
            de: None,
            simulation: None,
            format: o.format,
            out: o.out.clone(),
        }
    }

    /// Ensemble parameters for one `(d_r, L)` pair.
    pub fn params(&self, dr: usize, l: usize) -> scrateless::Result<EnsembleParams> {
        EnsembleParams::new(self.dl, dr, self.dg, l, self.w, self.eps)
    }

    pub fn seed(&self) -> Option<u64> {
        self.simulation.as_ref().map(|s| s.seed)
    }
}

/// Failure of a command, carrying the process exit code.
#[derive(Debug)]
pub enum Failure {
    Validation(String),
    Computation(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 2,
            Failure::Computation(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Validation(m) | Failure::Computation(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParams(_)
            | Error::NonPositiveRate { .. }
            | Error::DegreeOneChannel
            | Error::SizeTooSmall { .. }
            | Error::InvalidM { .. }
            | Error::InvalidArgument(_) => Failure::Validation(e.to_string()),
            Error::NoSuccessInBracket { .. }
            | Error::NonMonotoneBracket { .. }
            | Error::NonConvergence { .. } => Failure::Computation(e.to_string()),
        }
    }
}

fn sorted(values: &[usize]) -> Vec<usize> {
    let mut v = values.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Threshold(a) => {
            let mut spec = ExperimentSpec::new("threshold", &a.ensemble, &a.output);
            spec.l_values = vec![a.l];
            spec.de = Some(a.de.config());
            commands::threshold(&spec)
        }
        Command::Bounds(a) => {
            let mut spec = ExperimentSpec::new("bounds", &a.ensemble, &a.output);
            spec.l_values = match a.l {
                Some(l) => vec![l],
                None => sorted(&a.l_grid),
            };
            if spec.l_values.is_empty() {
                return Err(Failure::Validation("bounds needs --L or --L-grid".into()));
            }
            commands::bounds(&spec)
        }
        Command::Sweep(a) => {
            let mut spec = ExperimentSpec::new("sweep", &a.ensemble, &a.output);
            spec.l_values = sorted(&a.l_grid);
            spec.dr_values = sorted(&a.dr_grid);
            spec.de = Some(a.de.config());
            commands::sweep(&spec)
        }
        Command::Simulate(a) => {
            let mut spec = ExperimentSpec::new("simulate", &a.ensemble, &a.output);
            spec.l_values = vec![a.l];
            let alphas = match a.alpha {
                Some(x) => vec![x],
                None => a.alpha_grid.clone(),
            };
            if alphas.is_empty() {
                return Err(Failure::Validation(
                    "simulate needs --alpha or --alpha-grid".into(),
                ));
            }
            spec.simulation = Some(SimulationSpec {
                m: a.m,
                alphas,
                trials: a.trials,
                seed: a.seed,
                residual_tolerance: a.residual_tol,
                all_zero: a.all_zero,
                pad_checks: a.pad_checks,
            });
            commands::simulate(&spec)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
