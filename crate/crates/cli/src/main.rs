mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use divgen::Error;

#[derive(Parser, Debug)]
#[command(
    name = "divgen",
    version,
    about = "Generalized statistics for divergence-based likelihoods",
    arg_required_else_help = true
)]
pub struct Cli {
    /// Worker threads for parallel sweeps (falls back to DIVGEN_THREADS).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Write the result here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Divergence between two family members.
    Divergence(DivergenceArgs),
    /// Generalized sufficiency of a statistic on a finite sample space.
    Sufficiency(FiniteArgs),
    /// Deformed distribution over the n-sample space.
    Deform(DeformArgs),
    /// Generalized completeness of a statistic.
    Complete(CompleteArgs),
    /// Minimum DPD estimate from a data file.
    Mdpde(MdpdeArgs),
    /// Deformed risk of a reliability estimator.
    Risk(RiskArgs),
    /// Asymptotic expected deficiency of the MDPDE relative to the UMVUE.
    Aed(AedArgs),
    /// Fit risk ≈ a/n + b/n² to a CSV of n,risk.
    RiskFit(RiskFitArgs),
    /// Stress-strength decision between MDPDE and UMVUE.
    Stress(StressArgs),
    /// Stress-strength decision over a μ range, as CSV.
    StressCurve(StressCurveArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Kind {
    Kl,
    Dpd,
    Ldpd,
}

#[derive(Args, Debug)]
pub struct DivergenceArgs {
    #[arg(long, value_enum)]
    pub kind: Kind,
    #[arg(long, default_value_t = 2.0)]
    pub alpha: f64,
    /// True distribution, e.g. `bernoulli@0.3`.
    #[arg(long)]
    pub g: String,
    /// Model distribution.
    #[arg(long)]
    pub f: String,
}

#[derive(Args, Debug)]
pub struct FiniteArgs {
    /// `bernoulli`, `bernoulli-malpha`, `bernoulli-balpha`, `student:nu=V`, `normal`, or a TOML file.
    #[arg(long)]
    pub family: String,
    /// `log`, `dpd`, `ldpd` or `dpd-sum`; defaults to the family's usual choice.
    #[arg(long)]
    pub glf: Option<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// `mean`, `sum`, `identity`, `coordinate:i`, `unequal:i,j` (1-based), `moments`, `constant`.
    #[arg(long, default_value = "mean")]
    pub statistic: String,
    #[arg(long)]
    pub n: usize,
}

#[derive(Args, Debug)]
pub struct DeformArgs {
    #[arg(long)]
    pub family: String,
    #[arg(long)]
    pub glf: Option<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub statistic: Option<String>,
    /// Include the rational-function weights when they exist.
    #[arg(long)]
    pub exact: bool,
}

#[derive(Args, Debug)]
pub struct CompleteArgs {
    #[command(flatten)]
    pub finite: FiniteArgs,
    /// Write the coefficient matrix (rows: powers of λ) as CSV.
    #[arg(long)]
    pub emit_matrix: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct MdpdeArgs {
    #[arg(long)]
    pub family: String,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Newline-delimited numeric sample.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, default_value_t = 60)]
    pub max_iter: usize,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum EstimatorKind {
    Mdpde,
    Umvue,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Method {
    Quad,
    Mc,
}

#[derive(Args, Debug)]
pub struct RiskArgs {
    #[arg(long, value_enum)]
    pub estimator: EstimatorKind,
    #[arg(long, allow_hyphen_values = true)]
    pub mu: f64,
    #[arg(long)]
    pub nu: f64,
    #[arg(long)]
    pub n: usize,
    #[arg(long, value_enum, default_value = "quad")]
    pub method: Method,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100_000)]
    pub reps: usize,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Estimand {
    Reliability,
    Mean,
}

#[derive(Args, Debug)]
pub struct AedArgs {
    #[arg(long, default_value = "student")]
    pub family: String,
    #[arg(long)]
    pub nu: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub mu: f64,
    #[arg(long, value_enum, default_value = "reliability")]
    pub estimand: Estimand,
}

#[derive(Args, Debug)]
pub struct RiskFitArgs {
    /// CSV with columns n,risk (header optional).
    #[arg(long)]
    pub data: PathBuf,
}

#[derive(Args, Debug)]
pub struct StressArgs {
    #[arg(long)]
    pub nu: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub mu: f64,
    #[arg(long)]
    pub n: Option<usize>,
    /// Strength-minus-stress observations; Ȳ and n are taken from here.
    #[arg(long)]
    pub data: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct StressCurveArgs {
    #[arg(long)]
    pub nu: f64,
    /// `a:b:step`
    #[arg(long, allow_hyphen_values = true)]
    pub mu_range: String,
}

fn exit_code(e: &Error) -> u8 {
    if e.is_usage() {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("divgen: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
