//! `hdmi`: estimate mutual information from classification performance.

mod commands;

use clap::{Args, Parser, Subcommand};
use hdmi_core::verify::Suite;
use hdmi_core::EstimateMethod;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "hdmi",
    version,
    about = "Mutual information from classification error"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate π_k(c) or invert it for an error rate.
    Pik(PikArgs),
    /// Estimates from a confusion matrix CSV, as JSON lines.
    Estimate(EstimateArgs),
    /// Run the simulation protocol described by a config file.
    Simulate(RunArgs),
    /// Run a config over its scale grid and write tidy CSV.
    Sweep(RunArgs),
    /// Re-estimate on random subsets of classes and fit a slope.
    DiagnoseK(DiagnoseArgs),
    /// Compare analytic results with Monte Carlo oracles.
    VerifyTheory(VerifyArgs),
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("input").required(true).args(["c", "e"]))]
struct PikArgs {
    #[arg(long)]
    k: usize,
    /// Separation; prints π_k(c).
    #[arg(long, allow_negative_numbers = true)]
    c: Option<f64>,
    /// Error rate; prints π_k⁻¹(e).
    #[arg(long, allow_negative_numbers = true)]
    e: Option<f64>,
}

#[derive(Args)]
struct EstimateArgs {
    /// Header-less CSV of k rows of k nonnegative integer counts.
    file: PathBuf,
    /// Expected number of classes; checked against the file.
    #[arg(long)]
    k: Option<usize>,
    /// Smoothing weight toward chance; defaults to 1/(r+1).
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, value_delimiter = ',', default_value = "hd,fano,cm", value_parser = parse_method)]
    methods: Vec<EstimateMethod>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory (simulate) or CSV file (sweep); overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long, value_delimiter = ',', value_parser = parse_method)]
    methods: Option<Vec<EstimateMethod>>,
    #[arg(long)]
    alpha: Option<f64>,
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["confusion", "config"]))]
struct DiagnoseArgs {
    /// Confusion matrix CSV to subsample.
    #[arg(long)]
    confusion: Option<PathBuf>,
    /// Simulate replicate 0 of this config and re-classify within class subsets.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Subsample sizes, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    k: Vec<usize>,
    #[arg(long, default_value = "hd", value_parser = parse_method)]
    method: EstimateMethod,
    /// Class subsets per size.
    #[arg(long, default_value_t = 50)]
    replicates: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    alpha: Option<f64>,
    /// Bootstrap resamples of the test data for the slope interval.
    #[arg(long, default_value_t = 200)]
    draws: usize,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    /// Series CSV destination; the slope summary then goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_parser = parse_suite)]
    suite: Suite,
    /// Monte Carlo budget; see `verify_theory` for its meaning per suite.
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_method(s: &str) -> Result<EstimateMethod, String> {
    s.parse().map_err(|e: hdmi_core::Error| e.to_string())
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse().map_err(|e: hdmi_core::Error| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Pik(a) => commands::pik(a.k, a.c, a.e),
        Command::Estimate(a) => {
            commands::estimate(&a.file, a.k, a.alpha, &a.methods, a.out.as_deref())
        }
        Command::Simulate(a) => commands::simulate(&a),
        Command::Sweep(a) => commands::sweep(&a),
        Command::DiagnoseK(a) => commands::diagnose_k(&a),
        Command::VerifyTheory(a) => {
            commands::verify_theory(a.suite, a.budget, a.seed, a.out.as_deref())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
