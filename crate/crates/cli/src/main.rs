//! Command-line driver for the reciprocal-mean estimation library.
//!
//! Exit codes: 0 success, 1 usage/input error, 2 validation-suite failure.

mod experiments;
mod output;
mod validate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "invmean",
    version,
    about = "Unbiased randomized-truncation estimation of 1/E[Z]",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct OutputArgs {
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Emit a JSON document instead of CSV.
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form rel-variance / cost / TVP curve over a weight grid.
    Curve {
        /// Model spec: bernoulli:<p> | uniform:<b> | discrete:<v,..>@<p,..>
        #[arg(long)]
        model: String,
        #[arg(long)]
        wmin: f64,
        #[arg(long)]
        wmax: f64,
        #[arg(long)]
        points: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Replicated estimator draws with a Laplace-asymptotic interval.
    Estimate {
        #[arg(long)]
        model: String,
        #[arg(long)]
        w: f64,
        #[arg(long, default_value_t = 1)]
        reps: u64,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Two-phase pilot experiment: estimated expected time relative variance
    /// product with a confidence band.
    AdaptiveExperiment {
        #[arg(long)]
        model: String,
        /// Pilot size (half of the per-replication budget).
        #[arg(long)]
        k: u64,
        #[arg(long)]
        reps: u64,
        /// Known lower bound on beta; defaults to 1/bound.
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Kolmogorov-Smirnov distances of standardized errors against the
    /// Laplace and normal laws.
    Convergence {
        #[arg(long)]
        model: String,
        #[arg(long)]
        w: f64,
        #[arg(long, default_value_t = 10_000)]
        reps: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Bias and asymptotic variance of the classical ratio estimator 1/Z-bar.
    CompareRatio {
        #[arg(long)]
        model: String,
        /// Samples per ratio estimate.
        #[arg(long)]
        k: u64,
        #[arg(long, default_value_t = 10_000)]
        reps: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run the built-in invariant suites.
    Validate {
        /// all | sandwich | shape | laplace | tvm | sampling | determinism
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

fn run(cli: Cli) -> Result<i32, String> {
    let emit = |table: output::Table, output: &OutputArgs| -> Result<i32, String> {
        table
            .emit(output.out.as_deref(), output.json)
            .map_err(|e| format!("failed to write output: {e}"))?;
        Ok(0)
    };
    match cli.command {
        Command::Curve {
            model,
            wmin,
            wmax,
            points,
            seed,
            output,
        } => {
            let table =
                experiments::curve(&model, wmin, wmax, points, seed).map_err(|e| e.to_string())?;
            emit(table, &output)
        }
        Command::Estimate {
            model,
            w,
            reps,
            alpha,
            seed,
            workers,
            output,
        } => {
            let table = experiments::estimate(&model, w, reps, alpha, seed, workers)
                .map_err(|e| e.to_string())?;
            emit(table, &output)
        }
        Command::AdaptiveExperiment {
            model,
            k,
            reps,
            epsilon,
            seed,
            workers,
            output,
        } => {
            let table = experiments::adaptive(&model, k, reps, epsilon, seed, workers)
                .map_err(|e| e.to_string())?;
            emit(table, &output)
        }
        Command::Convergence {
            model,
            w,
            reps,
            seed,
            workers,
            output,
        } => {
            let table = experiments::convergence(&model, w, reps, seed, workers)
                .map_err(|e| e.to_string())?;
            emit(table, &output)
        }
        Command::CompareRatio {
            model,
            k,
            reps,
            seed,
            workers,
            output,
        } => {
            let table = experiments::compare_ratio(&model, k, reps, seed, workers)
                .map_err(|e| e.to_string())?;
            emit(table, &output)
        }
        Command::Validate { suite, seed } => Ok(validate::run(&suite, seed)),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version are successful exits; everything else is usage.
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}
