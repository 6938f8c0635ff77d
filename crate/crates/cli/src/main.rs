// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use patterncp::experiments::ExperimentKind;

mod commands;
mod config;

use commands::Failure;

#[derive(Parser, Debug)]
#[command(name = "patterncp", version, about = "Pattern-based change-point detection")]
struct Cli {
    /// Worker threads (default: available cores).
    #[arg(long, global = true, env = "PATTERNCP_WORKERS")]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

/// Options shared by the data-driven commands. Flags override the config file.
#[derive(Args, Debug, Default, Clone)]
pub struct CommonOpts {
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Series file (CSV or JSON).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Factor rows for the GLM family.
    #[arg(long)]
    pub covariates: Option<PathBuf>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// gaussian-mean, gaussian-meanvar, poisson or glm.
    #[arg(long)]
    pub family: Option<String>,
    /// GLM link: identity, log or logit.
    #[arg(long)]
    pub link: Option<String>,
    /// Comma-separated window half-widths.
    #[arg(long, value_delimiter = ',')]
    pub scales: Option<Vec<usize>>,
    /// triangle, trapezium, horn or indicator.
    #[arg(long)]
    pub pattern: Option<String>,
    #[arg(long)]
    pub plateau: Option<usize>,
    /// raw or l1.
    #[arg(long)]
    pub normalization: Option<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Bootstrap replicates B.
    #[arg(long)]
    pub replicates: Option<usize>,
    /// weighted or empirical.
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// per-scale, max-joint or bonferroni.
    #[arg(long)]
    pub joint_mode: Option<String>,
    #[arg(long)]
    pub min_separation: Option<usize>,
    /// Monte Carlo runs (experiments).
    #[arg(long)]
    pub runs: Option<usize>,
    /// Comma-separated shift grid (localization experiment).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub shifts: Option<Vec<f64>>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Calibrate, scan and merge change points; writes report.json and flags.csv.
    Detect(CommonOpts),
    /// Bootstrap critical values only; writes calibration.json and thresholds.csv.
    Calibrate(CommonOpts),
    /// Generate a piecewise series with known change points.
    Simulate {
        #[command(flatten)]
        common: CommonOpts,
        /// Segment as LENGTH:PARAMS, e.g. 250:0 or 100:0,2 (repeatable).
        #[arg(long = "segment")]
        segments: Vec<String>,
        /// Observation dimension a single-value mean or rate is broadcast to.
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long, default_value = "series")]
        stem: String,
    },
    /// Reproduce a Monte Carlo study and write its tables.
    Experiment {
        /// localization-power, bootstrap-convergence or nmi-sweep.
        kind: String,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Theoretical calculators as JSON.
    Theory {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        p: Option<usize>,
        #[arg(long)]
        h: Option<usize>,
        #[arg(long)]
        x: Option<f64>,
        #[arg(long)]
        spread: Option<f64>,
        /// tr(B) of a quadratic form.
        #[arg(long)]
        trace: Option<f64>,
        /// tr(B^2).
        #[arg(long)]
        trace_sq: Option<f64>,
        /// Largest eigenvalue of B.
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// LRT series sqrt(2 T_h(t)) as CSV.
    Lrt(CommonOpts),
    /// Pattern weights as CSV.
    Pattern {
        /// triangle, trapezium, horn or indicator.
        #[arg(long, default_value = "triangle")]
        kind: String,
        #[arg(long)]
        h: usize,
        #[arg(long, default_value_t = 0)]
        plateau: usize,
        #[arg(long, default_value = "raw")]
        normalization: String,
    },
}

fn init_workers(workers: Option<usize>) -> Result<(), Failure> {
    if let Some(n) = workers {
        if n == 0 {
            return Err(Failure::Validation("worker count must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Failure::Runtime(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    init_workers(cli.workers)?;
    match cli.command {
        Command::Detect(opts) => commands::detect(&opts),
        Command::Calibrate(opts) => commands::calibrate(&opts),
        Command::Simulate { common, segments, dim, stem } => commands::simulate(&common, &segments, dim, &stem),
        Command::Experiment { kind, common } => {
            let kind: ExperimentKind = commands::parse_kebab(&kind, "experiment")?;
            commands::experiment(kind, &common)
        }
        Command::Theory { config, p, h, x, spread, trace, trace_sq, lambda, output_dir } => {
            let spectrum = match (trace, trace_sq, lambda) {
                (None, None, None) => None,
                (Some(t), Some(v), Some(l)) => Some((t, v, l)),
                _ => return Err(Failure::Validation("--trace, --trace-sq and --lambda go together".into())),
            };
            commands::theory(
                config.as_deref(),
                commands::TheoryFlags { p, h, x, spread, spectrum },
                output_dir.as_deref(),
            )
        }
        Command::Lrt(opts) => commands::lrt(&opts),
        Command::Pattern { kind, h, plateau, normalization } => commands::pattern(&kind, h, plateau, &normalization),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
