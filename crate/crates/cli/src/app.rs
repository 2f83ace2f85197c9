//! Argument parsing and dispatch.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use jointsgl::{scenario_presets, OutcomeKind};

use crate::commands::{self, CvOverrides, EvaluateArgs, FitArgs, Method, ReplicateArgs, SimulateArgs};
use crate::error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "jointsgl", version, about = "Joint weighted sparse group lasso for imaging and outcome models")]
struct Cli {
    /// Worker threads for replications and cross-validation (default: all cores).
    #[arg(long, global = true, env = "JOINTSGL_WORKERS")]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct TuneFlags {
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    grid_size: Option<usize>,
    /// Fold assignment seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a simulated dataset with its test split and ground truth.
    Simulate {
        #[arg(long)]
        preset: String,
        #[arg(long, default_value_t = 1.0)]
        overlap: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit both models on a dataset directory.
    Fit {
        #[arg(long)]
        data: PathBuf,
        /// Separate directory with the outcome dataset.
        #[arg(long)]
        data2: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        tune: TuneFlags,
    },
    /// Cross-validate both models and write the tuned config.
    Cv {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        data2: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        tune: TuneFlags,
    },
    /// Score fitted coefficients against a simulated truth.
    Evaluate {
        #[arg(long)]
        data: PathBuf,
        /// Directory with the coefficient files (default: the output directory).
        #[arg(long)]
        fit: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_delimiter = ',')]
        times: Vec<f64>,
    },
    /// Repeat simulate, tune, fit and evaluate over seeds and overlaps.
    Replicate {
        #[arg(long)]
        preset: String,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        overlap: Vec<f64>,
        #[arg(long, default_value_t = 10)]
        reps: usize,
        /// Seed of the first replication; later ones count up from it.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 8)]
        grid_size: usize,
        #[arg(long, default_value_t = 5)]
        folds: usize,
        /// AUC time points (survival presets default to 12).
        #[arg(long, value_delimiter = ',')]
        times: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "joint,separate,lasso")]
        methods: Vec<Method>,
        /// Weight exponent of the joint method.
        #[arg(long, default_value_t = 4.0)]
        alpha: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

impl From<TuneFlags> for CvOverrides {
    fn from(t: TuneFlags) -> Self {
        CvOverrides { folds: t.folds, grid_size: t.grid_size, seed: t.seed }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Simulate { preset, overlap, seed, out } => commands::simulate(&SimulateArgs { preset, overlap, seed, out }),
        Command::Fit { data, data2, config, out, tune } => {
            commands::fit(&FitArgs { data, data2, config, out, cv: tune.into() }).map(|_| ())
        }
        Command::Cv { data, data2, config, out, tune } => {
            commands::cv(&FitArgs { data, data2, config, out, cv: tune.into() }).map(|_| ())
        }
        Command::Evaluate { data, fit, out, times } => {
            let fit = fit.unwrap_or_else(|| out.clone());
            commands::evaluate(&EvaluateArgs { data, fit, out, times }).map(|_| ())
        }
        Command::Replicate { preset, overlap, reps, seed, grid_size, folds, mut times, methods, alpha, out } => {
            if times.is_empty() {
                let probe = scenario_presets(&preset, overlap.first().copied().unwrap_or(1.0))
                    .map_err(|e| CliError::Usage(e.to_string()))?;
                if probe.outcome_kind == OutcomeKind::Survival {
                    times.push(12.0);
                }
            }
            let args = ReplicateArgs { preset, overlaps: overlap, reps, seed, grid_size, folds, times, methods, alpha, out };
            commands::replicate(&args).map(|_| ())
        }
    }
}

/// Runs one invocation and returns its exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cli.workers {
        if w == 0 {
            eprintln!("error: usage: --workers must be positive");
            return 1;
        }
        pool = pool.num_threads(w);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return 3;
        }
    };
    match pool.install(|| dispatch(cli.command)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
