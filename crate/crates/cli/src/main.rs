//! Command-line front end: dataset generation, training, signatures,
//! the shape-matching benchmark and the Pearson experiment.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use invsig::{ErrorClass, Group};

/// Environment variable holding the default worker count.
pub const THREADS_ENV: &str = "INVSIG_THREADS";

#[derive(Debug, Parser)]
#[command(name = "invsig", version, about = "Invariant signatures of planar curves")]
struct Cli {
    /// Worker threads (default: $INVSIG_THREADS, else all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate training, validation and benchmark curve files.
    GenData(GenDataArgs),
    /// Train a network and write its best checkpoint and per-epoch metrics.
    Train(TrainArgs),
    /// Write the per-point signature of one curve.
    Signature(SignatureArgs),
    /// Run the shape-matching benchmark.
    Benchmark(BenchmarkArgs),
    /// |ρ(κ, κ_s)| over random curve points for several sample counts.
    Pearson(PearsonArgs),
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct EstimatorArgs {
    /// Network checkpoint.
    #[arg(long)]
    pub ckpt: Option<PathBuf>,
    /// Axiomatic estimator: euclidean or equiaffine.
    #[arg(long, visible_alias = "estimator")]
    pub axiomatic: Option<Group>,
}

#[derive(Debug, Args)]
pub struct GenDataArgs {
    /// Output directory; created if missing.
    #[arg(long)]
    pub out: PathBuf,
    /// Training curves.
    #[arg(long, default_value_t = 200)]
    pub curves: usize,
    /// Validation curves.
    #[arg(long, default_value_t = 40)]
    pub val_curves: usize,
    /// Points per curve.
    #[arg(long, default_value_t = 96)]
    pub samples: usize,
    #[arg(long, default_value_t = 6)]
    pub harmonics: usize,
    /// Fourier coefficient decay per harmonic.
    #[arg(long, default_value_t = 0.55)]
    pub decay: f64,
    /// Benchmark collections (0 skips the collection file).
    #[arg(long, default_value_t = 10)]
    pub collections: usize,
    /// Members per collection.
    #[arg(long, default_value_t = 10)]
    pub members: usize,
    /// Member deformation amplitude relative to the base diameter.
    #[arg(long, default_value_t = 0.15)]
    pub deform: f64,
    /// Full-size benchmark: 34 collections of 30 members.
    #[arg(long)]
    pub full: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub val: PathBuf,
    #[arg(long, default_value = "affine")]
    pub group: Group,
    #[arg(long, default_value_t = 20)]
    pub epochs: usize,
    #[arg(long, default_value_t = 1000)]
    pub steps: usize,
    /// Tuplets per batch.
    #[arg(long, default_value_t = 32)]
    pub batch: usize,
    /// Negatives per tuplet.
    #[arg(long, default_value_t = 4)]
    pub negatives: usize,
    /// Neighborhood half-width N (2N + 1 points).
    #[arg(long, default_value_t = 8)]
    pub half_width: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    /// Learning-rate multiplier per epoch.
    #[arg(long)]
    pub lr_decay: Option<f64>,
    /// Dirichlet concentration of the downsampling pmf.
    #[arg(long)]
    pub concentration: Option<f64>,
    /// Lowest downsampling ratio of training views (default 0.5).
    #[arg(long)]
    pub ratio_min: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_ckpt: PathBuf,
    /// Metrics CSV (default: checkpoint path with .metrics.csv).
    #[arg(long)]
    pub metrics: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SignatureArgs {
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    /// Curve file: JSON curve list or CSV with x,y columns.
    #[arg(long)]
    pub curve: PathBuf,
    /// Which curve of a JSON curve list.
    #[arg(long, default_value_t = 0)]
    pub index: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    /// Collection file written by gen-data.
    #[arg(long)]
    pub collections: PathBuf,
    /// Comma-separated det:cond pairs.
    #[arg(long, default_value = "2:2,2:3,3:2")]
    pub flavors: String,
    /// Comma-separated sampling rates in (0, 1].
    #[arg(long, default_value = "1.0,0.9,0.8,0.7,0.6,0.5")]
    pub rates: String,
    #[arg(long)]
    pub concentration: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Report CSV; a text table is written next to it with extension .txt.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PearsonArgs {
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    /// JSON curve list.
    #[arg(long)]
    pub curves: PathBuf,
    /// Comma-separated sample counts.
    #[arg(long, default_value = "100,1000,10000")]
    pub counts: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

fn configure_threads(flag: Option<usize>) -> Result<(), String> {
    let threads = match flag {
        Some(n) => Some(n),
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => Some(v.parse().map_err(|_| format!("{THREADS_ENV}={v:?} is not a count"))?),
            Err(_) => None,
        },
    };
    if let Some(n) = threads {
        if n == 0 {
            return Err("thread count must be >= 1".into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Err(msg) = configure_threads(cli.threads) {
        eprintln!("error: {msg}");
        return ExitCode::from(1);
    }
    let result = match &cli.command {
        Command::GenData(args) => commands::gen_data(args),
        Command::Train(args) => commands::train(args),
        Command::Signature(args) => commands::signature(args),
        Command::Benchmark(args) => commands::benchmark(args),
        Command::Pearson(args) => commands::pearson(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.class() {
                ErrorClass::Usage => 1,
                ErrorClass::Data => 2,
                ErrorClass::Numeric => 3,
            })
        }
    }
}
