use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use cewit::dataset::{DEFAULT_STARVATION_WINDOW, DESK_TOTAL};
use cewit::noise::ChannelKind;
use cewit::svm::{DEFAULT_TOL, Selection};
use cewit::witnesses::Witness;

mod commands;
mod manifest;

/// Collective entanglement witnesses with purity: dataset generation,
/// noise checks, SVM sweeps and result tables.
#[derive(Parser, Debug, Serialize)]
#[command(name = "cewit", version)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "CEWIT_THREADS")]
    threads: Option<usize>,

    /// Directory for outputs whose path is not given explicitly.
    #[arg(long, global = true, env = "CEWIT_SCRATCH", default_value = "cewit-out")]
    scratch: PathBuf,

    /// Global seed; every internal seed is derived from it.
    #[arg(long, global = true, default_value_t = 20240101)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
enum Command {
    /// Generate a purity-uniform, class-balanced dataset.
    Generate(GenerateArgs),
    /// Evaluate the witnesses on given or random states.
    Witness(WitnessArgs),
    /// Scan the Werner family and locate where each witness stops detecting.
    WernerScan(WernerArgs),
    /// Check that noisy states and noisy collective projectors agree.
    EquivalenceCheck(EquivalenceArgs),
    /// Train the penalty sweep and evaluate it on the held-out half.
    TrainEval(TrainEvalArgs),
    /// Histogram a dataset column or Hilbert-Schmidt distances.
    Histograms(HistogramArgs),
    /// Run every stage and compare with the reference tables.
    ReproduceTables(ReproduceArgs),
}

#[derive(Args, Debug, Serialize)]
struct GenerateArgs {
    #[arg(long, default_value_t = DESK_TOTAL)]
    total: usize,
    /// Use the full 2 000 000-state size (overrides --total).
    #[arg(long)]
    full: bool,
    /// Dataset CSV path (default: <scratch>/dataset.csv).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the density matrices to this binary file.
    #[arg(long)]
    raw_states: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_STARVATION_WINDOW)]
    starvation_window: u64,
}

#[derive(Args, Debug, Serialize)]
struct WitnessArgs {
    /// Werner states with these noise levels.
    #[arg(long, value_delimiter = ',')]
    werner: Vec<f64>,
    /// The Bell state |φ+>.
    #[arg(long)]
    bell: bool,
    /// This many random states.
    #[arg(long)]
    random: Option<usize>,
    /// States from a binary state file.
    #[arg(long)]
    raw: Option<PathBuf>,
    /// Output TSV (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct WernerArgs {
    /// Witness to scan (default: all three).
    #[arg(long)]
    witness: Option<Witness>,
    #[arg(long, default_value_t = 21)]
    points: usize,
    /// Bisect the zero crossing.
    #[arg(long)]
    bisect: bool,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

#[derive(Args, Debug, Serialize)]
struct EquivalenceArgs {
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    /// Use this channel on both arms instead of random ones.
    #[arg(long)]
    channel: Option<ChannelKind>,
    #[arg(long, default_value_t = 1e-11)]
    tol: f64,
}

#[derive(Args, Debug, Serialize, Clone)]
struct SvmArgs {
    #[arg(long, default_value_t = DEFAULT_TOL)]
    smo_tol: f64,
    #[arg(long, value_parser = parse_selection, default_value = "second-order")]
    selection: Selection,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long, default_value_t = 0.5)]
    train_fraction: f64,
    /// Skip writing the model files.
    #[arg(long)]
    no_models: bool,
}

fn parse_selection(s: &str) -> Result<Selection, String> {
    match s {
        "second-order" => Ok(Selection::SecondOrder),
        "max-violating-pair" => Ok(Selection::MaxViolatingPair),
        other => Err(format!("unknown selection {other:?}")),
    }
}

#[derive(Args, Debug, Serialize)]
struct TrainEvalArgs {
    /// Dataset CSV written by `generate`.
    #[arg(long)]
    dataset: PathBuf,
    /// Witness to train on (default: all three).
    #[arg(long)]
    witness: Option<Witness>,
    /// Output directory (default: <scratch>/train-eval).
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    svm: SvmArgs,
}

#[derive(Args, Debug, Serialize)]
struct HistogramArgs {
    /// purity, negativity, collectibility, chsh, entropic or hs-distance.
    #[arg(long)]
    feature: String,
    /// Dataset CSV (not needed for hs-distance).
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    bins: Option<usize>,
    /// Only entangled rows.
    #[arg(long)]
    entangled_only: bool,
    /// Number of random states for hs-distance (all pairs are used).
    #[arg(long, default_value_t = 2000)]
    states: usize,
    /// Output TSV (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct ReproduceArgs {
    /// Reuse an existing dataset instead of generating one.
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long, default_value_t = DESK_TOTAL)]
    total: usize,
    /// Output directory (default: <scratch>/reproduce).
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    svm: SvmArgs,
}

// `cewit ... | head` should not report an error.
fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain()
        .filter_map(|c| c.downcast_ref::<std::io::Error>())
        .any(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot size worker pool: {e}");
            return ExitCode::from(2);
        }
    }
    match commands::run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
