use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (feature format RGNF v1)");

#[derive(Debug, Parser)]
#[command(name = "noiseforge", version = VERSION, about = "Deterministic label-noise synthesis")]
pub struct Cli {
    /// JSON config file, or an audit file whose `run` stanza should be replayed.
    #[arg(long, global = true, value_name = "JSON")]
    pub config: Option<PathBuf>,

    /// Worker threads for data-parallel stages (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,

    /// Raise log verbosity (-v info, -vv debug). `RUST_LOG` takes precedence.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the noise transition matrix of an annotated subset.
    Transition(TransitionArgs),
    /// Per-sample feature concentration and interval partition.
    Concentration(ConcentrationArgs),
    /// Generate noisy labels.
    Generate(GenerateArgs),
    /// Per-interval noise ratios of an existing noisy labeling.
    Analyze(AnalyzeArgs),
    /// Generate RGN noise and check that the realized interval counts close
    /// against the budget. Exits with status 4 on violation.
    Validate(GenerateArgs),
}

#[derive(Debug, Args)]
pub struct TransitionArgs {
    /// Subset CSV with header `index,clean_label,noisy_label`.
    #[arg(long)]
    pub subset: Option<PathBuf>,
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TableFormat {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct ConcentrationArgs {
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
    /// Output format; inferred from the `--out` extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<TableFormat>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// One of symm-inc, symm-exc, asym, rgn.
    #[arg(long)]
    pub pattern: Option<String>,
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Annotated subset CSV (rgn only).
    #[arg(long)]
    pub subset: Option<PathBuf>,
    /// Features of the subset rows. Without it the subset's index column
    /// addresses rows of `--features`.
    #[arg(long)]
    pub subset_features: Option<PathBuf>,
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long)]
    pub rho0: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    /// Class map as inline JSON (`{"2": 7}` or `[[2, 7]]`) or a path to such a file.
    #[arg(long, value_name = "JSON")]
    pub asym_map: Option<String>,
    #[arg(long)]
    pub mu1: Option<f64>,
    #[arg(long)]
    pub mu2: Option<f64>,
    /// Interval widths as a comma-separated list of five positive integers.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub interval_weights: Option<Vec<u64>>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output CSV (`validate`: closure report JSON).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Audit JSON: resolved run config, budget, capping log, per-flip rows.
    #[arg(long)]
    pub audit: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Clean labels.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Noisy labels, as `index,label` or a `generate` output.
    #[arg(long)]
    pub noisy: Option<PathBuf>,
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
    /// Optional long-format CSV for plotting.
    #[arg(long)]
    pub plot: Option<PathBuf>,
}
