use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "pfp", version, about = "Private low-rank matrix approximation experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic matrix.
    Gen(GenArgs),
    /// Report C- and μ0-coherence of a matrix.
    Coherence(CoherenceArgs),
    /// Non-private sketch-and-project baseline.
    Hmt(ApproxArgs),
    /// Randomized response followed by rank-k truncation.
    Rr(PrivateArgs),
    /// Private find and project.
    Pfp(PfpArgs),
    /// Run a grid of experiments on generated matrices.
    Sweep(SweepArgs),
    /// Run the reconstruction attack against a mechanism.
    Attack(AttackArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Dense,
    Sparse,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    LowMu0,
    Spiked,
    PowerLaw,
    NetflixLike,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    C,
    Mu0,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlgorithmArg {
    Rr,
    Hmt,
    Pfp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MechanismArg {
    Identity,
    Rr,
    Gaussian,
    Pfp,
}

/// Pruning threshold: a number in (0, 1] or `auto`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Alpha {
    Auto,
    Value(f64),
}

impl FromStr for Alpha {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "auto" {
            return Ok(Alpha::Auto);
        }
        let v: f64 = s.parse().map_err(|_| format!("expected a number or `auto`, got `{s}`"))?;
        if !(v > 0.0 && v <= 1.0) {
            return Err(format!("alpha must lie in (0, 1], got {v}"));
        }
        Ok(Alpha::Value(v))
    }
}

/// Integer pair written `lo,hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range(pub i64, pub i64);

impl FromStr for Range {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (lo, hi) = s.split_once(',').ok_or_else(|| format!("expected `lo,hi`, got `{s}`"))?;
        let lo = lo.trim().parse().map_err(|_| format!("invalid integer `{lo}`"))?;
        let hi = hi.trim().parse().map_err(|_| format!("invalid integer `{hi}`"))?;
        Ok(Range(lo, hi))
    }
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Write to this file instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GeneratorArgs {
    /// Rank of the generated matrix.
    #[arg(long = "gen-rank", default_value_t = 5)]
    pub gen_rank: usize,
    #[arg(long, default_value_t = 1.0)]
    pub decay: f64,
    /// Nonzero fraction for netflix-like matrices.
    #[arg(long, default_value_t = pfp_core::generate::netflix_density())]
    pub density: f64,
    /// Integer ratings range (netflix-like) or `_,rms` entry size (dense kinds).
    #[arg(long = "value-range", default_value = "1,5", allow_hyphen_values = true)]
    pub value_range: Range,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub kind: Kind,
    #[arg(short, long)]
    pub m: usize,
    #[arg(short, long)]
    pub n: usize,
    #[command(flatten)]
    pub generator: GeneratorArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Dense)]
    pub format: Format,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct CoherenceArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Relative singular-value cutoff for the numerical rank.
    #[arg(long = "rank-tolerance", default_value_t = 1e-9)]
    pub rank_tolerance: f64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ApproxArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Target rank r.
    #[arg(long)]
    pub rank: usize,
    /// Oversampling p; defaults to r + 1.
    #[arg(long)]
    pub oversample: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// `csv` writes one record per trial; `dense`/`sparse` write the approximation of a single trial.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Fill the wall_time_ms column (makes output run-dependent).
    #[arg(long = "record-timing")]
    pub record_timing: bool,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct BudgetArgs {
    #[arg(long, default_value_t = 1.0)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 1e-5)]
    pub delta: f64,
}

#[derive(Debug, Args)]
pub struct PrivateArgs {
    #[command(flatten)]
    pub approx: ApproxArgs,
    #[command(flatten)]
    pub budget: BudgetArgs,
}

#[derive(Debug, Args)]
pub struct PfpArgs {
    #[command(flatten)]
    pub private: PrivateArgs,
    #[arg(long, default_value = "auto")]
    pub alpha: Alpha,
    #[arg(long, value_enum, default_value_t = Mode::C)]
    pub mode: Mode,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long = "kind", value_enum, value_delimiter = ',', default_value = "low-mu0")]
    pub kinds: Vec<Kind>,
    #[arg(short, long, value_delimiter = ',', required = true)]
    pub m: Vec<usize>,
    #[arg(short, long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    /// Target ranks r.
    #[arg(long, value_delimiter = ',', required = true)]
    pub rank: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "1.0")]
    pub epsilon: Vec<f64>,
    #[arg(long = "algorithm", value_enum, value_delimiter = ',', default_value = "rr,pfp")]
    pub algorithms: Vec<AlgorithmArg>,
    /// Oversampling p; defaults to r + 1.
    #[arg(long)]
    pub oversample: Option<usize>,
    #[arg(long, default_value_t = 1e-5)]
    pub delta: f64,
    #[arg(long, default_value = "auto")]
    pub alpha: Alpha,
    #[arg(long, value_enum, default_value_t = Mode::C)]
    pub mode: Mode,
    #[command(flatten)]
    pub generator: GeneratorArgs,
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long = "record-timing")]
    pub record_timing: bool,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct AttackArgs {
    #[arg(long, value_enum)]
    pub mechanism: MechanismArg,
    /// Number of secret bits.
    #[arg(long, default_value_t = 10_000)]
    pub bits: usize,
    /// Rows holding the bits.
    #[arg(long = "db-rows", default_value_t = 1)]
    pub db_rows: usize,
    /// Rows of the released matrix.
    #[arg(short, long, default_value_t = 1)]
    pub m: usize,
    #[command(flatten)]
    pub budget: BudgetArgs,
    /// Noise level of the uncalibrated Gaussian mechanism.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Target rank r for the pfp mechanism.
    #[arg(long, default_value_t = 2)]
    pub rank: usize,
    #[arg(long)]
    pub oversample: Option<usize>,
    #[arg(long, value_enum, default_value_t = Mode::Mu0)]
    pub mode: Mode,
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(flatten)]
    pub out: OutputArgs,
}
