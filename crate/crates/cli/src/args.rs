use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "qsearch",
    version,
    about = "Reinforced quantum search experiments"
)]
pub struct Cli {
    /// TOML file with default values for any option (flags take precedence).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory [default: $QSEARCH_OUT_DIR, then ./qsearch-out]
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Disable data parallelism.
    #[arg(long, global = true)]
    pub sequential: bool,
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Final success probability against noise strength, averaged over realizations.
    SweepNoise(SweepArgs),
    /// Final success probability against the reinforcement strength.
    SweepR(SweepArgs),
    /// Computation time L(δ) against problem size, with fits.
    Scaling(ScalingArgs),
    /// One run with a per-layer trace.
    SingleRun(SingleRunArgs),
    /// Quick invariant checks of the whole stack.
    Selftest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EncodingKind {
    Qubit,
    Qudit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleKind {
    Grover,
    Greedy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    None,
    QubitCoherent,
    QuditCoherent,
    QubitChannel,
    QuditChannel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DensityKind {
    Auto,
    Dense,
    Factored,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightKind {
    NormalizedUniform,
    Dirichlet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitKind {
    /// log L against log dim
    LogLog,
    /// L against log2 dim
    Linear,
}

#[derive(Debug, Clone, Default, Args)]
pub struct InstanceArgs {
    #[arg(long, value_enum)]
    pub encoding: Option<EncodingKind>,
    /// Number of qubits.
    #[arg(long)]
    pub n: Option<u32>,
    /// Qudit dimension.
    #[arg(long)]
    pub d: Option<u64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct NoiseArgs {
    #[arg(long, value_enum)]
    pub noise: Option<NoiseKind>,
    /// Distribution of the Pauli channel weights.
    #[arg(long, value_enum)]
    pub weights: Option<WeightKind>,
    /// Mixed-state representation.
    #[arg(long, value_enum)]
    pub density: Option<DensityKind>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SingleRunArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[command(flatten)]
    pub noise: NoiseArgs,
    #[arg(long, value_enum)]
    pub schedule: Option<ScheduleKind>,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[command(flatten)]
    pub noise: NoiseArgs,
    #[arg(long, value_enum)]
    pub schedule: Option<ScheduleKind>,
    #[arg(long)]
    pub layers: Option<usize>,
    /// `start:stop:step` (inclusive) or a comma list.
    #[arg(long, visible_alias = "eps")]
    pub eps_grid: Option<String>,
    /// `start:stop:step` (inclusive) or a comma list.
    #[arg(long, visible_alias = "r")]
    pub r_grid: Option<String>,
    #[arg(long)]
    pub realizations: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ScalingArgs {
    #[arg(long, value_enum)]
    pub encoding: Option<EncodingKind>,
    /// Qubit counts or qudit dimensions: `start:stop:step` or a comma list.
    #[arg(long)]
    pub sizes: Option<String>,
    #[command(flatten)]
    pub noise: NoiseArgs,
    #[arg(long)]
    pub r: Option<f64>,
    /// Success threshold is `1 − δ`.
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub eps_grid: Option<String>,
    /// Largest layer budget [default: ⌈10√dim⌉].
    #[arg(long)]
    pub lmax: Option<usize>,
    #[arg(long, value_enum)]
    pub fit: Option<FitKind>,
}
