use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "entangle-coord", version, about = "Correlated action selection from shared entanglement")]
pub struct Cli {
    /// Output format for the report.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    pub format: Format,

    /// Write the report to a file instead of standard output.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the honest protocol.
    Run(RunArgs),
    /// Run one of the attack scenarios.
    Attack(AttackArgs),
    /// Tabulate the error-free string length bound.
    Bound(BoundArgs),
    /// Search for the best non-interactive distillation.
    Nicd(NicdArgs),
    /// Reconcile noisy protocol output over a classical channel.
    Reconcile(ReconcileArgs),
}

#[derive(Debug, Args)]
pub struct SeedArg {
    /// Master seed; per-trial seeds are derived from it.
    #[arg(long, env = "ENTANGLE_COORD_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long, default_value_t = 1)]
    pub bits: usize,
    /// Read-out flip probability on Bob's side.
    #[arg(long, default_value_t = 0.0)]
    pub eps: f64,
    /// Alice's frame misalignment in radians.
    #[arg(long = "theta-a", default_value_t = 0.0, allow_negative_numbers = true)]
    pub theta_a: f64,
    #[arg(long = "theta-b", default_value_t = 0.0, allow_negative_numbers = true)]
    pub theta_b: f64,
    #[arg(long, default_value_t = 1)]
    pub trials: u64,
    #[arg(long, default_value_t = 2)]
    pub agents: usize,
    /// Include every per-trial record in the JSON report.
    #[arg(long)]
    pub records: bool,
    #[command(flatten)]
    pub seed: SeedArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AttackName {
    Ghz,
    W,
    Biseparable,
    Wolf,
}

#[derive(Debug, Args)]
pub struct AttackArgs {
    #[arg(value_enum)]
    pub kind: AttackName,
    #[arg(long, default_value_t = 1)]
    pub bits: usize,
    #[arg(long, default_value_t = 1)]
    pub trials: u64,
    /// Eve measures before Alice and Bob (ghz only).
    #[arg(long = "eve-first")]
    pub eve_first: bool,
    /// Initial state of Wolf's ancillas (wolf only, default 0).
    #[arg(long = "target-bit")]
    pub target_bit: Option<u8>,
    #[command(flatten)]
    pub seed: SeedArg,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct BoundSource {
    /// Comma-separated error rates.
    #[arg(long, value_delimiter = ',')]
    pub eps: Vec<f64>,
    /// `LO:HI:STEPS`, evenly spaced and inclusive of both ends.
    #[arg(long)]
    pub grid: Option<String>,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    #[command(flatten)]
    pub source: BoundSource,
}

#[derive(Debug, Args)]
pub struct NicdArgs {
    #[arg(long)]
    pub m: usize,
    /// One rate, or several for a certificate.
    #[arg(long, value_delimiter = ',', required = true)]
    pub eps: Vec<f64>,
    /// Emit a no-improvement certificate table (m ≤ 3).
    #[arg(long)]
    pub certify: bool,
}

#[derive(Debug, Args)]
pub struct ReconcileArgs {
    #[arg(long, default_value_t = 64)]
    pub bits: usize,
    #[arg(long, default_value_t = 0.01)]
    pub eps: f64,
    #[arg(long, default_value_t = 1)]
    pub trials: u64,
    /// Include every per-trial report in the JSON output.
    #[arg(long)]
    pub records: bool,
    #[command(flatten)]
    pub seed: SeedArg,
}
