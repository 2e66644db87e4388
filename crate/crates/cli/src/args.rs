use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "evtcrypt", version, about = "Encrypt event-camera streams with correlated synthetic noise")]
pub struct Cli {
    /// Format of stream files written by the command. Inputs are detected automatically.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Binary,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Encrypt a stream; writes the ciphertext stream and a key file.
    Encrypt(EncryptArgs),
    /// Recover the original stream from ciphertext and key.
    Decrypt(DecryptArgs),
    /// Run a denoising attack over a stream.
    Attack(AttackArgs),
    /// Render an event frame as binary PGM.
    Frame(FrameArgs),
    /// Signal-to-noise ratio of a labeled stream.
    Snr(SnrArgs),
    /// Add uniform random noise at a target SNR.
    Inject(InjectArgs),
    /// Ground-truth labels for an encrypted stream.
    Label(LabelArgs),
    /// Generate a synthetic scene.
    Gen(GenArgs),
    /// Measure encryption throughput.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct EncryptArgs {
    pub input: PathBuf,
    pub output: PathBuf,
    pub key: PathBuf,
    /// Seed for noise polarities.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Timestamp scaling factor per pixel of distance (decimal, exact).
    #[arg(long, default_value = "0.05")]
    pub sigma: String,
    /// Inclusive spatial neighbor radius.
    #[arg(long, default_value_t = 1)]
    pub tx: u32,
    /// Absolute temporal bound in microseconds; adaptive when omitted.
    #[arg(long)]
    pub tt: Option<u64>,
    /// `full` for the whole complement, or `band:<radius>`.
    #[arg(long, default_value = "full")]
    pub mask: String,
    /// Also write signal/noise labels for the encrypted stream.
    #[arg(long)]
    pub labels_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DecryptArgs {
    pub input: PathBuf,
    pub key: PathBuf,
    pub output: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FilterKind {
    Nnf,
    Density,
}

#[derive(Debug, Args)]
pub struct AttackArgs {
    pub input: PathBuf,
    pub output: PathBuf,
    #[arg(long, value_enum, default_value_t = FilterKind::Nnf)]
    pub filter: FilterKind,
    /// NNf strict spatial threshold.
    #[arg(long, default_value_t = 2)]
    pub tx: u32,
    /// NNf strict temporal threshold in microseconds.
    #[arg(long, default_value_t = 5000)]
    pub tt: u64,
    /// NNf minimum neighbor count.
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long, default_value_t = 2)]
    pub dx: u16,
    #[arg(long, default_value_t = 2)]
    pub dy: u16,
    #[arg(long, default_value_t = 5000)]
    pub dt: u64,
    /// Density filter minimum events per voxel.
    #[arg(long, default_value_t = 2)]
    pub min_count: usize,
    /// Labels aligned with the input; enables SNR reporting.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Labels of the surviving events.
    #[arg(long, requires = "labels")]
    pub labels_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FrameArgs {
    pub input: PathBuf,
    pub output: PathBuf,
    /// Window start (inclusive); defaults to the first timestamp.
    #[arg(long)]
    pub t0: Option<u64>,
    /// Window end (inclusive); defaults to the last timestamp.
    #[arg(long)]
    pub t1: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SnrArgs {
    pub input: PathBuf,
    pub labels: PathBuf,
}

#[derive(Debug, Args)]
pub struct InjectArgs {
    pub input: PathBuf,
    pub output: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub snr: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Defaults to `<output>.labels`.
    #[arg(long)]
    pub labels_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LabelArgs {
    pub original: PathBuf,
    pub encrypted: PathBuf,
    pub output: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    EdgeSweep,
    TwoBlobs,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(value_enum)]
    pub kind: Kind,
    pub output: PathBuf,
    #[arg(long, default_value_t = 64)]
    pub width: u16,
    #[arg(long, default_value_t = 48)]
    pub height: u16,
    /// Duration in microseconds.
    #[arg(long, default_value_t = 2_000_000)]
    pub duration: u64,
    /// Events per second.
    #[arg(long, default_value_t = 25_000.0)]
    pub rate: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub labels_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 346)]
    pub width: u16,
    #[arg(long, default_value_t = 260)]
    pub height: u16,
    #[arg(long, default_value_t = 1_000_000)]
    pub count: usize,
    #[arg(long, default_value_t = 3)]
    pub trials: usize,
}
