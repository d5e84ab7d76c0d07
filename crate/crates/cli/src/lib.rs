//! Command-line experiment runner over `randlab_core`.
//!
//! Every subcommand writes its files and a `manifest.json` into `--out`.
//! Runs are reproducible: one `--seed` drives every random stream, and no
//! output depends on the clock or the output location.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

mod commands;
pub mod manifest;

pub use commands::run;
pub use manifest::{Assertion, RunManifest, MANIFEST_FILE};

#[derive(Debug, Parser)]
#[command(name = "randlab", version, about = "Seeded entangled-pair, channel and Omega experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Agreed-axis session: both packed strings plus frequency stats.
    Session(SessionArgs),
    /// Alice's marginals while Bob alternates between two bases.
    Signal(SignalArgs),
    /// Block-encoded message transmission and its confusion matrix.
    Transmit(TransmitArgs),
    /// Closed-form vs brute-force capacity over a grid or at one point.
    CapacitySweep(CapacityArgs),
    /// Phrase-count complexity verdict for a bit string.
    Complexity(ComplexityArgs),
    /// Champernowne prefix and its complexity against a seeded template.
    Champernowne(ChampernowneArgs),
    /// Exact halting probability of the toy machine.
    Omega(OmegaArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory, created if missing.
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Policy {
    Fixed,
    ThreeAxis,
    Haar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Decision {
    /// Ground-truth label with misreads at rate `--p-omega`.
    Modeled,
    /// Phrase-count compressibility test.
    Estimator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputFormat {
    /// `0`/`1` characters, whitespace ignored.
    Ascii,
    /// Packed bytes, most significant bit first.
    Raw,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SessionArgs {
    /// |alpha|^2 of the shared state.
    #[arg(long, default_value_t = 0.5)]
    pub alpha2: f64,
    #[arg(long)]
    pub n: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SignalArgs {
    #[arg(long, default_value_t = 0.5)]
    pub alpha2: f64,
    /// |c|^2 of Bob's alternate basis.
    #[arg(long, default_value_t = 0.5)]
    pub basis_c2: f64,
    #[arg(long, default_value_t = 100)]
    pub blocks: usize,
    #[arg(long, default_value_t = 10_000)]
    pub block_len: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TransmitArgs {
    #[arg(long, default_value_t = 0.5)]
    pub alpha2: f64,
    /// Message file; when absent a seeded message of `--message-len` bits is used.
    #[arg(long)]
    pub message: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = InputFormat::Ascii)]
    pub format: InputFormat,
    #[arg(long, default_value_t = 10_000)]
    pub message_len: usize,
    /// Probability that a 0-block is p-compressible.
    #[arg(long)]
    pub p_n: f64,
    /// Probability that Alice misreads a compressible block.
    #[arg(long, default_value_t = 0.0)]
    pub p_omega: f64,
    #[arg(long, default_value_t = 1024)]
    pub block_len: usize,
    #[arg(long, value_enum, default_value_t = Policy::Fixed)]
    pub policy: Policy,
    #[arg(long, value_enum, default_value_t = Decision::Modeled)]
    pub decision: Decision,
    #[arg(long, default_value_t = randlab_core::ait::DEFAULT_MARGIN)]
    pub margin: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CapacityArgs {
    /// Points per axis on [0, 1].
    #[arg(long, default_value_t = 101)]
    pub grid: usize,
    /// Evaluate a single point instead of the grid (needs `--p1` too).
    #[arg(long, requires = "p1")]
    pub p0: Option<f64>,
    #[arg(long, requires = "p0")]
    pub p1: Option<f64>,
    /// Prior grid size of the brute-force maximizer.
    #[arg(long, default_value_t = randlab_core::channel::MIN_RESOLUTION)]
    pub resolution: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ComplexityArgs {
    /// Input file; when absent a seeded template of `--n` bits is analyzed.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = InputFormat::Ascii)]
    pub format: InputFormat,
    #[arg(long, default_value_t = 1 << 16)]
    pub n: usize,
    /// 1-frequency for the entropy bound; defaults to the string's own.
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long, default_value_t = randlab_core::ait::DEFAULT_MARGIN)]
    pub margin: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ChampernowneArgs {
    #[arg(long, default_value_t = 1 << 18)]
    pub n: usize,
    #[arg(long, default_value_t = randlab_core::ait::DEFAULT_MARGIN)]
    pub margin: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OmegaArgs {
    #[arg(long, default_value_t = 16)]
    pub max_len: u32,
    #[arg(long, default_value_t = randlab_core::omega::DEFAULT_BUDGET)]
    pub budget: u64,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

/// What a finished run reports back to the binary.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub manifest: RunManifest,
}

impl Outcome {
    pub fn success(&self) -> bool {
        self.manifest.all_passed()
    }
}
