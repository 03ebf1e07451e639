//! `bcsi` command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 input validation failure,
//! 3 numerical or feasibility failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod format;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "bcsi", version, about = "Broadcast channels with state information at the transmitter")]
pub struct Cli {
    /// Display rates in bits instead of nats.
    #[arg(long, global = true)]
    pub bits: bool,

    /// Run every parallel workload on the calling thread.
    #[arg(long, global = true)]
    pub sequential: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Inner-bound rate region by scheme search.
    Region(RegionArgs),
    /// Capacity region of a deterministic variant.
    Capacity(CapacityArgs),
    /// Check degradedness or search for less-noisy counterexamples.
    Check(CheckArgs),
    /// Fourier–Motzkin checks.
    Fm {
        #[command(subcommand)]
        action: FmAction,
    },
    /// Monte Carlo random-coding simulation on a multilevel channel.
    Simulate(SimulateArgs),
    /// Gaussian dirty-paper layering.
    Wdp(WdpArgs),
    /// Additive exponential noise bounds.
    Aen(AenArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Model {
    Mbc,
    Lessnoisy,
}

#[derive(Debug, Clone, Args)]
pub struct SearchArgs {
    /// Auxiliary cardinalities, e.g. `U=4,V=4`.
    #[arg(long, value_name = "U=n,V=n", value_parser = format::parse_aux_card)]
    pub aux_card: Option<(usize, usize)>,
    #[arg(long, default_value_t = 50)]
    pub restarts: usize,
    #[arg(long, default_value_t = 200)]
    pub steps: usize,
    #[arg(long, default_value_t = 0.05)]
    pub step_size: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct RegionArgs {
    #[arg(long, value_enum)]
    pub model: Model,
    #[arg(long)]
    pub channel: PathBuf,
    #[command(flatten)]
    pub search: SearchArgs,
    /// Vertex CSV; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON summary; defaults to the `--out` path with a `.json` extension.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Variant {
    OneDet,
    TwoDet,
    FullDet,
    LnGeneral,
    LnOneDet,
    LnTwoDet,
    LnFullDet,
    LnFullDetPartial,
    LnTwoDetPartial,
}

#[derive(Debug, Args)]
pub struct CapacityArgs {
    #[arg(long)]
    pub channel: PathBuf,
    #[arg(long, value_enum)]
    pub variant: Variant,
    #[command(flatten)]
    pub search: SearchArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Property {
    Degraded,
    LessNoisy,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[arg(long)]
    pub channel: PathBuf,
    #[arg(long, value_enum)]
    pub property: Property,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Auxiliary cardinality for less-noisy sampling; defaults to `|X|`.
    #[arg(long)]
    pub aux_card: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum FmAction {
    /// Compare the projected system with the closed form.
    Verify(FmVerifyArgs),
}

#[derive(Debug, Args)]
pub struct FmVerifyArgs {
    #[arg(long)]
    pub channel: PathBuf,
    #[arg(long)]
    pub scheme: Option<PathBuf>,
    /// Additional random schemes.
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub channel: PathBuf,
    #[arg(long)]
    pub scheme: PathBuf,
    /// `R0,R1` in nats per symbol.
    #[arg(long, value_parser = format::parse_pair)]
    pub rates: [f64; 2],
    /// `R11,R12` with `R11 + R12 = R1`; defaults to an even split.
    #[arg(long, value_parser = format::parse_pair)]
    pub split: Option<[f64; 2]>,
    /// Bin rates `R0',R11',R12'`.
    #[arg(long, value_parser = format::parse_triple, default_value = "0,0,0")]
    pub bins: [f64; 3],
    /// Blocklengths.
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = bcsi::coding_sim::DEFAULT_EPSILON)]
    pub eps: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Largest codebook allowed.
    #[arg(long, default_value_t = bcsi::coding_sim::DEFAULT_CAP)]
    pub cap: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct WdpArgs {
    #[arg(long, value_parser = format::parse_triple)]
    pub p: [f64; 3],
    #[arg(long, value_parser = format::parse_triple)]
    pub n: [f64; 3],
    #[arg(long)]
    pub q: f64,
    /// Grid points over β ∈ [0, 1].
    #[arg(long, default_value_t = 10_000)]
    pub grid: usize,
}

#[derive(Debug, Args)]
pub struct AenArgs {
    #[arg(long)]
    pub mx: f64,
    #[arg(long)]
    pub ms: f64,
    #[arg(long, value_parser = format::parse_triple)]
    pub mz: [f64; 3],
    /// Outer bound with the numerically integrated entropy constant.
    #[arg(long)]
    pub corrected: bool,
    /// Print both constants and the inner/outer comparison.
    #[arg(long)]
    pub compare: bool,
    #[arg(long, default_value_t = 20.0)]
    pub regime_ratio: f64,
    #[arg(long, default_value_t = 0.1)]
    pub regime_small: f64,
}

/// Output streams of one invocation.
pub struct Io<'a> {
    pub out: &'a mut dyn Write,
    pub err: &'a mut dyn Write,
}

/// Parse `args` (program name first), execute, and return the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = out.write_all(text.as_bytes());
                    EXIT_OK
                }
                _ => {
                    let _ = err.write_all(text.as_bytes());
                    EXIT_USAGE
                }
            };
        }
    };
    let mut io = Io { out, err };
    match commands::dispatch(&cli, &mut io) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(io.err, "error: {e:#}");
            exit_code(&e)
        }
    }
}

/// Exit code for a failed command.
pub fn exit_code(e: &anyhow::Error) -> i32 {
    use bcsi::Error as E;
    for cause in e.chain() {
        if let Some(err) = cause.downcast_ref::<E>() {
            return match err {
                E::UnknownLabel(_)
                | E::InvalidArgument(_)
                | E::InvalidDistribution(_)
                | E::Format(_)
                | E::Precondition(_) => EXIT_INPUT,
                E::Composition(_) | E::Blowup { .. } | E::CodebookCap { .. } => EXIT_NUMERICAL,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return EXIT_INPUT;
        }
    }
    EXIT_NUMERICAL
}
