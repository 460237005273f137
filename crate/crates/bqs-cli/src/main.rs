//! `bqs`: run the SPRINT-based scissors protocol and emit CSV tables for
//! efficiency sweeps, Fock-state generation, W-state distributions and
//! loss scans.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use crate::config::ConfigFile;

#[derive(Parser)]
#[command(
    name = "bqs",
    version,
    about = "Single-atom bright-quantum-scissors simulator",
    after_help = "Values may also come from a key=value config file (--config); \
                  explicit flags always win."
)]
struct Cli {
    /// Key=value defaults file; flags override file values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Omit the timestamp comment line from CSV output.
    #[arg(long, global = true)]
    no_header_timestamp: bool,

    /// Reserved for sampling back-ends; the exact enumerators ignore it.
    #[arg(long, global = true, value_name = "SEED")]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum InputKindArg {
    Coherent,
    Fock,
    Custom,
}

#[derive(clap::Args, Clone, Debug, Default)]
struct InputArgs {
    /// Input state family.
    #[arg(long, value_enum)]
    input: Option<InputKindArg>,

    /// Mean photon number α² of a coherent input.
    #[arg(long, value_name = "A2")]
    alpha_sq: Option<f64>,

    /// Fock index of a fock input.
    #[arg(long, value_name = "N")]
    n: Option<u32>,

    /// Comma-separated real coefficients C_0,C_1,... of a custom input.
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        value_name = "C0,C1,..."
    )]
    coeffs: Option<Vec<f64>>,

    /// Truncation bound override.
    #[arg(long, value_name = "NMAX")]
    n_max: Option<u32>,
}

#[derive(clap::Args, Clone, Debug, Default)]
struct OutArgs {
    /// Output path ("-" or omitted: stdout).
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the protocol and write the final state (or loss ensemble) as text.
    Simulate {
        #[command(flatten)]
        input: InputArgs,
        /// Number of protocol iterations.
        #[arg(long, value_name = "ITERS")]
        iterations: Option<u32>,
        /// Per-pass photon loss probability; enables branch enumeration.
        #[arg(long, value_name = "L")]
        loss: Option<f64>,
        /// Cap on enumerated loss events per branch.
        #[arg(long, value_name = "CAP")]
        max_loss_events: Option<u32>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Inverse-annihilation efficiency over a mean-photon-number grid.
    SweepEta1 {
        /// α² grid as start:stop:step.
        #[arg(long, value_name = "GRID")]
        grid: Option<String>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// kth-order scissors efficiency, success probability and Fock fidelity.
    SweepBqs {
        /// Scissors orders, comma separated.
        #[arg(long, value_delimiter = ',', value_name = "K,...")]
        k: Option<Vec<u32>>,
        /// α² grid as start:stop:step.
        #[arg(long, value_name = "GRID")]
        grid: Option<String>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Optimal Bell-heralded Fock-state generation per target index.
    FockGen {
        /// Target Fock indices, comma separated.
        #[arg(long, value_delimiter = ',', value_name = "K,...")]
        k: Option<Vec<u32>>,
        /// α² search grid as start:stop:step.
        #[arg(long, value_name = "GRID")]
        grid: Option<String>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// W-state success distribution over the state size.
    WDist {
        #[command(flatten)]
        input: InputArgs,
        /// Number of protocol iterations.
        #[arg(long, value_name = "ITERS")]
        iterations: Option<u32>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Heralded fidelity against the loss power law over an L grid.
    LossScan {
        #[command(flatten)]
        input: InputArgs,
        /// Number of protocol iterations.
        #[arg(long, value_name = "ITERS")]
        iterations: Option<u32>,
        /// Herald position and target Fock index.
        #[arg(long, value_name = "K")]
        k: Option<u32>,
        /// L grid as start:stop:step.
        #[arg(long, value_name = "GRID")]
        grid: Option<String>,
        /// Cap on enumerated loss events per branch.
        #[arg(long, value_name = "CAP")]
        max_loss_events: Option<u32>,
        #[command(flatten)]
        out: OutArgs,
    },
}

/// CLI-level error with the documented exit codes: 2 invalid input,
/// 3 resource limit, 4 I/O.
#[derive(Debug)]
enum CliError {
    Core(bqs_core::Error),
    Config(String),
    Io(std::io::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Config(msg) => write!(f, "config: {msg}"),
            CliError::Io(e) => write!(f, "i/o: {e}"),
        }
    }
}

impl From<bqs_core::Error> for CliError {
    fn from(e: bqs_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl CliError {
    fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Core(bqs_core::Error::ResourceLimit(_)) => ExitCode::from(3),
            CliError::Core(_) | CliError::Config(_) => ExitCode::from(2),
            CliError::Io(_) => ExitCode::from(4),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let timestamp = !(cli.no_header_timestamp || file.flag("no-header-timestamp")?);
    match cli.command {
        Command::Simulate {
            input,
            iterations,
            loss,
            max_loss_events,
            out,
        } => commands::simulate(&input, iterations, loss, max_loss_events, &out, &file),
        Command::SweepEta1 { grid, out } => commands::sweep_eta1(grid, &out, &file, timestamp),
        Command::SweepBqs { k, grid, out } => commands::sweep_bqs(k, grid, &out, &file, timestamp),
        Command::FockGen { k, grid, out } => commands::fock_gen(k, grid, &out, &file, timestamp),
        Command::WDist {
            input,
            iterations,
            out,
        } => commands::w_dist(&input, iterations, &out, &file, timestamp),
        Command::LossScan {
            input,
            iterations,
            k,
            grid,
            max_loss_events,
            out,
        } => commands::loss_scan(
            &input,
            iterations,
            k,
            grid,
            max_loss_events,
            &out,
            &file,
            timestamp,
        ),
    }
}
