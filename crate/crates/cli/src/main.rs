mod commands;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::Failure;

pub const EXIT_SYMBOLS: u8 = 2;
pub const EXIT_CHECK: u8 = 3;
pub const EXIT_GAP: u8 = 4;
pub const EXIT_USAGE: u8 = 64;
pub const EXIT_DATA: u8 = 65;

#[derive(Parser, Debug)]
#[command(name = "bottlab", version, about = "Bott index numerics for almost-commuting unitaries")]
struct Cli {
    /// Seed for every random choice (projections, restarts).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the symbol identities of the default triple on a grid.
    VerifySymbols(VerifySymbolsArgs),
    /// Sweep the clock/shift Loring element over N and check the trace and norm bounds.
    Sweep(SweepArgs),
    /// Pair the u_t family with a loop read from JSON.
    Pairing(PairingArgs),
    /// Check that the Bott loop of random projections pairs to their rank.
    Roundtrip(RoundtripArgs),
    /// Compare a heuristic nearest commuting pair with the certified bound.
    Nearest(NearestArgs),
}

#[derive(Args, Debug)]
struct VerifySymbolsArgs {
    #[arg(long, default_value_t = bottlab::symbols::LIPSCHITZ_GRID)]
    grid: usize,
    /// Replace f by this constant (exercises the failure path).
    #[arg(long, hide = true)]
    fconst: Option<f64>,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long, value_delimiter = ',', default_value = "8,16,32,64,128")]
    n_list: Vec<usize>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write the table here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PairingArgs {
    /// JSON file: {"k": int, "coeffs": [{"mode": int, "matrix": [[[re, im], ...], ...]}]}
    #[arg(long = "loop")]
    loop_file: PathBuf,
    #[arg(long, default_value_t = 24.0)]
    t: f64,
    /// Smallest accepted distance from the spectrum of e to 1/2.
    #[arg(long, default_value_t = bottlab::loring::DEFAULT_GAP_MIN)]
    gap_min: f64,
}

#[derive(Args, Debug)]
struct RoundtripArgs {
    #[arg(long, default_value_t = 4)]
    k: usize,
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3")]
    ranks: Vec<usize>,
    #[arg(long, default_value_t = 24.0)]
    t: f64,
    /// Random projections per rank.
    #[arg(long, default_value_t = 1)]
    count: usize,
}

#[derive(Args, Debug)]
struct NearestArgs {
    #[arg(long, default_value_t = 16)]
    n: usize,
    #[arg(long, default_value_t = 8)]
    restarts: usize,
    /// Jacobi sweeps per restart.
    #[arg(long, default_value_t = 200)]
    max_iters: usize,
    /// Use a random exactly commuting pair instead of the clock and shift.
    #[arg(long)]
    commuting_test: bool,
}

fn configure_threads() -> Result<(), Failure> {
    let Some(raw) = std::env::var_os("BOTTLAB_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .to_str()
        .and_then(|s| s.trim().parse().ok())
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::new(EXIT_USAGE, format!("BOTTLAB_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::new(EXIT_USAGE, format!("cannot configure thread pool: {e}")))
}

fn run(args: impl IntoIterator<Item = OsString>) -> Result<(), Failure> {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return Ok(());
        }
        Err(e) => {
            let text = e.to_string();
            let text = text.strip_prefix("error: ").unwrap_or(&text).trim_end();
            return Err(Failure::new(EXIT_USAGE, text));
        }
    };
    configure_threads()?;
    let seed = cli.seed;
    match cli.command {
        Command::VerifySymbols(a) => commands::verify_symbols(seed, a.grid, a.fconst),
        Command::Sweep(a) => commands::sweep(seed, &a.n_list, a.format == Format::Json, a.output.as_deref()),
        Command::Pairing(a) => commands::pairing(seed, &a.loop_file, a.t, a.gap_min),
        Command::Roundtrip(a) => commands::roundtrip(seed, a.k, &a.ranks, a.t, a.count),
        Command::Nearest(a) => commands::nearest(seed, a.n, a.restarts, a.max_iters, a.commuting_test),
    }
}

fn main() -> ExitCode {
    match run(std::env::args_os()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
