//! Command-line front end: argument parsing, exit codes and the mapping from
//! subcommands to library calls.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use pilotforge::io::{load_scenario, parse_scenario, Scenario, REFERENCE_SCENARIO};
use pilotforge::Error;

mod commands;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(name = "pilotforge", version, about = "Pilot design and downlink analysis for multi-cell massive MIMO")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Pilot books, estimator constants and power allocation.
    Design(Common),
    /// Per-cell region checks and the network user-capacity bound.
    Capacity(Common),
    /// Closed-form finite and large-array SINR.
    Sinr(Common),
    /// Minimum antenna counts for the satisfaction index `--mu`.
    MinAntennas(Common),
    /// Monte Carlo SINR estimates next to the closed form.
    Montecarlo(Common),
    /// Largest admissible maximum requirement over a target family.
    MaxSinr {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sweep: Sweep,
    },
    /// Boundary surface of the per-cell admissible region.
    Boundary {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        region: RegionArgs,
    },
    /// Monte Carlo volume of the admissible regions.
    RegionVolume {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        region: RegionArgs,
    },
    /// Reproduces one figure's data set.
    Repro {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = clap::value_parser!(u8).range(2..=6))]
        figure: u8,
        #[command(flatten)]
        sweep: Sweep,
        #[command(flatten)]
        region: RegionArgs,
    },
}

/// Flags shared by every subcommand; they override scenario fields.
#[derive(Debug, Args, Clone)]
struct Common {
    /// Scenario file; the bundled reference scenario when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// gwbe, wbe, fos or all.
    #[arg(long)]
    scheme: Option<String>,
    /// Comma-separated antenna counts.
    #[arg(long, value_delimiter = ',')]
    antennas: Option<Vec<u64>>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    realizations: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Debug, Args, Clone, Default)]
struct Sweep {
    /// fig3, fig4 or fig5.
    #[arg(long)]
    family: Option<String>,
    /// Users per cell, `a..b` inclusive or a single value.
    #[arg(long = "K")]
    users: Option<String>,
    /// Number of cells, `a..b` inclusive or a single value.
    #[arg(long = "L")]
    cells: Option<String>,
}

#[derive(Debug, Args, Clone, Default)]
struct RegionArgs {
    /// Grid points per axis (boundary) or omega values (fig4 sweep).
    #[arg(long)]
    grid: Option<usize>,
    /// Fixed trailing requirements, comma-separated.
    #[arg(long, value_delimiter = ',')]
    tail: Option<Vec<f64>>,
    /// Upper limit of both free axes of the boundary grid.
    #[arg(long)]
    extent: Option<f64>,
    /// Monte Carlo samples for region volumes.
    #[arg(long)]
    samples: Option<u64>,
}

impl Common {
    fn scenario(&self) -> pilotforge::Result<Scenario> {
        let base = match &self.scenario {
            Some(p) => load_scenario(p)?,
            None => parse_scenario(REFERENCE_SCENARIO)?,
        };
        let mut file = base.file;
        if let Some(s) = &self.scheme {
            file.scheme = s.clone();
        }
        if let Some(a) = &self.antennas {
            file.antennas = a.clone();
        }
        if let Some(m) = self.mu {
            file.mu = m;
        }
        if let Some(r) = self.realizations {
            file.realizations = r;
        }
        if let Some(s) = self.seed {
            file.seed = s;
        }
        Scenario::from_file(file)
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("PILOTFORGE_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

/// Runs the tool with `argv` (including the program name) and returns the exit code.
pub fn run(argv: Vec<OsString>) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    EXIT_OK
                }
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return code;
        }
    };
    configure_threads();
    match commands::dispatch(cli.command) {
        Ok(summary) => {
            println!("{summary}");
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    if e.is_user_error() {
        EXIT_INVALID
    } else {
        EXIT_INTERNAL
    }
}
