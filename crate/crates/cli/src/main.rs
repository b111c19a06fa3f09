mod commands;
mod spec;

use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use anonmet::metrology::Direction;
use anonmet::Side;

/// Anonymous quantum metrology toolkit.
#[derive(Debug, Parser)]
#[command(name = "anonmet", version, about)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Tolerance overrides: a bare number sets `holds`, or `key=value` pairs
    /// (herm, trace, norm, psd, eig, freq, holds, fails, qfi_cutoff).
    #[arg(long, global = true, env = "ANONMET_TOL", value_delimiter = ',')]
    pub tol: Vec<String>,

    /// Seed for every randomized step.
    #[arg(long, global = true, env = "ANONMET_SEED", default_value_t = 0)]
    pub seed: u64,

    /// Integer spectra are searched in [0, bound]^d.
    #[arg(long, global = true, env = "ANONMET_SEARCH_BOUND", default_value_t = 3)]
    pub search_bound: u32,

    /// Random bases tried inside degenerate marginal eigenspaces.
    #[arg(long, global = true, env = "ANONMET_RANDOM_BASES", default_value_t = 1000)]
    pub random_bases: usize,

    /// θ grid size (default 256 for fidelity scans, 1024 for likelihoods).
    #[arg(long, global = true, env = "ANONMET_GRID_POINTS")]
    pub grid_points: Option<usize>,

    /// Emit JSON instead of tables.
    #[arg(long, global = true, env = "ANONMET_JSON")]
    pub json: bool,

    /// Exit with status 4 when the result is inconclusive.
    #[arg(long, global = true, env = "ANONMET_STRICT")]
    pub strict: bool,
}

#[derive(Debug, Args, Clone)]
pub struct StateArgs {
    /// State file (JSON).
    #[arg(value_name = "STATE_FILE", conflicts_with = "catalog")]
    pub file: Option<std::path::PathBuf>,

    /// Catalog state name (see `anonmet catalog`).
    #[arg(long)]
    pub catalog: Option<String>,

    /// Catalog parameter override, `key=value`.
    #[arg(long = "param", value_name = "KEY=VALUE", requires = "catalog")]
    pub params: Vec<String>,
}

#[derive(Debug, Args, Clone)]
pub struct PairArgs {
    /// Alice's generator: diag:v1,v2,.. | proj:k | pauli:x|y|z | file:PATH | json:ROWS.
    /// Without --h-a/--g-b a weak-anonymity witness is searched for.
    #[arg(long = "h-a", value_name = "SPEC", requires = "g_b")]
    pub h_a: Option<String>,

    /// Bob's generator, same syntax as --h-a.
    #[arg(long = "g-b", value_name = "SPEC", requires = "h_a")]
    pub g_b: Option<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SideArg {
    A,
    B,
}

impl From<SideArg> for Side {
    fn from(s: SideArg) -> Side {
        match s {
            SideArg::A => Side::A,
            SideArg::B => Side::B,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DirectionArg {
    Min,
    Max,
}

impl From<DirectionArg> for Direction {
    fn from(d: DirectionArg) -> Direction {
        match d {
            DirectionArg::Min => Direction::Min,
            DirectionArg::Max => Direction::Max,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List catalog states.
    Catalog,

    /// Write a catalog state as a state file.
    Export {
        #[command(flatten)]
        state: StateArgs,
        /// Output path (stdout when absent).
        #[arg(short, long)]
        output: Option<std::path::PathBuf>,
    },

    /// WA/SA status, PPT and classical-form tests, with witnesses.
    Classify {
        #[command(flatten)]
        state: StateArgs,
    },

    /// Mode decomposition under one local generator.
    Modes {
        #[command(flatten)]
        state: StateArgs,
        /// Generator spec (see --h-a).
        #[arg(long = "h", value_name = "SPEC")]
        h: String,
        #[arg(long, value_enum, default_value = "a")]
        side: SideArg,
        /// Print each mode matrix.
        #[arg(long)]
        show_matrices: bool,
    },

    /// Fisher information, fidelity floor, n_delta and figure of merit.
    Merit {
        #[command(flatten)]
        state: StateArgs,
        #[command(flatten)]
        pair: PairArgs,
        /// Optimize M over unit-norm pairs instead of using a fixed pair.
        #[arg(long, conflicts_with_all = ["h_a", "g_b"])]
        optimize: bool,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        #[arg(long, value_enum, default_value = "max")]
        direction: DirectionArg,
        #[arg(long, default_value_t = 20)]
        restarts: usize,
        #[arg(long, default_value_t = 200)]
        steps: usize,
    },

    /// Run the protocol: encode, measure, estimate θ and guess the encoder.
    Simulate {
        #[command(flatten)]
        state: StateArgs,
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long, value_enum, default_value = "a")]
        encoder: SideArg,
        #[arg(long, allow_negative_numbers = true)]
        theta: f64,
        #[arg(long, default_value_t = 100)]
        copies: usize,
    },

    /// Guessing-probability bounds for an ε-perturbed anonymous state.
    Robustness {
        /// Trace distance to an anonymous state. Computed against the
        /// nearest anonymous catalog state when a state is given instead.
        #[arg(long, allow_negative_numbers = true)]
        epsilon: Option<f64>,
        #[command(flatten)]
        state: StateArgs,
        /// Copy counts for the multi-copy bound.
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
        copies: Vec<usize>,
    },

    /// Purification attack: Charlie holds the purifying system.
    Attack {
        #[command(flatten)]
        state: StateArgs,
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        theta: f64,
    },

    /// Delocalised measurement: a path qubit controls who encodes.
    Delocalise {
        #[command(flatten)]
        state: StateArgs,
        #[command(flatten)]
        pair: PairArgs,
        /// Path amplitude on L, `re` or `re,im`.
        #[arg(long, default_value = "0.7071067811865476", allow_hyphen_values = true)]
        a: String,
        /// Path amplitude on R, `re` or `re,im`.
        #[arg(long, default_value = "0.7071067811865476", allow_hyphen_values = true)]
        b: String,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        theta: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(out) => {
            // a closed pipe (e.g. `| head`) is not an error worth reporting
            let _ = writeln!(std::io::stdout().lock(), "{}", out.text);
            if cli.global.strict && out.inconclusive {
                eprintln!("result is inconclusive (--strict)");
                ExitCode::from(4)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
