//! `divfield`: command-line access to the group searches, curve invariants,
//! the nilpotency classifier and the reference-table checks.
//!
//! Every command prints one JSON document `{"manifest": ..., "result": ...}`
//! on stdout. Exit codes: 0 success, 2 usage, 3 computation error,
//! 4 verification mismatch.

mod cache;
mod commands;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

/// Subgroups of GL2(Z/NZ), modular curves and nilpotent division fields.
#[derive(Debug, Parser)]
#[command(name = "divfield", version)]
pub struct Cli {
    /// Cache root (results under `results/`, LMFDB records under `lmfdb/`).
    #[arg(long, global = true, env = "DIVFIELD_CACHE_DIR", default_value = "cache")]
    pub cache_dir: PathBuf,

    /// Recompute even when a cached result exists.
    #[arg(long, global = true)]
    pub no_cache: bool,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Level, index, genus, cusps and elliptic points of X_G.
    Invariants(GroupArgs),
    /// Maximal near-coincidence classes at level (p^k, p^(k-1)).
    SearchNearco {
        #[arg(long)]
        p: u32,
        #[arg(long)]
        k: u32,
    },
    /// Maximal nilpotent admissible classes in GL2(F_p).
    SearchNilpotent {
        /// One or more primes, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        p: Vec<u32>,
    },
    /// Decide whether Q(E[n])/Q is nilpotent.
    Classify(ClassifyArgs),
    /// A standard or CM subgroup with its basic properties.
    Cartan(CartanArgs),
    /// Evaluate a j-map exactly.
    Jmap(JmapArgs),
    /// Recompute a reference table and compare.
    Verify {
        #[arg(long, value_parser = ["1", "2", "nearco", "props"])]
        table: String,
    },
    /// Load a curve record by LMFDB label and convert it to a descriptor.
    Fetch {
        label: String,
        /// Allow network requests.
        #[arg(long)]
        live: bool,
        /// Directory of `<label>.json` fixtures consulted first.
        #[arg(long)]
        fixtures: Option<PathBuf>,
        /// Also classify the curve at this level.
        #[arg(long)]
        n: Option<u64>,
        #[arg(long)]
        assume_conjecture: bool,
    },
}

#[derive(Debug, Args)]
pub struct GroupArgs {
    /// Generator `[[a,b],[c,d]]` (repeatable); needs `--level`.
    #[arg(long = "gen", requires = "level")]
    pub gens: Vec<String>,
    #[arg(long)]
    pub level: Option<u32>,
    /// Standard subgroup kind, with `--p`.
    #[arg(long, requires = "p", conflicts_with_all = ["gens", "label"])]
    pub kind: Option<String>,
    #[arg(long)]
    pub p: Option<u32>,
    /// Tabulated prime-level label such as `7.21.0.1`.
    #[arg(long, conflicts_with = "gens")]
    pub label: Option<String>,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    /// CM discriminant.
    #[arg(long, allow_hyphen_values = true, conflicts_with_all = ["j0", "images"])]
    pub cm: Option<i64>,
    /// `d` of a j = 0 curve `y^2 = x^3 + d` (rational).
    #[arg(long, allow_hyphen_values = true, conflicts_with = "images")]
    pub j0: Option<String>,
    /// Non-CM image bounds such as `3=ns+,7=ns+,5=5.15.0.1`.
    #[arg(long, value_delimiter = ',')]
    pub images: Vec<String>,
    /// The curve has a rational point of order 2.
    #[arg(long)]
    pub two_torsion: bool,
    /// The discriminant is a square.
    #[arg(long)]
    pub square_disc: bool,
    #[arg(long)]
    pub n: u64,
    /// Assume no non-CM curve has nonsplit normaliser image above 11.
    #[arg(long)]
    pub assume_conjecture: bool,
}

#[derive(Debug, Args)]
pub struct CartanArgs {
    /// Standard kind (borel, split, split+, nonsplit, nonsplit+, ...), with `--p`.
    #[arg(long, requires = "p")]
    pub kind: Option<String>,
    #[arg(long)]
    pub p: Option<u32>,
    /// CM discriminant, with `--n`.
    #[arg(long, allow_hyphen_values = true, requires = "n", conflicts_with = "kind")]
    pub cm: Option<i64>,
    #[arg(long)]
    pub n: Option<u32>,
    /// Use N_O instead of C_O.
    #[arg(long)]
    pub normalizer: bool,
}

#[derive(Debug, Args)]
pub struct JmapArgs {
    /// f2, h2, f3, f5, f6, f7, f15 or f21.
    #[arg(long)]
    pub id: String,
    #[arg(long, allow_hyphen_values = true, conflicts_with_all = ["x", "y", "infinity"])]
    pub t: Option<String>,
    #[arg(long, allow_hyphen_values = true, requires = "y")]
    pub x: Option<String>,
    #[arg(long, allow_hyphen_values = true, requires = "x")]
    pub y: Option<String>,
    #[arg(long)]
    pub infinity: bool,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{0}")]
    Compute(String),
    #[error("verification failed: {0}")]
    Mismatch(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Compute(_) => 3,
            CliError::Mismatch(_) => 4,
        }
    }
}

impl From<divfield_core::Error> for CliError {
    fn from(e: divfield_core::Error) -> Self {
        match e {
            divfield_core::Error::Parse(_) | divfield_core::Error::Descriptor(_) | divfield_core::Error::Unsupported(_) => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Compute(e.to_string()),
        }
    }
}

impl From<divfield_lmfdb::LmfdbError> for CliError {
    fn from(e: divfield_lmfdb::LmfdbError) -> Self {
        match e {
            divfield_lmfdb::LmfdbError::InvalidLabel(_) => CliError::Usage(e.to_string()),
            _ => CliError::Compute(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    }
    match commands::run(&cli) {
        Ok(out) => {
            emit(&out);
            ExitCode::SUCCESS
        }
        Err((e, out)) => {
            if let Some(out) = out {
                emit(&out);
            }
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

/// Prints the document; a closed pipe is not an error.
fn emit(out: &serde_json::Value) {
    let text = serde_json::to_string_pretty(out).expect("output serializes");
    let _ = writeln!(std::io::stdout(), "{text}");
}
