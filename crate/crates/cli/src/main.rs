//! `tentcert`: estimate, certify and export log-concave MLE tent functions.

mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Exit codes; documented in the README and stable.
pub mod exit {
    pub const OK: u8 = 0;
    pub const FAILURE: u8 = 1;
    pub const INVALID_INPUT: u8 = 2;
    pub const NOT_CONVERGED: u8 = 3;
    pub const NOT_CERTIFIED: u8 = 4;
    pub const TERM_BUDGET: u8 = 5;
}

#[derive(Parser, Debug)]
#[command(name = "tentcert", version, about = "Certified log-concave maximum likelihood estimation")]
pub struct Cli {
    /// Working precision in bits.
    #[arg(long, global = true, default_value_t = 256)]
    pub precision: u32,
    /// Relative tolerance for merging coplanar facets into one cell.
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub tol_flat: f64,
    /// Target max-norm of the reduced gradient.
    #[arg(long, global = true, default_value_t = 2f64.powi(-40))]
    pub gtol: f64,
    /// Refinement rounds without improvement before giving up.
    #[arg(long, global = true, default_value_t = 5)]
    pub max_stall: usize,
    /// Largest number of terms produced while expanding one equation.
    #[arg(long, global = true, default_value_t = tentcert::polysys::DEFAULT_TERM_BUDGET)]
    pub term_budget: usize,
    /// Decimal digits used when writing heights.
    #[arg(long, global = true, default_value_t = 40)]
    pub digits: usize,
    /// Write the result here instead of stdout.
    #[arg(short, long, global = true)]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Maximize the likelihood and report heights and subdivision.
    Estimate {
        input: PathBuf,
    },
    /// Test candidate systems for a certified critical point near given heights.
    Certify {
        input: PathBuf,
        /// Heights as a JSON array or an estimate result; estimated if absent.
        #[arg(long)]
        heights: Option<PathBuf>,
        /// `auto`, or a JSON file listing candidate subdivisions.
        #[arg(long, default_value = "auto")]
        subdivision: String,
        /// Run digit refinement on candidates that do not certify outright.
        #[arg(long)]
        refine: bool,
        /// Directory receiving the polynomial systems as JSON.
        #[arg(long)]
        dump_system: Option<PathBuf>,
    },
    /// One-cell heights on two points from the Lambert closed form.
    ClosedForm {
        w1: String,
        w2: String,
        vol: String,
    },
    /// Write the tent function as CSV and JSON plot data.
    Tentplot {
        input: PathBuf,
        #[arg(long)]
        heights: Option<PathBuf>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Some(n) = std::env::var("TENTCERT_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            log::warn!("could not size thread pool: {e}");
        }
    }
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(io::exit_code_for(&e))
        }
    }
}
