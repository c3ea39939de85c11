//! `optkit`: checks theories, ontological models and noncontextual
//! embeddings from the command line.
//!
//! Exit status is 0 when every verdict passes, 2 when one fails and 1 on
//! usage, input or parse errors.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "optkit", version, about = "Operational theories, ontological models and noncontextuality checks")]
struct Cli {
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,
    /// Record wall-clock time in the report (makes it machine dependent).
    #[arg(long, global = true)]
    timings: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Json,
    Text,
}

#[derive(Args, Debug, Clone)]
pub struct Sampling {
    #[arg(long, default_value_t = 200)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Parse a theory or fragment file and check every test in it.
    Validate { file: PathBuf },
    /// Write the quotient theory with its class table.
    Quotient {
        file: PathBuf,
        #[arg(short = 'o', long = "output")]
        output: PathBuf,
    },
    /// Sample conditional families and report any the theory rejects.
    CheckStrongCausality {
        theory: PathBuf,
        #[command(flatten)]
        sampling: Sampling,
    },
    /// Check an ontological model against the axioms.
    CheckModel {
        theory: PathBuf,
        model: PathBuf,
        /// `all` or a comma separated list of outcome, diagram, cg, prob,
        /// cond, determinicity, noncontextuality.
        #[arg(long, default_value = "all")]
        checks: String,
        #[command(flatten)]
        sampling: Sampling,
    },
    /// Search for a simplex embedding of a fragment.
    FindNcModel {
        fragment: PathBuf,
        #[arg(long, default_value_t = 8)]
        max_ontic: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = 32)]
        starts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1_000_000)]
        denominator_cap: u64,
        /// Also write the certificate here.
        #[arg(short = 'o', long = "output")]
        output: Option<PathBuf>,
    },
    /// Verify the collapse of shared events, or with `--model` that the
    /// model represents them noncontextually.
    VerifyLemma {
        theory: PathBuf,
        #[arg(long)]
        model: Option<PathBuf>,
        #[command(flatten)]
        sampling: Sampling,
    },
    /// Convex-linearity and the scalar map of a model (default: the
    /// tag-forgetting model).
    CheckAppendix {
        theory: PathBuf,
        #[arg(long)]
        model: Option<PathBuf>,
        #[command(flatten)]
        sampling: Sampling,
    },
}

fn configure_threads() -> Result<(), String> {
    let Ok(value) = std::env::var("OPTKIT_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .map_err(|_| format!("OPTKIT_THREADS must be a positive integer, got `{value}`"))?;
    if n == 0 {
        return Err("OPTKIT_THREADS must be a positive integer, got `0`".into());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    let start = Instant::now();
    let mut report = match commands::run(&cli.command) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    if cli.timings {
        report.wall_time_ms = Some(start.elapsed().as_millis() as u64);
    }
    match cli.format {
        Format::Json => print!("{}", report.to_json()),
        Format::Text => print!("{}", report.to_text()),
    }
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}
