use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gqa_cli::commands::DEFAULT_TOL;
use gqa_cli::{run, Command, Options};

/// Normalize, compare and run Gaussian string diagrams and programs.
#[derive(Parser)]
#[command(name = "gqa", version)]
struct Cli {
    /// Tolerance for equality verdicts
    #[arg(long, global = true, default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// Seed for sampling
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Machine-readable output
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Value of a diagram's quadratic function at a point (inputs, then outputs)
    Eval {
        diagram_file: PathBuf,
        /// Comma-separated coordinates
        #[arg(value_delimiter = ',', allow_negative_numbers = true)]
        point: Vec<f64>,
    },
    /// Print the normal form of a diagram as JSON
    Normalize {
        diagram_file: PathBuf,
        /// Print the effective domain (an affine relation) instead
        #[arg(long)]
        domain: bool,
    },
    /// Decide whether two diagrams (or JSON normal forms) are equal
    Eq { file_a: PathBuf, file_b: PathBuf },
    /// Exact posterior of a program
    Infer { gpl_file: PathBuf },
    /// Least squares from a CSV of design columns and an observation column
    Ols { csv_file: PathBuf },
    /// Check every equational law of the calculus
    AxiomsCheck,
    /// Graphviz rendering of a diagram
    ExportDot {
        diagram_file: PathBuf,
        /// Output file (stdout if omitted)
        out: Option<PathBuf>,
    },
    /// Draw samples from a causal diagram
    Sample {
        diagram_file: PathBuf,
        /// Comma-separated input values
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        input: Vec<f64>,
        #[arg(long, default_value_t = 1)]
        count: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = match cli.command {
        Sub::Eval { diagram_file, point } => Command::Eval { diagram_file, point },
        Sub::Normalize { diagram_file, domain } => Command::Normalize { diagram_file, domain },
        Sub::Eq { file_a, file_b } => Command::Eq { file_a, file_b },
        Sub::Infer { gpl_file } => Command::Infer { gpl_file },
        Sub::Ols { csv_file } => Command::Ols { csv_file },
        Sub::AxiomsCheck => Command::AxiomsCheck,
        Sub::ExportDot { diagram_file, out } => Command::ExportDot { diagram_file, out },
        Sub::Sample {
            diagram_file,
            input,
            count,
        } => Command::Sample {
            diagram_file,
            input,
            count,
        },
    };
    let opts = Options {
        tol: cli.tol,
        seed: cli.seed,
        json: cli.json,
    };
    match run(&command, &opts) {
        Ok(outcome) => {
            print!("{}", outcome.stdout);
            ExitCode::from(outcome.code as u8)
        }
        Err(e) => {
            eprintln!("gqa: {}", e);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
