mod bench;
mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use crate::config::RunConfig;

/// Approximate and exact counting queries on sparse graphs.
#[derive(Debug, Parser)]
#[command(name = "sparsecount", version)]
pub struct Cli {
    /// Accuracy ε, as a decimal or fraction.
    #[arg(long, global = true, default_value = "1/2")]
    epsilon: String,
    #[arg(long, global = true, value_enum, default_value_t = Format::Human)]
    format: Format,
    /// Seed for the graph generators.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Largest threshold perturbation grid the oracle will enumerate.
    #[arg(long, global = true, default_value_t = 1_000_000)]
    oracle_cap: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Human,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Min,
    Max,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Grid,
    Tree,
    BoundedDegreeRandom,
}

/// A query given inline or read from a file.
#[derive(Debug, clap::Args)]
pub struct QueryArg {
    /// Query text.
    #[arg(required_unless_present = "query_file")]
    query: Option<String>,
    #[arg(long, conflicts_with = "query")]
    query_file: Option<std::path::PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct TermArgs {
    /// Graph file, or `-` for stdin.
    graph: String,
    #[command(flatten)]
    query: QueryArg,
    /// The counted variable.
    #[arg(long, default_value = "y")]
    var: String,
    /// Comma-separated free variables, in tuple order. Defaults to the
    /// body's other free variables, sorted.
    #[arg(long, value_delimiter = ',')]
    vars: Option<Vec<String>>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide a sentence: prints 1, 0 or unknown.
    Check {
        graph: String,
        #[command(flatten)]
        query: QueryArg,
    },
    /// Exact values of `#var body` for the given tuple or all tuples.
    Count {
        #[command(flatten)]
        term: TermArgs,
        /// Comma-separated vertices; all tuples when absent.
        #[arg(long, value_delimiter = ',')]
        tuple: Option<Vec<u32>>,
        /// Print the per-descriptor weight table as CSV instead.
        #[arg(long)]
        weights: bool,
    },
    /// Optimum of `#var body` over all tuples.
    Optimize {
        #[command(flatten)]
        term: TermArgs,
        #[arg(long, value_enum, default_value_t = Mode::Max)]
        mode: Mode,
    },
    /// Partial dominating set: the best `k` vertices, or whether they dominate more than `--threshold`.
    Pds {
        graph: String,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        threshold: Option<u64>,
    },
    /// Brute-force semantics.
    Oracle {
        #[command(subcommand)]
        command: OracleCommand,
    },
    /// Statistics of repeated augmentation.
    Augment {
        graph: String,
        #[arg(long, default_value_t = 1)]
        rounds: usize,
    },
    /// Time `check` on generated graphs; prints CSV.
    Bench {
        #[arg(long, value_enum)]
        family: Family,
        /// Comma-separated sizes: side length for grids, vertex count otherwise.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        sizes: Vec<usize>,
        #[arg(long, default_value = bench::DEFAULT_QUERY)]
        query: String,
        #[arg(long, default_value_t = 1)]
        repetitions: usize,
        /// Degree bound for `bounded-degree-random`.
        #[arg(long, default_value_t = 3)]
        degree: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum OracleCommand {
    /// Evaluate a sentence exactly.
    Eval {
        graph: String,
        #[command(flatten)]
        query: QueryArg,
    },
    /// Search for λ-similar variants that disagree.
    Witness {
        graph: String,
        #[command(flatten)]
        query: QueryArg,
        /// Similarity factor; defaults to 1 + ε.
        #[arg(long)]
        lambda: Option<String>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SPARSECOUNT_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { commands::EXIT_USAGE } else { 0 });
        }
    };
    let config = match RunConfig::from_cli(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(commands::EXIT_USAGE);
        }
    };
    match commands::run(&cli.command, &config) {
        Ok(out) => {
            print!("{}", out.stdout);
            ExitCode::from(out.code)
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
