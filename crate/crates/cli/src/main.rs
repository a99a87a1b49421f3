use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ldk_cli::bench::{self, Case, SchedulerChoice};
use ldk_cli::examples;
use ldk_transform::{compile, pretty_print};

#[derive(Parser)]
#[command(name = "ldk", about = "Run, transform and benchmark keyword scripts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a named example or a script file and check its output.
    Run {
        /// Example name or path to a `.dsl` file.
        target: String,
    },
    /// Print the continuation-passing form of a script.
    Transform {
        file: PathBuf,
        /// Keep the wrapper closure around tail binds.
        #[arg(long)]
        no_eta: bool,
    },
    /// Time a benchmark procedure after checking its result.
    Bench {
        #[arg(long)]
        case: Case,
        #[arg(long)]
        size: u64,
        #[arg(long, default_value = "deterministic")]
        scheduler: SchedulerChoice,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Repetitions per row; chosen from the size when omitted.
        #[arg(long)]
        iterations: Option<u64>,
    },
    /// List the bundled examples.
    List,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run { target } => run(&target),
        Command::Transform { file, no_eta } => transform(&file, !no_eta),
        Command::Bench {
            case,
            size,
            scheduler,
            format,
            iterations,
        } => {
            let iterations = iterations.unwrap_or_else(|| bench::default_iterations(case, size));
            match bench::run(case, size, iterations, scheduler) {
                Ok(row) => {
                    let rows = [row];
                    match format {
                        Format::Json => println!("{}", bench::to_json(&rows)),
                        Format::Csv => print!("{}", bench::to_csv(&rows)),
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
            }
        }
        Command::List => {
            for name in examples::names() {
                println!("{name}");
            }
            ExitCode::SUCCESS
        }
    }
}

fn run(target: &str) -> ExitCode {
    let outcome = match examples::find(target) {
        Some(example) => examples::run_example(example),
        None if Path::new(target).is_file() => match std::fs::read_to_string(target) {
            Ok(source) => examples::run_file(&source),
            Err(e) => {
                eprintln!("error: cannot read {target}: {e}");
                return ExitCode::from(2);
            }
        },
        None => {
            eprintln!("error: no example or file named `{target}`");
            eprintln!(
                "examples: {}",
                examples::names().collect::<Vec<_>>().join(", ")
            );
            return ExitCode::from(2);
        }
    };
    match outcome {
        Ok(outcome) => {
            for line in &outcome.lines {
                println!("{line}");
            }
            if outcome.matches() {
                ExitCode::SUCCESS
            } else {
                if let Some(expected) = &outcome.expected {
                    eprintln!("error: output differs from the expected lines:");
                    for line in expected {
                        eprintln!("  {line}");
                    }
                }
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn transform(file: &Path, eta: bool) -> ExitCode {
    let source = match std::fs::read_to_string(file) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", file.display());
            return ExitCode::from(1);
        }
    };
    match compile(&source, eta) {
        Ok(ast) => {
            print!("{}", pretty_print(&ast));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
