use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use eulerlab_cli::{RunOptions, EXIT_ERROR, OUTPUT_ROOT_ENV};

#[derive(Parser)]
#[command(name = "eulerlab", version, about = "Run Euler uniqueness experiments from a TOML config")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Write artifacts here instead of the config's output_dir.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,

    /// Default root for relative output directories.
    #[arg(long, global = true, env = OUTPUT_ROOT_ENV)]
    output_root: Option<PathBuf>,

    /// Worker threads for the numerical kernels.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Replace the config's seed.
    #[arg(long, global = true)]
    seed_override: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the experiment and write its artifacts.
    Run { config: PathBuf },
    /// Parse and range-check the config without running it.
    Validate { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match &cli.command {
        Command::Run { config } => {
            let opts = RunOptions {
                output_dir: cli.output_dir.clone(),
                output_root: cli.output_root.clone(),
                jobs: cli.jobs,
                seed_override: cli.seed_override,
            };
            match eulerlab_cli::run(config, &opts) {
                Ok(s) => {
                    println!("{}", s.verdict_line);
                    s.status.exit_code()
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    EXIT_ERROR
                }
            }
        }
        Command::Validate { config } => {
            let v = eulerlab_cli::validate(config, cli.seed_override);
            for d in &v.diagnostics {
                println!("error: {d}");
            }
            let width = v.derived.iter().map(|r| r.0.len()).max().unwrap_or(0);
            for (k, val) in &v.derived {
                println!("{k:width$}  {val}");
            }
            if v.diagnostics.is_empty() {
                0
            } else {
                EXIT_ERROR
            }
        }
    };
    ExitCode::from(code as u8)
}
