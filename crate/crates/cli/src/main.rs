use clap::{Parser, Subcommand};
use lightcone_cli::{exit, run_path, RunOptions};
use std::path::PathBuf;

/// Runs light-cone trace experiments from JSON configuration files.
#[derive(Parser)]
#[command(name = "lightcone", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Size of the worker pool (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory, overriding `output.dir` of the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, short, global = true)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Runs the experiment named in the configuration.
    Run { config: PathBuf },
    /// Runs a sweep configuration and checks its convergence table.
    Sweep { config: PathBuf },
}

fn main() {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if t == 0 || rayon::ThreadPoolBuilder::new().num_threads(t).build_global().is_err() {
            eprintln!("error: invalid thread count {t}");
            std::process::exit(exit::INVALID);
        }
    }
    let options = RunOptions { out: cli.out, verbose: cli.verbose, threads: cli.threads };
    let code = match cli.command {
        Command::Run { config } => run_path(&config, &options, false),
        Command::Sweep { config } => run_path(&config, &options, true),
    };
    std::process::exit(code);
}
