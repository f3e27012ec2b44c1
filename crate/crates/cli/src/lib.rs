//! Experiment driver for the `lightcone` library: configuration files,
//! experiments and report files.

pub mod config;
pub mod experiments;
pub mod output;

use config::{Experiment, ExperimentConfig};
use experiments::{run_experiment, RunError};
use std::path::{Path, PathBuf};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const INVALID: i32 = 2;
    pub const TOLERANCE: i32 = 3;
    pub const COVERAGE: i32 = 4;
}

/// Options shared by `run` and `sweep`.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub verbose: bool,
    pub threads: Option<usize>,
}

/// Runs the configuration at `path` and writes its outputs. With
/// `require_sweep` the configuration must describe a sweep.
pub fn run_path(path: &Path, options: &RunOptions, require_sweep: bool) -> i32 {
    let config = match ExperimentConfig::from_path(path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: invalid configuration: {e}");
            return exit::INVALID;
        }
    };
    if require_sweep && config.experiment != Experiment::Sweep {
        eprintln!("error: invalid configuration: experiment: `sweep` needs experiment \"sweep\"");
        return exit::INVALID;
    }
    run_config(&config, options)
}

pub fn run_config(config: &ExperimentConfig, options: &RunOptions) -> i32 {
    if options.verbose {
        eprintln!("running {} (n = {}, config {})", config.experiment.name(), config.dim, config.hash());
    }
    let outcome = match run_experiment(config) {
        Ok(o) => o,
        Err(e @ RunError::Invalid(_)) => {
            eprintln!("error: {e}");
            return exit::INVALID;
        }
        Err(e @ RunError::Coverage(_)) => {
            eprintln!("error: {e}");
            return exit::COVERAGE;
        }
    };
    let dir = options.out.clone().unwrap_or_else(|| PathBuf::from(&config.output.dir));
    let timestamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let metadata = serde_json::json!({
        "timestamp_unix": timestamp,
        "runtime_s": outcome.runtime_s,
        "threads": options.threads.unwrap_or_else(rayon::current_num_threads),
        "level_runtimes_s": outcome.convergence.iter().map(|r| r.runtime_s).collect::<Vec<_>>(),
    });
    if let Err(e) = output::write_all(&dir, config, &outcome, metadata) {
        eprintln!("error: cannot write outputs to {}: {e}", dir.display());
        return exit::INVALID;
    }
    print!("{}", output::report_text(config, &outcome));
    if options.verbose {
        eprintln!("outputs in {} ({:.1} s)", dir.display(), outcome.runtime_s);
    }
    if outcome.passed() {
        exit::OK
    } else {
        exit::TOLERANCE
    }
}
