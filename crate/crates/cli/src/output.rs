//! Report files: `report.json`, `report.txt`, `points.csv`, `plotdata.csv`
//! and, for sweeps, `convergence.csv`.

use crate::config::ExperimentConfig;
use crate::experiments::Outcome;
use serde_json::{json, Value};
use std::io;
use std::path::Path;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

/// The JSON report. Everything outside `metadata` depends only on the
/// configuration.
pub fn report_json(config: &ExperimentConfig, outcome: &Outcome, metadata: Value) -> Value {
    json!({
        "experiment": outcome.experiment,
        "version": VERSION,
        "config_hash": config.hash(),
        "config": config,
        "passed": outcome.passed(),
        "checks": outcome.checks,
        "results": outcome.results,
        "metadata": metadata,
    })
}

/// Aligned columns: check, value, tolerance, verdict.
pub fn report_text(config: &ExperimentConfig, outcome: &Outcome) -> String {
    let mut out = format!("{}  n={}  config {}\n", outcome.experiment.name(), config.dim, &config.hash()[..12]);
    let width = outcome.checks.iter().map(|c| c.name.len()).max().unwrap_or(5).max(5);
    out += &format!("{:<width$}  {:>12}  {:>12}  result\n", "check", "value", "tolerance");
    for c in &outcome.checks {
        let verdict = if c.passed { "PASS" } else { "FAIL" };
        out += &format!("{:<width$}  {:>12.4e}  {:>12.4e}  {verdict}\n", c.name, c.value, c.tolerance);
    }
    if !outcome.convergence.is_empty() {
        out += &format!("{:>6}  {:>12}  {:>10}\n", "level", "rel_err", "runtime_s");
        for r in &outcome.convergence {
            out += &format!("{:>6}  {:>12.4e}  {:>10.2}\n", r.level, r.rel_err, r.runtime_s);
        }
    }
    out
}

fn csv_err(e: csv::Error) -> io::Error {
    io::Error::other(e)
}

pub fn write_points(path: &Path, dim: usize, outcome: &Outcome) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    let mut header: Vec<String> = (1..=dim).map(|i| format!("x{i}")).collect();
    header.extend(["truth", "reconstruction", "abs_err"].map(String::from));
    w.write_record(&header).map_err(csv_err)?;
    for p in &outcome.points {
        let mut rec: Vec<String> = p.x.iter().map(|&v| fmt(v)).collect();
        rec.extend([fmt(p.truth), fmt(p.reconstruction), fmt((p.reconstruction - p.truth).abs())]);
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()
}

pub fn write_plot(path: &Path, outcome: &Outcome) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["series", "t", "value"]).map_err(csv_err)?;
    for (series, t, v) in &outcome.plot {
        w.write_record([series.clone(), fmt(*t), fmt(*v)]).map_err(csv_err)?;
    }
    w.flush()
}

pub fn write_convergence(path: &Path, outcome: &Outcome) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["level", "rel_err", "runtime_s"]).map_err(csv_err)?;
    for r in &outcome.convergence {
        w.write_record([r.level.to_string(), fmt(r.rel_err), fmt(r.runtime_s)]).map_err(csv_err)?;
    }
    w.flush()
}

/// Writes every output file into `dir`, creating it if needed.
pub fn write_all(dir: &Path, config: &ExperimentConfig, outcome: &Outcome, metadata: Value) -> io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let report = report_json(config, outcome, metadata);
    std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(&report)? + "\n")?;
    std::fs::write(dir.join("report.txt"), report_text(config, outcome))?;
    write_points(&dir.join("points.csv"), config.dim, outcome)?;
    write_plot(&dir.join("plotdata.csv"), outcome)?;
    if !outcome.convergence.is_empty() {
        write_convergence(&dir.join("convergence.csv"), outcome)?;
    }
    Ok(())
}
