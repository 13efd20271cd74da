//! Experiment runner surface used by the `fpheat` binary: config parsing,
//! the experiment registry, manifest emission, and report reading.
//!
//! Exit-code contract: 0 = all in-experiment contracts passed,
//! 1 = contract failure (machine-readable list in the manifest),
//! 2 = config error.

pub mod config;
pub mod experiments;
pub mod svg;

use crate::error::{Error, Result};
use config::ExperimentConfig;
use experiments::RunOutcome;
use std::path::{Path, PathBuf};

/// Environment variable overriding the root for relative output paths.
pub const OUT_ROOT_ENV: &str = "FPHEAT_OUT_ROOT";

pub fn resolve_out_dir(cfg: &ExperimentConfig) -> PathBuf {
    let base = cfg
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("runs").join(cfg.experiment.name()));
    if base.is_absolute() {
        return base;
    }
    match std::env::var_os(OUT_ROOT_ENV) {
        Some(root) => PathBuf::from(root).join(base),
        None => base,
    }
}

/// Runs the experiment, writes all artifacts plus `manifest.txt`, and
/// returns the outcome. The manifest references every file the run wrote.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<(PathBuf, RunOutcome)> {
    let out_dir = resolve_out_dir(cfg);
    std::fs::create_dir_all(&out_dir)?;
    let started = std::time::Instant::now();
    let outcome = experiments::run(cfg, &out_dir);
    let wall_ms = started.elapsed().as_millis();
    let outcome = match outcome {
        Ok(o) => o,
        Err(e) => RunOutcome {
            outputs: list_outputs(&out_dir)?,
            failures: vec![format!("run aborted: {e}")],
        },
    };
    write_manifest(cfg, &out_dir, &outcome, wall_ms)?;
    Ok((out_dir, outcome))
}

fn list_outputs(dir: &Path) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let entry = entry?;
        let name = entry.file_name().to_string_lossy().to_string();
        if name != "manifest.txt" {
            out.push(name);
        }
    }
    out.sort();
    Ok(out)
}

fn write_manifest(
    cfg: &ExperimentConfig,
    dir: &Path,
    outcome: &RunOutcome,
    wall_ms: u128,
) -> Result<()> {
    let mut text = String::new();
    text.push_str("fpheat manifest v1\n");
    text.push_str(&format!("experiment = {}\n", cfg.experiment.name()));
    text.push_str(&format!("version = {}\n", env!("CARGO_PKG_VERSION")));
    text.push_str(&format!("seed = {}\n", cfg.seed));
    text.push_str(&format!(
        "status = {}\n",
        if outcome.passed() { "pass" } else { "fail" }
    ));
    text.push_str(&format!("wall_ms = {wall_ms}\n"));
    for f in &outcome.failures {
        text.push_str(&format!("failure = {f}\n"));
    }
    text.push_str("outputs:\n");
    for o in &outcome.outputs {
        text.push_str(&format!("- {o}\n"));
    }
    text.push_str("--- config ---\n");
    text.push_str(&cfg.raw);
    if !cfg.raw.ends_with('\n') {
        text.push('\n');
    }
    std::fs::write(dir.join("manifest.txt"), text)?;
    Ok(())
}

/// Parsed manifest, for `fpheat report`.
#[derive(Debug, Clone)]
pub struct Manifest {
    pub experiment: String,
    pub status_pass: bool,
    pub failures: Vec<String>,
    pub outputs: Vec<String>,
    pub wall_ms: Option<u128>,
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let text = std::fs::read_to_string(dir.join("manifest.txt"))?;
    let mut experiment = String::new();
    let mut status_pass = false;
    let mut failures = Vec::new();
    let mut outputs = Vec::new();
    let mut wall_ms = None;
    let mut in_outputs = false;
    for line in text.lines() {
        if line == "--- config ---" {
            break;
        }
        if line == "outputs:" {
            in_outputs = true;
            continue;
        }
        if in_outputs {
            if let Some(name) = line.strip_prefix("- ") {
                outputs.push(name.to_string());
            }
            continue;
        }
        if let Some((k, v)) = line.split_once('=') {
            let (k, v) = (k.trim(), v.trim());
            match k {
                "experiment" => experiment = v.to_string(),
                "status" => status_pass = v == "pass",
                "failure" => failures.push(v.to_string()),
                "wall_ms" => wall_ms = v.parse().ok(),
                _ => {}
            }
        }
    }
    if experiment.is_empty() {
        return Err(Error::Domain(format!("no manifest found in {}", dir.display())));
    }
    Ok(Manifest { experiment, status_pass, failures, outputs, wall_ms })
}
