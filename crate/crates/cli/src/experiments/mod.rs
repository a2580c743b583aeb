//! Named experiments. Each one reads its parameters from the flat config,
//! writes CSV tables into the output directory and returns a [`Report`];
//! [`run_experiment`] adds the JSON summary and the manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context as _, Result};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::config::{ExperimentConfig, ExperimentId};
use crate::io::write_json;

pub mod diffusive;
pub mod fourier;
pub mod lanford;
pub mod monitors;
pub mod series;

/// One pass/fail comparison against a tolerance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub checks: Vec<Check>,
    pub results: Map<String, Value>,
    /// Files written, relative to the output directory.
    pub files: Vec<String>,
}

impl Report {
    /// Passes when `value <= tolerance`.
    pub fn at_most(&mut self, name: &str, value: f64, tolerance: f64) {
        self.push(name, value, tolerance, value <= tolerance);
    }

    /// Passes when `value >= tolerance`.
    pub fn at_least(&mut self, name: &str, value: f64, tolerance: f64) {
        self.push(name, value, tolerance, value >= tolerance);
    }

    /// A yes/no property, recorded as 1 or 0 against 1.
    pub fn holds(&mut self, name: &str, ok: bool) {
        self.push(name, if ok { 1.0 } else { 0.0 }, 1.0, ok);
    }

    fn push(&mut self, name: &str, value: f64, tolerance: f64, passed: bool) {
        log::info!("{name}: {value:.6e} vs {tolerance:.6e} {}", if passed { "ok" } else { "FAILED" });
        self.checks.push(Check { name: name.into(), value, tolerance, passed });
    }

    pub fn set(&mut self, key: &str, value: impl Serialize) {
        self.results.insert(key.into(), serde_json::to_value(value).expect("serializable"));
    }

    pub fn file(&mut self, name: &str) {
        self.files.push(name.into());
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Shared inputs of a run.
#[derive(Debug, Clone)]
pub struct Context<'a> {
    pub config: &'a ExperimentConfig,
    pub out: &'a Path,
    /// Directory for the operator cache.
    pub cache: Option<PathBuf>,
}

impl Context<'_> {
    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

/// Summary plus the wall-clock time, which is kept out of the summary so
/// that repeated runs produce identical JSON.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub summary: Value,
    pub report: Report,
    pub seconds: f64,
}

/// Runs one experiment, writing `summary.json` and `manifest.json` into
/// `out`. On failure a `failure.json` record is written and the error is
/// returned.
pub fn run_experiment(config: &ExperimentConfig, out: &Path, cache: Option<PathBuf>) -> Result<RunOutcome> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let ctx = Context { config, out, cache };
    let start = Instant::now();
    let result = match config.experiment {
        ExperimentId::E1 => lanford::run(&ctx),
        ExperimentId::E2 => diffusive::run(&ctx),
        ExperimentId::E3 => fourier::run(&ctx),
        ExperimentId::E4 => monitors::run(&ctx),
        ExperimentId::E5 => series::run(&ctx),
    };
    let seconds = start.elapsed().as_secs_f64();
    let report = match result {
        Ok(r) => r,
        Err(e) => {
            let record = json!({
                "experiment": config.experiment.to_string(),
                "name": config.experiment.name(),
                "seed": config.seed,
                "error": format!("{e:#}"),
                "chain": e.chain().map(|c| c.to_string()).collect::<Vec<_>>(),
            });
            write_json(&out.join("failure.json"), &record)?;
            write_manifest(config, out, seconds, &[])?;
            return Err(e);
        }
    };
    let summary = json!({
        "experiment": config.experiment.to_string(),
        "name": config.experiment.name(),
        "seed": config.seed,
        "passed": report.passed(),
        "checks": report.checks,
        "results": report.results,
    });
    write_json(&out.join("summary.json"), &summary)?;
    write_manifest(config, out, seconds, &report.files)?;
    Ok(RunOutcome { summary, report, seconds })
}

fn write_manifest(config: &ExperimentConfig, out: &Path, seconds: f64, files: &[String]) -> Result<()> {
    let manifest = json!({
        "experiment": config.experiment.to_string(),
        "seed": config.seed,
        "config": config.params.entries(),
        "versions": {
            "kinetic-cascade": env!("CARGO_PKG_VERSION"),
            "kinetic-core": kinetic_core::VERSION,
        },
        "runtime_seconds": seconds,
        "files": files,
    });
    write_json(&out.join("manifest.json"), &manifest)
}
