//! Experiment runner for the kinetic cascade laboratory.

pub mod coeffs;
pub mod config;
pub mod experiments;
pub mod io;

use std::path::Path;

use anyhow::{bail, Result};
use kinetic_core::md::MdSystem;
use serde::Serialize;

pub use config::{ExperimentConfig, ExperimentId, KeyValues};
pub use experiments::{run_experiment, Report, RunOutcome};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MdResume {
    pub n: usize,
    pub from: f64,
    pub to: f64,
    pub pair_collisions: u64,
    pub wall_hits: u64,
    pub momentum: [f64; 2],
    pub kinetic_energy: f64,
    pub min_distance: f64,
}

/// Advances the checkpoint at `path` to time `t` and writes the result to
/// `out` (in place when `None`).
pub fn resume_md(path: &Path, t: f64, out: Option<&Path>) -> Result<MdResume> {
    let cp = io::Checkpoint::read(path)?;
    let from = cp.config.time;
    if !(t >= from) {
        bail!("target time {t} is before the checkpoint time {from}");
    }
    let mut sys = MdSystem::with_stream(cp.config, cp.scaling.epsilon, cp.boundary, cp.seed, cp.word_pos)?;
    sys.run_until(t)?;
    let config = sys.configuration();
    let (seed, word_pos) = sys.stream_state();
    let stats = sys.stats();
    let summary = MdResume {
        n: config.len(),
        from,
        to: t,
        pair_collisions: stats.pair_collisions,
        wall_hits: stats.wall_hits,
        momentum: config.momentum(),
        kinetic_energy: config.kinetic_energy(),
        min_distance: sys.min_distance(),
    };
    io::Checkpoint { scaling: cp.scaling, boundary: cp.boundary, config, seed, word_pos }.write(out.unwrap_or(path))?;
    Ok(summary)
}
