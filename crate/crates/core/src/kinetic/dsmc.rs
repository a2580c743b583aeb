//! Direct simulation Monte Carlo collisions in one spatially homogeneous cell.
//!
//! Advances `∂t f = Q(f, f) / α` for particles of unit weight in a cell of
//! volume `V`, with majorant (null-collision) pair selection.

use std::f64::consts::PI;

use rand::Rng;

use crate::error::{Error, Result};

/// Per-cell DSMC state.
#[derive(Debug, Clone, PartialEq)]
pub struct DsmcCell {
    pub volume: f64,
    /// Upper bound for the total cross-section `∫ b dω = 2 |v - v_*|`.
    pub majorant: f64,
}

impl DsmcCell {
    pub fn new(volume: f64, majorant: f64) -> Result<Self> {
        if !(volume > 0.0 && majorant > 0.0) {
            return Err(Error::InvalidParameter(format!("volume {volume}, majorant {majorant}")));
        }
        Ok(Self { volume, majorant })
    }
}

/// Post-collision velocities for relative direction rotated by `beta` from
/// `v - v_*`, with `b = |v - v_*| cos β`.
pub fn scatter(v: [f64; 2], vs: [f64; 2], beta: f64) -> ([f64; 2], [f64; 2]) {
    let g = [v[0] - vs[0], v[1] - vs[1]];
    let gn = (g[0] * g[0] + g[1] * g[1]).sqrt();
    if gn == 0.0 {
        return (v, vs);
    }
    let (c, s) = (beta.cos(), beta.sin());
    let om = [(c * g[0] - s * g[1]) / gn, (c * g[1] + s * g[0]) / gn];
    let b = g[0] * om[0] + g[1] * om[1];
    ([v[0] - b * om[0], v[1] - b * om[1]], [vs[0] + b * om[0], vs[1] + b * om[1]])
}

/// One collision step of length `dt`. Returns the number of real
/// collisions. A pair whose cross-section exceeds the majorant raises the
/// majorant for later steps.
pub fn dsmc_collide<R: Rng + ?Sized>(
    velocities: &mut [[f64; 2]],
    cell: &mut DsmcCell,
    alpha: f64,
    dt: f64,
    rng: &mut R,
) -> Result<usize> {
    let n = velocities.len();
    if n < 2 {
        return Ok(0);
    }
    if !(alpha > 0.0 && dt > 0.0) {
        return Err(Error::InvalidParameter(format!("alpha {alpha}, dt {dt}")));
    }
    let pairs = 0.5 * n as f64 * (n - 1) as f64;
    let expected = pairs * cell.majorant * dt / (alpha * cell.volume);
    let mut candidates = expected.floor() as usize;
    if rng.gen::<f64>() < expected - expected.floor() {
        candidates += 1;
    }
    let majorant = cell.majorant;
    let mut accepted = 0;
    for _ in 0..candidates {
        let i = rng.gen_range(0..n);
        let mut j = rng.gen_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        let (v, vs) = (velocities[i], velocities[j]);
        let total = 2.0 * ((v[0] - vs[0]).powi(2) + (v[1] - vs[1]).powi(2)).sqrt();
        if total > cell.majorant {
            log::warn!("dsmc majorant {} below pair cross-section {total}; raising it", cell.majorant);
            cell.majorant = 1.2 * total;
        }
        if rng.gen::<f64>() * majorant >= total {
            continue;
        }
        // density of β on (-π/2, π/2) proportional to cos β
        let beta = (2.0 * rng.gen::<f64>() - 1.0).asin();
        debug_assert!(beta.abs() <= 0.5 * PI);
        let (a, b) = scatter(v, vs, beta);
        velocities[i] = a;
        velocities[j] = b;
        accepted += 1;
    }
    Ok(accepted)
}
