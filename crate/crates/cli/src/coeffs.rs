//! Transport coefficients: the grid values and an independent Monte Carlo
//! evaluation.
//!
//! The Monte Carlo route never touches the velocity grid. It solves
//! `L h = ψ` by Galerkin projection on Sonine (generalized Laguerre)
//! polynomials, with the matrix `<h_k, L h_l>` sampled from the symmetrized
//! form `1/4 ∫∫∫ M M_* ((v - v_*)·ω)_+ Δh_k Δh_l`, `Δh = h' + h'_* - h - h_*`.
//! With `x = |v|²/2` the bases are `v1 L_k^{(1)}(x)`, `k >= 1`, for the heat
//! flux and `(v1² - v2²)/2 L_k^{(2)}(x)` for the stress; both right-hand sides
//! are multiples of the first basis function.

use std::f64::consts::PI;
use std::path::Path;

use anyhow::{bail, Result};
use kinetic_core::kinetic::chapman_enskog;
use kinetic_core::velocity::VelocityGrid;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::io::cached_operator;

/// Scattering directions per velocity pair, with a random common offset.
const DIRECTIONS: usize = 8;
const BATCHES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridCoefficients {
    pub n_r: usize,
    pub n_theta: usize,
    pub v_max: f64,
    pub kappa: f64,
    pub nu: f64,
}

pub fn grid_coefficients(d: usize, n: usize, cache: Option<&Path>) -> Result<GridCoefficients> {
    if d != 2 {
        bail!("transport coefficients are only implemented for d = 2, got d = {d}");
    }
    let grid = VelocityGrid::square(n)?;
    let op = cached_operator(&grid, cache)?;
    let c = chapman_enskog(&op)?;
    Ok(GridCoefficients { n_r: grid.n_r(), n_theta: grid.n_theta(), v_max: grid.v_max(), kappa: c.kappa, nu: c.nu })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McCoefficients {
    pub order: usize,
    pub samples: usize,
    pub kappa: f64,
    pub kappa_err: f64,
    pub nu: f64,
    pub nu_err: f64,
}

/// `L_k^{(a)}(x)` for `k = 0..n`.
fn laguerre(n: usize, a: f64, x: f64, out: &mut [f64]) {
    out[0] = 1.0;
    if n > 0 {
        out[1] = 1.0 + a - x;
    }
    for k in 1..n {
        let kf = k as f64;
        out[k + 1] = ((2.0 * kf + 1.0 + a - x) * out[k] - (kf + a) * out[k - 1]) / (kf + 1.0);
    }
}

fn heat_basis(v: [f64; 2], order: usize, buf: &mut [f64], out: &mut [f64]) {
    laguerre(order, 1.0, 0.5 * (v[0] * v[0] + v[1] * v[1]), buf);
    for k in 0..order {
        out[k] = v[0] * buf[k + 1];
    }
}

fn stress_basis(v: [f64; 2], order: usize, buf: &mut [f64], out: &mut [f64]) {
    laguerre(order, 2.0, 0.5 * (v[0] * v[0] + v[1] * v[1]), buf);
    let p = 0.5 * (v[0] * v[0] - v[1] * v[1]);
    for k in 0..order {
        out[k] = p * buf[k];
    }
}

/// Accumulates the Galerkin matrices of one batch.
fn batch(rng: &mut ChaCha8Rng, samples: usize, order: usize) -> [DMatrix<f64>; 2] {
    let mut mats = [DMatrix::zeros(order, order), DMatrix::zeros(order, order)];
    let mut buf = vec![0.0; order + 1];
    let mut d = [vec![0.0; order], vec![0.0; order]];
    let mut tmp = vec![0.0; order];
    let dphi = 2.0 * PI / DIRECTIONS as f64;
    for _ in 0..samples {
        let v = [rng.sample(StandardNormal), rng.sample(StandardNormal)];
        let w: [f64; 2] = [rng.sample(StandardNormal), rng.sample(StandardNormal)];
        let offset: f64 = rng.gen::<f64>() * dphi;
        let g = [v[0] - w[0], v[1] - w[1]];
        for j in 0..DIRECTIONS {
            let (s, c) = (offset + j as f64 * dphi).sin_cos();
            let b = g[0] * c + g[1] * s;
            if b <= 0.0 {
                continue;
            }
            let vp = [v[0] - b * c, v[1] - b * s];
            let wp = [w[0] + b * c, w[1] + b * s];
            for (basis, dk) in [heat_basis as fn(_, _, &mut [f64], &mut [f64]), stress_basis].iter().zip(d.iter_mut()) {
                dk.iter_mut().for_each(|x| *x = 0.0);
                for (z, sign) in [(vp, 1.0), (wp, 1.0), (v, -1.0), (w, -1.0)] {
                    basis(z, order, &mut buf, &mut tmp);
                    dk.iter_mut().zip(&tmp).for_each(|(x, t)| *x += sign * t);
                }
            }
            let weight = 0.25 * b * dphi;
            for (m, dk) in mats.iter_mut().zip(&d) {
                for k in 0..order {
                    for l in 0..order {
                        m[(k, l)] += weight * dk[k] * dk[l];
                    }
                }
            }
        }
    }
    for m in mats.iter_mut() {
        *m /= samples as f64;
    }
    mats
}

/// `(kappa, nu)` from Galerkin matrices: `ψ_1 = -2 h_1` with `<ψ_1, h_1> = -4`,
/// and `φ_11 = h_0` with unit norm.
fn solve(mats: &[DMatrix<f64>; 2]) -> Option<(f64, f64)> {
    let ih = mats[0].clone().try_inverse()?;
    let is = mats[1].clone().try_inverse()?;
    Some((16.0 * ih[(0, 0)] / 8.0, is[(0, 0)]))
}

/// Sonine-Galerkin estimate with `order` basis functions per moment and
/// `samples` velocity pairs, split in batches for the error bars.
pub fn monte_carlo_coefficients(order: usize, samples: usize, seed: u64) -> Result<McCoefficients> {
    if order == 0 || order > 8 {
        bail!("Sonine order must be in 1..=8, got {order}");
    }
    if samples < BATCHES * 100 {
        bail!("need at least {} samples", BATCHES * 100);
    }
    let per = samples / BATCHES;
    let mut total = [DMatrix::zeros(order, order), DMatrix::zeros(order, order)];
    let mut parts = Vec::with_capacity(BATCHES);
    for b in 0..BATCHES {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(b as u64);
        let m = batch(&mut rng, per, order);
        for (t, x) in total.iter_mut().zip(&m) {
            *t += x / BATCHES as f64;
        }
        parts.push(m);
    }
    let Some((kappa, nu)) = solve(&total) else { bail!("singular Galerkin matrix") };
    // jackknife over batches
    let bf = BATCHES as f64;
    let mut jk = Vec::with_capacity(BATCHES);
    for m in &parts {
        let loo = [(&total[0] * bf - &m[0]) / (bf - 1.0), (&total[1] * bf - &m[1]) / (bf - 1.0)];
        let Some(r) = solve(&loo) else { bail!("singular Galerkin matrix") };
        jk.push(r);
    }
    let spread = |f: &dyn Fn(&(f64, f64)) -> f64| {
        let mean = jk.iter().map(f).sum::<f64>() / bf;
        ((bf - 1.0) / bf * jk.iter().map(|r| (f(r) - mean).powi(2)).sum::<f64>()).sqrt()
    };
    Ok(McCoefficients {
        order,
        samples: per * BATCHES,
        kappa,
        kappa_err: spread(&|r| r.0),
        nu,
        nu_err: spread(&|r| r.1),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laguerre_values() {
        let mut out = [0.0; 4];
        laguerre(3, 1.0, 0.5, &mut out);
        // L_2^{(1)}(x) = (x² - 6x + 6)/2, L_3^{(1)}(x) = (-x³ + 12x² - 36x + 24)/6
        assert!((out[2] - (0.25 - 3.0 + 6.0) / 2.0).abs() < 1e-14);
        assert!((out[3] - (-0.125 + 3.0 - 18.0 + 24.0) / 6.0).abs() < 1e-14);
    }

    #[test]
    fn first_sonine_heat_entry() {
        // the heat flux itself: <ψ_1, L ψ_1> = 4 <h_1, L h_1>, positive
        let m = batch(&mut ChaCha8Rng::seed_from_u64(3), 20_000, 1);
        assert!(m[0][(0, 0)] > 0.0 && m[1][(0, 0)] > 0.0);
    }
}
