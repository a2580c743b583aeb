//! Phase-space bin integrals of torus fields, for comparison with particle
//! and series estimators.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::kinetic::field::{DistributionField, Geometry};
use crate::md::Bins;
use crate::velocity::VelocityGrid;

/// `∫∫_bin M g dx dv` over the unit torus for every bin of `bins`, row-major
/// in the order of the axes. Axes may project `x1` (exactly, through the
/// trigonometric interpolant of the cells) and `v1` (through band
/// weights). The field does not depend on `x2`, which is integrated out.
pub fn bin_integrals(field: &DistributionField, grid: &VelocityGrid, bins: &Bins) -> Result<Vec<f64>> {
    if field.geometry() != Geometry::Torus {
        return Err(Error::BoundaryMismatch("bin integrals need a torus field".into()));
    }
    if (field.length() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter("bin integrals assume a unit torus".into()));
    }
    if bins.axes.iter().any(|a| !(a.coord == 0 || a.coord == 2) || a.n == 0 || !(a.hi > a.lo)) {
        return Err(Error::InvalidParameter("only x1 and v1 axes are supported".into()));
    }
    let nx = field.nx();
    let nv = field.nv();
    // Fourier coefficients per node, c_m = (1/nx) Σ g_i e^{-2πi m x_i}
    let mmax = nx / 2;
    let mut re = vec![vec![0.0; nv]; mmax + 1];
    let mut im = vec![vec![0.0; nv]; mmax + 1];
    for i in 0..nx {
        let x = field.center(i);
        let cell = field.cell(i);
        for m in 0..=mmax {
            let (s, c) = (2.0 * PI * m as f64 * x).sin_cos();
            for k in 0..nv {
                re[m][k] += cell[k] * c / nx as f64;
                im[m][k] -= cell[k] * s / nx as f64;
            }
        }
    }
    // ∫_a^b g dx per node from the real interpolant
    let x_integral = |a: f64, b: f64| -> Vec<f64> {
        let mut out: Vec<f64> = re[0].iter().map(|c| c * (b - a)).collect();
        for m in 1..=mmax {
            let w = 2.0 * PI * m as f64;
            let cs = ((w * b).sin() - (w * a).sin()) / w;
            let sn = ((w * a).cos() - (w * b).cos()) / w;
            let f = if 2 * m == nx { 1.0 } else { 2.0 };
            for k in 0..nv {
                out[k] += f * (re[m][k] * cs - im[m][k] * sn);
            }
        }
        out
    };
    let edges = |a: &crate::md::Axis| -> Vec<(f64, f64)> {
        let h = (a.hi - a.lo) / a.n as f64;
        (0..a.n).map(|j| (a.lo + j as f64 * h, a.lo + (j + 1) as f64 * h)).collect()
    };
    let x_axis = bins.axes.iter().find(|a| a.coord == 0);
    let v_axis = bins.axes.iter().find(|a| a.coord == 2);
    if bins.axes.len() != x_axis.is_some() as usize + v_axis.is_some() as usize {
        return Err(Error::InvalidParameter("repeated axis".into()));
    }
    let xs = x_axis.map_or(vec![(0.0, 1.0)], edges);
    let vs = v_axis.map_or(vec![(f64::NEG_INFINITY, f64::INFINITY)], edges);
    let xs: Vec<(f64, f64)> = xs.into_iter().map(|(a, b)| (a.max(0.0), b.min(1.0))).collect();
    let gx: Vec<Vec<f64>> = xs.iter().map(|&(a, b)| if b > a { x_integral(a, b) } else { vec![0.0; nv] }).collect();
    let bands: Vec<Vec<f64>> = vs.iter().map(|&(a, b)| grid.band_weights(a, b)).collect();
    let x_first = bins.axes[0].coord == 0;
    let mut out = Vec::with_capacity(xs.len() * vs.len());
    if x_first {
        for g in &gx {
            for q in &bands {
                out.push(g.iter().zip(q).map(|(a, b)| a * b).sum());
            }
        }
    } else {
        for q in &bands {
            for g in &gx {
                out.push(g.iter().zip(q).map(|(a, b)| a * b).sum());
            }
        }
    }
    Ok(out)
}
