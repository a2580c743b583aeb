//! E3: stationary slab between walls at `-δ` and `+δ`, temperature profile
//! and heat flux away from the Knudsen layers, and a fit of `J = -κ ∇θ`.

use anyhow::{bail, Result};
use kinetic_core::hydro::fit_fourier_law;
use kinetic_core::kinetic::field::theta_moment;
use kinetic_core::kinetic::inversion::heat_flux_moment;
use kinetic_core::kinetic::{chapman_enskog, stationary_slab, DistributionField};
use kinetic_core::stats::fit_line;
use kinetic_core::velocity::VelocityGrid;
use serde::Serialize;

use super::{Context, Report};
use crate::coeffs::grid_coefficients;
use crate::io::{cached_operator, write_csv};

/// Profile and flux of one slab solution, restricted to the bulk.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlabMeasurement {
    pub gradient: f64,
    pub flux: f64,
    /// Largest relative deviation of the cell fluxes from their mean.
    pub flux_spread: f64,
    /// Largest distance of the bulk profile from its fitted line.
    pub linear_deviation: f64,
    pub bulk_cells: usize,
}

/// Heat flux per cell, `<ψ_1, g> / ((d + 2) α)`.
pub fn heat_flux(field: &DistributionField, grid: &VelocityGrid) -> Vec<f64> {
    let psi = heat_flux_moment(grid);
    (0..field.nx()).map(|i| grid.inner(&psi, field.cell(i)) / (4.0 * field.alpha())).collect()
}

/// Fits the bulk of a slab field, skipping `exclude` on each side.
pub fn measure(field: &DistributionField, grid: &VelocityGrid, exclude: f64) -> Result<SlabMeasurement> {
    let theta = theta_moment(field, grid);
    let flux = heat_flux(field, grid);
    let bulk: Vec<usize> = (0..field.nx())
        .filter(|&i| field.center(i) >= exclude && field.center(i) <= field.length() - exclude)
        .collect();
    if bulk.len() < 3 {
        bail!("only {} cells outside the excluded layers", bulk.len());
    }
    let x: Vec<f64> = bulk.iter().map(|&i| field.center(i)).collect();
    let y: Vec<f64> = bulk.iter().map(|&i| theta[i]).collect();
    let line = fit_line(&x, &y)?;
    let linear_deviation =
        x.iter().zip(&y).map(|(a, b)| (b - line.intercept - line.slope * a).abs()).fold(0.0, f64::max);
    let j: Vec<f64> = bulk.iter().map(|&i| flux[i]).collect();
    let mean = j.iter().sum::<f64>() / j.len() as f64;
    let flux_spread = j.iter().map(|v| ((v - mean) / mean).abs()).fold(0.0, f64::max);
    Ok(SlabMeasurement { gradient: line.slope, flux: mean, flux_spread, linear_deviation, bulk_cells: bulk.len() })
}

pub fn run(ctx: &Context) -> Result<Report> {
    let p = &ctx.config.params;
    let alpha: f64 = p.get("alpha", 0.1)?;
    let nx: usize = p.get("nx", 100)?;
    let deltas: Vec<f64> = p.list("deltas", &[0.05, 0.025])?;
    let n_r: usize = p.get("grid_nr", 16)?;
    let n_theta: usize = p.get("grid_ntheta", 24)?;
    let exclude_layers: f64 = p.get("knudsen_exclusion", 3.0)?;
    if deltas.iter().any(|d| !(*d > 0.0 && *d <= 0.05)) {
        bail!("wall jumps must lie in (0, 0.05], got {deltas:?}");
    }
    let grid = VelocityGrid::new(n_r, n_theta, p.get("v_max", 7.0)?)?;
    let op = cached_operator(&grid, ctx.cache.as_deref())?;
    let kappa_grid = chapman_enskog(&op)?.kappa;
    let kappa_ref = match p.raw("kappa_ref") {
        Some(_) => p.get("kappa_ref", 0.0)?,
        None => grid_coefficients(2, p.get("kappa_ref_grid", 64)?, ctx.cache.as_deref())?.kappa,
    };

    let mut report = Report::default();
    let mut rows = Vec::new();
    let mut flux = Vec::new();
    let mut grad = Vec::new();
    let mut worst_dev: f64 = 0.0;
    let mut measurements = Vec::new();
    for &delta in &deltas {
        let field = stationary_slab(&op, nx, 1.0, alpha, [-delta, delta])?;
        let theta = theta_moment(&field, &grid);
        let j = heat_flux(&field, &grid);
        for i in 0..nx {
            rows.push(vec![delta.to_string(), field.center(i).to_string(), theta[i].to_string(), j[i].to_string()]);
        }
        let m = measure(&field, &grid, exclude_layers * alpha)?;
        worst_dev = worst_dev.max(m.linear_deviation / delta);
        flux.push([m.flux, 0.0]);
        grad.push([m.gradient, 0.0]);
        measurements.push((delta, m));
    }
    write_csv(&ctx.path("profiles.csv"), &["delta", "x", "theta", "flux"], rows)?;
    report.file("profiles.csv");
    let fit = fit_fourier_law(&flux, &grad)?;

    report.at_most("linear_deviation_over_delta", worst_dev, p.tol("linearity", 0.05)?);
    report.at_most("kappa_relative_error", (fit.kappa / kappa_ref - 1.0).abs(), p.tol("kappa", 0.1)?);
    report.set("alpha", alpha);
    report.set("kappa_fit", fit.kappa);
    report.set("fit_residual", fit.residual);
    report.set("kappa_reference", kappa_ref);
    report.set("kappa_same_grid", kappa_grid);
    report.set("grid", [n_r, n_theta]);
    report.set(
        "measurements",
        measurements.iter().map(|(d, m)| serde_json::json!({"delta": d, "bulk": m})).collect::<Vec<_>>(),
    );
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use kinetic_core::kinetic::{invert_l, CollisionOperator};

    // Chapman-Enskog state of a linear profile: θ φ - α θ' L⁻¹ψ_1 / 2.
    #[test]
    fn synthetic_first_order_state_recovers_kappa() {
        let grid = VelocityGrid::new(12, 16, 7.0).unwrap();
        let op = CollisionOperator::assemble(&grid).unwrap();
        let kappa = chapman_enskog(&op).unwrap().kappa;
        let alpha = 0.1;
        let slope = 0.08;
        let psi = heat_flux_moment(&grid);
        let corr = invert_l(&psi, &op).unwrap();
        let phi = grid.sample(|v| 0.5 * (v[0] * v[0] + v[1] * v[1] - 4.0));
        // quadrature value of <φ, φ> instead of 2, so the θ moment is exact
        let norm = 2.0 / grid.inner(&phi, &phi);
        let phi: Vec<f64> = phi.iter().map(|p| p * norm).collect();
        let mut field = DistributionField::slab(40, 1.0, &grid, alpha, [-0.04, 0.04]).unwrap();
        for i in 0..40 {
            let th = slope * (field.center(i) - 0.5);
            let cell = field.cell_mut(i);
            for k in 0..cell.len() {
                cell[k] = th * phi[k] - 0.5 * alpha * slope * corr[k];
            }
        }
        let m = measure(&field, &grid, 0.3).unwrap();
        assert!((m.gradient - slope).abs() < 1e-12, "{} {}", m.gradient, slope);
        let fit = fit_fourier_law(&[[m.flux, 0.0]], &[[m.gradient, 0.0]]).unwrap();
        assert!((fit.kappa / kappa - 1.0).abs() < 1e-8, "{} {}", fit.kappa, kappa);
        assert!(m.flux_spread < 1e-10);
    }
}
