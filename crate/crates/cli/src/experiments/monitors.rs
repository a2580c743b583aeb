//! E4: energy, boundary and modulated-norm traces on time-dependent slab
//! runs. With cold walls (`θ̄ = 0`) the boundary flux form must stay
//! nonnegative at every step; with a wall jump the modulated norm must stay
//! under the affine envelope fitted on the first quarter of the run.

use std::f64::consts::PI;

use anyhow::Result;
use kinetic_core::kinetic::{
    advance_linearized, DistributionField, EntropyMonitor, MonitorReport, Reconstruction, Stepper,
};
use kinetic_core::velocity::VelocityGrid;
use serde_json::json;

use super::{Context, Report};
use crate::io::{cached_operator, write_csv};

struct Run {
    monitor: EntropyMonitor,
    report: MonitorReport,
    steps: usize,
}

fn slab_run(
    op: &kinetic_core::kinetic::CollisionOperator,
    nx: usize,
    alpha: f64,
    theta: [f64; 2],
    t_end: f64,
    init: impl Fn(f64, [f64; 2]) -> f64,
) -> Result<Run> {
    let grid = op.grid();
    let mut field = DistributionField::slab(nx, 1.0, grid, alpha, theta)?;
    field.fill(grid, init)?;
    let stepper = Stepper::new(op, &field, Reconstruction::Upwind)?;
    let steps = (t_end / stepper.cfl_limit(&field)).ceil() as usize;
    let dt = t_end / steps as f64;
    let ext = move |x: f64| theta[0] + (theta[1] - theta[0]) * x;
    let mut monitor = EntropyMonitor::new();
    monitor.record(&field, &stepper, ext)?;
    for _ in 0..steps {
        advance_linearized(&mut field, &stepper, dt)?;
        monitor.record(&field, &stepper, ext)?;
    }
    let report = monitor.report()?;
    Ok(Run { monitor, report, steps })
}

fn trace_rows(label: &str, m: &EntropyMonitor) -> Vec<Vec<String>> {
    m.samples()
        .iter()
        .map(|s| {
            vec![
                label.to_string(),
                s.time.to_string(),
                s.energy.to_string(),
                s.dissipation.to_string(),
                s.boundary_source.to_string(),
                s.flux_form[0].to_string(),
                s.flux_form[1].to_string(),
                s.variance[0].to_string(),
                s.variance[1].to_string(),
                s.modulated_l2.to_string(),
            ]
        })
        .collect()
}

pub fn run(ctx: &Context) -> Result<Report> {
    let p = &ctx.config.params;
    let alpha: f64 = p.get("alpha", 0.2)?;
    let nx: usize = p.get("nx", 50)?;
    let t_end: f64 = p.get("t_end", 0.5)?;
    let delta: f64 = p.get("delta", 0.05)?;
    let grid = VelocityGrid::new(p.get("grid_nr", 12)?, p.get("grid_ntheta", 16)?, p.get("v_max", 7.0)?)?;
    let op = cached_operator(&grid, ctx.cache.as_deref())?;

    // cold walls, a temperature bump with some shear and heat flux content
    let cold = slab_run(&op, nx, alpha, [0.0, 0.0], t_end, |x, v| {
        let s = (PI * x).sin();
        s * (0.5 * (v[0] * v[0] + v[1] * v[1] - 4.0) + 0.3 * v[1] + 0.2 * v[0] * v[1])
    })?;
    let warm = slab_run(&op, nx, alpha, [-delta, delta], t_end, |_, _| 0.0)?;

    let mut rows = trace_rows("cold", &cold.monitor);
    rows.extend(trace_rows("jump", &warm.monitor));
    write_csv(
        &ctx.path("monitors.csv"),
        &[
            "run",
            "t",
            "energy",
            "dissipation",
            "boundary_source",
            "flux_form_left",
            "flux_form_right",
            "variance_left",
            "variance_right",
            "modulated_l2",
        ],
        rows,
    )?;

    let mut report = Report::default();
    report.file("monitors.csv");
    report.at_least("cold_min_flux_form", cold.report.min_flux_form, -p.tol("flux_form", 1e-10)?);
    report.at_least("cold_energy_slack", cold.report.energy_slack, -p.tol("energy_slack", 1e-10)?);
    report.at_most("jump_envelope_violations", warm.report.envelope_violations as f64, 0.0);
    for (label, r) in [("cold", &cold), ("jump", &warm)] {
        report.set(
            label,
            json!({
                "steps": r.steps,
                "min_flux_form": r.report.min_flux_form,
                "min_variance": r.report.min_variance,
                "energy_slack": r.report.energy_slack,
                "envelope_intercept": r.report.envelope.intercept,
                "envelope_slope": r.report.envelope.slope,
                "envelope_violations": r.report.envelope_violations,
                "l2_growth": r.report.l2_growth,
            }),
        );
    }
    report.set("alpha", alpha);
    report.set("delta", delta);
    Ok(report)
}
