//! E1: weighted hard-sphere ensembles in the Boltzmann-Grad scaling against
//! the linearized Boltzmann equation on the torus.
//!
//! Particle time `t` is the time of `∂t g + v·∇g = -L g / α`; the field
//! solver advances `α ∂τ g + v·∇g = -L g / α`, so the reference is taken at
//! `τ = α t`. Bins are `x1` intervals times the sign of `v1`.

use std::f64::consts::PI;

use anyhow::{bail, Result};
use kinetic_core::kinetic::{advance_linearized, bin_integrals, DistributionField, Reconstruction, Stepper};
use kinetic_core::md::{
    assign_fluctuation_weights, fluctuation_marginal, init_equilibrium_gibbs, Axis, Bins, Boundary, WeightedEnsemble,
};
use kinetic_core::scaling::Scaling;
use kinetic_core::velocity::VelocityGrid;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{Context, Report};
use crate::io::{cached_operator, write_csv, Checkpoint};

/// Mean-free initial data by name.
pub fn initial_datum(name: &str) -> Result<fn([f64; 2], [f64; 2]) -> f64> {
    Ok(match name {
        "cos_v1" => |x, v| (2.0 * PI * x[0]).cos() * v[0],
        "cos_theta" => |x, v| (2.0 * PI * x[0]).cos() * 0.5 * (v[0] * v[0] + v[1] * v[1] - 4.0),
        "zero" => |_, _| 0.0,
        _ => bail!("unknown initial datum {name:?}, expected cos_v1, cos_theta or zero"),
    })
}

/// Sign bins in `v1` over a range that holds every sample in practice.
pub fn sign_bins(x_bins: usize) -> Bins {
    Bins { axes: vec![Axis { coord: 0, lo: 0.0, hi: 1.0, n: x_bins }, Axis { coord: 2, lo: -50.0, hi: 50.0, n: 2 }] }
}

/// `∫_bin M g(t)` from the kinetic solver on a torus of unit length.
pub fn kinetic_reference(
    grid: &VelocityGrid,
    op: &kinetic_core::kinetic::CollisionOperator,
    g0: fn([f64; 2], [f64; 2]) -> f64,
    alpha: f64,
    t: f64,
    nx: usize,
    steps: usize,
    bins: &Bins,
) -> Result<Vec<f64>> {
    let mut field = DistributionField::torus(nx, 1.0, grid, alpha)?;
    field.fill(grid, |x, v| g0([x, 0.0], v))?;
    if t > 0.0 {
        let stepper = Stepper::new(op, &field, Reconstruction::Upwind)?;
        let tau = alpha * t;
        for _ in 0..steps {
            advance_linearized(&mut field, &stepper, tau / steps as f64)?;
        }
    }
    Ok(bin_integrals(&field, grid, bins)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelResult {
    pub n: usize,
    pub epsilon: f64,
    pub replicas: usize,
    pub acceptance_rate: f64,
    pub occupied_bins: usize,
    pub within_fraction: f64,
    /// Bias-corrected squared discrepancy `Σ (diff² - se²)`.
    pub discrepancy2: f64,
    pub discrepancy2_sd: f64,
    pub collisions_per_particle: f64,
}

pub fn run(ctx: &Context) -> Result<Report> {
    let p = &ctx.config.params;
    let alpha: f64 = p.get("alpha", 0.5)?;
    let ns: Vec<usize> = p.list("n_list", &[500, 1000])?;
    let replicas: usize = p.get("replicas", 3000)?;
    let t = p.get::<f64>("t_factor", 0.25)? * alpha;
    let x_bins: usize = p.get("x_bins", 4)?;
    let datum: String = p.get("g0", "cos_v1".to_string())?;
    let g0 = initial_datum(&datum)?;
    let sigmas = p.tol("sigmas", 3.0)?;
    let grid = VelocityGrid::new(p.get("grid_nr", 24)?, p.get("grid_ntheta", 32)?, p.get("v_max", 7.0)?)?;
    let op = cached_operator(&grid, ctx.cache.as_deref())?;
    if replicas < 2 {
        bail!("need at least two replicas");
    }
    if t > 0.5 * alpha + 1e-12 {
        bail!("t = {t} beyond 0.5 alpha");
    }
    let bins = sign_bins(x_bins);
    let reference = kinetic_reference(&grid, &op, g0, alpha, t, p.get("nx", 16)?, p.get("kinetic_steps", 40)?, &bins)?;
    let vol = 1.0 / x_bins as f64 * 50.0;

    let mut report = Report::default();
    let mut rows = Vec::new();
    let mut levels = Vec::new();
    for (level, &n) in ns.iter().enumerate() {
        let scaling = Scaling::new(2, n, alpha, 1.0)?;
        let mut init = Vec::with_capacity(replicas);
        let mut finals = Vec::with_capacity(replicas);
        let mut attempts = 0.0;
        let mut collisions = 0u64;
        for k in 0..replicas {
            let mut rng = ChaCha8Rng::seed_from_u64(ctx.config.seed);
            rng.set_stream(((level as u64) << 32) | k as u64);
            let (c, rate) = init_equilibrium_gibbs(&scaling, &mut rng)?;
            attempts += 1.0 / rate;
            init.push(c.clone());
            let mut sys = kinetic_core::md::MdSystem::new(c, scaling.epsilon, Boundary::Torus, ctx.config.seed)?;
            sys.run_until(t)?;
            collisions += sys.stats().pair_collisions;
            if k == 0 && level + 1 == ns.len() {
                let (seed, word_pos) = sys.stream_state();
                let cp = Checkpoint { scaling, boundary: Boundary::Torus, config: sys.configuration(), seed, word_pos };
                cp.write(&ctx.path("checkpoint.txt"))?;
                report.file("checkpoint.txt");
            }
            finals.push(sys.configuration());
        }
        let seeds: Vec<u64> = (0..replicas as u64).collect();
        let weighted = assign_fluctuation_weights(WeightedEnsemble::unweighted(init, seeds.clone())?, g0)?;
        let ens = WeightedEnsemble { replicas: finals, weights: weighted.weights, seeds };
        let m = fluctuation_marginal(&ens, &bins)?;
        let (mut occupied, mut within, mut d2, mut var) = (0usize, 0usize, 0.0, 0.0);
        for b in 0..reference.len() {
            let est = m.values[b] * vol;
            let se = m.std_err[b] * vol;
            let diff = est - reference[b];
            rows.push(vec![
                n.to_string(),
                (b / 2).to_string(),
                if b % 2 == 0 { "-" } else { "+" }.to_string(),
                est.to_string(),
                se.to_string(),
                reference[b].to_string(),
                m.counts[b].to_string(),
            ]);
            if m.counts[b] == 0 {
                continue;
            }
            occupied += 1;
            if diff.abs() <= sigmas * se {
                within += 1;
            }
            d2 += diff * diff - se * se;
            var += 4.0 * diff * diff * se * se + 2.0 * se.powi(4);
        }
        let lv = LevelResult {
            n,
            epsilon: scaling.epsilon,
            replicas,
            acceptance_rate: replicas as f64 / attempts,
            occupied_bins: occupied,
            within_fraction: if occupied > 0 { within as f64 / occupied as f64 } else { 1.0 },
            discrepancy2: d2,
            discrepancy2_sd: var.sqrt(),
            collisions_per_particle: 2.0 * collisions as f64 / (n * replicas) as f64,
        };
        report.at_least(
            &format!("within_{sigmas}_sigma_fraction_n{n}"),
            lv.within_fraction,
            p.tol("within_fraction", 0.9)?,
        );
        levels.push(lv);
    }
    write_csv(&ctx.path("marginals.csv"), &["n", "x_bin", "v1_sign", "md", "md_stderr", "kinetic", "hits"], rows)?;
    report.file("marginals.csv");
    let z = p.tol("growth_sigmas", 2.0)?;
    for w in levels.windows(2) {
        let allowance = z * (w[0].discrepancy2_sd.powi(2) + w[1].discrepancy2_sd.powi(2)).sqrt();
        report.at_most(
            &format!("discrepancy_growth_n{}_to_n{}", w[0].n, w[1].n),
            w[1].discrepancy2 - w[0].discrepancy2,
            allowance,
        );
    }
    report.set("alpha", alpha);
    report.set("t", t);
    report.set("tau", alpha * t);
    report.set("g0", datum);
    report.set("kinetic_bins", &reference);
    report.set("levels", &levels);
    Ok(report)
}
