//! E5: truncated Duhamel series against the kinetic solver, growth of the
//! terms with `t/α`, pruning statistics, and cumulant decay of the
//! two-particle fluctuation on weighted MD ensembles.

use anyhow::{bail, Result};
use kinetic_core::md::{init_equilibrium_gibbs, Boundary, MdSystem};
use kinetic_core::scaling::Scaling;
use kinetic_core::series::{
    cumulant_decay_report, extract_cumulants, geometric_ratio, series_estimate_f1, DecayReport, PruningSchedule,
    SeriesConfig, SeriesEstimate,
};
use kinetic_core::velocity::VelocityGrid;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use super::lanford::{initial_datum, kinetic_reference, sign_bins};
use super::{Context, Report};
use crate::io::{cached_operator, write_csv};

fn term_rows(label: &str, e: &SeriesEstimate) -> Vec<Vec<String>> {
    e.terms
        .iter()
        .map(|t| {
            vec![
                label.to_string(),
                t.n.to_string(),
                t.norm.to_string(),
                t.norm_err.to_string(),
                t.admissible_fraction.to_string(),
                t.pruned_fraction.to_string(),
                t.mean_abs_weight.to_string(),
                t.recollisions.to_string(),
            ]
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CumulantRun {
    pub n: usize,
    pub replicas: usize,
    pub cells: usize,
    pub rows: Vec<(usize, f64)>,
    pub higher_over_first: f64,
    pub reconstruction_residual: f64,
}

/// Two-particle fluctuation `G = δF^{(2)} / (π ⊗ π)` on `x1`-bin by
/// `v1`-sign cells from a weighted MD ensemble at time `t`, and its cumulant
/// decay report.
///
/// `δF^{(2)}` in a cell pair is estimated by `w (c - c̄)` with `c` the
/// fraction of ordered pairs in the cell pair, which is unbiased because the
/// weights have zero mean under the Gibbs law.
pub fn md_cumulant_decay(
    n: usize,
    alpha: f64,
    t: f64,
    replicas: usize,
    x_bins: usize,
    g0: fn([f64; 2], [f64; 2]) -> f64,
    seed: u64,
) -> Result<(CumulantRun, DecayReport)> {
    let scaling = Scaling::new(2, n, alpha, 1.0)?;
    let p = 2 * x_bins;
    let cell =
        |x: [f64; 2], v: [f64; 2]| ((x[0] * x_bins as f64) as usize).min(x_bins - 1) * 2 + (v[0] >= 0.0) as usize;
    let mut c1 = vec![0.0; p];
    let mut pairs: Vec<Vec<f64>> = Vec::with_capacity(replicas);
    let mut weights = Vec::with_capacity(replicas);
    let norm = (n * (n - 1)) as f64;
    for k in 0..replicas {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64);
        let (c, _) = init_equilibrium_gibbs(&scaling, &mut rng)?;
        weights.push(c.positions.iter().zip(&c.velocities).map(|(x, v)| g0(*x, *v)).sum::<f64>());
        let mut sys = MdSystem::new(c, scaling.epsilon, Boundary::Torus, seed)?;
        sys.run_until(t)?;
        let c = sys.configuration();
        let idx: Vec<usize> = c.positions.iter().zip(&c.velocities).map(|(x, v)| cell(*x, *v)).collect();
        let mut hist = vec![0.0; p];
        for &a in &idx {
            hist[a] += 1.0;
            c1[a] += 1.0 / (n * replicas) as f64;
        }
        // ordered pairs i != j
        let row: Vec<f64> = (0..p * p)
            .map(|ab| {
                let (a, b) = (ab / p, ab % p);
                let same = if a == b { hist[a] } else { 0.0 };
                (hist[a] * hist[b] - same) / norm
            })
            .collect();
        pairs.push(row);
    }
    if c1.iter().any(|x| *x == 0.0) {
        bail!("empty cell in the equilibrium histogram");
    }
    let rf = replicas as f64;
    let mean: Vec<f64> = (0..p * p).map(|ab| pairs.iter().map(|r| r[ab]).sum::<f64>() / rf).collect();
    let g: Vec<f64> = (0..p * p)
        .map(|ab| {
            let cov = pairs.iter().zip(&weights).map(|(r, w)| w * (r[ab] - mean[ab])).sum::<f64>() / (rf - 1.0);
            cov / (c1[ab / p] * c1[ab % p])
        })
        .collect();
    // exact symmetry up to rounding of the sums
    let g: Vec<f64> = (0..p * p).map(|ab| 0.5 * (g[ab] + g[(ab % p) * p + ab / p])).collect();
    let fam = extract_cumulants(&g, &c1, 2)?;
    let rep = cumulant_decay_report(&fam, n)?;
    let run = CumulantRun {
        n,
        replicas,
        cells: p,
        rows: rep.rows.clone(),
        higher_over_first: rep.higher_over_first,
        reconstruction_residual: fam.residual,
    };
    Ok((run, rep))
}

pub fn run(ctx: &Context) -> Result<Report> {
    let p = &ctx.config.params;
    let seed = ctx.config.seed;
    let alpha: f64 = p.get("alpha", 0.5)?;
    let n: usize = p.get("n", 1000)?;
    let t: f64 = p.get("t", 0.1)?;
    let samples: usize = p.get("samples", 400_000)?;
    let n_max: usize = p.get("n_max", 2)?;
    let x_bins: usize = p.get("x_bins", 4)?;
    let datum: String = p.get("g0", "cos_v1".to_string())?;
    let g0 = initial_datum(&datum)?;
    let sigmas = p.tol("sigmas", 3.0)?;
    let scaling = Scaling::new(2, n, alpha, 1.0)?;
    let bins = sign_bins(x_bins);
    let grid = VelocityGrid::new(p.get("grid_nr", 24)?, p.get("grid_ntheta", 32)?, p.get("v_max", 7.0)?)?;
    let op = cached_operator(&grid, ctx.cache.as_deref())?;
    let reference = kinetic_reference(&grid, &op, g0, alpha, t, p.get("nx", 16)?, p.get("kinetic_steps", 40)?, &bins)?;

    let mut report = Report::default();
    let cfg = SeriesConfig { t, n_max, samples, seed, pruning: None };
    let est = series_estimate_f1(g0, &cfg, &scaling, &bins)?;
    let mut bin_rows = Vec::new();
    let mut within = 0;
    for b in 0..reference.len() {
        let diff = est.values[b] - reference[b];
        if diff.abs() <= sigmas * est.std_err[b] {
            within += 1;
        }
        bin_rows.push(vec![
            (b / 2).to_string(),
            if b % 2 == 0 { "-" } else { "+" }.to_string(),
            est.values[b].to_string(),
            est.std_err[b].to_string(),
            reference[b].to_string(),
        ]);
    }
    write_csv(&ctx.path("series_bins.csv"), &["x_bin", "v1_sign", "series", "series_stderr", "kinetic"], bin_rows)?;
    report.file("series_bins.csv");
    let within_fraction = within as f64 / reference.len() as f64;
    report.at_least("series_within_sigma_fraction", within_fraction, p.tol("series_within_fraction", 1.0)?);

    // pruned run with the doubling schedule
    let windows: usize = p.get("pruning_windows", 2)?;
    let pcfg = SeriesConfig { pruning: Some(PruningSchedule::doubling(windows, t)?), ..cfg.clone() };
    let pruned = series_estimate_f1(g0, &pcfg, &scaling, &bins)?;

    let mut term_table = term_rows("none", &est);
    term_table.extend(term_rows("doubling", &pruned));

    // growth of the terms with t / α
    let ratio_ts: Vec<f64> = p.list("ratio_t", &[0.05, 0.1, 0.2])?;
    let ratio_samples: usize = p.get("ratio_samples", 100_000)?;
    let ratio_nmax: usize = p.get("ratio_n_max", 3)?;
    let mut ratios = Vec::new();
    for &rt in &ratio_ts {
        let c = SeriesConfig { t: rt, n_max: ratio_nmax, samples: ratio_samples, seed, pruning: None };
        let e = series_estimate_f1(g0, &c, &scaling, &bins)?;
        term_table.extend(term_rows(&format!("ratio_t{rt}"), &e));
        ratios.push((rt / alpha, geometric_ratio(&e.terms)?));
    }
    write_csv(
        &ctx.path("terms.csv"),
        &[
            "run",
            "n",
            "estimate",
            "stderr",
            "admissible_fraction",
            "pruning_rejection_fraction",
            "mean_abs_weight",
            "recollisions",
        ],
        term_table,
    )?;
    report.file("terms.csv");
    report.holds("geometric_ratio_finite", ratios.iter().all(|r| r.1.is_finite() && r.1 > 0.0));
    report.holds("geometric_ratio_increases", ratios.windows(2).all(|w| w[1].1 > w[0].1));

    // cumulant decay on MD ensembles
    let cn: usize = p.get("cumulant_n", 20)?;
    let calpha: f64 = p.get("cumulant_alpha", 1.0)?;
    let (crun, crep) = md_cumulant_decay(
        cn,
        calpha,
        p.get::<f64>("cumulant_t_factor", 0.25)? * calpha,
        p.get("cumulant_replicas", 20_000)?,
        x_bins,
        g0,
        seed,
    )?;
    report.at_most("cumulant_higher_over_first", crep.higher_over_first, p.tol("cumulant_ratio", 0.1)?);

    report.set("alpha", alpha);
    report.set("t", t);
    report.set("n", n);
    report.set("kinetic_bins", &reference);
    report.set("series_bins", &est.values);
    report.set("series_stderr", &est.std_err);
    report.set("truncation_indicator", est.truncation_indicator);
    report.set("first_cumulant_initial_data", est.first_cumulant_initial_data);
    report.set(
        "pruning",
        json!({
            "windows": windows,
            "pruned_fraction": pruned.terms.iter().map(|t| t.pruned_fraction).collect::<Vec<_>>(),
        }),
    );
    report.set("geometric_ratios", &ratios);
    report.set("cumulants", &crun);
    Ok(report)
}
