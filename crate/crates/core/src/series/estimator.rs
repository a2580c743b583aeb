//! Monte Carlo evaluation of the truncated Duhamel series for the
//! one-particle fluctuation.
//!
//! The tagged point is drawn from `U(T²) × M`, trees uniformly, branch
//! times uniformly on the ordered simplex, angles uniformly and adjoined
//! velocities from `M`. With the initial datum `M^{⊗(n+1)} Σ g₀` the
//! Gaussian factors cancel by energy conservation, and term `n` carries the
//! weight
//!
//! `(N-1)...(N-n) ε^n (2π t)^n Π (v_i - v_{a_i})·ω_i Σ_i g₀(z_i(0))`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::tree::{apply_pruning, build_pseudo_trajectory, CollisionTree, PruningSchedule};
use crate::error::{Error, Result};
use crate::md::Bins;
use crate::scaling::Scaling;
use crate::stats::fit_line;

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesConfig {
    pub t: f64,
    pub n_max: usize,
    pub samples: usize,
    pub seed: u64,
    pub pruning: Option<PruningSchedule>,
}

/// Per-term results; `values` are bin integrals of the term.
#[derive(Debug, Clone, PartialEq)]
pub struct TermSummary {
    pub n: usize,
    pub values: Vec<f64>,
    pub std_err: Vec<f64>,
    /// Euclidean norm of `values` and its delta-method error.
    pub norm: f64,
    pub norm_err: f64,
    /// Mean absolute weight, a bound on the term's integrand.
    pub mean_abs_weight: f64,
    pub admissible_fraction: f64,
    pub pruned_fraction: f64,
    pub recollisions: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesEstimate {
    pub bins: Bins,
    /// Bin integrals of `δF^{(1)}(t)`.
    pub values: Vec<f64>,
    pub std_err: Vec<f64>,
    pub terms: Vec<TermSummary>,
    /// `|term n_max| / |sum|` in the bin norm.
    pub truncation_indicator: f64,
    /// The initial marginals are the first-cumulant form.
    pub first_cumulant_initial_data: bool,
}

fn falling_prefactor(scaling: &Scaling, n: usize) -> f64 {
    (1..=n).map(|k| (scaling.n as f64 - k as f64) * scaling.epsilon).product()
}

fn bin_of(bins: &Bins, z: [f64; 4]) -> Option<usize> {
    let mut k = 0;
    for a in &bins.axes {
        let y = z[a.coord];
        if !(y >= a.lo && y < a.hi) {
            return None;
        }
        k = k * a.n + ((((y - a.lo) / (a.hi - a.lo)) * a.n as f64) as usize).min(a.n - 1);
    }
    Some(k)
}

fn random_tree<R: Rng>(n: usize, t: f64, rng: &mut R) -> CollisionTree {
    let labels = (0..n).map(|k| rng.gen_range(0..=k)).collect();
    let mut times: Vec<f64> = (0..n).map(|_| t * rng.gen::<f64>()).collect();
    times.sort_by(|a, b| b.total_cmp(a));
    let omegas = (0..n)
        .map(|_| {
            let th = 2.0 * PI * rng.gen::<f64>();
            [th.cos(), th.sin()]
        })
        .collect();
    let velocities = (0..n).map(|_| [StandardNormal.sample(rng), StandardNormal.sample(rng)]).collect();
    CollisionTree { labels, times, omegas, velocities }
}

/// Estimates bin integrals of `δF^{(1)}(t)` from the series truncated at
/// `n_max` branchings.
pub fn series_estimate_f1(
    g0: impl Fn([f64; 2], [f64; 2]) -> f64,
    config: &SeriesConfig,
    scaling: &Scaling,
    bins: &Bins,
) -> Result<SeriesEstimate> {
    let SeriesConfig { t, n_max, samples, seed, ref pruning } = *config;
    if !(t > 0.0) || samples < 2 {
        return Err(Error::InvalidParameter(format!("t = {t}, samples = {samples}")));
    }
    if scaling.d != 2 {
        return Err(Error::InvalidParameter("series estimator is two-dimensional".into()));
    }
    if n_max >= scaling.n {
        return Err(Error::InvalidParameter(format!("n_max {n_max} not below N = {}", scaling.n)));
    }
    if let Some(p) = pruning {
        if (p.total_time() - t).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("schedule covers {} not {t}", p.total_time())));
        }
    }
    let nb: usize = bins.axes.iter().map(|a| a.n).product();
    if nb == 0 || bins.axes.iter().any(|a| a.coord > 3 || !(a.hi > a.lo)) {
        return Err(Error::InvalidParameter("bad histogram axes".into()));
    }
    let terms_n = n_max + 1;
    let mut sum = vec![vec![0.0; nb]; terms_n];
    let mut sum2 = vec![vec![0.0; nb]; terms_n];
    let mut tot = vec![0.0; nb];
    let mut tot2 = vec![0.0; nb];
    let mut abs_w = vec![0.0; terms_n];
    let mut admissible = vec![0usize; terms_n];
    let mut pruned = vec![0usize; terms_n];
    let mut recoll = vec![0u64; terms_n];
    let pref: Vec<f64> = (0..terms_n).map(|n| falling_prefactor(scaling, n) * (2.0 * PI * t).powi(n as i32)).collect();
    let mut w = vec![0.0; terms_n];
    for k in 0..samples {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64);
        let x = [rng.gen::<f64>(), rng.gen::<f64>()];
        let v = [StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)];
        for (n, wn) in w.iter_mut().enumerate() {
            *wn = 0.0;
            let tree = random_tree(n, t, &mut rng);
            if let Some(p) = pruning {
                if !apply_pruning(p, &p.counters(t, &tree.times))?.0 {
                    pruned[n] += 1;
                    continue;
                }
            }
            let traj = build_pseudo_trajectory((x, v), &tree, scaling, t)?;
            let Some(end) = traj.end() else { continue };
            admissible[n] += 1;
            recoll[n] += traj.recollisions;
            let cross: f64 = traj.adjunctions.iter().map(|a| a.cross_section).product();
            let g: f64 = end.positions.iter().zip(&end.velocities).map(|(p, u)| g0(*p, *u)).sum();
            *wn = pref[n] * cross * g;
            abs_w[n] += wn.abs();
        }
        if let Some(b) = bin_of(bins, [x[0], x[1], v[0], v[1]]) {
            let mut s = 0.0;
            for n in 0..terms_n {
                sum[n][b] += w[n];
                sum2[n][b] += w[n] * w[n];
                s += w[n];
            }
            tot[b] += s;
            tot2[b] += s * s;
        }
    }
    let m = samples as f64;
    let finish = |s: &[f64], s2: &[f64]| -> (Vec<f64>, Vec<f64>) {
        let mean: Vec<f64> = s.iter().map(|a| a / m).collect();
        let se =
            s2.iter().zip(&mean).map(|(q, mu)| (((q / m - mu * mu) * m / (m - 1.0)).max(0.0) / m).sqrt()).collect();
        (mean, se)
    };
    let mut terms = Vec::with_capacity(terms_n);
    for n in 0..terms_n {
        if admissible[n] == 0 {
            return Err(Error::NoAdmissibleSamples);
        }
        let (values, std_err) = finish(&sum[n], &sum2[n]);
        let norm = values.iter().map(|a| a * a).sum::<f64>().sqrt();
        let norm_err = if norm > 0.0 {
            values.iter().zip(&std_err).map(|(a, e)| (a * e).powi(2)).sum::<f64>().sqrt() / norm
        } else {
            std_err.iter().map(|e| e * e).sum::<f64>().sqrt()
        };
        terms.push(TermSummary {
            n,
            values,
            std_err,
            norm,
            norm_err,
            mean_abs_weight: abs_w[n] / m,
            admissible_fraction: admissible[n] as f64 / m,
            pruned_fraction: pruned[n] as f64 / m,
            recollisions: recoll[n],
        });
    }
    let (values, std_err) = finish(&tot, &tot2);
    let total = values.iter().map(|a| a * a).sum::<f64>().sqrt();
    let truncation_indicator = if total > 0.0 { terms[n_max].norm / total } else { 0.0 };
    Ok(SeriesEstimate {
        bins: bins.clone(),
        values,
        std_err,
        terms,
        truncation_indicator,
        first_cumulant_initial_data: true,
    })
}

/// `exp` of the least-squares slope of `ln(mean |weight|)` against `n`.
pub fn geometric_ratio(terms: &[TermSummary]) -> Result<f64> {
    let pts: Vec<(f64, f64)> =
        terms.iter().filter(|t| t.mean_abs_weight > 0.0).map(|t| (t.n as f64, t.mean_abs_weight.ln())).collect();
    let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    Ok(fit_line(&x, &y)?.slope.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::md::Axis;

    fn bins() -> Bins {
        Bins { axes: vec![Axis { coord: 0, lo: 0.0, hi: 1.0, n: 4 }, Axis { coord: 2, lo: -8.0, hi: 8.0, n: 2 }] }
    }

    fn scaling() -> Scaling {
        Scaling { d: 2, n: 1000, epsilon: 0.002, alpha: 0.5, gamma: 1.0 }
    }

    #[test]
    fn free_transport_term() {
        let cfg = SeriesConfig { t: 0.1, n_max: 0, samples: 40_000, seed: 1, pruning: None };
        let g0 = |x: [f64; 2], v: [f64; 2]| (2.0 * PI * x[0]).cos() * v[0];
        let e = series_estimate_f1(g0, &cfg, &scaling(), &bins()).unwrap();
        // ∫_bin M(v) g0(x - v t, v) with v1 > 0 or < 0; x-bins of width 1/4
        let mut misses = 0;
        for b in 0..8 {
            let (xi, half) = (b / 2, b % 2);
            let (x0, x1) = (0.25 * xi as f64, 0.25 * (xi + 1) as f64);
            // E[1_{v1 half} v1 ∫ cos(2π(x - v1 t)) dx] by quadrature in v1
            let mut s = 0.0;
            let nq = 4000;
            for q in 0..nq {
                let u = -8.0 + 16.0 * (q as f64 + 0.5) / nq as f64;
                if (u >= 0.0) != (half == 1) {
                    continue;
                }
                let ix = ((2.0 * PI * (x1 - u * 0.1)).sin() - (2.0 * PI * (x0 - u * 0.1)).sin()) / (2.0 * PI);
                s += u * ix * (-u * u / 2.0).exp() / (2.0 * PI).sqrt() * 16.0 / nq as f64;
            }
            if (e.values[b] - s).abs() > 3.0 * e.std_err[b] {
                misses += 1;
            }
        }
        assert!(misses <= 1, "{:?}", e.values);
    }

    #[test]
    fn zero_data_and_linearity() {
        let cfg = SeriesConfig { t: 0.1, n_max: 2, samples: 2000, seed: 3, pruning: None };
        let z = series_estimate_f1(|_, _| 0.0, &cfg, &scaling(), &bins()).unwrap();
        assert!(z.values.iter().all(|&v| v == 0.0));
        let g = |x: [f64; 2], v: [f64; 2]| (2.0 * PI * x[0]).cos() * v[0];
        let h = |x: [f64; 2], v: [f64; 2]| (2.0 * PI * x[1]).sin() * (v[1] * v[1] - 1.0);
        let a = series_estimate_f1(g, &cfg, &scaling(), &bins()).unwrap();
        let b = series_estimate_f1(h, &cfg, &scaling(), &bins()).unwrap();
        let c = series_estimate_f1(|x, v| 2.0 * g(x, v) - h(x, v), &cfg, &scaling(), &bins()).unwrap();
        for k in 0..8 {
            assert!((c.values[k] - 2.0 * a.values[k] + b.values[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn pruning_removes_crowded_trees() {
        let sched = PruningSchedule::with_caps(0.05, vec![1, 3]).unwrap();
        let cfg = SeriesConfig { t: 0.1, n_max: 2, samples: 3000, seed: 5, pruning: Some(sched) };
        let g = |x: [f64; 2], v: [f64; 2]| (2.0 * PI * x[0]).cos() * v[0];
        let e = series_estimate_f1(g, &cfg, &scaling(), &bins()).unwrap();
        assert_eq!(e.terms[0].pruned_fraction, 0.0);
        // one branch lands in the first window with probability 1/2
        assert!((e.terms[1].pruned_fraction - 0.5).abs() < 0.05);
        // two branches avoid the first window with probability 1/4
        assert!((e.terms[2].pruned_fraction - 0.75).abs() < 0.05);
    }

    #[test]
    fn ratio_grows_with_time() {
        let g = |x: [f64; 2], v: [f64; 2]| (2.0 * PI * x[0]).cos() * v[0];
        let mut last = 0.0;
        for t in [0.05, 0.1, 0.2] {
            let cfg = SeriesConfig { t, n_max: 3, samples: 4000, seed: 9, pruning: None };
            let e = series_estimate_f1(g, &cfg, &scaling(), &bins()).unwrap();
            let r = geometric_ratio(&e.terms).unwrap();
            assert!(r.is_finite() && r > last, "{t}: {r}");
            last = r;
        }
    }
}
