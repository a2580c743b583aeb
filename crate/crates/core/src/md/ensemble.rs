//! Equilibrium sampling, fluctuation weights and marginal histograms.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{separation, Boundary, Configuration};
use crate::error::{Error, Result};
use crate::scaling::Scaling;
use crate::velocity::VelocityGrid;

/// Default number of whole-configuration attempts before giving up.
pub const DEFAULT_BUDGET: usize = 1_000_000;

/// Replicas of the Gibbs state with one importance weight each.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedEnsemble {
    pub replicas: Vec<Configuration>,
    pub weights: Vec<f64>,
    pub seeds: Vec<u64>,
}

impl WeightedEnsemble {
    /// Unit weights.
    pub fn unweighted(replicas: Vec<Configuration>, seeds: Vec<u64>) -> Result<Self> {
        if replicas.is_empty() {
            return Err(Error::InvalidParameter("empty ensemble".into()));
        }
        if seeds.len() != replicas.len() {
            return Err(Error::ShapeMismatch { expected: replicas.len(), got: seeds.len() });
        }
        let weights = vec![1.0; replicas.len()];
        Ok(Self { replicas, weights, seeds })
    }

    pub fn mean_weight(&self) -> f64 {
        self.weights.iter().sum::<f64>() / self.weights.len() as f64
    }
}

/// Gibbs sample on the torus with the default budget.
pub fn init_equilibrium_gibbs<R: Rng + ?Sized>(scaling: &Scaling, rng: &mut R) -> Result<(Configuration, f64)> {
    init_equilibrium_gibbs_in(scaling, Boundary::Torus, DEFAULT_BUDGET, rng)
}

/// Rejection sample of `1_{D_N}` times i.i.d. uniform positions, with unit
/// Gaussian velocities. The returned rate is `1 / attempts`; summing
/// attempts over calls gives a ratio estimate of the acceptance
/// probability.
pub fn init_equilibrium_gibbs_in<R: Rng + ?Sized>(
    scaling: &Scaling,
    boundary: Boundary,
    budget: usize,
    rng: &mut R,
) -> Result<(Configuration, f64)> {
    if scaling.d != 2 {
        return Err(Error::InvalidParameter(format!("particle dynamics is two-dimensional, got d = {}", scaling.d)));
    }
    let (n, eps) = (scaling.n, scaling.epsilon);
    if n as f64 * eps * eps >= 0.1 {
        return Err(Error::InvalidParameter(format!("N ε² = {} not below 0.1", n as f64 * eps * eps)));
    }
    let (lo, span) = match boundary {
        Boundary::Torus => (0.0, 1.0),
        Boundary::Walls { .. } => (0.5 * eps, 1.0 - eps),
    };
    let nc = ((1.0 / eps).floor() as usize).clamp(1, 64);
    let mut cells: Vec<Vec<usize>> = vec![Vec::new(); nc * nc];
    let mut touched: Vec<usize> = Vec::new();
    let mut pos: Vec<[f64; 2]> = Vec::with_capacity(n);
    let cell_of = |p: [f64; 2]| {
        let f = |y: f64| ((y * nc as f64).floor() as usize).min(nc - 1);
        [f(p[0]), f(p[1])]
    };
    for attempt in 1..=budget {
        for c in touched.drain(..) {
            cells[c].clear();
        }
        pos.clear();
        let mut ok = true;
        for k in 0..n {
            let p = [lo + span * rng.gen::<f64>(), rng.gen::<f64>()];
            let c = cell_of(p);
            let reach = if nc < 3 { 0..=0 } else { 0..=2 };
            'scan: for d0 in reach.clone() {
                for d1 in reach.clone() {
                    let (a, b) = if nc < 3 { (0, 0) } else { ((c[0] + nc + d0 - 1) % nc, (c[1] + nc + d1 - 1) % nc) };
                    let idx = if nc < 3 { usize::MAX } else { a * nc + b };
                    let list: Box<dyn Iterator<Item = &usize>> =
                        if idx == usize::MAX { Box::new(cells.iter().flatten()) } else { Box::new(cells[idx].iter()) };
                    for &j in list {
                        let r = separation(p, pos[j], &boundary);
                        if r[0] * r[0] + r[1] * r[1] < eps * eps {
                            ok = false;
                            break 'scan;
                        }
                    }
                }
            }
            if !ok {
                break;
            }
            let idx = c[0] * nc + c[1];
            cells[idx].push(k);
            touched.push(idx);
            pos.push(p);
        }
        if ok {
            let velocities = (0..n).map(|_| [StandardNormal.sample(rng), StandardNormal.sample(rng)]).collect();
            let config = Configuration { positions: pos, velocities, time: 0.0 };
            return Ok((config, 1.0 / attempt as f64));
        }
    }
    Err(Error::PackingTooDense { attempts: budget })
}

/// `∫∫ M g₀ dx dv` over the unit cell by midpoint rule in `x` and the polar
/// velocity grid.
pub fn phase_space_mean(g0: &impl Fn([f64; 2], [f64; 2]) -> f64) -> f64 {
    let grid = VelocityGrid::new(24, 32, 7.0).expect("fixed grid");
    let nx = 32;
    let mut s = 0.0;
    for a in 0..nx {
        for b in 0..nx {
            let x = [(a as f64 + 0.5) / nx as f64, (b as f64 + 0.5) / nx as f64];
            let h: Vec<f64> = grid.nodes().iter().map(|v| g0(x, *v)).collect();
            s += grid.mean(&h);
        }
    }
    s / (nx * nx) as f64
}

/// Weights `Σ_i g₀(x_i, v_i)` for every replica.
pub fn assign_fluctuation_weights(
    mut ensemble: WeightedEnsemble,
    g0: impl Fn([f64; 2], [f64; 2]) -> f64,
) -> Result<WeightedEnsemble> {
    let mean = phase_space_mean(&g0);
    if mean.abs() > 1e-8 {
        return Err(Error::NotMeanFree { mean });
    }
    for (w, c) in ensemble.weights.iter_mut().zip(&ensemble.replicas) {
        *w = c.positions.iter().zip(&c.velocities).map(|(x, v)| g0(*x, *v)).sum();
        if !w.is_finite() {
            return Err(Error::InvalidParameter("non-finite weight".into()));
        }
    }
    Ok(ensemble)
}

/// One histogram axis over a single-particle coordinate: 0, 1 are `x1, x2`
/// and 2, 3 are `v1, v2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub coord: usize,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Axis {
    fn index(&self, z: &[f64; 4]) -> Option<usize> {
        let y = z[self.coord];
        if !(y >= self.lo && y < self.hi) {
            return None;
        }
        Some((((y - self.lo) / (self.hi - self.lo) * self.n as f64) as usize).min(self.n - 1))
    }
    fn width(&self) -> f64 {
        (self.hi - self.lo) / self.n as f64
    }
}

/// Axes applied to each of the `s` particles; row-major over particles then
/// axes.
#[derive(Debug, Clone, PartialEq)]
pub struct Bins {
    pub axes: Vec<Axis>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Marginal {
    pub order: usize,
    pub bins: Bins,
    /// Density per bin: weighted mean count divided by bin volume.
    pub values: Vec<f64>,
    /// Standard error of each density.
    pub std_err: Vec<f64>,
    /// Raw hit counts.
    pub counts: Vec<u64>,
    /// Weighted mass including tuples outside the bins.
    pub mass: f64,
    /// Number of bins with fewer than 10 hits.
    pub under_resolved: usize,
}

/// First-order weighted histogram using the zero mean of the fluctuation
/// weights under the equilibrium law as a control variate: each replica
/// contributes `w (c - c̄)` with `c̄` the unweighted ensemble mean of the
/// bin fractions. Unbiased when `E[w] = 0`, and far less noisy than
/// [`empirical_marginal`] for large `N`.
pub fn fluctuation_marginal(ensemble: &WeightedEnsemble, bins: &Bins) -> Result<Marginal> {
    if bins.axes.is_empty() || bins.axes.iter().any(|a| a.coord > 3 || a.n == 0 || !(a.hi > a.lo)) {
        return Err(Error::InvalidParameter("bad histogram axes".into()));
    }
    let r = ensemble.replicas.len();
    if r < 2 {
        return Err(Error::InvalidParameter("need at least two replicas".into()));
    }
    let nb: usize = bins.axes.iter().map(|a| a.n).product();
    let vol = bins.axes.iter().map(|a| a.width()).product::<f64>();
    let mut frac = vec![vec![0.0; nb]; r];
    let mut counts = vec![0u64; nb];
    for (c, row) in ensemble.replicas.iter().zip(frac.iter_mut()) {
        let n = c.len() as f64;
        for (x, v) in c.positions.iter().zip(&c.velocities) {
            let z = [x[0], x[1], v[0], v[1]];
            let mut k = 0;
            let mut inside = true;
            for a in &bins.axes {
                match a.index(&z) {
                    Some(j) => k = k * a.n + j,
                    None => {
                        inside = false;
                        break;
                    }
                }
            }
            if inside {
                row[k] += 1.0 / n;
                counts[k] += 1;
            }
        }
    }
    let rf = r as f64;
    let mean: Vec<f64> = (0..nb).map(|k| frac.iter().map(|row| row[k]).sum::<f64>() / rf).collect();
    let mut values = vec![0.0; nb];
    let mut std_err = vec![0.0; nb];
    for k in 0..nb {
        let y: Vec<f64> = frac.iter().zip(&ensemble.weights).map(|(row, w)| w * (row[k] - mean[k]) / vol).collect();
        let m = y.iter().sum::<f64>() / rf;
        let var = y.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (rf - 1.0);
        // E[w c̄] = E[w c] / R
        values[k] = m * rf / (rf - 1.0);
        std_err[k] = (var / rf).sqrt() * rf / (rf - 1.0);
    }
    let under_resolved = counts.iter().filter(|&&c| c < 10).count();
    Ok(Marginal { order: 1, bins: bins.clone(), values, std_err, counts, mass: ensemble.mean_weight(), under_resolved })
}

/// Weighted, symmetrized histogram of the `s`-particle marginal over ordered
/// tuples of distinct particles. Unprojected coordinates are integrated out.
pub fn empirical_marginal(ensemble: &WeightedEnsemble, s: usize, bins: &Bins) -> Result<Marginal> {
    if !(1..=2).contains(&s) {
        return Err(Error::InvalidParameter(format!("marginal order {s} not supported")));
    }
    if bins.axes.is_empty() || bins.axes.iter().any(|a| a.coord > 3 || a.n == 0 || !(a.hi > a.lo)) {
        return Err(Error::InvalidParameter("bad histogram axes".into()));
    }
    let per: usize = bins.axes.iter().map(|a| a.n).product();
    let nb = per.pow(s as u32);
    let vol = bins.axes.iter().map(|a| a.width()).product::<f64>().powi(s as i32);
    let r = ensemble.replicas.len();
    let mut sum = vec![0.0; nb];
    let mut sum2 = vec![0.0; nb];
    let mut counts = vec![0u64; nb];
    let mut mass = 0.0;
    let mut local = vec![0.0; nb];
    let mut hit: Vec<usize> = Vec::new();
    let cell = |z: &[f64; 4]| -> Option<usize> {
        let mut k = 0;
        for a in &bins.axes {
            k = k * a.n + a.index(z)?;
        }
        Some(k)
    };
    for (c, &w) in ensemble.replicas.iter().zip(&ensemble.weights) {
        let n = c.len();
        if n < s {
            return Err(Error::InvalidParameter(format!("order {s} exceeds N = {n}")));
        }
        let z: Vec<[f64; 4]> = c.positions.iter().zip(&c.velocities).map(|(x, v)| [x[0], x[1], v[0], v[1]]).collect();
        let idx: Vec<Option<usize>> = z.iter().map(cell).collect();
        let tuples = if s == 1 { n as f64 } else { (n * (n - 1)) as f64 };
        mass += w;
        if s == 1 {
            for k in idx.iter().flatten() {
                if local[*k] == 0.0 {
                    hit.push(*k);
                }
                local[*k] += 1.0;
            }
        } else {
            for (i, a) in idx.iter().enumerate() {
                let Some(a) = a else { continue };
                for (j, b) in idx.iter().enumerate() {
                    let Some(b) = b else { continue };
                    if i != j {
                        let k = a * per + b;
                        if local[k] == 0.0 {
                            hit.push(k);
                        }
                        local[k] += 1.0;
                    }
                }
            }
        }
        for k in hit.drain(..) {
            let y = w * local[k] / tuples;
            sum[k] += y;
            sum2[k] += y * y;
            counts[k] += local[k] as u64;
            local[k] = 0.0;
        }
    }
    let rf = r as f64;
    let values: Vec<f64> = sum.iter().map(|s| s / rf / vol).collect();
    let std_err = sum
        .iter()
        .zip(&sum2)
        .map(|(s, s2)| {
            let m = s / rf;
            let var = if r > 1 { ((s2 / rf - m * m) * rf / (rf - 1.0)).max(0.0) } else { 0.0 };
            (var / rf).sqrt() / vol
        })
        .collect();
    let under_resolved = counts.iter().filter(|&&c| c < 10).count();
    Ok(Marginal { order: s, bins: bins.clone(), values, std_err, counts, mass: mass / rf, under_resolved })
}
