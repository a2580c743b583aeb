//! Event-driven hard-sphere dynamics in two dimensions.

mod engine;
pub mod ensemble;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

pub use engine::{run_until, MdStats, MdSystem};
pub use ensemble::{
    assign_fluctuation_weights, empirical_marginal, fluctuation_marginal, init_equilibrium_gibbs,
    init_equilibrium_gibbs_in, Axis, Bins, Marginal, WeightedEnsemble,
};

/// Discriminants below this are grazing contacts and are ignored.
pub const GRAZING: f64 = 1e-14;

/// Positions, velocities and clock of `N` particles.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    pub positions: Vec<[f64; 2]>,
    pub velocities: Vec<[f64; 2]>,
    pub time: f64,
}

impl Configuration {
    pub fn len(&self) -> usize {
        self.positions.len()
    }
    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
    pub fn momentum(&self) -> [f64; 2] {
        self.velocities.iter().fold([0.0, 0.0], |a, v| [a[0] + v[0], a[1] + v[1]])
    }
    /// `Σ |v_i|²`.
    pub fn kinetic_energy(&self) -> f64 {
        self.velocities.iter().map(|v| v[0] * v[0] + v[1] * v[1]).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Boundary {
    /// Unit torus.
    Torus,
    /// Diffuse walls at `x1 = ε/2` and `x1 = 1 - ε/2`, periodic in `x2`.
    Walls { temperature: [f64; 2] },
}

/// Wraps a coordinate difference into `[-1/2, 1/2)`.
#[inline]
pub fn wrap(d: f64) -> f64 {
    d - (d + 0.5).floor()
}

/// Relative position `x_i - x_j` under the boundary's image convention.
#[inline]
pub fn separation(xi: [f64; 2], xj: [f64; 2], boundary: &Boundary) -> [f64; 2] {
    match boundary {
        Boundary::Torus => [wrap(xi[0] - xj[0]), wrap(xi[1] - xj[1])],
        Boundary::Walls { .. } => [xi[0] - xj[0], wrap(xi[1] - xj[1])],
    }
}

/// Time until `|r + s dv| = ε` for approaching particles with separation
/// `r = x_i - x_j` and relative velocity `dv = v_i - v_j`.
pub fn contact_time(r: [f64; 2], dv: [f64; 2], epsilon: f64) -> Option<f64> {
    let b = r[0] * dv[0] + r[1] * dv[1];
    if b >= 0.0 {
        return None;
    }
    let a = dv[0] * dv[0] + dv[1] * dv[1];
    let c = r[0] * r[0] + r[1] * r[1] - epsilon * epsilon;
    if c <= 0.0 {
        // touching or overlapping by rounding while approaching
        return Some(0.0);
    }
    let disc = b * b - a * c;
    if disc < GRAZING {
        return None;
    }
    // numerically stable smaller root
    Some(c / (-b + disc.sqrt()))
}

/// Earliest future contact time of particles `i` and `j` in a configuration
/// whose positions are all current at `config.time`.
pub fn predict_pair_collision(
    i: usize,
    j: usize,
    config: &Configuration,
    epsilon: f64,
    boundary: &Boundary,
) -> Option<f64> {
    if i == j {
        return None;
    }
    let r = separation(config.positions[i], config.positions[j], boundary);
    let (vi, vj) = (config.velocities[i], config.velocities[j]);
    contact_time(r, [vi[0] - vj[0], vi[1] - vj[1]], epsilon).map(|s| config.time + s)
}

/// Elastic hard-sphere reflection along the unit line of centres `n`.
pub fn apply_scattering(vi: [f64; 2], vj: [f64; 2], n: [f64; 2]) -> Result<([f64; 2], [f64; 2])> {
    let norm = (n[0] * n[0] + n[1] * n[1]).sqrt();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::NonUnitVector { norm });
    }
    let p = (vi[0] - vj[0]) * n[0] + (vi[1] - vj[1]) * n[1];
    Ok(([vi[0] - p * n[0], vi[1] - p * n[1]], [vj[0] + p * n[0], vj[1] + p * n[1]]))
}

/// Velocity re-emitted by a diffuse wall with unit normal `n` pointing into
/// the gas: density proportional to `M_Σ(v) (v·n)_+` at temperature `t`.
pub fn sample_diffuse_wall<R: Rng + ?Sized>(n: [f64; 2], t: f64, rng: &mut R) -> Result<[f64; 2]> {
    let norm = (n[0] * n[0] + n[1] * n[1]).sqrt();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::NonUnitVector { norm });
    }
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("wall temperature must be positive, got {t}")));
    }
    // normal part is Rayleigh, tangential part Gaussian
    let u: f64 = 1.0 - rng.gen::<f64>();
    let vn = (-2.0 * t * u.ln()).sqrt();
    let z: f64 = StandardNormal.sample(rng);
    let vt = t.sqrt() * z;
    let tang = [-n[1], n[0]];
    Ok([vn * n[0] + vt * tang[0], vn * n[1] + vt * tang[1]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pair_prediction_examples() {
        let mut c = Configuration {
            positions: vec![[0.0, 0.5], [0.5, 0.5]],
            velocities: vec![[1.0, 0.0], [-1.0, 0.0]],
            time: 0.0,
        };
        let t = predict_pair_collision(0, 1, &c, 0.1, &Boundary::Walls { temperature: [1.0, 1.0] }).unwrap();
        assert!((t - 0.2).abs() < 1e-12);
        // on the torus the seam image at distance 0.5 is equally close; both
        // give a gap of 0.4
        let t = predict_pair_collision(0, 1, &c, 0.1, &Boundary::Torus).unwrap();
        assert!((t - 0.2).abs() < 1e-12);
        c.velocities = vec![[0.3, 0.1], [0.3, 0.1]];
        assert!(predict_pair_collision(0, 1, &c, 0.1, &Boundary::Torus).is_none());
        c.positions = vec![[0.2, 0.5], [0.4, 0.5]];
        c.velocities = vec![[-1.0, 0.0], [1.0, 0.0]];
        assert!(predict_pair_collision(0, 1, &c, 0.1, &Boundary::Walls { temperature: [1.0, 1.0] }).is_none());
    }

    #[test]
    fn seam_collision() {
        let c = Configuration {
            positions: vec![[0.02, 0.5], [0.97, 0.5]],
            velocities: vec![[-1.0, 0.0], [1.0, 0.0]],
            time: 1.0,
        };
        let t = predict_pair_collision(0, 1, &c, 0.01, &Boundary::Torus).unwrap();
        assert!((t - 1.02).abs() < 1e-12);
    }

    #[test]
    fn scattering_examples() {
        let (a, b) = apply_scattering([1.0, 0.0], [-1.0, 0.0], [1.0, 0.0]).unwrap();
        assert_eq!((a, b), ([-1.0, 0.0], [1.0, 0.0]));
        let (a, b) = apply_scattering([1.0, 0.0], [-1.0, 0.0], [0.0, 1.0]).unwrap();
        assert_eq!((a, b), ([1.0, 0.0], [-1.0, 0.0]));
        assert!(apply_scattering([1.0, 0.0], [0.0, 0.0], [2.0, 0.0]).is_err());
        let n = [0.6, 0.8];
        let (vi, vj) = ([0.3, -1.2], [2.0, 0.7]);
        let (a, b) = apply_scattering(vi, vj, n).unwrap();
        let e = |x: [f64; 2]| x[0] * x[0] + x[1] * x[1];
        assert!((e(a) + e(b) - e(vi) - e(vj)).abs() < 1e-14);
        assert!((a[0] + b[0] - vi[0] - vj[0]).abs() < 1e-15);
    }

    #[test]
    fn diffuse_wall_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = [1.0, 0.0];
        let t = 1.3;
        let m = 200_000;
        let (mut s, mut s2, mut tang, mut tang2) = (0.0, 0.0, 0.0, 0.0);
        for _ in 0..m {
            let v = sample_diffuse_wall(n, t, &mut rng).unwrap();
            assert!(v[0] > 0.0);
            let e = v[0] * v[0] + v[1] * v[1];
            s += e;
            s2 += e * e;
            tang += v[1];
            tang2 += v[1] * v[1];
        }
        let mean = s / m as f64;
        let se = ((s2 / m as f64 - mean * mean) / m as f64).sqrt();
        assert!((mean - 3.0 * t).abs() < 3.0 * se, "{mean}");
        assert!((tang / m as f64).abs() < 3.0 * (t / m as f64).sqrt());
        assert!((tang2 / m as f64 - t).abs() < 0.02);
    }
}
