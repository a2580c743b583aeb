//! Collision trees, the pruning schedule and backward pseudo-trajectories.
//!
//! Particles are numbered from 0; the tagged particle is 0 and particle `i`
//! is adjoined to `labels[i - 1] < i` at time `times[i - 1]`.

use crate::error::{Error, Result};
use crate::md::{separation, Boundary, Configuration, MdSystem};
use crate::scaling::Scaling;

/// Largest branch count accepted by [`enumerate_trees`].
pub const MAX_ENUMERATED: usize = 8;

/// All `n!` label sequences `(a_1, ..., a_n)` with `a_i < i`.
pub fn enumerate_trees(n: usize) -> Result<Vec<Vec<usize>>> {
    if n > MAX_ENUMERATED {
        return Err(Error::GuardViolation(format!("{n} branches exceed {MAX_ENUMERATED}")));
    }
    let mut out = vec![Vec::new()];
    for i in 1..=n {
        out = out
            .into_iter()
            .flat_map(|a| {
                (0..i).map(move |p| {
                    let mut b = a.clone();
                    b.push(p);
                    b
                })
            })
            .collect();
    }
    Ok(out)
}

/// Labels and parameters `(t_i, ω_i, v_i)` of the adjoined particles.
#[derive(Debug, Clone, PartialEq)]
pub struct CollisionTree {
    pub labels: Vec<usize>,
    pub times: Vec<f64>,
    pub omegas: Vec<[f64; 2]>,
    pub velocities: Vec<[f64; 2]>,
}

impl CollisionTree {
    pub fn branches(&self) -> usize {
        self.labels.len()
    }

    pub fn validate(&self, t: f64) -> Result<()> {
        let n = self.labels.len();
        for (name, len) in
            [("times", self.times.len()), ("omegas", self.omegas.len()), ("velocities", self.velocities.len())]
        {
            if len != n {
                return Err(Error::InvalidParameter(format!("{name} has {len} entries for {n} branches")));
            }
        }
        for (k, &a) in self.labels.iter().enumerate() {
            if a > k {
                return Err(Error::InvalidParameter(format!("label {a} of particle {} not below it", k + 1)));
            }
        }
        let mut prev = t;
        for &s in &self.times {
            if !(s <= prev && s >= 0.0) {
                return Err(Error::InvalidParameter(format!("branch times not ordered in [0, {t}]")));
            }
            prev = s;
        }
        for w in &self.omegas {
            let n = (w[0] * w[0] + w[1] * w[1]).sqrt();
            if (n - 1.0).abs() > 1e-10 {
                return Err(Error::NonUnitVector { norm: n });
            }
        }
        Ok(())
    }
}

/// Time-window caps for the number of branch points.
#[derive(Debug, Clone, PartialEq)]
pub struct PruningSchedule {
    pub h: f64,
    pub caps: Vec<usize>,
}

impl PruningSchedule {
    /// `k` windows of width `t / k` with caps `2^k`.
    pub fn doubling(k: usize, t: f64) -> Result<Self> {
        if k == 0 || k > 60 || !(t > 0.0) {
            return Err(Error::InvalidParameter(format!("k = {k}, t = {t}")));
        }
        Ok(Self { h: t / k as f64, caps: (1..=k).map(|j| 1usize << j).collect() })
    }

    pub fn with_caps(h: f64, caps: Vec<usize>) -> Result<Self> {
        if caps.is_empty() || !(h > 0.0) {
            return Err(Error::InvalidParameter("empty schedule".into()));
        }
        Ok(Self { h, caps })
    }

    pub fn intervals(&self) -> usize {
        self.caps.len()
    }

    pub fn total_time(&self) -> f64 {
        self.h * self.caps.len() as f64
    }

    /// Branch points per window `[t - k h, t - (k-1) h)`, counted backwards
    /// from `t`.
    pub fn counters(&self, t: f64, times: &[f64]) -> Vec<usize> {
        let mut c = vec![0; self.caps.len()];
        for &s in times {
            let k = (((t - s) / self.h).floor() as usize).min(self.caps.len() - 1);
            c[k] += 1;
        }
        c
    }
}

/// Whether the tree is kept, and the first (1-based) window over its cap.
pub fn apply_pruning(schedule: &PruningSchedule, counters: &[usize]) -> Result<(bool, Option<usize>)> {
    if counters.len() != schedule.caps.len() {
        return Err(Error::ShapeMismatch { expected: schedule.caps.len(), got: counters.len() });
    }
    match counters.iter().zip(&schedule.caps).position(|(j, n)| j >= n) {
        Some(k) => Ok((false, Some(k + 1))),
        None => Ok((true, None)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Adjunction {
    pub particle: usize,
    pub parent: usize,
    pub time: f64,
    /// Post-collisional at `t_i^+`, so the scattering law was applied.
    pub scattered: bool,
    /// `(v_i - v_{a_i}(t_i^+)) · ω_i` before scattering.
    pub cross_section: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PseudoTrajectory {
    /// Configurations at `t_i^-` for each branch time, last is time 0.
    pub snapshots: Vec<Configuration>,
    pub adjunctions: Vec<Adjunction>,
    /// Pair collisions inside the backward flows.
    pub recollisions: u64,
    pub admissible: bool,
}

impl PseudoTrajectory {
    /// Configuration at time 0, present only when admissible.
    pub fn end(&self) -> Option<&Configuration> {
        if self.admissible {
            self.snapshots.last()
        } else {
            None
        }
    }
}

fn backward_flow(config: Configuration, epsilon: f64, duration: f64) -> Result<(Configuration, u64)> {
    if duration <= 0.0 || config.len() == 0 {
        return Ok((config, 0));
    }
    let t0 = config.time;
    let mut c = config;
    if c.len() == 1 {
        let (x, v) = (c.positions[0], c.velocities[0]);
        c.positions[0] = [(x[0] - v[0] * duration).rem_euclid(1.0), (x[1] - v[1] * duration).rem_euclid(1.0)];
        c.time = t0 - duration;
        return Ok((c, 0));
    }
    c.velocities.iter_mut().for_each(|v| *v = [-v[0], -v[1]]);
    c.time = 0.0;
    let mut sys = MdSystem::new(c, epsilon, Boundary::Torus, 0)?;
    sys.run_until(duration)?;
    let hits = sys.stats().pair_collisions;
    let mut c = sys.configuration();
    c.velocities.iter_mut().for_each(|v| *v = [-v[0], -v[1]]);
    c.time = t0 - duration;
    Ok((c, hits))
}

/// Backward construction from `z1 = (x, v)` at time `t` on the torus.
pub fn build_pseudo_trajectory(
    z1: ([f64; 2], [f64; 2]),
    tree: &CollisionTree,
    scaling: &Scaling,
    t: f64,
) -> Result<PseudoTrajectory> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("t = {t}")));
    }
    tree.validate(t)?;
    let eps = scaling.epsilon;
    let mut cur = Configuration {
        positions: vec![[z1.0[0].rem_euclid(1.0), z1.0[1].rem_euclid(1.0)]],
        velocities: vec![z1.1],
        time: t,
    };
    let mut snapshots = Vec::with_capacity(tree.branches() + 1);
    let mut adjunctions = Vec::with_capacity(tree.branches());
    let mut recollisions = 0;
    for k in 0..tree.branches() {
        let ti = tree.times[k];
        let gap = cur.time - ti;
        let (c, hits) = backward_flow(cur, eps, gap)?;
        recollisions += hits;
        cur = c;
        let i = k + 1;
        let a = tree.labels[k];
        let w = tree.omegas[k];
        let xa = cur.positions[a];
        let xi = [(xa[0] + eps * w[0]).rem_euclid(1.0), (xa[1] + eps * w[1]).rem_euclid(1.0)];
        let blocked = cur.positions.iter().enumerate().any(|(j, xj)| {
            if j == a {
                return false;
            }
            let r = separation(xi, *xj, &Boundary::Torus);
            r[0] * r[0] + r[1] * r[1] <= eps * eps
        });
        let vi = tree.velocities[k];
        let va = cur.velocities[a];
        let cross = (vi[0] - va[0]) * w[0] + (vi[1] - va[1]) * w[1];
        if blocked || cross == 0.0 {
            snapshots.push(cur);
            return Ok(PseudoTrajectory { snapshots, adjunctions, recollisions, admissible: false });
        }
        cur.positions.push(xi);
        cur.velocities.push(vi);
        let scattered = cross > 0.0;
        if scattered {
            // v_a - (v_a - v_i)·ω ω and v_i + (v_a - v_i)·ω ω
            let p = -cross;
            cur.velocities[a] = [va[0] - p * w[0], va[1] - p * w[1]];
            cur.velocities[i] = [vi[0] + p * w[0], vi[1] + p * w[1]];
        }
        adjunctions.push(Adjunction { particle: i, parent: a, time: ti, scattered, cross_section: cross });
        cur.time = ti;
        snapshots.push(cur.clone());
    }
    let gap = cur.time;
    let (c, hits) = backward_flow(cur, eps, gap)?;
    recollisions += hits;
    snapshots.push(c);
    Ok(PseudoTrajectory { snapshots, adjunctions, recollisions, admissible: true })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::md::MdSystem;

    #[test]
    fn tree_counts() {
        assert_eq!(enumerate_trees(0).unwrap(), vec![Vec::<usize>::new()]);
        assert_eq!(enumerate_trees(2).unwrap(), vec![vec![0, 0], vec![0, 1]]);
        assert_eq!(enumerate_trees(4).unwrap().len(), 24);
        assert_eq!(enumerate_trees(8).unwrap().len(), 40320);
        assert!(enumerate_trees(9).is_err());
        for a in enumerate_trees(5).unwrap() {
            assert!(a.iter().enumerate().all(|(k, &p)| p <= k));
        }
    }

    #[test]
    fn pruning_examples() {
        let s = PruningSchedule::doubling(4, 1.0).unwrap();
        assert!((s.total_time() - 1.0).abs() < 1e-12);
        assert_eq!(apply_pruning(&s, &[0, 0, 0, 0]).unwrap(), (true, None));
        assert_eq!(apply_pruning(&s, &[2, 0, 0, 0]).unwrap(), (false, Some(1)));
        assert_eq!(apply_pruning(&s, &[1, 3, 7, 15]).unwrap(), (true, None));
        assert_eq!(apply_pruning(&s, &[1, 3, 8, 0]).unwrap(), (false, Some(3)));
        assert!(apply_pruning(&s, &[0, 0]).is_err());
        assert_eq!(s.counters(1.0, &[0.9, 0.8, 0.3, 0.0]), vec![2, 0, 1, 1]);
    }

    fn scaling(eps: f64) -> Scaling {
        Scaling { d: 2, n: 100, epsilon: eps, alpha: 1.0 / (100.0 * eps), gamma: 1.0 }
    }

    #[test]
    fn free_backward_flight() {
        let tree = CollisionTree { labels: vec![], times: vec![], omegas: vec![], velocities: vec![] };
        let p = build_pseudo_trajectory(([0.1, 0.2], [0.5, -1.0]), &tree, &scaling(0.01), 0.4).unwrap();
        let end = p.end().unwrap();
        assert!((end.positions[0][0] - 0.9).abs() < 1e-12 && (end.positions[0][1] - 0.6).abs() < 1e-12);
        assert_eq!(end.time, 0.0);
    }

    #[test]
    fn adjunction_without_scattering() {
        // (v2 - v1)·ω < 0
        let tree = CollisionTree {
            labels: vec![0],
            times: vec![0.3],
            omegas: vec![[1.0, 0.0]],
            velocities: vec![[-1.0, 0.0]],
        };
        let p = build_pseudo_trajectory(([0.5, 0.5], [0.0, 0.0]), &tree, &scaling(0.01), 0.5).unwrap();
        assert!(!p.adjunctions[0].scattered);
        let end = p.end().unwrap();
        assert!((end.positions[0][0] - 0.5).abs() < 1e-12);
        assert!((end.positions[1][0] - 0.81).abs() < 1e-12);
        assert_eq!(end.velocities[1], [-1.0, 0.0]);
    }

    #[test]
    fn scattering_matches_forward_dynamics() {
        let eps = 0.02;
        let tree = CollisionTree {
            labels: vec![0],
            times: vec![0.25],
            omegas: vec![[0.6, 0.8]],
            velocities: vec![[1.0, 1.5]],
        };
        let z1 = ([0.3, 0.4], [-0.2, 0.1]);
        let p = build_pseudo_trajectory(z1, &tree, &scaling(eps), 0.6).unwrap();
        assert!(p.adjunctions[0].scattered);
        let mut c = p.end().unwrap().clone();
        c.time = 0.0;
        let mut sys = MdSystem::new(c, eps, Boundary::Torus, 0).unwrap();
        sys.run_until(0.6).unwrap();
        assert_eq!(sys.stats().pair_collisions, 1);
        let fwd = sys.configuration();
        let r = separation(fwd.positions[0], z1.0, &Boundary::Torus);
        assert!(r[0].abs() < 1e-9 && r[1].abs() < 1e-9);
        assert!((fwd.velocities[0][0] - z1.1[0]).abs() < 1e-12 && (fwd.velocities[0][1] - z1.1[1]).abs() < 1e-12);
    }

    #[test]
    fn blocked_adjunction_is_rejected() {
        // particle 2 lands on top of particle 1
        let tree = CollisionTree {
            labels: vec![0, 0],
            times: vec![0.5, 0.5],
            omegas: vec![[1.0, 0.0], [1.0, 0.0]],
            velocities: vec![[-1.0, 0.0], [-1.0, 0.0]],
        };
        let p = build_pseudo_trajectory(([0.5, 0.5], [0.0, 0.0]), &tree, &scaling(0.01), 0.5).unwrap();
        assert!(!p.admissible);
        assert!(p.end().is_none());
    }
}
