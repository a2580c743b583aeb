//! Event loop: lazy free flight, a binary heap of predicted events and
//! uniform cell lists. Events carry the collision counters of their
//! participants at prediction time and are dropped when either has moved on.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{apply_scattering, contact_time, sample_diffuse_wall, separation, Boundary, Configuration};
use crate::error::{Error, Result};

/// Largest tolerated deviation of a contact distance from `ε`.
const DRIFT: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    Pair { j: usize, cj: u64 },
    Wall { side: usize },
    Cell { axis: usize, step: i64 },
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    i: usize,
    ci: u64,
    kind: Kind,
}

impl Event {
    fn key(&self) -> (usize, usize, u8) {
        match self.kind {
            Kind::Pair { j, .. } => (self.i.min(j), self.i.max(j), 0),
            Kind::Wall { side } => (self.i, usize::MAX, 1 + side as u8),
            Kind::Cell { axis, .. } => (self.i, usize::MAX, 3 + axis as u8),
        }
    }
}

impl PartialEq for Event {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Event {}
impl PartialOrd for Event {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Event {
    fn cmp(&self, o: &Self) -> Ordering {
        self.time.total_cmp(&o.time).then_with(|| self.key().cmp(&o.key()))
    }
}

/// Event counters since construction.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MdStats {
    pub pair_collisions: u64,
    pub wall_hits: u64,
    pub cell_crossings: u64,
}

impl MdStats {
    pub fn events(&self) -> u64 {
        self.pair_collisions + self.wall_hits + self.cell_crossings
    }
}

/// A running hard-sphere system.
#[derive(Debug, Clone)]
pub struct MdSystem {
    epsilon: f64,
    boundary: Boundary,
    x: Vec<[f64; 2]>,
    v: Vec<[f64; 2]>,
    /// Time at which `x[i]` is current.
    tp: Vec<f64>,
    time: f64,
    count: Vec<u64>,
    ncell: [usize; 2],
    cell: Vec<[usize; 2]>,
    members: Vec<Vec<usize>>,
    queue: BinaryHeap<Reverse<Event>>,
    seed: u64,
    rng: ChaCha8Rng,
    stats: MdStats,
}

fn cells_per_side(epsilon: f64, n: usize) -> usize {
    let by_size = (1.0 / epsilon).floor() as usize;
    let by_count = ((n as f64).sqrt().ceil() as usize).max(1);
    let c = by_size.min(by_count).min(512);
    if c < 3 {
        1
    } else {
        c
    }
}

impl MdSystem {
    /// `seed` drives the wall thermostat stream; torus runs never draw from it.
    pub fn new(config: Configuration, epsilon: f64, boundary: Boundary, seed: u64) -> Result<Self> {
        Self::with_stream(config, epsilon, boundary, seed, 0)
    }

    /// Restores a system whose thermostat stream has advanced to `word_pos`.
    pub fn with_stream(
        config: Configuration,
        epsilon: f64,
        boundary: Boundary,
        seed: u64,
        word_pos: u128,
    ) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 0.5) {
            return Err(Error::InvalidParameter(format!("epsilon {epsilon} outside (0, 1/2)")));
        }
        let n = config.len();
        if config.velocities.len() != n {
            return Err(Error::ShapeMismatch { expected: n, got: config.velocities.len() });
        }
        if let Boundary::Walls { temperature } = boundary {
            if !(temperature[0] > 0.0 && temperature[1] > 0.0) {
                return Err(Error::InvalidParameter("wall temperatures must be positive".into()));
            }
        }
        let mut x = config.positions;
        for p in x.iter_mut() {
            if !(p[0].is_finite() && p[1].is_finite()) {
                return Err(Error::InvalidParameter("non-finite position".into()));
            }
            p[1] = p[1].rem_euclid(1.0);
            match boundary {
                Boundary::Torus => p[0] = p[0].rem_euclid(1.0),
                Boundary::Walls { .. } => {
                    if p[0] < 0.5 * epsilon - DRIFT || p[0] > 1.0 - 0.5 * epsilon + DRIFT {
                        return Err(Error::InvalidParameter(format!("x1 = {} outside the walls", p[0])));
                    }
                }
            }
        }
        let nc = cells_per_side(epsilon, n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_word_pos(word_pos);
        let mut sys = Self {
            epsilon,
            boundary,
            x,
            v: config.velocities,
            tp: vec![config.time; n],
            time: config.time,
            count: vec![0; n],
            ncell: [nc, nc],
            cell: vec![[0, 0]; n],
            members: vec![Vec::new(); nc * nc],
            queue: BinaryHeap::new(),
            seed,
            rng,
            stats: MdStats::default(),
        };
        for i in 0..n {
            let c = sys.locate(sys.x[i]);
            sys.cell[i] = c;
            sys.members[c[0] * nc + c[1]].push(i);
        }
        for i in 0..n {
            for j in sys.neighbours(i) {
                if j > i {
                    let r = separation(sys.x[i], sys.x[j], &boundary);
                    let d = (r[0] * r[0] + r[1] * r[1]).sqrt();
                    if d < epsilon - DRIFT {
                        return Err(Error::OverlapDrift { i, j, overlap: epsilon - d, time: sys.time });
                    }
                }
            }
        }
        for i in 0..n {
            sys.predict(i);
        }
        Ok(sys)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
    pub fn boundary(&self) -> Boundary {
        self.boundary
    }
    pub fn time(&self) -> f64 {
        self.time
    }
    pub fn stats(&self) -> MdStats {
        self.stats
    }
    pub fn len(&self) -> usize {
        self.x.len()
    }
    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
    /// Seed and word position of the thermostat stream.
    pub fn stream_state(&self) -> (u64, u128) {
        (self.seed, self.rng.get_word_pos())
    }

    fn locate(&self, p: [f64; 2]) -> [usize; 2] {
        let f = |y: f64, n: usize| ((y * n as f64).floor() as i64).clamp(0, n as i64 - 1) as usize;
        [f(p[0], self.ncell[0]), f(p[1], self.ncell[1])]
    }

    fn position_at(&self, i: usize, t: f64) -> [f64; 2] {
        let s = t - self.tp[i];
        [self.x[i][0] + self.v[i][0] * s, self.x[i][1] + self.v[i][1] * s]
    }

    fn sync(&mut self, i: usize) {
        let mut p = self.position_at(i, self.time);
        p[1] = p[1].rem_euclid(1.0);
        if self.boundary == Boundary::Torus {
            p[0] = p[0].rem_euclid(1.0);
        }
        self.x[i] = p;
        self.tp[i] = self.time;
    }

    fn neighbours(&self, i: usize) -> Vec<usize> {
        let [n0, n1] = self.ncell;
        let c = self.cell[i];
        if n0 == 1 && n1 == 1 {
            return self.members[0].iter().copied().filter(|&j| j != i).collect();
        }
        let periodic0 = self.boundary == Boundary::Torus;
        let mut out = Vec::new();
        for d0 in -1i64..=1 {
            let a = c[0] as i64 + d0;
            let a = if periodic0 {
                a.rem_euclid(n0 as i64)
            } else if a < 0 || a >= n0 as i64 {
                continue;
            } else {
                a
            } as usize;
            for d1 in -1i64..=1 {
                let b = (c[1] as i64 + d1).rem_euclid(n1 as i64) as usize;
                out.extend(self.members[a * n1 + b].iter().copied().filter(|&j| j != i));
            }
        }
        out
    }

    fn push(&mut self, time: f64, i: usize, kind: Kind) {
        self.queue.push(Reverse(Event { time, i, ci: self.count[i], kind }));
    }

    /// Queues every future event of particle `i` from the current clock.
    fn predict(&mut self, i: usize) {
        let now = self.time;
        let xi = self.position_at(i, now);
        let vi = self.v[i];
        for j in self.neighbours(i) {
            let xj = self.position_at(j, now);
            let r = separation(xi, xj, &self.boundary);
            let vj = self.v[j];
            if let Some(s) = contact_time(r, [vi[0] - vj[0], vi[1] - vj[1]], self.epsilon) {
                let cj = self.count[j];
                self.push(now + s, i, Kind::Pair { j, cj });
            }
        }
        if let Boundary::Walls { .. } = self.boundary {
            let h = 0.5 * self.epsilon;
            if vi[0] < 0.0 {
                self.push(now + ((xi[0] - h) / -vi[0]).max(0.0), i, Kind::Wall { side: 0 });
            } else if vi[0] > 0.0 {
                self.push(now + ((1.0 - h - xi[0]) / vi[0]).max(0.0), i, Kind::Wall { side: 1 });
            }
        }
        for axis in 0..2 {
            let n = self.ncell[axis];
            if n == 1 || vi[axis] == 0.0 {
                continue;
            }
            let w = 1.0 / n as f64;
            let mut rel = xi[axis] - self.cell[i][axis] as f64 * w;
            if rel > 0.5 {
                rel -= 1.0;
            } else if rel < -0.5 {
                rel += 1.0;
            }
            let (s, step) = if vi[axis] > 0.0 { ((w - rel) / vi[axis], 1) } else { (rel / -vi[axis], -1) };
            self.push(now + s.max(0.0), i, Kind::Cell { axis, step });
        }
    }

    fn move_cell(&mut self, i: usize, to: [usize; 2]) {
        let n1 = self.ncell[1];
        let from = self.cell[i];
        let list = &mut self.members[from[0] * n1 + from[1]];
        if let Some(k) = list.iter().position(|&j| j == i) {
            list.swap_remove(k);
        }
        self.members[to[0] * n1 + to[1]].push(i);
        self.cell[i] = to;
    }

    fn stale(&self, e: &Event) -> bool {
        if self.count[e.i] != e.ci {
            return true;
        }
        matches!(e.kind, Kind::Pair { j, cj } if self.count[j] != cj)
    }

    /// Processes every event up to `t_end` and brings all particles to `t_end`.
    pub fn run_until(&mut self, t_end: f64) -> Result<()> {
        if t_end < self.time {
            return Err(Error::InvalidParameter(format!("t_end {t_end} before clock {}", self.time)));
        }
        while let Some(Reverse(e)) = self.queue.peek().copied() {
            if e.time > t_end {
                break;
            }
            self.queue.pop();
            if self.stale(&e) {
                continue;
            }
            self.time = self.time.max(e.time);
            self.process(e)?;
        }
        self.time = t_end;
        for i in 0..self.x.len() {
            self.sync(i);
        }
        Ok(())
    }

    fn process(&mut self, e: Event) -> Result<()> {
        let i = e.i;
        match e.kind {
            Kind::Pair { j, .. } => {
                self.sync(i);
                self.sync(j);
                let r = separation(self.x[i], self.x[j], &self.boundary);
                let d = (r[0] * r[0] + r[1] * r[1]).sqrt();
                if (d - self.epsilon).abs() > DRIFT {
                    return Err(Error::OverlapDrift { i, j, overlap: self.epsilon - d, time: self.time });
                }
                let (a, b) = apply_scattering(self.v[i], self.v[j], [r[0] / d, r[1] / d])?;
                self.v[i] = a;
                self.v[j] = b;
                self.count[i] += 1;
                self.count[j] += 1;
                self.stats.pair_collisions += 1;
                self.predict(i);
                self.predict(j);
            }
            Kind::Wall { side } => {
                self.sync(i);
                let Boundary::Walls { temperature } = self.boundary else { unreachable!("wall event on the torus") };
                let h = 0.5 * self.epsilon;
                self.x[i][0] = if side == 0 { h } else { 1.0 - h };
                let n = if side == 0 { [1.0, 0.0] } else { [-1.0, 0.0] };
                self.v[i] = sample_diffuse_wall(n, temperature[side], &mut self.rng)?;
                self.count[i] += 1;
                self.stats.wall_hits += 1;
                self.predict(i);
            }
            Kind::Cell { axis, step } => {
                self.sync(i);
                let n = self.ncell[axis] as i64;
                let mut to = self.cell[i];
                let k = to[axis] as i64 + step;
                let periodic = axis == 1 || self.boundary == Boundary::Torus;
                if !periodic && (k < 0 || k >= n) {
                    // a rounding artefact at the wall cells
                    self.count[i] += 1;
                    self.predict(i);
                    return Ok(());
                }
                to[axis] = k.rem_euclid(n) as usize;
                self.move_cell(i, to);
                self.count[i] += 1;
                self.stats.cell_crossings += 1;
                self.predict(i);
            }
        }
        Ok(())
    }

    /// Snapshot with every position current at the clock.
    pub fn configuration(&self) -> Configuration {
        let mut c =
            Configuration { positions: Vec::with_capacity(self.x.len()), velocities: self.v.clone(), time: self.time };
        for i in 0..self.x.len() {
            let mut p = self.position_at(i, self.time);
            p[1] = p[1].rem_euclid(1.0);
            if self.boundary == Boundary::Torus {
                p[0] = p[0].rem_euclid(1.0);
            }
            c.positions.push(p);
        }
        c
    }

    /// Smallest pair distance, by brute force.
    pub fn min_distance(&self) -> f64 {
        let c = self.configuration();
        let mut m = f64::INFINITY;
        for i in 0..c.len() {
            for j in i + 1..c.len() {
                let r = separation(c.positions[i], c.positions[j], &self.boundary);
                m = m.min((r[0] * r[0] + r[1] * r[1]).sqrt());
            }
        }
        m
    }
}

/// Evolves `config` to `t_end` on the torus.
pub fn run_until(config: Configuration, epsilon: f64, t_end: f64) -> Result<Configuration> {
    let mut s = MdSystem::new(config, epsilon, Boundary::Torus, 0)?;
    s.run_until(t_end)?;
    Ok(s.configuration())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn random_config(n: usize, eps: f64, seed: u64) -> Configuration {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pos: Vec<[f64; 2]> = Vec::new();
        while pos.len() < n {
            let p = [rng.gen::<f64>(), rng.gen::<f64>()];
            if pos.iter().all(|q| {
                let r = separation(p, *q, &Boundary::Torus);
                r[0] * r[0] + r[1] * r[1] >= eps * eps
            }) {
                pos.push(p);
            }
        }
        let vel = (0..n).map(|_| [StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)]).collect();
        Configuration { positions: pos, velocities: vel, time: 0.0 }
    }

    #[test]
    fn free_flight_wraps() {
        let c = Configuration { positions: vec![[0.9, 0.2]], velocities: vec![[0.25, -0.5]], time: 0.0 };
        let out = run_until(c, 0.01, 2.0).unwrap();
        assert!((out.positions[0][0] - 0.4).abs() < 1e-12);
        assert!((out.positions[0][1] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn head_on_exchange() {
        let c = Configuration {
            positions: vec![[0.25, 0.5], [0.75, 0.5]],
            velocities: vec![[1.0, 0.0], [-1.0, 0.0]],
            time: 0.0,
        };
        let mut s = MdSystem::new(c, 0.1, Boundary::Walls { temperature: [1.0, 1.0] }, 0).unwrap();
        s.run_until(0.19).unwrap();
        assert_eq!(s.stats().pair_collisions, 0);
        s.run_until(0.21).unwrap();
        assert_eq!(s.stats().pair_collisions, 1);
        let c = s.configuration();
        assert!((c.velocities[0][0] + 1.0).abs() < 1e-14 && (c.velocities[1][0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn conservation_and_exclusion() {
        let c = random_config(60, 0.03, 3);
        let (p0, e0) = (c.momentum(), c.kinetic_energy());
        let mut s = MdSystem::new(c, 0.03, Boundary::Torus, 0).unwrap();
        let mut t = 0.0;
        while s.stats().pair_collisions < 10_000 {
            t += 0.5;
            s.run_until(t).unwrap();
            assert!(s.min_distance() >= 0.03 - 1e-9);
        }
        let c = s.configuration();
        let (p, e) = (c.momentum(), c.kinetic_energy());
        assert!((e - e0).abs() <= 1e-10 * e0, "{e} {e0}");
        assert!((p[0] - p0[0]).abs() <= 1e-10 * e0.sqrt() && (p[1] - p0[1]).abs() <= 1e-10 * e0.sqrt());
    }

    #[test]
    fn reversible_on_the_torus() {
        let c0 = random_config(10, 0.1, 11);
        let mut s = MdSystem::new(c0.clone(), 0.1, Boundary::Torus, 0).unwrap();
        s.run_until(1.0).unwrap();
        assert!(s.stats().pair_collisions > 0);
        let mut c = s.configuration();
        c.velocities.iter_mut().for_each(|v| *v = [-v[0], -v[1]]);
        let mut back = MdSystem::new(c, 0.1, Boundary::Torus, 0).unwrap();
        back.run_until(2.0).unwrap();
        let c = back.configuration();
        for (p, q) in c.positions.iter().zip(&c0.positions) {
            let r = separation(*p, *q, &Boundary::Torus);
            assert!(r[0].abs() < 1e-6 && r[1].abs() < 1e-6, "{r:?}");
        }
    }

    #[test]
    fn walls_keep_particles_inside() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let c = Configuration {
            positions: (0..40).map(|k| [0.1 + 0.8 * (k % 8) as f64 / 7.0, (k / 8) as f64 / 5.0]).collect(),
            velocities: (0..40).map(|_| [StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)]).collect(),
            time: 0.0,
        };
        let mut s = MdSystem::new(c, 0.04, Boundary::Walls { temperature: [1.0, 2.0] }, 9).unwrap();
        s.run_until(3.0).unwrap();
        assert!(s.stats().wall_hits > 10);
        let c = s.configuration();
        assert!(c.positions.iter().all(|p| p[0] >= 0.02 - 1e-9 && p[0] <= 0.98 + 1e-9));
        assert!(s.min_distance() >= 0.04 - 1e-9);
    }

    #[test]
    fn rejects_overlap() {
        let c = Configuration { positions: vec![[0.5, 0.5], [0.55, 0.5]], velocities: vec![[0.0; 2]; 2], time: 0.0 };
        assert!(matches!(MdSystem::new(c, 0.1, Boundary::Torus, 0), Err(Error::OverlapDrift { .. })));
    }
}
