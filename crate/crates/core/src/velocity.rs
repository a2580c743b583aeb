//! Polar velocity grid in two dimensions.
//!
//! Nodes sit on `n_r` Gauss-Legendre radii in `[0, v_max]` times `n_theta`
//! equally spaced angles offset by half a step, so no node has a vanishing
//! Cartesian component and the grid is closed under `v -> -v` and under the
//! reflections `v1 -> -v1`, `v2 -> -v2`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Default truncation radius of the velocity domain.
pub const DEFAULT_V_MAX: f64 = 7.0;

/// Gauss-Legendre nodes and weights on `[a, b]`.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    for i in 0..(n + 1) / 2 {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = mid - half * x;
        nodes[n - 1 - i] = mid + half * x;
        weights[i] = half * w;
        weights[n - 1 - i] = half * w;
    }
    (nodes, weights)
}

/// Unit centred Gaussian in two dimensions evaluated at squared speed `r2`.
#[inline]
pub(crate) fn gaussian2(r2: f64) -> f64 {
    (-0.5 * r2).exp() / (2.0 * PI)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VelocityGrid {
    n_r: usize,
    n_theta: usize,
    v_max: f64,
    radii: Vec<f64>,
    radial_weights: Vec<f64>,
    angles: Vec<f64>,
    nodes: Vec<[f64; 2]>,
    weights: Vec<f64>,
    maxwellian: Vec<f64>,
}

impl VelocityGrid {
    pub fn new(n_r: usize, n_theta: usize, v_max: f64) -> Result<Self> {
        if n_r < 4 {
            return Err(Error::InvalidParameter(format!("need at least 4 radii, got {n_r}")));
        }
        if n_theta < 4 || n_theta % 4 != 0 {
            return Err(Error::InvalidParameter(format!(
                "angle count must be a positive multiple of 4, got {n_theta}"
            )));
        }
        if !(v_max > 0.0) {
            return Err(Error::InvalidParameter(format!("v_max must be positive, got {v_max}")));
        }
        let (radii, radial_weights) = gauss_legendre(n_r, 0.0, v_max);
        let dphi = 2.0 * PI / n_theta as f64;
        let angles: Vec<f64> = (0..n_theta).map(|k| (k as f64 + 0.5) * dphi).collect();
        let mut nodes = Vec::with_capacity(n_r * n_theta);
        let mut weights = Vec::with_capacity(n_r * n_theta);
        let mut maxwellian = Vec::with_capacity(n_r * n_theta);
        for (&r, &w) in radii.iter().zip(&radial_weights) {
            for &phi in &angles {
                nodes.push([r * phi.cos(), r * phi.sin()]);
                weights.push(w * r * dphi);
                maxwellian.push(gaussian2(r * r));
            }
        }
        Ok(Self { n_r, n_theta, v_max, radii, radial_weights, angles, nodes, weights, maxwellian })
    }

    /// Square grid: `n` radii by `n` angles (rounded up to a multiple of 4).
    pub fn square(n: usize) -> Result<Self> {
        Self::new(n, n.div_ceil(4) * 4, DEFAULT_V_MAX)
    }

    pub fn dim(&self) -> usize {
        2
    }
    pub fn len(&self) -> usize {
        self.nodes.len()
    }
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
    pub fn n_r(&self) -> usize {
        self.n_r
    }
    pub fn n_theta(&self) -> usize {
        self.n_theta
    }
    pub fn v_max(&self) -> f64 {
        self.v_max
    }
    pub fn radii(&self) -> &[f64] {
        &self.radii
    }
    pub fn radial_weights(&self) -> &[f64] {
        &self.radial_weights
    }
    pub fn angles(&self) -> &[f64] {
        &self.angles
    }
    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }
    /// Lebesgue quadrature weights `dv` at each node.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
    /// `M(v)` at each node.
    pub fn maxwellian(&self) -> &[f64] {
        &self.maxwellian
    }
    pub fn index(&self, ir: usize, k: usize) -> usize {
        ir * self.n_theta + k
    }
    /// Index of the node `-v`.
    pub fn antipode(&self, idx: usize) -> usize {
        let (ir, k) = (idx / self.n_theta, idx % self.n_theta);
        self.index(ir, (k + self.n_theta / 2) % self.n_theta)
    }

    /// Samples a function of velocity at every node.
    pub fn sample(&self, f: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
        self.nodes.iter().map(|&v| f(v)).collect()
    }

    /// `∫ f dv` by quadrature.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        f.iter().zip(&self.weights).map(|(a, w)| a * w).sum()
    }

    /// `∫ M h dv`.
    pub fn mean(&self, h: &[f64]) -> f64 {
        h.iter().zip(&self.weights).zip(&self.maxwellian).map(|((a, w), m)| a * w * m).sum()
    }

    /// Inner product of `L²(M dv)`.
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).zip(self.weights.iter().zip(&self.maxwellian)).map(|((x, y), (w, m))| x * y * w * m).sum()
    }

    pub fn norm(&self, a: &[f64]) -> f64 {
        self.inner(a, a).sqrt()
    }

    /// `∫ M h v⊗... ` helper: weighted sum with an extra per-node factor.
    pub fn inner_weighted(&self, a: &[f64], b: &[f64], extra: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .zip(extra)
            .zip(self.weights.iter().zip(&self.maxwellian))
            .map(|(((x, y), e), (w, m))| x * y * e * w * m)
            .sum()
    }

    /// Node weights `q` with `Σ q h ≈ ∫ M h 1{a <= v1 < b} dv`. Each ring is
    /// integrated exactly over the band's arcs through its trigonometric
    /// interpolant.
    pub fn band_weights(&self, a: f64, b: f64) -> Vec<f64> {
        let n = self.n_theta;
        let mut q = vec![0.0; self.len()];
        let arc = |c: f64| {
            if c <= -1.0 {
                PI
            } else if c >= 1.0 {
                0.0
            } else {
                c.acos()
            }
        };
        // ∫_{|θ| <= β} cos(mθ) dθ
        let g = |beta: f64, m: usize| if m == 0 { 2.0 * beta } else { 2.0 * (m as f64 * beta).sin() / m as f64 };
        for (ir, (&r, &wr)) in self.radii.iter().zip(&self.radial_weights).enumerate() {
            let (b1, b2) = (arc(a / r), arc(b / r));
            let j: Vec<f64> = (0..=n / 2).map(|m| g(b1, m) - g(b2, m)).collect();
            let scale = wr * r * gaussian2(r * r) / n as f64;
            for (k, &th) in self.angles.iter().enumerate() {
                let mut s = j[0];
                for (m, jm) in j.iter().enumerate().take(n / 2).skip(1) {
                    s += 2.0 * jm * (m as f64 * th).cos();
                }
                s += j[n / 2] * (0.5 * n as f64 * th).cos();
                q[self.index(ir, k)] = scale * s;
            }
        }
        q
    }

    /// Cubic Lagrange weights for evaluating a radial profile at radius `r`.
    ///
    /// Returns the first stencil index and four weights. The stencil
    /// reproduces polynomials of degree three in `r` exactly.
    pub(crate) fn radial_stencil(&self, r: f64) -> (usize, [f64; 4]) {
        let n = self.n_r;
        let pos = self.radii.partition_point(|&x| x <= r);
        let start = pos.saturating_sub(2).min(n - 4);
        let xs = &self.radii[start..start + 4];
        let mut w = [1.0; 4];
        for a in 0..4 {
            for b in 0..4 {
                if a != b {
                    w[a] *= (r - xs[b]) / (xs[a] - xs[b]);
                }
            }
        }
        (start, w)
    }
}
