//! Stokes-Fourier limit: heat equation and Stokes system.
//!
//! Periodic states live on the unit torus `[0,1)²` with `n x n` points,
//! index `i2 * n + i1`. Slab states are one dimensional in `x1` with `n`
//! interior nodes `x_i = i / (n + 1)` and Dirichlet temperatures at
//! `x = 0` and `x = 1`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{check_len, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bc {
    Periodic,
    Dirichlet { left: f64, right: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct HydroState {
    pub n: usize,
    pub bc: Bc,
    /// Velocity components; empty in slab mode (`u = 0`).
    pub u: [Vec<f64>; 2],
    pub theta: Vec<f64>,
    /// Pressure up to a constant, fixed by zero mean.
    pub p: Vec<f64>,
}

impl HydroState {
    pub fn periodic(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!("grid size {n}")));
        }
        Ok(Self {
            n,
            bc: Bc::Periodic,
            u: [vec![0.0; n * n], vec![0.0; n * n]],
            theta: vec![0.0; n * n],
            p: vec![0.0; n * n],
        })
    }

    pub fn slab(n: usize, left: f64, right: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!("grid size {n}")));
        }
        Ok(Self { n, bc: Bc::Dirichlet { left, right }, u: [vec![], vec![]], theta: vec![0.0; n], p: vec![] })
    }

    /// Grid coordinates of point `idx`.
    pub fn point(&self, idx: usize) -> [f64; 2] {
        match self.bc {
            Bc::Periodic => [(idx % self.n) as f64 / self.n as f64, (idx / self.n) as f64 / self.n as f64],
            Bc::Dirichlet { .. } => [(idx + 1) as f64 / (self.n + 1) as f64, 0.0],
        }
    }

    pub fn spacing(&self) -> f64 {
        match self.bc {
            Bc::Periodic => 1.0 / self.n as f64,
            Bc::Dirichlet { .. } => 1.0 / (self.n + 1) as f64,
        }
    }

    pub fn fill_theta(&mut self, f: impl Fn([f64; 2]) -> f64) {
        for i in 0..self.theta.len() {
            self.theta[i] = f(self.point(i));
        }
    }

    pub fn fill_u(&mut self, f: impl Fn([f64; 2]) -> [f64; 2]) {
        for i in 0..self.u[0].len() {
            let v = f(self.point(i));
            self.u[0][i] = v[0];
            self.u[1][i] = v[1];
        }
    }
}

/// Two-dimensional FFT on an `n x n` periodic grid.
struct Fft2 {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    fn new(n: usize) -> Self {
        let mut p = FftPlanner::new();
        Self { n, fwd: p.plan_fft_forward(n), inv: p.plan_fft_inverse(n) }
    }

    fn run(&self, data: &mut [Complex64], forward: bool) {
        let n = self.n;
        let plan = if forward { &self.fwd } else { &self.inv };
        for row in data.chunks_mut(n) {
            plan.process(row);
        }
        let mut col = vec![Complex64::new(0.0, 0.0); n];
        for i1 in 0..n {
            for i2 in 0..n {
                col[i2] = data[i2 * n + i1];
            }
            plan.process(&mut col);
            for i2 in 0..n {
                data[i2 * n + i1] = col[i2];
            }
        }
        if !forward {
            let s = 1.0 / (n * n) as f64;
            data.iter_mut().for_each(|c| *c *= s);
        }
    }

    fn forward(&self, x: &[f64]) -> Vec<Complex64> {
        let mut d: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.run(&mut d, true);
        d
    }

    fn inverse(&self, mut d: Vec<Complex64>) -> Vec<f64> {
        self.run(&mut d, false);
        d.into_iter().map(|c| c.re).collect()
    }

    /// Wave vector `2π (k1, k2)` of spectral index `idx`.
    fn wave(&self, idx: usize) -> [f64; 2] {
        let n = self.n;
        let f = |j: usize| if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
        [2.0 * PI * f(idx % n), 2.0 * PI * f(idx / n)]
    }

    /// Whether the index is a Nyquist mode in either direction, where the
    /// derivative of a real field is not represented.
    fn nyquist(&self, idx: usize) -> bool {
        let n = self.n;
        n % 2 == 0 && (idx % n == n / 2 || idx / n == n / 2)
    }
}

/// Spectral divergence `∂1 u1 + ∂2 u2` of a periodic velocity.
pub fn divergence(state: &HydroState) -> Result<Vec<f64>> {
    if state.bc != Bc::Periodic {
        return Err(Error::InvalidParameter("divergence needs a periodic state".into()));
    }
    let f = Fft2::new(state.n);
    let a = f.forward(&state.u[0]);
    let b = f.forward(&state.u[1]);
    let d: Vec<Complex64> = (0..a.len())
        .map(|i| {
            if f.nyquist(i) {
                return Complex64::new(0.0, 0.0);
            }
            let k = f.wave(i);
            Complex64::new(0.0, 1.0) * (a[i] * k[0] + b[i] * k[1])
        })
        .collect();
    Ok(f.inverse(d))
}

/// Leray projection onto divergence-free fields; returns the projected
/// velocity and the potential `q` of the removed gradient part.
pub fn leray_project(u: &[Vec<f64>; 2], n: usize) -> Result<([Vec<f64>; 2], Vec<f64>)> {
    check_len(n * n, u[0].len())?;
    check_len(n * n, u[1].len())?;
    let f = Fft2::new(n);
    let mut a = f.forward(&u[0]);
    let mut b = f.forward(&u[1]);
    let mut q = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n * n {
        let k = f.wave(i);
        let k2 = k[0] * k[0] + k[1] * k[1];
        if k2 == 0.0 {
            continue;
        }
        if f.nyquist(i) {
            a[i] = Complex64::new(0.0, 0.0);
            b[i] = Complex64::new(0.0, 0.0);
            continue;
        }
        let kd = (a[i] * k[0] + b[i] * k[1]) / k2;
        a[i] -= kd * k[0];
        b[i] -= kd * k[1];
        // ∇q = i k q̂ equals the removed part (k·û) k / |k|²
        q[i] = kd / Complex64::new(0.0, 1.0);
    }
    Ok(([f.inverse(a), f.inverse(b)], f.inverse(q)))
}

fn check_positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive, got {x}")))
    }
}

/// One step of `∂t θ = κ Δθ`.
pub fn heat_step(state: &HydroState, kappa: f64, dt: f64) -> Result<HydroState> {
    check_positive("kappa", kappa)?;
    check_positive("dt", dt)?;
    let mut out = state.clone();
    match state.bc {
        Bc::Periodic => {
            let f = Fft2::new(state.n);
            let mut t = f.forward(&state.theta);
            for (i, c) in t.iter_mut().enumerate() {
                let k = f.wave(i);
                *c *= (-kappa * (k[0] * k[0] + k[1] * k[1]) * dt).exp();
            }
            out.theta = f.inverse(t);
        }
        Bc::Dirichlet { left, right } => {
            out.theta = crank_nicolson(&state.theta, state.spacing(), kappa * dt, left, right);
        }
    }
    Ok(out)
}

/// Crank-Nicolson step for `θ_t = θ_xx` over time `s` on interior nodes.
fn crank_nicolson(theta: &[f64], dx: f64, s: f64, left: f64, right: f64) -> Vec<f64> {
    let n = theta.len();
    let r = s / (dx * dx);
    let at = |i: isize| -> f64 {
        if i < 0 {
            left
        } else if i as usize >= n {
            right
        } else {
            theta[i as usize]
        }
    };
    // (1 + r) x_i - r/2 (x_{i-1} + x_{i+1}) = (1 - r) t_i + r/2 (t_{i-1} + t_{i+1}) + boundary terms
    let mut rhs: Vec<f64> = (0..n as isize).map(|i| (1.0 - r) * at(i) + 0.5 * r * (at(i - 1) + at(i + 1))).collect();
    rhs[0] += 0.5 * r * left;
    rhs[n - 1] += 0.5 * r * right;
    let (a, b) = (-0.5 * r, 1.0 + r);
    let mut cp = vec![0.0; n];
    let mut dp = vec![0.0; n];
    cp[0] = a / b;
    dp[0] = rhs[0] / b;
    for i in 1..n {
        let m = b - a * cp[i - 1];
        cp[i] = a / m;
        dp[i] = (rhs[i] - a * dp[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = dp[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = dp[i] - cp[i] * x[i + 1];
    }
    x
}

/// One step of `∂t u - ν Δu = -∇p`, `∇·u = 0` on the torus.
pub fn stokes_step(state: &HydroState, nu: f64, dt: f64) -> Result<HydroState> {
    check_positive("nu", nu)?;
    check_positive("dt", dt)?;
    if state.bc != Bc::Periodic {
        return Err(Error::InvalidParameter("stokes step needs a periodic state".into()));
    }
    let div = divergence(state)?;
    let size = div.iter().map(|x| x.abs()).fold(0.0, f64::max);
    if size > 1e-8 {
        return Err(Error::InvalidParameter(format!("input velocity is not solenoidal (|div| = {size:e})")));
    }
    let n = state.n;
    let (proj, q) = leray_project(&state.u, n)?;
    let f = Fft2::new(n);
    let mut out = state.clone();
    for c in 0..2 {
        let mut s = f.forward(&proj[c]);
        for (i, z) in s.iter_mut().enumerate() {
            let k = f.wave(i);
            *z *= (-nu * (k[0] * k[0] + k[1] * k[1]) * dt).exp();
        }
        out.u[c] = f.inverse(s);
    }
    let mean = q.iter().sum::<f64>() / q.len() as f64;
    out.p = q.iter().map(|x| (x - mean) / dt).collect();
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourierFit {
    pub kappa: f64,
    /// `‖J + κ̂ ∇T‖ / ‖J‖`.
    pub residual: f64,
}

/// Least-squares fit of `J = -κ ∇T`.
pub fn fit_fourier_law(flux: &[[f64; 2]], grad: &[[f64; 2]]) -> Result<FourierFit> {
    check_len(flux.len(), grad.len())?;
    if flux.is_empty() {
        return Err(Error::InvalidParameter("no samples".into()));
    }
    let gg: f64 = grad.iter().map(|g| g[0] * g[0] + g[1] * g[1]).sum();
    if gg == 0.0 {
        return Err(Error::Degenerate("temperature gradient vanishes everywhere".into()));
    }
    let jg: f64 = flux.iter().zip(grad).map(|(j, g)| j[0] * g[0] + j[1] * g[1]).sum();
    let kappa = -jg / gg;
    let jj: f64 = flux.iter().map(|j| j[0] * j[0] + j[1] * j[1]).sum();
    let rr: f64 =
        flux.iter().zip(grad).map(|(j, g)| (j[0] + kappa * g[0]).powi(2) + (j[1] + kappa * g[1]).powi(2)).sum();
    let residual = if jj > 0.0 { (rr / jj).sqrt() } else { 0.0 };
    Ok(FourierFit { kappa, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn torus_mode_decays_exactly() {
        let mut s = HydroState::periodic(16).unwrap();
        s.fill_theta(|x| (2.0 * PI * x[0]).cos());
        let (kappa, dt) = (0.58, 0.013);
        let out = heat_step(&s, kappa, dt).unwrap();
        let decay = (-4.0 * PI * PI * kappa * dt).exp();
        for (a, b) in out.theta.iter().zip(&s.theta) {
            assert!((a - decay * b).abs() < 1e-12);
        }
        let mut c = HydroState::periodic(8).unwrap();
        c.fill_theta(|_| 0.3);
        assert!(heat_step(&c, 1.0, 1.0).unwrap().theta.iter().all(|x| (x - 0.3).abs() < 1e-14));
        assert!(heat_step(&c, 0.0, 1.0).is_err());
    }

    #[test]
    fn semigroup_property() {
        let mut s = HydroState::periodic(8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        s.theta.iter_mut().for_each(|x| *x = rng.gen::<f64>() - 0.5);
        let a = heat_step(&heat_step(&s, 0.4, 0.01).unwrap(), 0.4, 0.02).unwrap();
        let b = heat_step(&s, 0.4, 0.03).unwrap();
        assert!(a.theta.iter().zip(&b.theta).all(|(x, y)| (x - y).abs() < 1e-13));
    }

    #[test]
    fn slab_tends_to_linear_profile() {
        let mut s = HydroState::slab(19, 1.0, -0.5).unwrap();
        for _ in 0..400 {
            s = heat_step(&s, 1.0, 0.01).unwrap();
        }
        for i in 0..19 {
            let x = s.point(i)[0];
            assert!((s.theta[i] - (1.0 - 1.5 * x)).abs() < 1e-10);
        }
    }

    #[test]
    fn slab_maximum_principle() {
        let mut s = HydroState::slab(31, 0.2, -0.1).unwrap();
        s.fill_theta(|x| if x[0] < 0.5 { 0.5 } else { -0.3 });
        let dx = s.spacing();
        for _ in 0..100 {
            s = heat_step(&s, 1.0, 0.5 * dx * dx).unwrap();
            assert!(s.theta.iter().all(|&t| t <= 0.5 + 1e-14 && t >= -0.3 - 1e-14));
        }
    }

    #[test]
    fn crank_nicolson_is_second_order() {
        let kappa = 0.7;
        let t_end = 0.1;
        let mut errs = vec![];
        for n in [31usize, 63, 127] {
            let mut s = HydroState::slab(n, 0.0, 0.0).unwrap();
            s.fill_theta(|x| (PI * x[0]).sin());
            let dx = s.spacing();
            let steps = (t_end / dx).round() as usize;
            let dt = t_end / steps as f64;
            for _ in 0..steps {
                s = heat_step(&s, kappa, dt).unwrap();
            }
            let decay = (-kappa * PI * PI * t_end).exp();
            let e = (0..n).map(|i| (s.theta[i] - decay * (PI * s.point(i)[0]).sin()).abs()).fold(0.0, f64::max);
            errs.push(e);
        }
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order > 1.8, "{errs:?}");
        }
    }

    #[test]
    fn stokes_examples() {
        let mut s = HydroState::periodic(16).unwrap();
        s.fill_u(|x| [(2.0 * PI * x[1]).sin(), 0.0]);
        let nu = 0.29;
        let out = stokes_step(&s, nu, 0.05).unwrap();
        let decay = (-4.0 * PI * PI * nu * 0.05).exp();
        assert!(out.u[0].iter().zip(&s.u[0]).all(|(a, b)| (a - decay * b).abs() < 1e-12));
        let zero = HydroState::periodic(8).unwrap();
        assert_eq!(stokes_step(&zero, 1.0, 1.0).unwrap().u, zero.u);
        let mut bad = HydroState::periodic(8).unwrap();
        bad.fill_u(|x| [(2.0 * PI * x[0]).sin(), 0.0]);
        assert!(stokes_step(&bad, 1.0, 1.0).is_err());
    }

    #[test]
    fn stokes_random_solenoidal_energy_decays() {
        let n = 16;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let raw = [
            (0..n * n).map(|_| rng.gen::<f64>() - 0.5).collect::<Vec<_>>(),
            (0..n * n).map(|_| rng.gen::<f64>() - 0.5).collect::<Vec<_>>(),
        ];
        let (u, _) = leray_project(&raw, n).unwrap();
        let mut s = HydroState::periodic(n).unwrap();
        s.u = u;
        let energy = |s: &HydroState| s.u[0].iter().chain(&s.u[1]).map(|x| x * x).sum::<f64>();
        let mean = |s: &HydroState| s.u[0].iter().sum::<f64>();
        let m0 = mean(&s);
        let mut e = energy(&s);
        for _ in 0..10 {
            s = stokes_step(&s, 0.3, 0.002).unwrap();
            let div = divergence(&s).unwrap();
            assert!(div.iter().all(|d| d.abs() < 1e-8));
            let e1 = energy(&s);
            assert!(e1 <= e * (1.0 + 1e-14));
            e = e1;
            assert!((mean(&s) - m0).abs() < 1e-10);
        }
    }

    #[test]
    fn fourier_fit_examples() {
        let f = fit_fourier_law(&[[-2.0, 0.0]], &[[1.0, 0.0]]).unwrap();
        assert!((f.kappa - 2.0).abs() < 1e-15 && f.residual == 0.0);
        assert!(matches!(fit_fourier_law(&[[1.0, 0.0]; 3], &[[0.0, 0.0]; 3]), Err(Error::Degenerate(_))));
    }
}
