//! Dimensionless frame shared by the particle, kinetic and fluid levels.

use std::f64::consts::PI;

use crate::error::{check_len, Error, Result};
use crate::velocity::VelocityGrid;

const UNIT_TOL: f64 = 1e-10;

/// Boltzmann-Grad frame `(d, N, ε, α, γ)` with `N ε^{d-1} α = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaling {
    pub d: usize,
    pub n: usize,
    pub epsilon: f64,
    pub alpha: f64,
    pub gamma: f64,
}

impl Scaling {
    /// Builds the frame from `N` and `α`, choosing `ε` on the Boltzmann-Grad line.
    pub fn new(d: usize, n: usize, alpha: f64, gamma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) || alpha == 0.0 {
            return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1], got {alpha}")));
        }
        if gamma < 1.0 {
            return Err(Error::InvalidParameter(format!("gamma must be >= 1, got {gamma}")));
        }
        let epsilon = boltzmann_grad_epsilon(n, alpha, d)?;
        Ok(Self { d, n, epsilon, alpha, gamma })
    }

    /// Relative defect of the Boltzmann-Grad relation.
    pub fn grad_defect(&self) -> f64 {
        (self.n as f64 * self.epsilon.powi(self.d as i32 - 1) * self.alpha - 1.0).abs()
    }

    /// Checks every invariant of the frame.
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || !(self.epsilon > 0.0) || !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidParameter(format!("invalid scaling {self:?}")));
        }
        if self.grad_defect() > 1e-12 {
            return Err(Error::InvalidParameter(format!("N eps^(d-1) alpha = 1 violated by {:e}", self.grad_defect())));
        }
        Ok(())
    }

    /// Volume fraction proxy `N ε^d`.
    pub fn packing(&self) -> f64 {
        self.n as f64 * self.epsilon.powi(self.d as i32)
    }
}

/// Sphere diameter on the Boltzmann-Grad line: `ε = (N α)^{-1/(d-1)}`.
pub fn boltzmann_grad_epsilon(n: usize, alpha: f64, d: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("need N >= 2, got {n}")));
    }
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
    }
    if d < 2 {
        return Err(Error::InvalidParameter(format!("dimension must be >= 2, got {d}")));
    }
    Ok((n as f64 * alpha).powf(-1.0 / (d as f64 - 1.0)))
}

/// Knudsen number from the Von Karman relation `Kn = Ma / Re`.
pub fn von_karman_knudsen(mach: f64, reynolds: f64) -> Result<f64> {
    if !(reynolds > 0.0) {
        return Err(Error::InvalidParameter(format!("Reynolds number must be positive, got {reynolds}")));
    }
    Ok(mach / reynolds)
}

/// Centred Gaussian of temperature `T` in `d` dimensions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxwellianSpec {
    pub temperature: f64,
    pub d: usize,
}

impl MaxwellianSpec {
    pub fn new(temperature: f64, d: usize) -> Result<Self> {
        if !(temperature > 0.0) {
            return Err(Error::InvalidParameter(format!("temperature must be positive, got {temperature}")));
        }
        Ok(Self { temperature, d })
    }

    pub fn unit(d: usize) -> Self {
        Self { temperature: 1.0, d }
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// `(2πT)^{-d/2} exp(-|v|²/2T)`.
pub fn maxwellian_density(v: &[f64], spec: MaxwellianSpec) -> f64 {
    debug_assert_eq!(v.len(), spec.d);
    let t = spec.temperature;
    (2.0 * PI * t).powf(-(spec.d as f64) / 2.0) * (-norm2(v) / (2.0 * t)).exp()
}

/// Flux-normalized wall Maxwellian `M_Σ`.
///
/// `∫ M_Σ (v·n)_+ dv = 1` and `∫ M_Σ |v|² (v·n)_+ dv = (d+1) T`.
pub fn wall_maxwellian(v: &[f64], normal: &[f64], spec: MaxwellianSpec) -> Result<f64> {
    let norm = norm2(normal).sqrt();
    if (norm - 1.0).abs() > UNIT_TOL {
        return Err(Error::NonUnitVector { norm });
    }
    let t = spec.temperature;
    Ok(maxwellian_density(v, spec) * (2.0 * PI / t).sqrt())
}

/// First-order expansion of `M_Σ` at wall temperature `1 + α^γ θ̄`.
pub fn linearized_wall_maxwellian(v: &[f64], theta_bar: f64, alpha: f64, gamma: f64) -> f64 {
    let d = v.len();
    let m = maxwellian_density(v, MaxwellianSpec::unit(d));
    (2.0 * PI).sqrt() * m * (1.0 + alpha.powf(gamma) * theta_bar * (norm2(v) - (d as f64 + 1.0)) / 2.0)
}

/// Mass density, bulk velocity and temperature of one spatial cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HydroMoments {
    pub density: f64,
    pub velocity: [f64; 2],
    pub temperature: f64,
}

/// Coefficients of the projection of a fluctuation onto `span{1, v, (|v|²-d)/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FluctuationMoments {
    pub rho: f64,
    pub u: [f64; 2],
    pub theta: f64,
}

fn cells(len: usize, grid: &VelocityGrid) -> Result<usize> {
    let nv = grid.len();
    if nv == 0 || len % nv != 0 {
        return Err(Error::ShapeMismatch { expected: nv * (len / nv.max(1)).max(1), got: len });
    }
    Ok(len / nv)
}

/// `R`, `U`, `T` per cell from a nonnegative density sampled on the grid.
pub fn moments_from_density(f: &[f64], grid: &VelocityGrid) -> Result<Vec<HydroMoments>> {
    let n_cells = cells(f.len(), grid)?;
    let nv = grid.len();
    let d = grid.dim() as f64;
    let mut out = Vec::with_capacity(n_cells);
    for c in 0..n_cells {
        let fc = &f[c * nv..(c + 1) * nv];
        if let Some(bad) = fc.iter().find(|x| !(**x >= 0.0)) {
            return Err(Error::InvalidParameter(format!("density must be nonnegative, found {bad}")));
        }
        let (mut r, mut p) = (0.0, [0.0; 2]);
        for ((val, w), v) in fc.iter().zip(grid.weights()).zip(grid.nodes()) {
            r += val * w;
            p[0] += val * w * v[0];
            p[1] += val * w * v[1];
        }
        if r <= 0.0 {
            return Err(Error::EmptyCell { cell: c });
        }
        let u = [p[0] / r, p[1] / r];
        let e: f64 = fc
            .iter()
            .zip(grid.weights())
            .zip(grid.nodes())
            .map(|((val, w), v)| val * w * ((v[0] - u[0]).powi(2) + (v[1] - u[1]).powi(2)))
            .sum();
        out.push(HydroMoments { density: r, velocity: u, temperature: e / (r * d) });
    }
    Ok(out)
}

/// `ρ = ∫Mg`, `u = ∫Mgv`, `θ = (1/d)∫Mg(|v|²-d)` per cell.
pub fn fluctuation_moments(g: &[f64], grid: &VelocityGrid) -> Result<Vec<FluctuationMoments>> {
    let n_cells = cells(g.len(), grid)?;
    let nv = grid.len();
    let mut out = Vec::with_capacity(n_cells);
    for c in 0..n_cells {
        out.push(cell_fluctuation_moments(&g[c * nv..(c + 1) * nv], grid)?);
    }
    Ok(out)
}

pub(crate) fn cell_fluctuation_moments(g: &[f64], grid: &VelocityGrid) -> Result<FluctuationMoments> {
    check_len(grid.len(), g.len())?;
    let d = grid.dim() as f64;
    let mut m = FluctuationMoments::default();
    for (((val, w), mx), v) in g.iter().zip(grid.weights()).zip(grid.maxwellian()).zip(grid.nodes()) {
        if !val.is_finite() {
            return Err(Error::InvalidParameter("fluctuation must be finite".into()));
        }
        let a = val * w * mx;
        m.rho += a;
        m.u[0] += a * v[0];
        m.u[1] += a * v[1];
        m.theta += a * (v[0] * v[0] + v[1] * v[1] - d) / d;
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::velocity::{gauss_legendre, DEFAULT_V_MAX};

    /// Tensor Gauss-Legendre rule on the half plane `v1 > 0`, independent of the polar grid.
    fn half_plane(f: impl Fn([f64; 2]) -> f64) -> f64 {
        let (x, wx) = gauss_legendre(80, 0.0, 10.0);
        let (y, wy) = gauss_legendre(120, -10.0, 10.0);
        let mut s = 0.0;
        for (a, wa) in x.iter().zip(&wx) {
            for (b, wb) in y.iter().zip(&wy) {
                s += wa * wb * f([*a, *b]);
            }
        }
        s
    }

    #[test]
    fn epsilon_examples() {
        assert!((boltzmann_grad_epsilon(100, 1.0, 2).unwrap() - 0.01).abs() < 1e-15);
        assert!((boltzmann_grad_epsilon(10000, 0.1, 2).unwrap() - 0.001).abs() < 1e-15);
        assert!((boltzmann_grad_epsilon(1_000_000, 1.0, 3).unwrap() - 1e-3).abs() < 1e-15);
        assert!(boltzmann_grad_epsilon(1, 1.0, 2).is_err());
        assert!(boltzmann_grad_epsilon(10, 0.0, 2).is_err());
    }

    #[test]
    fn von_karman() {
        assert_eq!(von_karman_knudsen(0.1, 1.0).unwrap(), 0.1);
        assert_eq!(von_karman_knudsen(0.0, 5.0).unwrap(), 0.0);
        assert_eq!(von_karman_knudsen(0.3, 1.0).unwrap(), 0.3);
        assert!(von_karman_knudsen(1.0, 0.0).is_err());
    }

    #[test]
    fn maxwellian_values() {
        let spec = MaxwellianSpec::unit(2);
        assert!((maxwellian_density(&[0.0, 0.0], spec) - 1.0 / (2.0 * PI)).abs() < 1e-15);
        assert!((maxwellian_density(&[1.0, 0.0], spec) - (-0.5f64).exp() / (2.0 * PI)).abs() < 1e-15);
        let mass = half_plane(|v| maxwellian_density(&v, spec));
        assert!((2.0 * mass - 1.0).abs() < 1e-10);
        let energy = half_plane(|v| (v[0] * v[0] + v[1] * v[1]) * maxwellian_density(&v, spec));
        assert!((2.0 * energy - 2.0).abs() < 1e-9);
    }

    #[test]
    fn wall_flux_normalization() {
        let n = [1.0, 0.0];
        for t in [1.0, 1.7] {
            let spec = MaxwellianSpec::new(t, 2).unwrap();
            let flux = half_plane(|v| wall_maxwellian(&v, &n, spec).unwrap() * v[0]);
            let second = half_plane(|v| wall_maxwellian(&v, &n, spec).unwrap() * v[0] * (v[0] * v[0] + v[1] * v[1]));
            assert!((flux - 1.0).abs() < 1e-6, "flux {flux}");
            assert!((second - 3.0 * t).abs() / (3.0 * t) < 1e-6, "second {second}");
        }
        assert!(matches!(
            wall_maxwellian(&[0.0, 0.0], &[1.0, 1.0], MaxwellianSpec::unit(2)),
            Err(Error::NonUnitVector { .. })
        ));
    }

    #[test]
    fn gaussian_boundary_moments() {
        let spec = MaxwellianSpec::unit(2);
        let a = half_plane(|v| {
            let r2 = v[0] * v[0] + v[1] * v[1];
            maxwellian_density(&v, spec) * (r2 - 3.0) / 2.0 * v[0]
        });
        let b = half_plane(|v| {
            let r2 = v[0] * v[0] + v[1] * v[1];
            maxwellian_density(&v, spec) * (r2 - 3.0) / 2.0 * r2 * v[0]
        });
        assert!(a.abs() < 1e-6, "{a}");
        // the |v|^2-weighted moment is not zero: it equals 3 / sqrt(2 pi)
        let exact = 3.0 / (2.0 * std::f64::consts::PI).sqrt();
        assert!((b - exact).abs() < 1e-6, "{b}");
    }

    #[test]
    fn wall_maxwellian_linearization_error_is_quadratic() {
        // the quadratic coefficient vanishes near |v|^2 = 1.9, stay away from it
        let v = [0.3, 2.2];
        let n = [0.0, 1.0];
        let gamma = 1.5;
        let mut errs = vec![];
        for alpha in [0.1, 0.05] {
            let t = 1.0 + f64::powf(alpha, gamma) * 0.7;
            let exact = wall_maxwellian(&v, &n, MaxwellianSpec::new(t, 2).unwrap()).unwrap();
            errs.push((exact - linearized_wall_maxwellian(&v, 0.7, alpha, gamma)).abs());
        }
        // halving alpha shrinks the error by 2^(2 gamma) = 8
        let ratio = errs[0] / errs[1];
        assert!(ratio > 6.5 && ratio < 9.5, "ratio {ratio}");
    }

    #[test]
    fn scaling_invariant_holds() {
        for (n, a) in [(100, 1.0), (500, 0.5), (1000, 0.37), (77, 0.01)] {
            let s = Scaling::new(2, n, a, 1.5).unwrap();
            assert!(s.grad_defect() < 1e-12);
            s.validate().unwrap();
        }
        let s3 = Scaling::new(3, 1_000_000, 1.0, 1.0).unwrap();
        assert!(s3.grad_defect() < 1e-12);
    }

    #[test]
    fn moments_of_reference_states() {
        let g = VelocityGrid::new(32, 32, DEFAULT_V_MAX).unwrap();
        let m = moments_from_density(g.maxwellian(), &g).unwrap()[0];
        assert!((m.density - 1.0).abs() < 1e-7 && (m.temperature - 1.0).abs() < 1e-6);
        assert!(m.velocity[0].abs() < 1e-12);

        let shifted = g.sample(|v| maxwellian_density(&[v[0] - 0.3, v[1]], MaxwellianSpec::unit(2)));
        let m = moments_from_density(&shifted, &g).unwrap()[0];
        assert!((m.density - 1.0).abs() < 1e-6);
        assert!((m.velocity[0] - 0.3).abs() < 1e-6 && m.velocity[1].abs() < 1e-10);
        assert!((m.temperature - 1.0).abs() < 1e-5);

        // temperature 2, mass 2: truncation at v_max = 6 loses about e^{-9} of mass
        let hot = g.sample(|v| 2.0 * maxwellian_density(&v, MaxwellianSpec::new(2.0, 2).unwrap()));
        let m = moments_from_density(&hot, &g).unwrap()[0];
        assert!((m.density - 2.0).abs() < 2e-3, "{m:?}");
        assert!((m.temperature - 2.0).abs() < 2e-2, "{m:?}");

        let mut two = g.maxwellian().to_vec();
        two.extend(vec![0.0; g.len()]);
        assert_eq!(moments_from_density(&two, &g), Err(Error::EmptyCell { cell: 1 }));
        assert!(matches!(moments_from_density(&[-1.0; 3], &g), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn fluctuation_moment_examples() {
        let g = VelocityGrid::new(32, 32, DEFAULT_V_MAX).unwrap();
        let m = fluctuation_moments(&vec![1.0; g.len()], &g).unwrap()[0];
        assert!((m.rho - 1.0).abs() < 1e-7 && m.theta.abs() < 1e-6 && m.u[0].abs() < 1e-12);
        let th = g.sample(|v| (v[0] * v[0] + v[1] * v[1] - 2.0) / 2.0);
        let m = fluctuation_moments(&th, &g).unwrap()[0];
        assert!(m.rho.abs() < 1e-6 && (m.theta - 1.0).abs() < 1e-5);
        let cube = g.sample(|v| v[0].powi(3));
        let m = fluctuation_moments(&cube, &g).unwrap()[0];
        assert!((m.u[0] - 3.0).abs() < 1e-5 && m.u[1].abs() < 1e-10);
    }

    #[test]
    fn fluctuation_moments_are_linear() {
        let g = VelocityGrid::new(12, 16, DEFAULT_V_MAX).unwrap();
        let a = g.sample(|v| v[0].sin() + v[1]);
        let b = g.sample(|v| (v[0] * v[1]).cos());
        let ab: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 2.0 * x - 3.0 * y).collect();
        let (ma, mb, mab) = (
            fluctuation_moments(&a, &g).unwrap()[0],
            fluctuation_moments(&b, &g).unwrap()[0],
            fluctuation_moments(&ab, &g).unwrap()[0],
        );
        assert!((mab.theta - (2.0 * ma.theta - 3.0 * mb.theta)).abs() < 1e-12);
        assert!((mab.u[1] - (2.0 * ma.u[1] - 3.0 * mb.u[1])).abs() < 1e-12);
    }
}
