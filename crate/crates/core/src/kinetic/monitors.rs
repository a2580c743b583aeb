//! Energy and boundary monitors for slab runs.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::kinetic::field::{modulate, DistributionField, Geometry, Stepper};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MonitorSample {
    pub time: f64,
    /// `½ ∫∫ M g²`.
    pub energy: f64,
    /// `α⁻² ∫∫ M g L g`.
    pub dissipation: f64,
    /// `-(2α)⁻¹ ∫_∂Ω ∫ M g² (v·n)`, the boundary source of the energy balance.
    pub boundary_source: f64,
    /// `√(2π) ∫ M g² (v·n)` at the left and right walls.
    pub flux_form: [f64; 2],
    /// `∫_{Σ+} (g - <g>_μ)² dμ` at the left and right walls.
    pub variance: [f64; 2],
    /// `∫∫ M g̃²` for the modulated fluctuation.
    pub modulated_l2: f64,
}

/// Affine bound `a + b t` with `b >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineEnvelope {
    pub intercept: f64,
    pub slope: f64,
}

impl AffineEnvelope {
    pub fn at(&self, t: f64) -> f64 {
        self.intercept + self.slope * t
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonitorReport {
    /// `min_t [E(0) + ∫B - E(t) - ∫D]`; nonnegative when the energy
    /// inequality holds.
    pub energy_slack: f64,
    /// Smallest boundary flux form seen at any wall and step.
    pub min_flux_form: f64,
    /// Smallest boundary variance seen.
    pub min_variance: f64,
    pub envelope: AffineEnvelope,
    /// Samples after the fitting window that exceed the envelope.
    pub envelope_violations: usize,
    /// Largest unmodulated `∫∫ M g²` over initial value.
    pub l2_growth: f64,
}

/// Collects monitor samples along a run.
#[derive(Debug, Clone, Default)]
pub struct EntropyMonitor {
    samples: Vec<MonitorSample>,
}

impl EntropyMonitor {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn samples(&self) -> &[MonitorSample] {
        &self.samples
    }

    /// Records the state of a slab field; `theta_tilde` is the extension used
    /// for the modulated norm.
    pub fn record(
        &mut self,
        field: &DistributionField,
        stepper: &Stepper,
        theta_tilde: impl Fn(f64) -> f64,
    ) -> Result<MonitorSample> {
        if field.geometry() != Geometry::Slab {
            return Err(Error::BoundaryMismatch("monitors need walls".into()));
        }
        let op = stepper.operator();
        let grid = op.grid();
        let a2 = field.alpha() * field.alpha();
        let mut diss = 0.0;
        for i in 0..field.nx() {
            let lg = op.apply(field.cell(i))?;
            diss += grid.inner(field.cell(i), &lg);
        }
        diss *= field.dx() / a2;
        let walls = stepper.walls().ok_or(Error::BoundaryMismatch("stepper has no walls".into()))?;
        let traces = stepper.wall_traces(field)?;
        let flux_form = [walls[0].flux_form(grid, &traces[0]), walls[1].flux_form(grid, &traces[1])];
        let variance = [walls[0].variance(field.cell(0)), walls[1].variance(field.cell(field.nx() - 1))];
        let boundary_source = -(flux_form[0] + flux_form[1]) / ((2.0 * PI).sqrt() * 2.0 * field.alpha());
        let m = modulate(field, grid, theta_tilde)?;
        let s = MonitorSample {
            time: field.time(),
            energy: field.energy(grid),
            dissipation: diss,
            boundary_source,
            flux_form,
            variance,
            modulated_l2: 2.0 * m.energy(grid),
        };
        self.samples.push(s);
        Ok(s)
    }

    pub fn report(&self) -> Result<MonitorReport> {
        let s = &self.samples;
        if s.len() < 4 {
            return Err(Error::InvalidParameter("need at least 4 samples".into()));
        }
        let e0 = s[0].energy;
        let (mut int_d, mut int_b) = (0.0, 0.0);
        let mut slack = f64::INFINITY;
        for w in s.windows(2) {
            let dt = w[1].time - w[0].time;
            int_d += 0.5 * dt * (w[0].dissipation + w[1].dissipation);
            int_b += 0.5 * dt * (w[0].boundary_source + w[1].boundary_source);
            slack = slack.min(e0 + int_b - w[1].energy - int_d);
        }
        let min_flux_form = s.iter().flat_map(|x| x.flux_form).fold(f64::INFINITY, f64::min);
        let min_variance = s.iter().flat_map(|x| x.variance).fold(f64::INFINITY, f64::min);
        let q = (s.len() / 4).max(2);
        let envelope = fit_envelope(&s[..q]);
        let envelope_violations =
            s[q..].iter().filter(|x| x.modulated_l2 > envelope.at(x.time) * (1.0 + 1e-12)).count();
        let l2_growth = if e0 > 0.0 { s.iter().map(|x| x.energy / e0).fold(0.0, f64::max) } else { f64::INFINITY };
        Ok(MonitorReport { energy_slack: slack, min_flux_form, min_variance, envelope, envelope_violations, l2_growth })
    }
}

/// Least-squares slope clamped at zero, intercept raised so that the line
/// bounds every fitted sample.
fn fit_envelope(s: &[MonitorSample]) -> AffineEnvelope {
    let n = s.len() as f64;
    let mt = s.iter().map(|x| x.time).sum::<f64>() / n;
    let my = s.iter().map(|x| x.modulated_l2).sum::<f64>() / n;
    let sxx: f64 = s.iter().map(|x| (x.time - mt).powi(2)).sum();
    let sxy: f64 = s.iter().map(|x| (x.time - mt) * (x.modulated_l2 - my)).sum();
    let slope = if sxx > 0.0 { (sxy / sxx).max(0.0) } else { 0.0 };
    let intercept = s.iter().map(|x| x.modulated_l2 - slope * x.time).fold(f64::NEG_INFINITY, f64::max);
    AffineEnvelope { intercept, slope }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinetic::field::{advance_linearized, Reconstruction};
    use crate::kinetic::operator::CollisionOperator;
    use crate::velocity::VelocityGrid;

    #[test]
    fn equilibrium_monitors_vanish() {
        let op = CollisionOperator::assemble(&VelocityGrid::new(8, 12, 7.0).unwrap()).unwrap();
        let f = DistributionField::slab(8, 1.0, op.grid(), 0.3, [0.0, 0.0]).unwrap();
        let st = Stepper::new(&op, &f, Reconstruction::Upwind).unwrap();
        let mut m = EntropyMonitor::new();
        let s = m.record(&f, &st, |_| 0.0).unwrap();
        assert_eq!(s.energy, 0.0);
        assert_eq!(s.dissipation, 0.0);
        assert_eq!(s.flux_form, [0.0, 0.0]);
        assert_eq!(s.modulated_l2, 0.0);
    }

    #[test]
    fn energy_inequality_and_boundary_sign() {
        let op = CollisionOperator::assemble(&VelocityGrid::new(8, 12, 7.0).unwrap()).unwrap();
        let grid = op.grid().clone();
        let mut f = DistributionField::slab(16, 1.0, &grid, 0.4, [0.0, 0.0]).unwrap();
        f.fill(&grid, |x, v| (3.0 * x).sin() * v[0] + x * v[1] * v[1]).unwrap();
        let st = Stepper::new(&op, &f, Reconstruction::Upwind).unwrap();
        let dt = st.cfl_limit(&f);
        let mut m = EntropyMonitor::new();
        m.record(&f, &st, |_| 0.0).unwrap();
        for _ in 0..40 {
            advance_linearized(&mut f, &st, dt).unwrap();
            m.record(&f, &st, |_| 0.0).unwrap();
        }
        let r = m.report().unwrap();
        assert!(r.min_flux_form >= -1e-10, "{}", r.min_flux_form);
        assert!(r.energy_slack > -1e-3 * m.samples()[0].energy, "{}", r.energy_slack);
    }
}
