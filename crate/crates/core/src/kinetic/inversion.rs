//! Kernel projection, inversion of the collision operator on the orthogonal
//! of its kernel, and the resulting transport coefficients.

use crate::error::{check_len, Error, Result};
use crate::kinetic::operator::CollisionOperator;
use crate::velocity::VelocityGrid;

/// Orthonormal basis of `span{1, v1, v2, |v|^2}` in the discrete `L²(M dv)`.
pub fn kernel_basis(grid: &VelocityGrid) -> Vec<Vec<f64>> {
    let raw = [
        grid.sample(|_| 1.0),
        grid.sample(|v| v[0]),
        grid.sample(|v| v[1]),
        grid.sample(|v| v[0] * v[0] + v[1] * v[1]),
    ];
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(4);
    for mut f in raw {
        for _ in 0..2 {
            for e in &basis {
                let c = grid.inner(&f, e);
                f.iter_mut().zip(e).for_each(|(x, y)| *x -= c * y);
            }
        }
        let n = grid.norm(&f);
        f.iter_mut().for_each(|x| *x /= n);
        basis.push(f);
    }
    basis
}

/// `L²(M dv)`-orthogonal projection onto the collision invariants.
pub fn project_kernel(h: &[f64], grid: &VelocityGrid) -> Result<Vec<f64>> {
    check_len(grid.len(), h.len())?;
    let mut out = vec![0.0; h.len()];
    for e in kernel_basis(grid) {
        let c = grid.inner(h, &e);
        out.iter_mut().zip(&e).for_each(|(o, x)| *o += c * x);
    }
    Ok(out)
}

fn remove_kernel(h: &mut [f64], basis: &[Vec<f64>], grid: &VelocityGrid) {
    for e in basis {
        let c = grid.inner(h, e);
        h.iter_mut().zip(e).for_each(|(x, y)| *x -= c * y);
    }
}

/// Solves `L h = rhs` with `Π h = 0` by conjugate gradients in `L²(M dv)`.
pub fn invert_l(rhs: &[f64], op: &CollisionOperator) -> Result<Vec<f64>> {
    let grid = op.grid();
    check_len(grid.len(), rhs.len())?;
    let norm = grid.norm(rhs);
    if norm == 0.0 {
        return Ok(vec![0.0; rhs.len()]);
    }
    let basis = kernel_basis(grid);
    let kernel = grid.norm(&project_kernel(rhs, grid)?);
    if kernel > 1e-6 * norm {
        return Err(Error::KernelComponent { size: kernel / norm });
    }
    let mut b = rhs.to_vec();
    remove_kernel(&mut b, &basis, grid);
    let bnorm = grid.norm(&b);
    let tol = 1e-8 * bnorm;
    let mut x = vec![0.0; b.len()];
    let mut r = b.clone();
    let mut p = r.clone();
    let mut rr = grid.inner(&r, &r);
    let max_iter = 20 * grid.n_r() + 200;
    for it in 0..max_iter {
        if rr.sqrt() <= tol {
            log::debug!("cg converged in {it} iterations");
            remove_kernel(&mut x, &basis, grid);
            return Ok(x);
        }
        let mut ap = op.apply(&p)?;
        remove_kernel(&mut ap, &basis, grid);
        let pap = grid.inner(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::NotConverged { iterations: it, residual: rr.sqrt() / bnorm });
        }
        let a = rr / pap;
        x.iter_mut().zip(&p).for_each(|(x, p)| *x += a * p);
        r.iter_mut().zip(&ap).for_each(|(r, q)| *r -= a * q);
        let rr_new = grid.inner(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        p.iter_mut().zip(&r).for_each(|(p, r)| *p = r + beta * *p);
    }
    // final true residual check
    let mut res = op.apply(&x)?;
    res.iter_mut().zip(&b).for_each(|(q, b)| *q -= b);
    let rel = grid.norm(&res) / bnorm;
    if rel <= 1e-8 {
        remove_kernel(&mut x, &basis, grid);
        return Ok(x);
    }
    Err(Error::NotConverged { iterations: max_iter, residual: rel })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportCoefficients {
    /// Viscosity.
    pub nu: f64,
    /// Heat conductivity.
    pub kappa: f64,
}

/// `ψ_1 = v1 (|v|^2 - s)` with `s = d + 2` up to quadrature error; `s` is
/// taken from the grid so that `ψ_1` is discretely orthogonal to `v1`.
pub fn heat_flux_moment(grid: &VelocityGrid) -> Vec<f64> {
    let v1 = grid.sample(|v| v[0]);
    let q = grid.sample(|v| v[0] * (v[0] * v[0] + v[1] * v[1]));
    let s = grid.inner(&q, &v1) / grid.inner(&v1, &v1);
    grid.sample(|v| v[0] * (v[0] * v[0] + v[1] * v[1] - s))
}

/// Traceless parts `φ_11 = (v1^2 - v2^2)/2` and `φ_12 = v1 v2`.
pub fn stress_moments(grid: &VelocityGrid) -> [Vec<f64>; 2] {
    [grid.sample(|v| 0.5 * (v[0] * v[0] - v[1] * v[1])), grid.sample(|v| v[0] * v[1])]
}

/// Viscosity and conductivity from the moment closure of the linearized
/// equation:
/// `kappa = <ψ, L⁻¹ψ> / (2 d (d+2))`, `nu = <φ : L⁻¹φ> / ((d-1)(d+2))`.
pub fn chapman_enskog(op: &CollisionOperator) -> Result<TransportCoefficients> {
    let grid = op.grid();
    let d = 2.0;
    let psi = heat_flux_moment(grid);
    let k1 = grid.inner(&psi, &invert_l(&psi, op)?);
    let [p11, p12] = stress_moments(grid);
    let m11 = grid.inner(&p11, &invert_l(&p11, op)?);
    let m12 = grid.inner(&p12, &invert_l(&p12, op)?);
    let kappa = d * k1 / (2.0 * d * (d + 2.0));
    let nu = (2.0 * m11 + 2.0 * m12) / ((d - 1.0) * (d + 2.0));
    if !(kappa > 0.0 && nu > 0.0) {
        return Err(Error::Degenerate(format!("non-positive coefficients nu={nu} kappa={kappa}")));
    }
    Ok(TransportCoefficients { nu, kappa })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn op() -> CollisionOperator {
        CollisionOperator::assemble(&VelocityGrid::square(24).unwrap()).unwrap()
    }

    #[test]
    fn projection_examples() {
        let g = VelocityGrid::square(24).unwrap();
        let v1 = g.sample(|v| v[0]);
        let p = project_kernel(&v1, &g).unwrap();
        assert!(p.iter().zip(&v1).all(|(a, b)| (a - b).abs() < 1e-8));
        let cube = project_kernel(&g.sample(|v| v[0].powi(3)), &g).unwrap();
        let diff: Vec<f64> = cube.iter().zip(&v1).map(|(a, b)| a - 3.0 * b).collect();
        assert!(g.norm(&diff) < 1e-6, "{}", g.norm(&diff));
        let h = g.sample(|v| (v[0] + 0.3 * v[1] * v[1]).cos());
        let p1 = project_kernel(&h, &g).unwrap();
        let p2 = project_kernel(&p1, &g).unwrap();
        assert!(p1.iter().zip(&p2).all(|(a, b)| (a - b).abs() < 1e-8));
    }

    #[test]
    fn inversion_round_trip() {
        let op = op();
        let g = op.grid().clone();
        assert!(invert_l(&vec![0.0; g.len()], &op).unwrap().iter().all(|&x| x == 0.0));
        let [_, p12] = stress_moments(&g);
        let h = invert_l(&p12, &op).unwrap();
        let back = op.apply(&h).unwrap();
        let err: Vec<f64> = back.iter().zip(&p12).map(|(a, b)| a - b).collect();
        assert!(g.norm(&err) < 1e-6 * g.norm(&p12));
        assert!(g.norm(&project_kernel(&h, &g).unwrap()) < 1e-10 * g.norm(&h));
        let psi = heat_flux_moment(&g);
        assert!(g.inner(&psi, &invert_l(&psi, &op).unwrap()) > 0.0);
    }

    #[test]
    fn kernel_rhs_rejected() {
        let op = op();
        let g = op.grid().clone();
        assert!(matches!(invert_l(&g.sample(|v| 1.0 + v[0]), &op), Err(Error::KernelComponent { .. })));
    }
}
