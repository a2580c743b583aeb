//! Stationary slab between two diffuse walls.
//!
//! Solves `v1 ∂x g = -L g / α` with implicit upwind differences and the
//! diffuse wall law on both sides. The discrete system is block tridiagonal
//! in the cells and is eliminated block by block. Constants solve the
//! homogeneous problem, so one wall equation is traded for a gauge fixing
//! the mass of the first cell and the solution is shifted to zero total mass.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kinetic::field::{DistributionField, Wall};
use crate::kinetic::operator::CollisionOperator;

/// Dense matrix of `L` on the grid, column `j` is `L e_j`.
pub fn dense_operator(op: &CollisionOperator) -> Result<DMatrix<f64>> {
    let n = op.grid().len();
    let mut m = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        let col = op.apply(&e)?;
        e[j] = 0.0;
        m.set_column(j, &DVector::from_vec(col));
    }
    Ok(m)
}

/// Stationary solution on `[0, length]` with `nx` cells and wall
/// temperatures `theta = [left, right]`.
pub fn stationary_slab(
    op: &CollisionOperator,
    nx: usize,
    length: f64,
    alpha: f64,
    theta: [f64; 2],
) -> Result<DistributionField> {
    let grid = op.grid();
    let mut field = DistributionField::slab(nx, length, grid, alpha, theta)?;
    let nv = grid.len();
    let dx = field.dx();
    let lmat = dense_operator(op)? / alpha;
    let c: Vec<f64> = grid.nodes().iter().map(|v| v[0]).collect();
    let walls = [Wall::new(grid, -1.0)?, Wall::new(grid, 1.0)?];
    // lower and upper couplings are diagonal
    let lower: Vec<f64> = c.iter().map(|&c| -(c.max(0.0)) / dx).collect();
    let upper: Vec<f64> = c.iter().map(|&c| -((-c).max(0.0)) / dx).collect();
    let mut diag = lmat.clone();
    for k in 0..nv {
        diag[(k, k)] += c[k].abs() / dx;
    }
    let gauge_row = (0..nv).find(|&k| c[k] > 0.0).ok_or(Error::Degenerate("no incoming nodes".into()))?;

    let block = |i: usize| -> (DMatrix<f64>, DVector<f64>) {
        let mut b = diag.clone();
        let mut r = DVector::zeros(nv);
        if i == 0 {
            for k in 0..nv {
                if c[k] > 0.0 {
                    let a = lower[k];
                    for j in 0..nv {
                        b[(k, j)] += a * walls[0].weights()[j];
                    }
                    r[k] -= a * theta[0] * walls[0].profile()[k];
                }
            }
            for j in 0..nv {
                b[(gauge_row, j)] = grid.weights()[j] * grid.maxwellian()[j];
            }
            r[gauge_row] = 0.0;
        }
        if i == nx - 1 {
            for k in 0..nv {
                if c[k] < 0.0 {
                    let a = upper[k];
                    for j in 0..nv {
                        b[(k, j)] += a * walls[1].weights()[j];
                    }
                    r[k] -= a * theta[1] * walls[1].profile()[k];
                }
            }
        }
        (b, r)
    };

    // forward elimination; the gauge row of block 0 has no upper coupling
    let mut inverses: Vec<DMatrix<f64>> = Vec::with_capacity(nx);
    let mut rhs: Vec<DVector<f64>> = Vec::with_capacity(nx);
    let upper_of = |i: usize, k: usize| if i == 0 && k == gauge_row { 0.0 } else { upper[k] };
    for i in 0..nx {
        let (mut b, mut r) = block(i);
        if i > 0 {
            let prev = &inverses[i - 1];
            // B_i -= diag(lower) P^{-1} diag(upper_{i-1}); r_i -= diag(lower) P^{-1} r_{i-1}
            let pr = prev * &rhs[i - 1];
            for k in 0..nv {
                if lower[k] != 0.0 {
                    for j in 0..nv {
                        b[(k, j)] -= lower[k] * prev[(k, j)] * upper_of(i - 1, j);
                    }
                    r[k] -= lower[k] * pr[k];
                }
            }
        }
        let inv = b.try_inverse().ok_or(Error::Degenerate(format!("singular block {i}")))?;
        inverses.push(inv);
        rhs.push(r);
    }
    let mut sol: Vec<DVector<f64>> = vec![DVector::zeros(nv); nx];
    sol[nx - 1] = &inverses[nx - 1] * &rhs[nx - 1];
    for i in (0..nx - 1).rev() {
        let mut r = rhs[i].clone();
        for k in 0..nv {
            r[k] -= upper_of(i, k) * sol[i + 1][k];
        }
        sol[i] = &inverses[i] * r;
    }
    for (i, s) in sol.iter().enumerate() {
        field.cell_mut(i).copy_from_slice(s.as_slice());
    }
    let one = grid.sample(|_| 1.0);
    let mass = field.total_moment(grid, &one) / length / grid.mean(&one);
    field.values_mut().iter_mut().for_each(|g| *g -= mass);
    Ok(field)
}

/// Residual of the discrete stationary equations, max norm over cells.
pub fn stationary_residual(op: &CollisionOperator, field: &DistributionField) -> Result<f64> {
    let grid = op.grid();
    let theta = field.boundary_theta().ok_or(Error::BoundaryMismatch("torus field".into()))?;
    let walls = [Wall::new(grid, -1.0)?, Wall::new(grid, 1.0)?];
    let (nx, dx, alpha) = (field.nx(), field.dx(), field.alpha());
    let left = walls[0].reflect(grid, field.cell(0), theta[0]);
    let right = walls[1].reflect(grid, field.cell(nx - 1), theta[1]);
    let mut worst: f64 = 0.0;
    for i in 0..nx {
        let lg = op.apply(field.cell(i))?;
        for (k, v) in grid.nodes().iter().enumerate() {
            let g = field.cell(i)[k];
            let dg = if v[0] > 0.0 {
                g - if i == 0 { left[k] } else { field.cell(i - 1)[k] }
            } else {
                (if i == nx - 1 { right[k] } else { field.cell(i + 1)[k] }) - g
            };
            worst = worst.max((v[0] * dg / dx + lg[k] / alpha).abs());
        }
    }
    Ok(worst)
}
