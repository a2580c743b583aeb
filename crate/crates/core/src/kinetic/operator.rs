//! Hard-sphere linearized collision operator on a polar velocity grid.
//!
//! The operator commutes with rotations, so on the polar grid it splits into
//! one real symmetric `n_r x n_r` block per angular Fourier mode. Blocks are
//! assembled as Gram matrices of the quadratic form
//! `<h, L h> = 1/4 ∫∫∫ (h + h_* - h' - h'_*)^2 M M_* b`, which makes the
//! discrete operator symmetric and nonnegative by construction and keeps the
//! collision invariants in its kernel to rounding.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{check_len, Error, Result};
use crate::velocity::{gauss_legendre, VelocityGrid};

/// Quadrature nodes on the half circle `(v - v_*)·ω > 0`.
pub const ANGULAR_NODES: usize = 32;

/// Hard-sphere cross-section `((v - v_*)·ω)_+`.
pub fn collision_kernel(v: &[f64], v_star: &[f64], omega: &[f64]) -> Result<f64> {
    check_len(v.len(), v_star.len())?;
    check_len(v.len(), omega.len())?;
    let norm = omega.iter().map(|w| w * w).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::NonUnitVector { norm });
    }
    let dot: f64 = v.iter().zip(v_star).zip(omega).map(|((a, b), w)| (a - b) * w).sum();
    Ok(dot.max(0.0))
}

/// Spectral data of one symmetrized block `D^{-1/2} G D^{-1/2}`.
#[derive(Debug, Clone)]
struct ModeSpectrum {
    values: DVector<f64>,
    vectors: DMatrix<f64>,
}

#[derive(Clone)]
pub struct CollisionOperator {
    grid: VelocityGrid,
    max_mode: usize,
    blocks: Vec<DMatrix<f64>>,
    mass: Vec<f64>,
    frequency: Vec<f64>,
    spectra: Vec<ModeSpectrum>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for CollisionOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CollisionOperator")
            .field("n_r", &self.grid.n_r())
            .field("n_theta", &self.grid.n_theta())
            .field("v_max", &self.grid.v_max())
            .field("max_mode", &self.max_mode)
            .finish()
    }
}

fn beta_rule() -> (Vec<f64>, Vec<f64>) {
    gauss_legendre(ANGULAR_NODES, -0.5 * PI, 0.5 * PI)
}

/// `∫ M(v_*) b dv_* dω` at `v = (speed, 0)` by the grid quadrature.
fn frequency_at(grid: &VelocityGrid, speed: f64, betas: &(Vec<f64>, Vec<f64>)) -> f64 {
    let cos_sum: f64 = betas.0.iter().zip(&betas.1).map(|(b, w)| b.cos() * w).sum();
    let mut a = 0.0;
    for ((v, w), m) in grid.nodes().iter().zip(grid.weights()).zip(grid.maxwellian()) {
        let g = ((speed - v[0]).powi(2) + v[1] * v[1]).sqrt();
        a += w * m * g * cos_sum;
    }
    a
}

impl CollisionOperator {
    /// Assembles every angular mode the grid resolves.
    pub fn assemble(grid: &VelocityGrid) -> Result<Self> {
        Self::assemble_modes(grid, grid.n_theta() / 2)
    }

    /// Assembles modes `0..=max_mode` only.
    pub fn assemble_modes(grid: &VelocityGrid, max_mode: usize) -> Result<Self> {
        let max_mode = max_mode.min(grid.n_theta() / 2);
        let blocks = assemble_blocks(grid, max_mode);
        Self::from_blocks(grid.clone(), blocks)
    }

    /// Rebuilds an operator from stored Gram blocks (mode `m` at index `m`).
    pub fn from_blocks(grid: VelocityGrid, blocks: Vec<DMatrix<f64>>) -> Result<Self> {
        let n_r = grid.n_r();
        if blocks.is_empty() || blocks.len() > grid.n_theta() / 2 + 1 {
            return Err(Error::InvalidParameter(format!(
                "need between 1 and {} mode blocks, got {}",
                grid.n_theta() / 2 + 1,
                blocks.len()
            )));
        }
        for b in &blocks {
            if b.nrows() != n_r || b.ncols() != n_r {
                return Err(Error::ShapeMismatch { expected: n_r * n_r, got: b.len() });
            }
            let dev = (b - b.transpose()).amax();
            if dev > 1e-10 * b.amax().max(1e-300) {
                return Err(Error::Asymmetric { deviation: dev });
            }
        }
        let mass: Vec<f64> = (0..n_r)
            .map(|a| 2.0 * PI * grid.radial_weights()[a] * grid.radii()[a] * grid.maxwellian()[grid.index(a, 0)])
            .collect();
        let scale = DVector::from_iterator(n_r, mass.iter().map(|d| 1.0 / d.sqrt()));
        let spectra = blocks
            .iter()
            .map(|g| {
                let s = DMatrix::from_fn(n_r, n_r, |a, b| scale[a] * g[(a, b)] * scale[b]);
                let s = 0.5 * (&s + s.transpose());
                let eig = SymmetricEigen::new(s);
                ModeSpectrum { values: eig.eigenvalues, vectors: eig.eigenvectors }
            })
            .collect();
        let betas = beta_rule();
        let frequency = grid.radii().iter().map(|&r| frequency_at(&grid, r, &betas)).collect();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(grid.n_theta());
        let ifft = planner.plan_fft_inverse(grid.n_theta());
        Ok(Self { max_mode: blocks.len() - 1, grid, blocks, mass, frequency, spectra, fft, ifft })
    }

    pub fn grid(&self) -> &VelocityGrid {
        &self.grid
    }
    pub fn max_mode(&self) -> usize {
        self.max_mode
    }
    /// Gram blocks, mode `m` at index `m`.
    pub fn blocks(&self) -> &[DMatrix<f64>] {
        &self.blocks
    }

    /// Collision frequency at every grid node.
    pub fn frequency_table(&self) -> Vec<f64> {
        let nt = self.grid.n_theta();
        (0..self.grid.len()).map(|i| self.frequency[i / nt]).collect()
    }

    /// Eigenvalues of the block for mode `m`, ascending.
    pub fn mode_eigenvalues(&self, m: usize) -> Result<Vec<f64>> {
        let s = self.spectra.get(m).ok_or(Error::ModeNotAssembled { mode: m, max_mode: self.max_mode })?;
        let mut v: Vec<f64> = s.values.iter().copied().collect();
        v.sort_by(f64::total_cmp);
        Ok(v)
    }

    /// Applies `c -> f_m(c)` per angular mode, where `f_m` acts on the
    /// radial coefficient vector of mode `m`.
    fn map_modes(&self, h: &[f64], mut f: impl FnMut(usize, &mut [Complex64])) -> Result<Vec<f64>> {
        check_len(self.grid.len(), h.len())?;
        let (n_r, nt) = (self.grid.n_r(), self.grid.n_theta());
        let mut spec = vec![Complex64::new(0.0, 0.0); n_r * nt];
        for a in 0..n_r {
            let row = &mut spec[a * nt..(a + 1) * nt];
            for (c, &x) in row.iter_mut().zip(&h[a * nt..(a + 1) * nt]) {
                *c = Complex64::new(x, 0.0);
            }
            self.fft.process(row);
        }
        let scale: f64 = h.iter().map(|x| x.abs()).fold(0.0, f64::max);
        let mut col = vec![Complex64::new(0.0, 0.0); n_r];
        for bin in 0..nt {
            let m = bin.min(nt - bin);
            for a in 0..n_r {
                col[a] = spec[a * nt + bin];
            }
            if m > self.max_mode {
                let size = col.iter().map(|c| c.norm()).fold(0.0, f64::max) / nt as f64;
                if size > 1e-9 * scale.max(1e-300) {
                    return Err(Error::ModeNotAssembled { mode: m, max_mode: self.max_mode });
                }
                col.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
            } else {
                f(m, &mut col);
            }
            for a in 0..n_r {
                spec[a * nt + bin] = col[a];
            }
        }
        let mut out = vec![0.0; h.len()];
        for a in 0..n_r {
            let row = &mut spec[a * nt..(a + 1) * nt];
            self.ifft.process(row);
            for (o, c) in out[a * nt..(a + 1) * nt].iter_mut().zip(row.iter()) {
                *o = c.re / nt as f64;
            }
        }
        Ok(out)
    }

    /// `L h` at every node.
    pub fn apply(&self, h: &[f64]) -> Result<Vec<f64>> {
        let n_r = self.grid.n_r();
        let mut tmp = vec![Complex64::new(0.0, 0.0); n_r];
        self.map_modes(h, |m, col| {
            let g = &self.blocks[m];
            for a in 0..n_r {
                let mut s = Complex64::new(0.0, 0.0);
                for b in 0..n_r {
                    s += col[b] * g[(a, b)];
                }
                tmp[a] = s / self.mass[a];
            }
            col.copy_from_slice(&tmp);
        })
    }

    /// `exp(-tau L) h`, exact on the assembled spectrum. Tiny negative
    /// eigenvalues from rounding are treated as zero.
    pub fn exp_apply(&self, h: &[f64], tau: f64) -> Result<Vec<f64>> {
        let n_r = self.grid.n_r();
        let sq: Vec<f64> = self.mass.iter().map(|d| d.sqrt()).collect();
        let mut y = vec![Complex64::new(0.0, 0.0); n_r];
        self.map_modes(h, |m, col| {
            let s = &self.spectra[m];
            for k in 0..n_r {
                let mut acc = Complex64::new(0.0, 0.0);
                for a in 0..n_r {
                    acc += col[a] * (s.vectors[(a, k)] * sq[a]);
                }
                y[k] = acc * (-tau * s.values[k].max(0.0)).exp();
            }
            for a in 0..n_r {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..n_r {
                    acc += y[k] * s.vectors[(a, k)];
                }
                col[a] = acc / sq[a];
            }
        })
    }
}

/// `L h` (free-function form).
pub fn apply_l(h: &[f64], op: &CollisionOperator) -> Result<Vec<f64>> {
    op.apply(h)
}

/// Collision frequency `a(|v|)` by the operator's quadrature.
pub fn collision_frequency(speed: f64, op: &CollisionOperator) -> Result<f64> {
    if !(speed >= 0.0) {
        return Err(Error::InvalidParameter(format!("speed must be nonnegative, got {speed}")));
    }
    Ok(frequency_at(&op.grid, speed, &beta_rule()))
}

fn assemble_blocks(grid: &VelocityGrid, max_mode: usize) -> Vec<DMatrix<f64>> {
    let n_r = grid.n_r();
    let nt = grid.n_theta();
    let v_max = grid.v_max();
    let modes = max_mode + 1;
    let (betas, bweights) = beta_rule();
    let trig: Vec<(f64, f64)> = betas.iter().map(|b| (b.cos(), b.sin())).collect();
    let mut gram = vec![vec![0.0; n_r * n_r]; modes];
    let mut idx = [0usize; 10];
    let mut sgn = [0.0f64; 10];
    let mut grp = [0usize; 10];
    let mut pow = vec![[Complex64::new(0.0, 0.0); 4]; modes];
    let mut cross = vec![[[0.0f64; 4]; 4]; modes];

    for i in 0..n_r {
        let r = grid.radii()[i];
        let v = [r, 0.0];
        // angular integral over v gives 2π; factor 2 accounts for the
        // reflected half of the v_* plane; 1/4 from the quadratic form
        let wi = 0.25 * 2.0 * 2.0 * PI * grid.radial_weights()[i] * r * grid.maxwellian()[grid.index(i, 0)];
        for jr in 0..n_r {
            for k in 0..nt / 2 {
                let j = grid.index(jr, k);
                let vs = grid.nodes()[j];
                let wj = grid.weights()[j] * grid.maxwellian()[j];
                let g = [v[0] - vs[0], v[1] - vs[1]];
                let gn = (g[0] * g[0] + g[1] * g[1]).sqrt();
                if gn == 0.0 {
                    continue;
                }
                let gh = [g[0] / gn, g[1] / gn];
                let us = Complex64::new(vs[0], vs[1]) / grid.radii()[jr];
                for (l, &(cb, sb)) in trig.iter().enumerate() {
                    let om = [cb * gh[0] - sb * gh[1], cb * gh[1] + sb * gh[0]];
                    let b = gn * cb;
                    let vp = [v[0] - b * om[0], v[1] - b * om[1]];
                    let vps = [vs[0] + b * om[0], vs[1] + b * om[1]];
                    let rp = (vp[0] * vp[0] + vp[1] * vp[1]).sqrt();
                    let rps = (vps[0] * vps[0] + vps[1] * vps[1]).sqrt();
                    if rp > v_max || rps > v_max {
                        continue;
                    }
                    let w = wi * wj * b * bweights[l];
                    let unit = |x: [f64; 2], n: f64| {
                        if n > 1e-300 {
                            Complex64::new(x[0] / n, x[1] / n)
                        } else {
                            Complex64::new(1.0, 0.0)
                        }
                    };
                    let base = [Complex64::new(1.0, 0.0), us, unit(vp, rp), unit(vps, rps)];
                    let (sp, lp) = grid.radial_stencil(rp);
                    let (sps, lps) = grid.radial_stencil(rps);
                    idx[0] = i;
                    sgn[0] = 1.0;
                    grp[0] = 0;
                    idx[1] = jr;
                    sgn[1] = 1.0;
                    grp[1] = 1;
                    for q in 0..4 {
                        idx[2 + q] = sp + q;
                        sgn[2 + q] = -lp[q];
                        grp[2 + q] = 2;
                        idx[6 + q] = sps + q;
                        sgn[6 + q] = -lps[q];
                        grp[6 + q] = 3;
                    }
                    // Re(conj(u_A^m) u_B^m) for the four angle groups
                    for m in 0..modes {
                        for a in 0..4 {
                            pow[m][a] = if m == 0 { Complex64::new(1.0, 0.0) } else { pow[m - 1][a] * base[a] };
                        }
                        for a in 0..4 {
                            for bb in a..4 {
                                let c = (pow[m][a].conj() * pow[m][bb]).re;
                                cross[m][a][bb] = c;
                                cross[m][bb][a] = c;
                            }
                        }
                    }
                    for p in 0..10 {
                        let wp = w * sgn[p];
                        for q in 0..10 {
                            let s = wp * sgn[q];
                            let (gp, gq) = (grp[p], grp[q]);
                            let cell = idx[p] * n_r + idx[q];
                            for m in 0..modes {
                                gram[m][cell] += s * cross[m][gp][gq];
                            }
                        }
                    }
                }
            }
        }
    }
    gram.into_iter()
        .map(|g| {
            let mat = DMatrix::from_row_slice(n_r, n_r, &g);
            0.5 * (&mat + mat.transpose())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_examples() {
        assert_eq!(collision_kernel(&[1.0, 0.0], &[-1.0, 0.0], &[1.0, 0.0]).unwrap(), 2.0);
        assert_eq!(collision_kernel(&[1.0, 0.0], &[-1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert_eq!(collision_kernel(&[1.0, 0.0], &[-1.0, 0.0], &[-1.0, 0.0]).unwrap(), 0.0);
        assert!(matches!(collision_kernel(&[1.0, 0.0], &[0.0, 0.0], &[1.0, 1.0]), Err(Error::NonUnitVector { .. })));
    }

    fn small() -> CollisionOperator {
        CollisionOperator::assemble(&VelocityGrid::square(16).unwrap()).unwrap()
    }

    #[test]
    fn invariants_are_annihilated() {
        let op = small();
        let g = op.grid().clone();
        for h in [g.sample(|_| 1.0), g.sample(|v| v[0]), g.sample(|v| v[1]), g.sample(|v| v[0] * v[0] + v[1] * v[1])] {
            let lh = op.apply(&h).unwrap();
            assert!(g.norm(&lh) < 1e-10, "{}", g.norm(&lh));
        }
    }

    #[test]
    fn frequency_at_rest() {
        let op = small();
        let a0 = collision_frequency(0.0, &op).unwrap();
        assert!((a0 - (2.0 * PI).sqrt()).abs() < 1e-3 * a0, "{a0}");
    }

    #[test]
    fn exponential_matches_small_step() {
        let op = small();
        let g = op.grid().clone();
        let h = g.sample(|v| (v[0] * v[1]).sin() + v[0].powi(3));
        let tau = 1e-4;
        let e = op.exp_apply(&h, tau).unwrap();
        let lh = op.apply(&h).unwrap();
        let err: Vec<f64> = e.iter().zip(&h).zip(&lh).map(|((e, h), l)| e - h + tau * l).collect();
        assert!(g.norm(&err) < 1e-6 * g.norm(&h));
        let same = op.exp_apply(&h, 0.0).unwrap();
        assert!(same.iter().zip(&h).all(|(a, b)| (a - b).abs() < 1e-9));
    }

    #[test]
    fn restricted_modes_reject_missing_content() {
        let g = VelocityGrid::new(8, 16, 6.0).unwrap();
        let op = CollisionOperator::assemble_modes(&g, 1).unwrap();
        assert!(op.apply(&g.sample(|v| v[0])).is_ok());
        assert!(matches!(op.apply(&g.sample(|v| v[0] * v[1])), Err(Error::ModeNotAssembled { mode: 2, .. })));
    }
}
