//! Cumulant decomposition of symmetric `s`-particle functions on a finite
//! one-particle grid with probability weights `π`.
//!
//! The input is `G = δF^{(s)} / M^{⊗s}` sampled at all `P^s` tuples of grid
//! points. The decomposition `G(Z_s) = Σ_{A ⊆ {1..s}} f^{|A|}(Z_A)` is made
//! unique by requiring each `f^m` to have zero `π`-mean in every argument;
//! then `f_A = Σ_{B ⊆ A} (-1)^{|A|-|B|} E[G | Z_B]`.

use crate::error::{Error, Result};

pub const MAX_ORDER: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct CumulantFamily {
    /// One-particle grid weights, summing to one.
    pub weights: Vec<f64>,
    /// `f^0 = E[G]`, zero for mean-free input.
    pub constant: f64,
    /// `f[m - 1]` is `f^m` on the `P^m` tuples, row-major.
    pub f: Vec<Vec<f64>>,
    /// Max reconstruction error of the input.
    pub residual: f64,
}

impl CumulantFamily {
    pub fn order(&self) -> usize {
        self.f.len()
    }

    /// `Σ_A f^{|A|}(Z_A)` on the full `P^s` grid.
    pub fn reconstruct(&self) -> Vec<f64> {
        let p = self.weights.len();
        let s = self.order();
        let total = p.pow(s as u32);
        let mut out = vec![self.constant; total];
        for (idx, o) in out.iter_mut().enumerate() {
            let z = digits(idx, p, s);
            for mask in 1u32..(1 << s) {
                let sub: Vec<usize> = (0..s).filter(|k| mask & (1 << k) != 0).map(|k| z[k]).collect();
                *o += self.f[sub.len() - 1][flat(&sub, p)];
            }
        }
        out
    }

    /// `‖f^m‖²` in `L²(π^{⊗m})`.
    pub fn norm2(&self, m: usize) -> f64 {
        let p = self.weights.len();
        self.f[m - 1]
            .iter()
            .enumerate()
            .map(|(idx, v)| digits(idx, p, m).iter().map(|&k| self.weights[k]).product::<f64>() * v * v)
            .sum()
    }
}

fn digits(mut idx: usize, p: usize, s: usize) -> Vec<usize> {
    let mut z = vec![0; s];
    for k in (0..s).rev() {
        z[k] = idx % p;
        idx /= p;
    }
    z
}

fn flat(z: &[usize], p: usize) -> usize {
    z.iter().fold(0, |a, &k| a * p + k)
}

fn permutations(s: usize) -> Vec<Vec<usize>> {
    if s == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(s - 1) {
        for k in 0..=p.len() {
            let mut q = p.clone();
            q.insert(k, s - 1);
            out.push(q);
        }
    }
    out
}

/// `E[G | Z_B]` for `B` given as a bitmask, as a function on `P^{|B|}`.
fn conditional(g: &[f64], w: &[f64], s: usize, mask: u32) -> Vec<f64> {
    let p = w.len();
    let kept: Vec<usize> = (0..s).filter(|k| mask & (1 << k) != 0).collect();
    let mut out = vec![0.0; p.pow(kept.len() as u32)];
    for (idx, v) in g.iter().enumerate() {
        let z = digits(idx, p, s);
        let mut weight = 1.0;
        for k in 0..s {
            if mask & (1 << k) == 0 {
                weight *= w[z[k]];
            }
        }
        let sub: Vec<usize> = kept.iter().map(|&k| z[k]).collect();
        out[flat(&sub, p)] += weight * v;
    }
    out
}

/// Cumulants `f^1..f^s` of a symmetric `G` on the `P^s` grid.
pub fn extract_cumulants(g: &[f64], weights: &[f64], s: usize) -> Result<CumulantFamily> {
    if s == 0 || s > MAX_ORDER {
        return Err(Error::InvalidParameter(format!("order {s} outside 1..={MAX_ORDER}")));
    }
    let p = weights.len();
    if p == 0 || weights.iter().any(|w| !(*w > 0.0)) {
        return Err(Error::InvalidParameter("grid weights must be positive".into()));
    }
    let wsum: f64 = weights.iter().sum();
    if (wsum - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidParameter(format!("grid weights sum to {wsum}")));
    }
    crate::error::check_len(p.pow(s as u32), g.len())?;
    let scale = g.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let mut dev: f64 = 0.0;
    for perm in permutations(s).iter() {
        for (idx, v) in g.iter().enumerate() {
            let z = digits(idx, p, s);
            let pz: Vec<usize> = perm.iter().map(|&k| z[k]).collect();
            dev = dev.max((v - g[flat(&pz, p)]).abs());
        }
    }
    if dev > 1e-10 * scale {
        return Err(Error::Asymmetric { deviation: dev });
    }
    let constant = conditional(g, weights, s, 0)[0];
    let mut f = Vec::with_capacity(s);
    for m in 1..=s {
        // A = {0, ..., m-1}; Möbius sum over its subsets
        let full = (1u32 << m) - 1;
        let mut fm = vec![0.0; p.pow(m as u32)];
        for b in 0..=full {
            let sign = if (m as u32 - b.count_ones()) % 2 == 0 { 1.0 } else { -1.0 };
            let e = conditional(g, weights, s, b);
            let kept: Vec<usize> = (0..m).filter(|k| b & (1 << k) != 0).collect();
            for (idx, out) in fm.iter_mut().enumerate() {
                let z = digits(idx, p, m);
                let sub: Vec<usize> = kept.iter().map(|&k| z[k]).collect();
                *out += sign * e[flat(&sub, p)];
            }
        }
        f.push(fm);
    }
    let mut fam = CumulantFamily { weights: weights.to_vec(), constant, f, residual: 0.0 };
    fam.residual = fam.reconstruct().iter().zip(g).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(fam)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayReport {
    /// `(m, binom(N, m) ‖f^m‖²)`.
    pub rows: Vec<(usize, f64)>,
    /// Sum of rows `m >= 2` over row `m = 1`.
    pub higher_over_first: f64,
    /// Whether the higher rows are at least ten times below the first.
    pub first_dominates: bool,
}

fn binomial(n: usize, m: usize) -> f64 {
    (0..m).map(|k| (n - k) as f64 / (k + 1) as f64).product()
}

pub fn cumulant_decay_report(family: &CumulantFamily, n: usize) -> Result<DecayReport> {
    if n < family.order() {
        return Err(Error::InvalidParameter(format!("N = {n} below order {}", family.order())));
    }
    let rows: Vec<(usize, f64)> = (1..=family.order()).map(|m| (m, binomial(n, m) * family.norm2(m))).collect();
    let higher: f64 = rows.iter().skip(1).map(|r| r.1).sum();
    let first = rows[0].1;
    let higher_over_first = if first > 0.0 {
        higher / first
    } else if higher > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    Ok(DecayReport { rows, higher_over_first, first_dominates: higher <= 0.1 * first })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn symmetrize(g: &[f64], p: usize, s: usize) -> Vec<f64> {
        let perms = permutations(s);
        (0..g.len())
            .map(|idx| {
                let z = digits(idx, p, s);
                perms.iter().map(|q| g[flat(&q.iter().map(|&k| z[k]).collect::<Vec<_>>(), p)]).sum::<f64>()
                    / perms.len() as f64
            })
            .collect()
    }

    #[test]
    fn additive_input_is_pure_first_cumulant() {
        let w = [0.2, 0.3, 0.5];
        let g1 = [1.0, -2.0, 0.8];
        let mean: f64 = w.iter().zip(&g1).map(|(a, b)| a * b).sum();
        let g: Vec<f64> = (0..9).map(|i| g1[i / 3] + g1[i % 3] - 2.0 * mean).collect();
        let f = extract_cumulants(&g, &w, 2).unwrap();
        for k in 0..3 {
            assert!((f.f[0][k] - (g1[k] - mean)).abs() < 1e-14);
        }
        assert!(f.f[1].iter().all(|x| x.abs() < 1e-14));
        let r = cumulant_decay_report(&f, 50).unwrap();
        assert!(r.rows[1].1 < 1e-26);
        assert!(r.first_dominates);
    }

    #[test]
    fn product_input() {
        let w = [0.25, 0.25, 0.5];
        let h = [1.0, 2.0, -1.0];
        let c: f64 = w.iter().zip(&h).map(|(a, b)| a * b).sum();
        let g: Vec<f64> = (0..9).map(|i| h[i / 3] * h[i % 3]).collect();
        let f = extract_cumulants(&g, &w, 2).unwrap();
        assert!((f.constant - c * c).abs() < 1e-14);
        for k in 0..3 {
            assert!((f.f[0][k] - c * (h[k] - c)).abs() < 1e-14);
        }
        for i in 0..9 {
            assert!((f.f[1][i] - (h[i / 3] - c) * (h[i % 3] - c)).abs() < 1e-14);
        }
        assert!(f.residual < 1e-14);
    }

    #[test]
    fn round_trip_on_random_symmetric_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for s in 1..=3 {
            for p in [2usize, 3, 4] {
                let raw: Vec<f64> = (0..p.pow(s as u32)).map(|_| rng.gen::<f64>() - 0.5).collect();
                let g = symmetrize(&raw, p, s);
                let mut w: Vec<f64> = (0..p).map(|_| rng.gen::<f64>() + 0.1).collect();
                let t: f64 = w.iter().sum();
                w.iter_mut().for_each(|x| *x /= t);
                let f = extract_cumulants(&g, &w, s).unwrap();
                assert!(f.residual < 1e-12, "{s} {p}: {}", f.residual);
                // zero conditional means
                for m in 1..=s {
                    let e = conditional(&f.f[m - 1], &w, m, (1 << (m - 1)) - 1);
                    assert!(e.iter().all(|x| x.abs() < 1e-12));
                }
            }
        }
    }

    #[test]
    fn asymmetric_input_rejected() {
        let w = [0.5, 0.5];
        assert!(matches!(extract_cumulants(&[0.0, 1.0, 0.0, 0.0], &w, 2), Err(Error::Asymmetric { .. })));
        assert!(extract_cumulants(&[0.0; 32], &w, 5).is_err());
    }

    #[test]
    fn report_is_relabeling_invariant() {
        let w = [0.2, 0.3, 0.5];
        let raw: Vec<f64> = (0..9).map(|i| ((i * 7) % 5) as f64 - 2.0).collect();
        let g = symmetrize(&raw, 3, 2);
        let perm = [2, 0, 1];
        let gp: Vec<f64> = (0..9).map(|i| g[perm[i / 3] * 3 + perm[i % 3]]).collect();
        let wp: Vec<f64> = perm.iter().map(|&k| w[k]).collect();
        let a = cumulant_decay_report(&extract_cumulants(&g, &w, 2).unwrap(), 10).unwrap();
        let b = cumulant_decay_report(&extract_cumulants(&gp, &wp, 2).unwrap(), 10).unwrap();
        for (x, y) in a.rows.iter().zip(&b.rows) {
            assert!((x.1 - y.1).abs() < 1e-12);
        }
    }
}
