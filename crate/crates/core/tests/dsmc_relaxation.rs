use kinetic_core::kinetic::{dsmc_collide, CollisionOperator, DsmcCell};
use kinetic_core::velocity::VelocityGrid;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

// Anisotropic Gaussian with temperatures 1 ± δ: the stress moment
// <(v1² - v2²)/2> relaxes like δ <φ, exp(-t L / α) φ> up to O(δ³).
#[test]
fn stress_relaxation_matches_linear_operator() {
    let delta = 0.1;
    let alpha = 1.0;
    let n = 20_000;
    let replicas = 8;
    let dt = 0.01;
    let checkpoints = [10usize, 25, 50];

    let grid = VelocityGrid::square(24).unwrap();
    let op = CollisionOperator::assemble_modes(&grid, 2).unwrap();
    let phi = grid.sample(|v| 0.5 * (v[0] * v[0] - v[1] * v[1]));

    let mut sums = vec![(0.0, 0.0); checkpoints.len()];
    for r in 0..replicas {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + r as u64);
        let n1 = Normal::new(0.0, (1.0f64 + delta).sqrt()).unwrap();
        let n2 = Normal::new(0.0, (1.0f64 - delta).sqrt()).unwrap();
        let mut v: Vec<[f64; 2]> = (0..n).map(|_| [n1.sample(&mut rng), n2.sample(&mut rng)]).collect();
        let mut cell = DsmcCell::new(n as f64, 12.0).unwrap();
        let mut step = 0;
        for (c, &target) in checkpoints.iter().enumerate() {
            while step < target {
                dsmc_collide(&mut v, &mut cell, alpha, dt, &mut rng).unwrap();
                step += 1;
            }
            let m = v.iter().map(|x| 0.5 * (x[0] * x[0] - x[1] * x[1])).sum::<f64>() / n as f64;
            sums[c].0 += m;
            sums[c].1 += m * m;
        }
    }
    for (c, &steps) in checkpoints.iter().enumerate() {
        let t = steps as f64 * dt;
        let g = op.exp_apply(&phi, t / alpha).unwrap();
        let predicted = delta * grid.inner(&phi, &g);
        let mean = sums[c].0 / replicas as f64;
        let var = (sums[c].1 / replicas as f64 - mean * mean) * replicas as f64 / (replicas - 1) as f64;
        let se = (var / replicas as f64).sqrt();
        println!("t={t} dsmc={mean:.5} ± {se:.5} linear={predicted:.5}");
        assert!((mean - predicted).abs() < 3.0 * se + 1e-3 * delta, "t={t}: {mean} vs {predicted}");
    }
}
