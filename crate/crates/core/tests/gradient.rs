//! Analytic penalty gradient against central finite differences.

use nash_sbnb::game::{generate_random, NormalFormGame};
use nash_sbnb::local_search::{penalty_gradient, smoothed_penalty};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_point(actions: &[usize], rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    actions
        .iter()
        .map(|&k| {
            let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
            let s: f64 = raw.iter().sum();
            raw.iter().map(|x| x / s).collect()
        })
        .collect()
}

/// Worst `|fd - grad|_inf / |grad|_inf` over `points` random profiles.
fn worst_relative_error(g: &NormalFormGame<f64>, tau: f64, points: usize, seed: u64) -> f64 {
    let h = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..points {
        let p = random_point(g.actions(), &mut rng);
        let grad = penalty_gradient(g, &p, tau);
        let mut err: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for i in 0..p.len() {
            for a in 0..p[i].len() {
                let mut up = p.clone();
                let mut dn = p.clone();
                up[i][a] += h;
                dn[i][a] -= h;
                let fd = (smoothed_penalty(g, &up, tau) - smoothed_penalty(g, &dn, tau)) / (2.0 * h);
                err = err.max((fd - grad[i][a]).abs());
                scale = scale.max(grad[i][a].abs());
            }
        }
        worst = worst.max(err / scale.max(1e-12));
    }
    worst
}

#[test]
fn gradient_matches_finite_differences() {
    for (k, actions) in [vec![2, 3, 2], vec![3, 3], vec![2, 2, 2, 2], vec![4, 2], vec![3, 2, 3]]
        .iter()
        .enumerate()
    {
        let g = generate_random::<f64>(actions, 40 + k as u64).unwrap();
        let err = worst_relative_error(&g, 0.05, 100, k as u64);
        assert!(err <= 1e-5, "{actions:?}: relative error {err:e}");
    }
}
