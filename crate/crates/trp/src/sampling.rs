//! Randomized lower-bound oracles.
//!
//! Every value produced here is the objective evaluated at a concrete sample
//! point, so the results are one-sided lower bounds by construction. The
//! search spends part of its budget on global draws and the rest on local
//! perturbations around the incumbent with a shrinking radius, which is what
//! lets a pure sampling scheme get within ~1e-8 of a smooth maximum at desk
//! dimensions.

use crate::linalg::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn quad(m: &Mat, x: &[f64]) -> f64 {
    let n = m.rows();
    let mut s = 0.0;
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            row += m[(i, j)] * x[j];
        }
        s += x[i] * row;
    }
    s
}

fn normalize(x: &mut [f64]) -> bool {
    let norm: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm < 1e-12 {
        return false;
    }
    for v in x.iter_mut() {
        *v /= norm;
    }
    true
}

/// Sampled supremum of the generalized Rayleigh quotient `xᵀ num x / xᵀ den x`
/// over nonzero `x`, with `den ≻ 0`. Uses `budget` objective evaluations.
pub fn sup_rayleigh_ratio(num: &Mat, den: &Mat, budget: usize, seed: u64) -> f64 {
    let n = num.rows();
    assert_eq!(den.rows(), n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eval = |x: &[f64]| quad(num, x) / quad(den, x);

    let global = budget * 2 / 5;
    let mut best_x = vec![0.0; n];
    best_x[0] = 1.0;
    let mut best = eval(&best_x);
    for _ in 0..global {
        let mut x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0f64..1.0)).collect();
        if !normalize(&mut x) {
            continue;
        }
        let v = eval(&x);
        if v > best {
            best = v;
            best_x = x;
        }
    }

    let rounds = 44;
    let per_round = (budget - global).max(rounds) / rounds;
    let mut sigma = 0.5;
    for _ in 0..rounds {
        for _ in 0..per_round {
            let mut x: Vec<f64> = best_x
                .iter()
                .map(|&v| v + sigma * rng.gen_range(-1.0f64..1.0))
                .collect();
            if !normalize(&mut x) {
                continue;
            }
            let v = eval(&x);
            if v > best {
                best = v;
                best_x = x;
            }
        }
        sigma *= 0.5;
    }
    best
}

/// Sampled supremum of `tr(num' XᵀMX)`-style smooth functions over the
/// Stiefel manifold, driven by a caller-supplied objective. The objective
/// receives matrices with exactly orthonormal columns.
pub fn sup_over_stiefel(
    n: usize,
    p: usize,
    budget: usize,
    seed: u64,
    mut objective: impl FnMut(&Mat) -> f64,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = f64::NEG_INFINITY;
    let mut best_raw = Mat::identity(n);
    let mut have_incumbent = false;

    let draw = |rng: &mut ChaCha8Rng| Mat::from_fn(n, p, |_, _| rng.gen_range(-1.0f64..1.0));

    let global = budget * 2 / 5;
    for _ in 0..global.max(1) {
        let raw = draw(&mut rng);
        if let Ok(q) = crate::linalg::orthonormalize_columns(&raw) {
            let v = objective(&q);
            if v > best {
                best = v;
                best_raw = raw;
                have_incumbent = true;
            }
        }
    }
    if !have_incumbent {
        return best;
    }

    let rounds = 44;
    let per_round = (budget - global).max(rounds) / rounds;
    let mut sigma = 0.5;
    for _ in 0..rounds {
        for _ in 0..per_round {
            let noise = Mat::from_fn(n, p, |_, _| rng.gen_range(-1.0f64..1.0)).scale(sigma);
            let raw = best_raw.add(&noise);
            if let Ok(q) = crate::linalg::orthonormalize_columns(&raw) {
                let v = objective(&q);
                if v > best {
                    best = v;
                    best_raw = raw;
                }
            }
        }
        sigma *= 0.5;
    }
    best
}
