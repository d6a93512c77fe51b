//! Random instance builders shared by the integration tests.
#![allow(dead_code)]

use l1dom::decomp::{count_dominant, GsvdFactors};
use l1dom::linalg::{Lu, Matrix, Qr};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

pub fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix<f64> {
    Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn orthogonal(rng: &mut ChaCha8Rng, k: usize) -> Matrix<f64> {
    Qr::new(&gaussian(rng, k, k)).q_full()
}

pub fn signed_permutation(rng: &mut ChaCha8Rng, k: usize) -> Matrix<f64> {
    let mut perm: Vec<usize> = (0..k).collect();
    perm.shuffle(rng);
    let mut m = Matrix::zeros(k, k);
    for (i, &j) in perm.iter().enumerate() {
        m[(i, j)] = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    }
    m
}

/// Well-conditioned random `n x n` matrix.
pub fn invertible(rng: &mut ChaCha8Rng, n: usize) -> Matrix<f64> {
    loop {
        let x = gaussian(rng, n, n);
        let lu = Lu::new(&x);
        if let Ok(lu) = lu {
            if lu.pivot_ratio() > 1e-3 {
                return x;
            }
        }
    }
}

/// Ratios `beta/alpha` in paired (nonincreasing) order: `shrunk` of them
/// in `[1.25, 4]`, the rest in `[0.15, 0.8]`, so `|alpha - beta| > 0.15`.
pub fn separated_ratios(rng: &mut ChaCha8Rng, p: usize, shrunk: usize) -> Vec<f64> {
    let mut r: Vec<f64> =
        (0..p).map(|j| if j < shrunk { rng.random_range(1.25..4.0) } else { rng.random_range(0.15..0.8) }).collect();
    r.sort_by(|a, b| b.partial_cmp(a).unwrap());
    r
}

/// `V = X A U1`, `Ve = X B U2` from explicit factors. Returns the factors
/// with `(V, Ve)`.
pub fn from_factors(
    x: Matrix<f64>,
    ratios: &[f64],
    u1: Matrix<f64>,
    u2: Matrix<f64>,
) -> (GsvdFactors<f64>, Matrix<f64>, Matrix<f64>) {
    let alphas: Vec<f64> = ratios.iter().map(|r| 1.0 / (1.0 + r * r).sqrt()).collect();
    let betas: Vec<f64> = ratios.iter().zip(&alphas).map(|(r, a)| r * a).collect();
    let x_inv = Lu::new(&x).unwrap().inverse().unwrap();
    let q = count_dominant(&alphas, &betas);
    let f = GsvdFactors { x, x_inv, alphas, betas, u1, u2, q };
    let v = f.reconstruct_v();
    let ve = f.reconstruct_ve();
    (f, v, ve)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
