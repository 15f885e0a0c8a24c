//! Space-filling designs on the canonical cube.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random Latin hypercube design with `n` points in `[-1, 1]^d`.
///
/// Each column is a random permutation of the `n` strata `[-1 + 2i/n, -1 + 2(i+1)/n)`
/// with a uniform position inside each stratum. Deterministic for a given seed.
pub fn latin_hypercube(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut design = vec![vec![0.0; d]; n];
    let width = 2.0 / n as f64;
    let mut perm: Vec<usize> = (0..n).collect();
    for j in 0..d {
        perm.shuffle(&mut rng);
        for (row, &cell) in design.iter_mut().zip(&perm) {
            let jitter: f64 = rng.random();
            row[j] = (-1.0 + width * (cell as f64 + jitter)).min(1.0);
        }
    }
    design
}

/// `m` uniform random points in `[-1, 1]^d`.
pub fn uniform_points(m: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..m)
        .map(|_| (0..d).map(|_| rng.random_range(-1.0..=1.0)).collect())
        .collect()
}

/// `m` equally spaced points from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, m: usize) -> Vec<f64> {
    match m {
        0 => vec![],
        1 => vec![a],
        _ => (0..m)
            .map(|i| {
                if i == m - 1 {
                    b
                } else {
                    a + (b - a) * i as f64 / (m - 1) as f64
                }
            })
            .collect(),
    }
}

/// True when every column has exactly one point per stratum.
pub fn is_latin(design: &[Vec<f64>]) -> bool {
    let n = design.len();
    if n == 0 {
        return true;
    }
    let d = design[0].len();
    (0..d).all(|j| {
        let mut seen = vec![false; n];
        design.iter().all(|row| {
            let cell = (((row[j] + 1.0) / 2.0 * n as f64).floor() as usize).min(n - 1);
            !std::mem::replace(&mut seen[cell], true)
        })
    })
}
