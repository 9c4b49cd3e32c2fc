//! Seeded generators for test systems and starting points.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::system::PwlPotential;

/// Deterministic generator for run `stream` of experiment `seed`.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `m` pieces in dimension `n` with drifts and offsets uniform in `[-1, 1]`.
pub fn random_system<R: Rng>(rng: &mut R, n: usize, m: usize) -> PwlPotential {
    loop {
        let pieces: Vec<(Vec<f64>, f64)> = (0..m)
            .map(|_| {
                (
                    (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect(),
                    rng.random_range(-1.0..=1.0),
                )
            })
            .collect();
        if let Ok(p) = PwlPotential::new(n, pieces, None) {
            if p.num_pieces() == m {
                return p;
            }
        }
    }
}

/// Random system with `1 <= n <= max_n` and `1 <= m <= max_m`.
pub fn random_small_system<R: Rng>(rng: &mut R, max_n: usize, max_m: usize) -> PwlPotential {
    let n = rng.random_range(1..=max_n);
    let m = rng.random_range(1..=max_m);
    random_system(rng, n, m)
}

pub fn random_point<R: Rng>(rng: &mut R, n: usize, radius: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-radius..=radius)).collect()
}
