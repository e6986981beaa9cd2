//! Seeded random inputs for the oracle and consistency suites.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `m` sorted levels drawn uniformly from `[lo, hi)`.
pub fn random_levels<R: Rng>(rng: &mut R, m: usize, lo: f64, hi: f64) -> Vec<f64> {
    let mut levels: Vec<f64> = (0..m).map(|_| rng.gen_range(lo..hi)).collect();
    levels.sort_by(f64::total_cmp);
    levels
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_and_sorted() {
        let a = random_levels(&mut rng(5), 10, 0.0, 3.0);
        let b = random_levels(&mut rng(5), 10, 0.0, 3.0);
        assert_eq!(a, b);
        assert!(a.windows(2).all(|w| w[0] <= w[1]));
        assert!(a.iter().all(|&x| (0.0..3.0).contains(&x)));
        assert_ne!(a, random_levels(&mut rng(6), 10, 0.0, 3.0));
    }
}
