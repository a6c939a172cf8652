//! Fixtures shared by the benchmarks.

use kdpp_core::random::{random_spd, rng_from_seed, standard_normal_matrix};
use kdpp_core::{KDppDistribution, KernelMatrix, SubsetIndex};

/// Seeded SPD kernel with eigenvalues in `[0.5, 3]`.
pub fn spd_kernel(n: usize, seed: u64) -> KernelMatrix {
    KernelMatrix::new(random_spd(n, 0.5, 3.0, &mut rng_from_seed(seed)))
        .expect("symmetric by construction")
}

/// Seeded Gaussian natural parameter.
pub fn gaussian_theta(n: usize, seed: u64) -> Vec<f64> {
    standard_normal_matrix(n, 1, &mut rng_from_seed(seed))
        .as_slice()
        .to_vec()
}

/// Seeded draws from the k-DPP of `diag(weights)`.
pub fn diagonal_draws(weights: &[f64], k: usize, count: usize, seed: u64) -> Vec<SubsetIndex> {
    let l = KernelMatrix::from_diagonal(weights).expect("diagonal is symmetric");
    KDppDistribution::new(&l, k)
        .expect("positive weights")
        .sample(count, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_seeded() {
        assert_eq!(spd_kernel(4, 1), spd_kernel(4, 1));
        assert_eq!(gaussian_theta(5, 2), gaussian_theta(5, 2));
        let d = diagonal_draws(&[1.0, 2.0, 3.0], 2, 10, 3);
        assert_eq!(d.len(), 10);
        assert!(d.iter().all(|a| a.len() == 2));
    }
}
