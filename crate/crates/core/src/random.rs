//! Seeded random matrices.
//!
//! Every stochastic routine in the crate takes an explicit `u64` seed and draws
//! from ChaCha20 (a counter-based stream generator), so test vectors are
//! reproducible across platforms.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

pub type SeededRng = ChaCha20Rng;

pub fn rng_from_seed(seed: u64) -> SeededRng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn standard_normal_matrix<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    rng: &mut R,
) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Haar-distributed orthogonal `n x n` matrix: QR of a Gaussian matrix with
/// the diagonal of R made positive.
pub fn haar_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    haar_frame(n, n, rng)
}

/// `n x p` matrix with Haar-random orthonormal columns.
pub fn haar_frame<R: Rng + ?Sized>(n: usize, p: usize, rng: &mut R) -> DMatrix<f64> {
    if n == 0 || p == 0 {
        return DMatrix::zeros(n, p);
    }
    let g = standard_normal_matrix(n, p, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..p {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Random `±1` vector of length `n`.
pub fn random_signs<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n)
        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect()
}

/// Random symmetric positive definite matrix `U diag(λ) Uᵀ` with Haar `U` and
/// eigenvalues uniform in `[lo, hi]`.
pub fn random_spd<R: Rng + ?Sized>(n: usize, lo: f64, hi: f64, rng: &mut R) -> DMatrix<f64> {
    let u = haar_orthogonal(n, rng);
    let lambdas: Vec<f64> = (0..n).map(|_| rng.random_range(lo..=hi)).collect();
    crate::linalg::reconstruct_with(&u, &lambdas)
}
