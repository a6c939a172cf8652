//! k-DPPs: the DPP conditioned on `|A| = k`.
//!
//! Two views are provided. [`KDppDistribution`] is the exact table
//! `P^k_L(A) = det(L_A) / Z_k(L)` for an arbitrary kernel. [`DiagonalKDpp`] is
//! the exponential family obtained with identity eigenvectors and eigenvalues
//! `e^θ`, where
//!
//! * `ψ_k(θ) = log e_k(e^θ)` is the log-partition function,
//! * `η = ∇ψ_k` are the inclusion probabilities,
//! * `G = ∇²ψ_k = diag(η) - ηηᵀ + Π` is the Fisher information, with `Π` the
//!   off-diagonal pair inclusion probabilities.
//!
//! All ESP evaluations shift `θ` by its maximum first; `e_k` is homogeneous of
//! degree `k`, so the shift comes back as `k · max θ`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{binomial, enumerate_subsets, esp, esp_row_skipping, SubsetIndex};
use crate::dpp::MAX_TABLE_N;
use crate::error::{DppError, Result};
use crate::linalg::{
    check_orthogonal, rank_and_nullspace, submatrix_det, symmetric_eigen, KernelMatrix,
    DEFAULT_RANK_TOL,
};
use crate::random::rng_from_seed;

/// Exact k-DPP over the stratum of size-`k` subsets in canonical order.
#[derive(Clone, Debug)]
pub struct KDppDistribution {
    kernel: KernelMatrix,
    k: usize,
    z_k: f64,
    subsets: Vec<SubsetIndex>,
    probs: Vec<f64>,
}

impl KDppDistribution {
    pub fn new(l: &KernelMatrix, k: usize) -> Result<Self> {
        let n = l.n();
        if k > n {
            return Err(DppError::domain(format!(
                "k = {k} exceeds ground set size {n}"
            )));
        }
        if n > MAX_TABLE_N {
            return Err(DppError::Capacity {
                what: "k-DPP table ground set",
                size: n,
                limit: MAX_TABLE_N,
            });
        }
        l.psd_spectrum()?;
        let subsets = enumerate_subsets(n, k)?;
        let m = l.matrix();
        let minors: Vec<f64> = subsets
            .par_iter()
            .map(|a| submatrix_det(m, a.elements(), a.elements()).max(0.0))
            .collect();
        let z_k: f64 = minors.iter().sum();
        let max_minor = minors.iter().fold(0.0f64, |a, &x| a.max(x));
        let threshold = (n * k) as f64 * 1e-14 * max_minor;
        if !(z_k > threshold) {
            return Err(DppError::DegenerateStratum { k, z_k, threshold });
        }
        let probs = minors.iter().map(|x| x / z_k).collect();
        Ok(Self {
            kernel: l.clone(),
            k,
            z_k,
            subsets,
            probs,
        })
    }

    pub fn kernel(&self) -> &KernelMatrix {
        &self.kernel
    }

    pub fn n(&self) -> usize {
        self.kernel.n()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// `Z_k(L) = Σ_{|A|=k} det(L_A)`.
    pub fn z_k(&self) -> f64 {
        self.z_k
    }

    pub fn subsets(&self) -> &[SubsetIndex] {
        &self.subsets
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn table(&self) -> impl Iterator<Item = (&SubsetIndex, f64)> + '_ {
        self.subsets.iter().zip(self.probs.iter().copied())
    }

    pub fn probability(&self, a: &SubsetIndex) -> Result<f64> {
        if a.len() != self.k {
            return Err(DppError::domain(format!(
                "subset {a} has size {}, stratum is k = {}",
                a.len(),
                self.k
            )));
        }
        if a.elements().iter().any(|&e| e >= self.n()) {
            return Err(DppError::domain(format!(
                "subset {a} outside 1..={}",
                self.n()
            )));
        }
        let a = SubsetIndex::new(self.n(), a.elements().to_vec())?;
        Ok(self.probs[a.rank()])
    }

    /// Total-variation distance `½ Σ |p(A) - q(A)|`.
    pub fn total_variation(&self, other: &KDppDistribution) -> Result<f64> {
        if self.n() != other.n() || self.k != other.k {
            return Err(DppError::domain(format!(
                "cannot compare (n={}, k={}) with (n={}, k={})",
                self.n(),
                self.k,
                other.n(),
                other.k
            )));
        }
        Ok(0.5
            * self
                .probs
                .iter()
                .zip(&other.probs)
                .map(|(p, q)| (p - q).abs())
                .sum::<f64>())
    }

    /// `count` independent draws by inverse-CDF lookup in the exact table.
    pub fn sample(&self, count: usize, seed: u64) -> Vec<SubsetIndex> {
        let mut cdf = Vec::with_capacity(self.probs.len());
        let mut acc = 0.0;
        for p in &self.probs {
            acc += p;
            cdf.push(acc);
        }
        let mut rng = rng_from_seed(seed);
        let last = self.probs.len() - 1;
        (0..count)
            .map(|_| {
                let u: f64 = rng.random::<f64>() * acc;
                let idx = cdf.partition_point(|&c| c <= u).min(last);
                self.subsets[idx].clone()
            })
            .collect()
    }
}

pub fn kdpp_distribution(l: &KernelMatrix, k: usize) -> Result<KDppDistribution> {
    KDppDistribution::new(l, k)
}

fn check_inner_k(n: usize, k: usize) -> Result<()> {
    if k == 0 || k >= n {
        return Err(DppError::domain(format!(
            "k must satisfy 1 <= k <= n-1 (n = {n}, k = {k})"
        )));
    }
    Ok(())
}

fn check_theta(theta: &[f64]) -> Result<()> {
    if theta.iter().any(|x| !x.is_finite()) {
        return Err(DppError::domain("theta has non-finite entries"));
    }
    Ok(())
}

/// `s = exp(θ - max θ)` and `max θ`.
fn shifted_weights(theta: &[f64]) -> (Vec<f64>, f64) {
    let shift = theta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (theta.iter().map(|t| (t - shift).exp()).collect(), shift)
}

/// Probability of `A` under `L(θ) = U diag(e^θ) Uᵀ` through the squared-minor
/// expansion `Σ_B det(U_{A,B})² exp(Σ_{i∈B} θ_i) / e_k(e^θ)`.
pub fn kdpp_cauchy_binet(
    u: &DMatrix<f64>,
    theta: &[f64],
    k: usize,
    a: &SubsetIndex,
) -> Result<f64> {
    let n = theta.len();
    if u.nrows() != n || u.ncols() != n {
        return Err(DppError::domain(format!(
            "U is {}x{}, theta has length {n}",
            u.nrows(),
            u.ncols()
        )));
    }
    check_orthogonal(u, 1e-9)?;
    check_inner_k(n, k)?;
    check_theta(theta)?;
    if a.len() != k || a.elements().iter().any(|&e| e >= n) {
        return Err(DppError::domain(format!(
            "subset {a} is not a {k}-subset of 1..={n}"
        )));
    }
    let (s, _) = shifted_weights(theta);
    let e_k = esp(&s, k)?.e(k);
    let total: f64 = enumerate_subsets(n, k)?
        .iter()
        .map(|b| {
            let d = submatrix_det(u, a.elements(), b.elements());
            d * d * b.elements().iter().map(|&i| s[i]).product::<f64>()
        })
        .sum();
    Ok(total / e_k)
}

/// Identifiable coordinates `θ̃_i = θ_i - θ_n`, `i < n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimalParam {
    pub theta_tilde: Vec<f64>,
}

pub fn to_minimal(theta: &[f64]) -> MinimalParam {
    match theta.split_last() {
        Some((&last, rest)) => MinimalParam {
            theta_tilde: rest.iter().map(|t| t - last).collect(),
        },
        None => MinimalParam {
            theta_tilde: Vec::new(),
        },
    }
}

/// Recovers `θ` from `θ̃` with the last coordinate pinned to `pin`.
pub fn from_minimal(param: &MinimalParam, pin: f64) -> Vec<f64> {
    param
        .theta_tilde
        .iter()
        .map(|t| t + pin)
        .chain(std::iter::once(pin))
        .collect()
}

/// `ψ_k(θ) = log e_k(e^{θ_1}, .., e^{θ_n})`.
pub fn log_partition(theta: &[f64], k: usize) -> Result<f64> {
    check_inner_k(theta.len(), k)?;
    check_theta(theta)?;
    let (s, shift) = shifted_weights(theta);
    let e_k = esp(&s, k)?.e(k);
    Ok(k as f64 * shift + e_k.ln())
}

fn nonzero_ek(s: &[f64], k: usize) -> Result<f64> {
    let e_k = esp(s, k)?.e(k);
    if !(e_k > 0.0) {
        return Err(DppError::domain(
            "e_k underflows to zero: theta spread too large for this k",
        ));
    }
    Ok(e_k)
}

/// `η_i = s_i e_{k-1}(s_{-i}) / e_k(s)`, the inclusion probabilities.
pub fn mean_parameter(theta: &[f64], k: usize) -> Result<Vec<f64>> {
    check_inner_k(theta.len(), k)?;
    check_theta(theta)?;
    let (s, _) = shifted_weights(theta);
    let e_k = nonzero_ek(&s, k)?;
    Ok((0..s.len())
        .map(|i| s[i] * esp_row_skipping(&s, k - 1, &[i])[k - 1] / e_k)
        .collect())
}

/// Fisher information of the diagonal k-DPP in `θ` together with its pieces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FisherMatrix {
    pub g: DMatrix<f64>,
    /// Mean parameter `η_i = P(i ∈ A)`.
    pub eta: Vec<f64>,
    /// `π_ij = P(i ∈ A, j ∈ A)` off the diagonal; zero on it.
    pub pair_probs: DMatrix<f64>,
}

impl FisherMatrix {
    pub fn eigenvalues(&self) -> Vec<f64> {
        symmetric_eigen(&self.g)
            .expect("Fisher matrix is symmetric")
            .lambdas
    }

    pub fn rank(&self) -> usize {
        rank_and_nullspace(&self.g, DEFAULT_RANK_TOL).rank
    }
}

pub fn fisher_information(theta: &[f64], k: usize) -> Result<FisherMatrix> {
    let n = theta.len();
    check_inner_k(n, k)?;
    check_theta(theta)?;
    let (s, _) = shifted_weights(theta);
    let e_k = nonzero_ek(&s, k)?;
    let eta: Vec<f64> = (0..n)
        .map(|i| s[i] * esp_row_skipping(&s, k - 1, &[i])[k - 1] / e_k)
        .collect();
    let mut pair_probs = DMatrix::zeros(n, n);
    if k >= 2 {
        for i in 0..n {
            for j in (i + 1)..n {
                let p = s[i] * s[j] * esp_row_skipping(&s, k - 2, &[i, j])[k - 2] / e_k;
                pair_probs[(i, j)] = p;
                pair_probs[(j, i)] = p;
            }
        }
    }
    let eta_v = DVector::from_column_slice(&eta);
    let mut g = &pair_probs - &eta_v * eta_v.transpose();
    for i in 0..n {
        g[(i, i)] = eta[i] * (1.0 - eta[i]);
    }
    Ok(FisherMatrix { g, eta, pair_probs })
}

/// The exponential-family k-DPP with identity eigenvectors and `λ = e^θ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagonalKDpp {
    pub theta: Vec<f64>,
    pub k: usize,
}

impl DiagonalKDpp {
    pub fn new(theta: Vec<f64>, k: usize) -> Result<Self> {
        check_inner_k(theta.len(), k)?;
        check_theta(&theta)?;
        Ok(Self { theta, k })
    }

    pub fn n(&self) -> usize {
        self.theta.len()
    }

    /// `s_i = e^{θ_i}`.
    pub fn weights(&self) -> Vec<f64> {
        self.theta.iter().map(|t| t.exp()).collect()
    }

    pub fn kernel(&self) -> Result<KernelMatrix> {
        KernelMatrix::from_diagonal(&self.weights())
    }

    pub fn log_partition(&self) -> f64 {
        log_partition(&self.theta, self.k).expect("validated on construction")
    }

    pub fn mean_parameter(&self) -> Result<Vec<f64>> {
        mean_parameter(&self.theta, self.k)
    }

    pub fn fisher_information(&self) -> Result<FisherMatrix> {
        fisher_information(&self.theta, self.k)
    }

    pub fn minimal(&self) -> MinimalParam {
        to_minimal(&self.theta)
    }

    /// `exp(⟨T(A), θ⟩ - ψ_k(θ))`.
    pub fn probability(&self, a: &SubsetIndex) -> Result<f64> {
        if a.len() != self.k || a.elements().iter().any(|&e| e >= self.n()) {
            return Err(DppError::domain(format!(
                "subset {a} is not a {}-subset of 1..={}",
                self.k,
                self.n()
            )));
        }
        let dot: f64 = a.elements().iter().map(|&i| self.theta[i]).sum();
        Ok((dot - self.log_partition()).exp())
    }

    pub fn distribution(&self) -> Result<KDppDistribution> {
        KDppDistribution::new(&self.kernel()?, self.k)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetryReport {
    pub max_deviation: f64,
    pub passed: bool,
}

/// Compares `G^{(k)}(θ)` with `G^{(n-k)}(-θ)`; passes at `1e-10`.
pub fn fisher_symmetry_check(theta: &[f64], k: usize) -> Result<SymmetryReport> {
    let n = theta.len();
    let g = fisher_information(theta, k)?;
    let neg: Vec<f64> = theta.iter().map(|t| -t).collect();
    let h = fisher_information(&neg, n - k)?;
    let max_deviation = (&g.g - &h.g).amax();
    Ok(SymmetryReport {
        max_deviation,
        passed: max_deviation <= 1e-10,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimalityReport {
    pub n: usize,
    pub k: usize,
    /// Column rank of rows `[T_1(A), .., T_{n-1}(A), 1]`; `n` means minimal.
    pub minimal_design_rank: usize,
    /// Column rank of rows `[T_1(A), .., T_n(A), 1]`; `n` (one short of full)
    /// reflects the single relation `Σ T_i = k`.
    pub full_design_rank: usize,
    pub passed: bool,
}

pub fn minimality_check(n: usize, k: usize) -> Result<MinimalityReport> {
    check_inner_k(n, k)?;
    let subsets = enumerate_subsets(n, k)?;
    let rows = subsets.len();
    let full = DMatrix::from_fn(rows, n + 1, |r, c| {
        if c == n || subsets[r].contains(c) {
            1.0
        } else {
            0.0
        }
    });
    let minimal = full.clone().remove_column(n - 1);
    let minimal_design_rank = rank_and_nullspace(&minimal, DEFAULT_RANK_TOL).rank;
    let full_design_rank = rank_and_nullspace(&full, DEFAULT_RANK_TOL).rank;
    debug_assert_eq!(rows, binomial(n, k));
    Ok(MinimalityReport {
        n,
        k,
        minimal_design_rank,
        full_design_rank,
        passed: minimal_design_rank == n && full_design_rank == n,
    })
}
