//! The unconditional DPP `P_L(A) = det(L_A) / det(L + I)`.

use serde::{Deserialize, Serialize};

use crate::combinatorics::{enumerate_power_set, esp, SubsetIndex};
use crate::error::{DppError, Result};
use crate::linalg::{principal_minor, reconstruct_with, KernelMatrix, SpectralForm, PSD_TOL};

/// Largest ground set for which full probability tables are built.
pub const MAX_TABLE_N: usize = 20;

/// Clamps round-off negatives of a PSD spectrum to zero; rejects real negatives.
pub(crate) fn clamp_spectrum(lambdas: &[f64]) -> Result<Vec<f64>> {
    let scale = lambdas.iter().fold(1.0f64, |a, x| a.max(x.abs()));
    lambdas
        .iter()
        .map(|&x| {
            if !x.is_finite() {
                Err(DppError::domain("non-finite eigenvalue"))
            } else if x < -PSD_TOL * scale {
                Err(DppError::NotPsd { min_eigenvalue: x })
            } else {
                Ok(x.max(0.0))
            }
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct DppDistribution {
    kernel: KernelMatrix,
    spectrum: SpectralForm,
    log_normalizer: f64,
}

impl DppDistribution {
    pub fn new(kernel: KernelMatrix) -> Result<Self> {
        let spectrum = kernel.psd_spectrum()?;
        let lambdas = clamp_spectrum(&spectrum.lambdas)?;
        let log_normalizer = lambdas.iter().map(|x| x.ln_1p()).sum();
        Ok(Self {
            kernel,
            spectrum,
            log_normalizer,
        })
    }

    pub fn kernel(&self) -> &KernelMatrix {
        &self.kernel
    }

    pub fn spectrum(&self) -> &SpectralForm {
        &self.spectrum
    }

    /// `log det(L + I)`.
    pub fn log_normalizer(&self) -> f64 {
        self.log_normalizer
    }

    pub fn probability(&self, a: &SubsetIndex) -> Result<f64> {
        let minor = principal_minor(&self.kernel, a)?;
        Ok(minor.max(0.0) * (-self.log_normalizer).exp())
    }

    /// Probabilities of all `2^n` subsets, stratum by stratum.
    pub fn table(&self) -> Result<Vec<(SubsetIndex, f64)>> {
        let n = self.kernel.n();
        if n > MAX_TABLE_N {
            return Err(DppError::Capacity {
                what: "DPP table ground set",
                size: n,
                limit: MAX_TABLE_N,
            });
        }
        enumerate_power_set(n)?
            .into_iter()
            .map(|a| {
                let p = self.probability(&a)?;
                Ok((a, p))
            })
            .collect()
    }

    pub fn cardinality_law(&self) -> Result<CardinalityLaw> {
        cardinality_law(&self.spectrum.lambdas)
    }

    pub fn marginal_kernel(&self) -> Result<KernelMatrix> {
        marginal_kernel_from_spectrum(&self.spectrum)
    }
}

pub fn dpp_probability(l: &KernelMatrix, a: &SubsetIndex) -> Result<f64> {
    DppDistribution::new(l.clone())?.probability(a)
}

/// Distribution of `|A|`: `P(|A| = k) = e_k(λ) / Π(1 + λ_i)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CardinalityLaw {
    pub probs: Vec<f64>,
}

impl CardinalityLaw {
    pub fn prob(&self, k: usize) -> f64 {
        self.probs.get(k).copied().unwrap_or(0.0)
    }

    pub fn mean(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(k, p)| k as f64 * p)
            .sum()
    }
}

pub fn cardinality_law(lambdas: &[f64]) -> Result<CardinalityLaw> {
    let lambdas = clamp_spectrum(lambdas)?;
    let n = lambdas.len();
    let table = esp(&lambdas, n)?;
    let denom: f64 = lambdas.iter().map(|x| 1.0 + x).product();
    Ok(CardinalityLaw {
        probs: table.full_row().iter().map(|e| e / denom).collect(),
    })
}

/// `K = U diag(λ / (1 + λ)) Uᵀ`, computed from the spectral form of `L`.
pub fn marginal_kernel(l: &KernelMatrix) -> Result<KernelMatrix> {
    marginal_kernel_from_spectrum(&l.psd_spectrum()?)
}

pub fn marginal_kernel_from_spectrum(spec: &SpectralForm) -> Result<KernelMatrix> {
    let mu: Vec<f64> = clamp_spectrum(&spec.lambdas)?
        .iter()
        .map(|x| x / (1.0 + x))
        .collect();
    KernelMatrix::new(reconstruct_with(&spec.u, &mu))
}

/// `P(S ⊆ A) = det(K_S)`.
pub fn inclusion_probability(l: &KernelMatrix, s: &SubsetIndex) -> Result<f64> {
    principal_minor(&marginal_kernel(l)?, s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::enumerate_subsets;
    use crate::kdpp::KDppDistribution;
    use crate::random::{random_spd, rng_from_seed};
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;

    fn sub(n: usize, one_based: &[usize]) -> SubsetIndex {
        SubsetIndex::from_one_based(n, one_based).unwrap()
    }

    fn diag(d: &[f64]) -> KernelMatrix {
        KernelMatrix::from_diagonal(d).unwrap()
    }

    #[test]
    fn probability_examples() {
        assert_abs_diff_eq!(
            dpp_probability(&diag(&[1.0]), &sub(1, &[1])).unwrap(),
            0.5,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            dpp_probability(&KernelMatrix::identity(2), &SubsetIndex::empty(2)).unwrap(),
            0.25,
            epsilon = 1e-15
        );
        let d = DppDistribution::new(diag(&[1.0, 2.0, 3.0])).unwrap();
        assert_abs_diff_eq!(
            d.probability(&sub(3, &[1, 3])).unwrap(),
            0.125,
            epsilon = 1e-15
        );
        let total: f64 = d.table().unwrap().iter().map(|(_, p)| p).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn non_psd_rejected() {
        let l = diag(&[1.0, -0.5]);
        assert!(matches!(
            DppDistribution::new(l.clone()),
            Err(DppError::NotPsd { .. })
        ));
        assert!(marginal_kernel(&l).is_err());
        assert!(cardinality_law(&[1.0, -1.0]).is_err());
    }

    #[test]
    fn cardinality_examples() {
        let c = cardinality_law(&[1.0, 1.0, 1.0]).unwrap();
        for (got, want) in c.probs.iter().zip([0.125, 0.375, 0.375, 0.125]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-15);
        }
        assert_eq!(
            cardinality_law(&[0.0, 0.0]).unwrap().probs,
            vec![1.0, 0.0, 0.0]
        );
        assert_eq!(cardinality_law(&[1.0]).unwrap().probs, vec![0.5, 0.5]);
    }

    #[test]
    fn marginal_kernel_examples() {
        let k = marginal_kernel(&KernelMatrix::identity(3)).unwrap();
        assert!((k.matrix() - DMatrix::identity(3, 3) * 0.5).amax() < 1e-15);
        let k = marginal_kernel(&diag(&[1.0, 3.0])).unwrap();
        assert!(
            (k.matrix() - DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.75])).amax() < 1e-15
        );

        let l = KernelMatrix::from_row_major(2, &[2.0, 1.0, 1.0, 2.0]).unwrap();
        let k = marginal_kernel(&l).unwrap();
        let s = crate::linalg::eig_sym(&k);
        assert_abs_diff_eq!(s.lambdas[0], 0.75, epsilon = 1e-14);
        assert_abs_diff_eq!(s.lambdas[1], 0.5, epsilon = 1e-14);
        // K (L + I) = L
        let lhs = k.matrix() * (l.matrix() + DMatrix::identity(2, 2));
        assert!((lhs - l.matrix()).amax() < 1e-14);
    }

    #[test]
    fn inclusion_examples() {
        let i3 = KernelMatrix::identity(3);
        assert_abs_diff_eq!(
            inclusion_probability(&i3, &sub(3, &[1])).unwrap(),
            0.5,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            inclusion_probability(&i3, &sub(3, &[1, 2])).unwrap(),
            0.25,
            epsilon = 1e-15
        );
        let l = diag(&[1.0, 2.0, 3.0]);
        assert_abs_diff_eq!(
            inclusion_probability(&l, &sub(3, &[2, 3])).unwrap(),
            0.5,
            epsilon = 1e-15
        );
    }

    #[test]
    fn brute_force_aggregations() {
        let mut rng = rng_from_seed(21);
        for n in 1..=8 {
            let l = KernelMatrix::new(random_spd(n, 0.05, 4.0, &mut rng)).unwrap();
            let d = DppDistribution::new(l.clone()).unwrap();
            let table = d.table().unwrap();
            let law = d.cardinality_law().unwrap();
            let mut by_size = vec![0.0; n + 1];
            for (a, p) in &table {
                by_size[a.len()] += p;
            }
            for k in 0..=n {
                assert!((by_size[k] - law.prob(k)).abs() <= 1e-10);
            }
            for k in 1..=n.min(3) {
                for s in enumerate_subsets(n, k).unwrap() {
                    let brute: f64 = table
                        .iter()
                        .filter(|(a, _)| s.is_subset_of(a))
                        .map(|(_, p)| p)
                        .sum();
                    assert!((inclusion_probability(&l, &s).unwrap() - brute).abs() <= 1e-10);
                }
            }
        }
    }

    #[test]
    fn stratification_identity() {
        let mut rng = rng_from_seed(22);
        for n in [3usize, 5, 7] {
            let l = KernelMatrix::new(random_spd(n, 0.1, 3.0, &mut rng)).unwrap();
            let d = DppDistribution::new(l.clone()).unwrap();
            let law = d.cardinality_law().unwrap();
            for k in 0..=n {
                let kd = KDppDistribution::new(&l, k).unwrap();
                for (a, pk) in kd.table() {
                    let full = d.probability(a).unwrap();
                    assert!((full - law.prob(k) * pk).abs() <= 1e-10);
                }
            }
        }
    }
}
