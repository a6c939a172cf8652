//! Non-identifiability of k-DPPs.
//!
//! Two kinds of invisible changes to a kernel are covered here:
//!
//! * exact transforms `M = (DUQ)(cΛ)(DUQ)ᵀ = cDLD` (scale, sign flips, and
//!   rotations inside eigenspaces), which leave every k-DPP probability fixed;
//! * first-order directions `H ∈ Sym(n)` whose score
//!   `S_H(A) = tr(L_A⁻¹H_A) - E[tr(L_S⁻¹H_S)]` vanishes on the whole stratum.
//!
//! The second set is `V = Φ⁻¹(R·1)` for the trace map
//! `Φ(H) = (tr(L_A⁻¹H_A))_A`. Because `Φ(L) = k·1`, the all-ones vector is in
//! the range of `Φ` and `dim V = m - rank Φ + 1` with `m = n(n+1)/2`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{binomial, enumerate_subsets, SubsetIndex};
use crate::error::{DppError, Result};
use crate::kdpp::KDppDistribution;
use crate::linalg::{
    check_orthogonal, cluster_eigenvalues, rank_and_nullspace, reconstruct_with, sym_basis_labels,
    KernelMatrix, SpectralForm, SymDirection, DEFAULT_RANK_TOL,
};
use crate::random::{haar_orthogonal, rng_from_seed};

/// Scale `c`, sign flips `D` and an eigenspace rotation `Q` with `QΛ = ΛQ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvarianceTransform {
    pub scale_c: f64,
    pub sign_flips: Vec<f64>,
    pub rotation_q: DMatrix<f64>,
}

impl InvarianceTransform {
    pub fn new(scale_c: f64, sign_flips: Vec<f64>, rotation_q: DMatrix<f64>) -> Result<Self> {
        if !(scale_c > 0.0) || !scale_c.is_finite() {
            return Err(DppError::domain(format!(
                "scale must be positive, got {scale_c}"
            )));
        }
        if let Some(bad) = sign_flips.iter().find(|&&d| d != 1.0 && d != -1.0) {
            return Err(DppError::domain(format!(
                "sign flips must be ±1, got {bad}"
            )));
        }
        if rotation_q.nrows() != sign_flips.len() {
            return Err(DppError::domain(format!(
                "rotation is {}x{}, sign vector has length {}",
                rotation_q.nrows(),
                rotation_q.ncols(),
                sign_flips.len()
            )));
        }
        check_orthogonal(&rotation_q, 1e-10)?;
        Ok(Self {
            scale_c,
            sign_flips,
            rotation_q,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            scale_c: 1.0,
            sign_flips: vec![1.0; n],
            rotation_q: DMatrix::identity(n, n),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransformedKernel {
    /// `(DUQ)(cΛ)(DUQ)ᵀ`.
    pub m: KernelMatrix,
    /// `c D L D`, the same matrix in closed form.
    pub closed_form: KernelMatrix,
}

pub fn apply_invariance(spec: &SpectralForm, t: &InvarianceTransform) -> Result<TransformedKernel> {
    let n = spec.n();
    if t.sign_flips.len() != n {
        return Err(DppError::domain(format!(
            "transform acts on dimension {}, spectrum has {n}",
            t.sign_flips.len()
        )));
    }
    let lam = DMatrix::from_diagonal(&DVector::from_column_slice(&spec.lambdas));
    let q = &t.rotation_q;
    let residual = (q * &lam * q.transpose() - &lam).amax();
    let scale = spec.lambdas.iter().fold(1.0f64, |a, x| a.max(x.abs()));
    if residual > 1e-9 * scale {
        return Err(DppError::domain(format!(
            "rotation does not commute with the spectrum (residual {residual:e})"
        )));
    }
    let d = DMatrix::from_diagonal(&DVector::from_column_slice(&t.sign_flips));
    let duq = &d * &spec.u * q;
    let scaled: Vec<f64> = spec.lambdas.iter().map(|x| t.scale_c * x).collect();
    let m = KernelMatrix::new(reconstruct_with(&duq, &scaled))?;
    let closed = (&d * spec.reconstruct() * &d) * t.scale_c;
    let closed_form = KernelMatrix::new((&closed + closed.transpose()) * 0.5)?;
    Ok(TransformedKernel { m, closed_form })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvarianceCheck {
    pub total_variation: f64,
    pub passed: bool,
}

/// TV distance between the k-DPPs of `l` and `m`; passes at `1e-10`.
pub fn check_kdpp_invariance(
    l: &KernelMatrix,
    m: &KernelMatrix,
    k: usize,
) -> Result<InvarianceCheck> {
    let tv = KDppDistribution::new(l, k)?.total_variation(&KDppDistribution::new(m, k)?)?;
    Ok(InvarianceCheck {
        total_variation: tv,
        passed: tv <= 1e-10,
    })
}

/// Block-diagonal orthogonal matrix with an independent Haar block on each
/// eigenvalue cluster of a descending spectrum. Commutes with `diag(lambdas)`.
pub fn sample_commuting_rotation(lambdas: &[f64], seed: u64, cluster_tol: f64) -> DMatrix<f64> {
    let n = lambdas.len();
    let mut rng = rng_from_seed(seed);
    let mut q = DMatrix::zeros(n, n);
    for group in cluster_eigenvalues(lambdas, cluster_tol) {
        let start = group[0];
        let block = haar_orthogonal(group.len(), &mut rng);
        q.view_mut((start, start), (group.len(), group.len()))
            .copy_from(&block);
    }
    q
}

/// `L_A⁻¹` for every subset, by Cholesky.
fn restricted_inverses(l: &KernelMatrix, subsets: &[SubsetIndex]) -> Result<Vec<DMatrix<f64>>> {
    let m = l.matrix();
    subsets
        .par_iter()
        .map(|a| {
            let e = a.elements();
            let k = e.len();
            let sub = DMatrix::from_fn(k, k, |i, j| m[(e[i], e[j])]);
            sub.cholesky()
                .map(|c| c.inverse())
                .ok_or_else(|| DppError::domain(format!("principal submatrix on {a} is singular")))
        })
        .collect()
}

fn trace_product(inv: &DMatrix<f64>, h: &DMatrix<f64>, a: &SubsetIndex) -> f64 {
    let e = a.elements();
    let mut t = 0.0;
    for (i, &ei) in e.iter().enumerate() {
        for (j, &ej) in e.iter().enumerate() {
            t += inv[(i, j)] * h[(ej, ei)];
        }
    }
    t
}

fn check_same_dim(l: &KernelMatrix, h: &SymDirection) -> Result<()> {
    if l.n() != h.n() {
        return Err(DppError::domain(format!(
            "direction has dimension {}, kernel has {}",
            h.n(),
            l.n()
        )));
    }
    Ok(())
}

/// `S_H(A; L)` for every `A` in the stratum, in canonical order.
pub fn score(l: &KernelMatrix, h: &SymDirection, k: usize) -> Result<Vec<f64>> {
    check_same_dim(l, h)?;
    l.pd_spectrum()?;
    let dist = KDppDistribution::new(l, k)?;
    let inverses = restricted_inverses(l, dist.subsets())?;
    let traces: Vec<f64> = dist
        .subsets()
        .iter()
        .zip(&inverses)
        .map(|(a, inv)| trace_product(inv, h.matrix(), a))
        .collect();
    let expectation: f64 = traces.iter().zip(dist.probs()).map(|(t, p)| t * p).sum();
    Ok(traces.iter().map(|t| t - expectation).collect())
}

/// The linear map `H ↦ (tr(L_A⁻¹H_A))_A` as a `C(n,k) x m` matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhiMap {
    pub n: usize,
    pub k: usize,
    pub matrix: DMatrix<f64>,
    /// Column labels, see [`sym_basis_labels`].
    pub basis_labels: Vec<(usize, usize)>,
    pub subsets: Vec<SubsetIndex>,
}

impl PhiMap {
    pub fn apply(&self, h: &SymDirection) -> Result<Vec<f64>> {
        if h.n() != self.n {
            return Err(DppError::domain("direction dimension does not match Φ"));
        }
        let v = DVector::from_vec(h.basis_coords());
        Ok((&self.matrix * v).iter().copied().collect())
    }
}

pub fn build_phi(l: &KernelMatrix, k: usize) -> Result<PhiMap> {
    let n = l.n();
    if k == 0 || k > n {
        return Err(DppError::domain(format!(
            "k must satisfy 1 <= k <= n (n = {n}, k = {k})"
        )));
    }
    l.pd_spectrum()?;
    let subsets = enumerate_subsets(n, k)?;
    let inverses = restricted_inverses(l, &subsets)?;
    let basis_labels = sym_basis_labels(n);
    let mut column_of = DMatrix::<usize>::zeros(n, n);
    for (c, &(i, j)) in basis_labels.iter().enumerate() {
        column_of[(i, j)] = c;
        column_of[(j, i)] = c;
    }
    let mut matrix = DMatrix::zeros(subsets.len(), basis_labels.len());
    for (r, (a, inv)) in subsets.iter().zip(&inverses).enumerate() {
        let e = a.elements();
        for (p, &ep) in e.iter().enumerate() {
            matrix[(r, column_of[(ep, ep)])] = inv[(p, p)];
            for (q, &eq) in e.iter().enumerate().skip(p + 1) {
                matrix[(r, column_of[(ep, eq)])] = 2.0 * inv[(p, q)];
            }
        }
    }
    Ok(PhiMap {
        n,
        k,
        matrix,
        basis_labels,
        subsets,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentifiabilityReport {
    pub n: usize,
    pub k: usize,
    /// `n(n+1)/2`.
    pub m: usize,
    pub num_subsets: usize,
    pub phi_rank: usize,
    pub phi_singular_values: Vec<f64>,
    pub rank_tolerance: f64,
    /// `m - rank Φ + 1`.
    pub dim_v: usize,
    /// `max(1, m - C(n,k) + 1)`.
    pub lower_bound: usize,
    /// Nullspace of `Φ` (unit coordinate vectors) followed by `L / |L|`.
    pub basis_v: Vec<SymDirection>,
    pub exceeds_scale_cone: bool,
}

pub fn identifiability_report(l: &KernelMatrix, k: usize) -> Result<IdentifiabilityReport> {
    let n = l.n();
    let phi = build_phi(l, k)?;
    let m = phi.basis_labels.len();
    let num_subsets = binomial(n, k);
    let rank = rank_and_nullspace(&phi.matrix, DEFAULT_RANK_TOL);
    let dim_v = m - rank.rank + 1;
    let lower_bound = (m as i64 - num_subsets as i64 + 1).max(1) as usize;

    let mut basis_v = rank
        .nullspace_basis
        .iter()
        .map(|v| SymDirection::from_basis_coords(n, v))
        .collect::<Result<Vec<_>>>()?;
    let l_coords = SymDirection::new(l.matrix().clone())?.basis_coords();
    let norm = l_coords.iter().map(|x| x * x).sum::<f64>().sqrt();
    let l_unit: Vec<f64> = l_coords.iter().map(|x| x / norm).collect();
    basis_v.push(SymDirection::from_basis_coords(n, &l_unit)?);
    debug_assert_eq!(basis_v.len(), dim_v);

    Ok(IdentifiabilityReport {
        n,
        k,
        m,
        num_subsets,
        phi_rank: rank.rank,
        phi_singular_values: rank.singular_values,
        rank_tolerance: rank.tolerance_used,
        dim_v,
        lower_bound,
        basis_v,
        exceeds_scale_cone: dim_v >= 2,
    })
}

/// TV distances along `L + tH` and the least-squares slope of `log TV` against
/// `log t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub steps: Vec<f64>,
    pub total_variations: Vec<f64>,
    /// Fitted exponent; `+∞` when fewer than two distances rise above
    /// [`DecayReport::NOISE_FLOOR`] (no measurable change at any step).
    pub exponent: f64,
}

impl DecayReport {
    pub const NOISE_FLOOR: f64 = 1e-13;
}

pub fn tv_decay(
    l: &KernelMatrix,
    h: &SymDirection,
    k: usize,
    steps: &[f64],
) -> Result<DecayReport> {
    check_same_dim(l, h)?;
    let base = KDppDistribution::new(l, k)?;
    let total_variations = steps
        .iter()
        .map(|&t| {
            let moved = KernelMatrix::new(l.matrix() + h.matrix() * t)?;
            base.total_variation(&KDppDistribution::new(&moved, k)?)
        })
        .collect::<Result<Vec<f64>>>()?;
    let pts: Vec<(f64, f64)> = steps
        .iter()
        .zip(&total_variations)
        .filter(|(_, &tv)| tv > DecayReport::NOISE_FLOOR)
        .map(|(&t, &tv)| (t.ln(), tv.ln()))
        .collect();
    let exponent = if pts.len() < 2 {
        f64::INFINITY
    } else {
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    };
    Ok(DecayReport {
        steps: steps.to_vec(),
        total_variations,
        exponent,
    })
}

/// `H_ρ = -ρ I + ρ 11ᵀ`, admissible for `-1/(n-1) < ρ < 1`.
pub fn h_rho(n: usize, rho: f64) -> Result<SymDirection> {
    let lower = if n > 1 {
        -1.0 / (n as f64 - 1.0)
    } else {
        f64::NEG_INFINITY
    };
    if !(rho > lower && rho < 1.0) {
        return Err(DppError::domain(format!(
            "rho = {rho} outside the admissible interval ({lower}, 1)"
        )));
    }
    SymDirection::new(DMatrix::from_fn(
        n,
        n,
        |i, j| if i == j { 0.0 } else { rho },
    ))
}

/// Every `k x k` principal minor of `I + H_ρ`: `(1-ρ)^{k-1} (1+(k-1)ρ)`.
pub fn h_rho_minor(k: usize, rho: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    (1.0 - rho).powi(k as i32 - 1) * (1.0 + (k as f64 - 1.0) * rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eig_sym, principal_minor, DEFAULT_CLUSTER_TOL};
    use crate::random::{random_signs, random_spd, standard_normal_matrix};
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn spd(n: usize, seed: u64) -> KernelMatrix {
        KernelMatrix::new(random_spd(n, 0.5, 3.0, &mut rng_from_seed(seed))).unwrap()
    }

    /// Rank by Gaussian elimination with partial pivoting.
    fn elimination_rank(mut a: DMatrix<f64>, tol: f64) -> usize {
        let (rows, cols) = a.shape();
        let mut rank = 0;
        for c in 0..cols {
            if rank == rows {
                break;
            }
            let (piv, val) = (rank..rows)
                .map(|r| (r, a[(r, c)].abs()))
                .fold((rank, -1.0), |b, x| if x.1 > b.1 { x } else { b });
            if val <= tol {
                continue;
            }
            a.swap_rows(rank, piv);
            for r in 0..rows {
                if r != rank {
                    let f = a[(r, c)] / a[(rank, c)];
                    for cc in c..cols {
                        let v = a[(rank, cc)];
                        a[(r, cc)] -= f * v;
                    }
                }
            }
            rank += 1;
        }
        rank
    }

    #[test]
    fn identity_transform_is_identity() {
        let l = spd(4, 1);
        let out = apply_invariance(&eig_sym(&l), &InvarianceTransform::identity(4)).unwrap();
        assert!((out.m.matrix() - l.matrix()).amax() <= 1e-12);
    }

    #[test]
    fn transforms_of_identity_kernel() {
        let spec = eig_sym(&KernelMatrix::identity(3).scaled(1.0));
        let q = haar_orthogonal(3, &mut rng_from_seed(2));
        let t = InvarianceTransform::new(2.0, vec![1.0, -1.0, 1.0], q).unwrap();
        let out = apply_invariance(&spec, &t).unwrap();
        assert!((out.m.matrix() - DMatrix::identity(3, 3) * 2.0).amax() <= 1e-12);
    }

    #[test]
    fn transform_matches_closed_form() {
        let mut rng = rng_from_seed(3);
        let l = spd(4, 4);
        let spec = eig_sym(&l);
        let q = sample_commuting_rotation(&spec.lambdas, 5, DEFAULT_CLUSTER_TOL);
        let d = random_signs(4, &mut rng);
        let t = InvarianceTransform::new(3.0, d.clone(), q).unwrap();
        let out = apply_invariance(&spec, &t).unwrap();
        let dm = DMatrix::from_diagonal(&DVector::from_vec(d));
        let oracle = &dm * l.matrix() * &dm * 3.0;
        assert!((out.m.matrix() - &oracle).amax() <= 1e-9);
        assert!((out.closed_form.matrix() - &oracle).amax() <= 1e-12);
    }

    #[test]
    fn non_commuting_rotation_rejected() {
        let l = KernelMatrix::from_diagonal(&[3.0, 2.0, 1.0]).unwrap();
        let q = haar_orthogonal(3, &mut rng_from_seed(6));
        let t = InvarianceTransform::new(1.0, vec![1.0; 3], q).unwrap();
        assert!(matches!(
            apply_invariance(&eig_sym(&l), &t),
            Err(DppError::Domain(_))
        ));
        assert!(InvarianceTransform::new(0.0, vec![1.0], DMatrix::identity(1, 1)).is_err());
        assert!(InvarianceTransform::new(1.0, vec![0.5], DMatrix::identity(1, 1)).is_err());
    }

    #[test]
    fn invariance_check_examples() {
        let mut rng = rng_from_seed(7);
        let l = spd(5, 8);
        let d = DMatrix::from_diagonal(&DVector::from_vec(random_signs(5, &mut rng)));
        let m = KernelMatrix::new(&d * l.matrix() * &d * 7.3).unwrap();
        assert!(check_kdpp_invariance(&l, &m, 2).unwrap().passed);

        let l = KernelMatrix::from_diagonal(&[1.0, 2.0, 3.0]).unwrap();
        let shifted = KernelMatrix::from_diagonal(&[1.1, 2.1, 3.1]).unwrap();
        let r = check_kdpp_invariance(&l, &shifted, 2).unwrap();
        assert!(r.total_variation > 0.0 && !r.passed);

        let r = check_kdpp_invariance(
            &KernelMatrix::identity(3),
            &KernelMatrix::identity(3).scaled(5.0),
            2,
        )
        .unwrap();
        assert_eq!(r.total_variation, 0.0);
    }

    #[test]
    fn commuting_rotation_shapes() {
        let q = sample_commuting_rotation(&[2.0, 1.0, 0.0], 9, DEFAULT_CLUSTER_TOL);
        for i in 0..3 {
            for j in 0..3 {
                if i == j {
                    assert_eq!(q[(i, j)].abs(), 1.0);
                } else {
                    assert_eq!(q[(i, j)], 0.0);
                }
            }
        }
        let lam = DMatrix::identity(3, 3);
        let q = sample_commuting_rotation(&[1.0, 1.0, 1.0], 10, DEFAULT_CLUSTER_TOL);
        assert!((q.transpose() * &q - &lam).amax() <= 1e-12);
        assert!((&q * &lam * q.transpose() - &lam).amax() <= 1e-12);

        let lam = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 1.0, 1.0]));
        let q = sample_commuting_rotation(&[3.0, 1.0, 1.0], 11, DEFAULT_CLUSTER_TOL);
        assert_eq!(q[(0, 0)].abs(), 1.0);
        assert_eq!(
            (q[(0, 1)], q[(0, 2)], q[(1, 0)], q[(2, 0)]),
            (0.0, 0.0, 0.0, 0.0)
        );
        assert!((&q * &lam * q.transpose() - &lam).amax() <= 1e-12);
    }

    #[test]
    fn score_examples() {
        let l = spd(4, 12);
        let h = SymDirection::new(l.matrix().clone()).unwrap();
        for k in 1..=3 {
            assert!(score(&l, &h, k).unwrap().iter().all(|s| s.abs() <= 1e-12));
        }

        let s = score(&KernelMatrix::identity(5), &h_rho(5, 0.3).unwrap(), 2).unwrap();
        assert!(s.iter().all(|x| x.abs() <= 1e-15));

        // finite-difference oracle of d/dt log P^k_{L + t E11}(A)
        let l = KernelMatrix::from_diagonal(&[1.0, 2.0, 3.0]).unwrap();
        let mut e11 = DMatrix::zeros(3, 3);
        e11[(0, 0)] = 1.0;
        let h = SymDirection::new(e11.clone()).unwrap();
        let s = score(&l, &h, 2).unwrap();
        let step = 1e-6;
        let plus = KDppDistribution::new(&KernelMatrix::new(l.matrix() + &e11 * step).unwrap(), 2)
            .unwrap();
        let minus = KDppDistribution::new(&KernelMatrix::new(l.matrix() - &e11 * step).unwrap(), 2)
            .unwrap();
        for i in 0..3 {
            let fd = (plus.probs()[i].ln() - minus.probs()[i].ln()) / (2.0 * step);
            assert!((fd - s[i]).abs() <= 1e-5);
        }
    }

    #[test]
    fn score_requires_positive_definite() {
        let l = KernelMatrix::from_diagonal(&[1.0, 1.0, 0.0]).unwrap();
        let h = SymDirection::zeros(3);
        assert!(matches!(
            score(&l, &h, 1),
            Err(DppError::SingularKernel { .. })
        ));
        assert!(matches!(
            build_phi(&l, 2),
            Err(DppError::SingularKernel { .. })
        ));
    }

    #[test]
    fn phi_for_identity_kernel() {
        let phi = build_phi(&KernelMatrix::identity(3), 2).unwrap();
        assert_eq!(phi.matrix.shape(), (3, 6));
        // row {1,2}: ones on E11, E22
        let row: Vec<f64> = phi.matrix.row(0).iter().copied().collect();
        assert_eq!(row, vec![1.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(rank_and_nullspace(&phi.matrix, DEFAULT_RANK_TOL).rank, 3);
        assert_eq!(elimination_rank(phi.matrix.clone(), 1e-12), 3);
    }

    #[test]
    fn phi_of_kernel_is_k_ones() {
        for (n, k, seed) in [(4, 2, 13), (5, 3, 14), (6, 1, 15)] {
            let l = spd(n, seed);
            let phi = build_phi(&l, k).unwrap();
            let v = phi
                .apply(&SymDirection::new(l.matrix().clone()).unwrap())
                .unwrap();
            assert!(v.iter().all(|x| (x - k as f64).abs() <= 1e-10));
        }
    }

    #[test]
    fn phi_columns_agree_with_traces() {
        let l = spd(4, 16);
        let phi = build_phi(&l, 2).unwrap();
        let h = SymDirection::new({
            let a = standard_normal_matrix(4, 4, &mut rng_from_seed(17));
            (&a + a.transpose()) * 0.5
        })
        .unwrap();
        let via_phi = phi.apply(&h).unwrap();
        let s = score(&l, &h, 2).unwrap();
        let mean = via_phi
            .iter()
            .zip(&s)
            .map(|(a, b)| a - b)
            .collect::<Vec<_>>();
        assert!(mean.iter().all(|m| (m - mean[0]).abs() <= 1e-12));
    }

    #[test]
    fn report_examples() {
        let r = identifiability_report(&KernelMatrix::identity(3), 2).unwrap();
        assert_eq!(
            (r.m, r.num_subsets, r.phi_rank, r.dim_v, r.lower_bound),
            (6, 3, 3, 4, 4)
        );
        assert!(r.exceeds_scale_cone);

        let r = identifiability_report(&spd(6, 18), 3).unwrap();
        assert_eq!(r.lower_bound, 2);
        assert!(r.dim_v >= 2 && r.exceeds_scale_cone);

        let r = identifiability_report(&spd(7, 19), 3).unwrap();
        assert_eq!(r.lower_bound, 1);
        assert!(r.dim_v >= 1);
    }

    #[test]
    fn report_basis_is_invisible_and_independent() {
        for (n, k, seed) in [(3, 2, 20), (4, 2, 21), (5, 2, 22), (6, 3, 23)] {
            let l = spd(n, seed);
            let r = identifiability_report(&l, k).unwrap();
            assert!(r.dim_v >= r.lower_bound);
            assert_eq!(r.basis_v.len(), r.dim_v);
            for h in &r.basis_v {
                let s = score(&l, h, k).unwrap();
                assert!(s.iter().fold(0.0f64, |a, x| a.max(x.abs())) <= 1e-8);
            }
            let coords = DMatrix::from_fn(r.dim_v, r.m, |i, j| r.basis_v[i].basis_coords()[j]);
            let gram = &coords * coords.transpose();
            assert_eq!(rank_and_nullspace(&gram, DEFAULT_RANK_TOL).rank, r.dim_v);
        }
    }

    #[test]
    fn dim_v_matches_augmented_system_oracle() {
        let mut rng = rng_from_seed(24);
        for n in 2..=6 {
            for k in 1..=n {
                let l = KernelMatrix::new(random_spd(n, 0.5, 3.0, &mut rng)).unwrap();
                let r = identifiability_report(&l, k).unwrap();
                let phi = build_phi(&l, k).unwrap();
                // solutions (h, t) of Φh - t·1 = 0, projected to h
                let rows = phi.matrix.nrows();
                let mut aug = DMatrix::zeros(rows, r.m + 1);
                aug.view_mut((0, 0), (rows, r.m)).copy_from(&phi.matrix);
                aug.column_mut(r.m).fill(-1.0);
                let ns = rank_and_nullspace(&aug, DEFAULT_RANK_TOL).nullspace_basis;
                let projected = DMatrix::from_fn(ns.len(), r.m, |i, j| ns[i][j]);
                assert_eq!(elimination_rank(projected, 1e-9), r.dim_v, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn invisible_directions_decay_quadratically() {
        let l = spd(5, 25);
        let r = identifiability_report(&l, 2).unwrap();
        for h in &r.basis_v {
            let d = tv_decay(&l, h, 2, &[1e-2, 1e-3, 1e-4]).unwrap();
            assert!(d.exponent >= 1.9, "{:?}", d);
        }
        // a generic direction is visible at first order
        let a = standard_normal_matrix(5, 5, &mut rng_from_seed(26));
        let h = SymDirection::new((&a + a.transpose()) * 0.5).unwrap();
        let d = tv_decay(&l, &h, 2, &[1e-2, 1e-3, 1e-4]).unwrap();
        assert!((d.exponent - 1.0).abs() < 0.1);
    }

    #[test]
    fn score_vanishing_iff_constant_traces() {
        let mut rng = rng_from_seed(27);
        let l = spd(5, 28);
        let phi = build_phi(&l, 3).unwrap();
        let r = identifiability_report(&l, 3).unwrap();
        for trial in 0..20 {
            let h = if trial % 2 == 0 {
                let a = standard_normal_matrix(5, 5, &mut rng);
                SymDirection::new((&a + a.transpose()) * 0.5).unwrap()
            } else {
                // random combination of invisible directions
                let mut m = DMatrix::zeros(5, 5);
                for b in &r.basis_v {
                    m += b.matrix() * rng.random_range(-1.0..1.0);
                }
                SymDirection::new(m).unwrap()
            };
            let s = score(&l, &h, 3).unwrap();
            let t = phi.apply(&h).unwrap();
            let spread = t.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                - t.iter().cloned().fold(f64::INFINITY, f64::min);
            let vanishes = s.iter().all(|x| x.abs() <= 1e-10);
            assert_eq!(vanishes, spread <= 1e-9, "trial {trial}");
        }
    }

    #[test]
    fn h_rho_examples() {
        assert_eq!(h_rho(4, 0.0).unwrap().matrix(), &DMatrix::zeros(4, 4));
        assert!(h_rho(3, 1.0).is_err());
        assert!(h_rho(3, -0.5).is_err());

        let lrho =
            KernelMatrix::new(DMatrix::identity(3, 3) + h_rho(3, 0.5).unwrap().matrix()).unwrap();
        for a in enumerate_subsets(3, 2).unwrap() {
            assert_abs_diff_eq!(principal_minor(&lrho, &a).unwrap(), 0.75, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(h_rho_minor(2, 0.5), 0.75, epsilon = 1e-15);

        let a =
            KernelMatrix::new(DMatrix::identity(4, 4) + h_rho(4, -0.2).unwrap().matrix()).unwrap();
        let b =
            KernelMatrix::new(DMatrix::identity(4, 4) + h_rho(4, 0.1).unwrap().matrix()).unwrap();
        for s in enumerate_subsets(4, 3).unwrap() {
            assert_abs_diff_eq!(principal_minor(&a, &s).unwrap(), 0.864, epsilon = 1e-12);
        }
        assert!(check_kdpp_invariance(&a, &b, 3).unwrap().passed);
        let ea = eig_sym(&a).lambdas;
        let eb = eig_sym(&b).lambdas;
        let ra = ea[0] / ea[3];
        let rb = eb[0] / eb[3];
        assert!((ra - rb).abs() > 0.1);
    }
}
