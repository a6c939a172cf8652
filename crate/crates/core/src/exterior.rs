//! Compound matrices (exterior powers) and the Plücker relation for
//! projection 2-DPPs on four items.
//!
//! The `k`-th compound of `M` is the `C(n,k) x C(n,k)` matrix of all `k x k`
//! minors, rows and columns indexed by subsets in canonical order. It is
//! multiplicative, so `∧^k K = (∧^k U)(∧^k M)(∧^k U)ᵀ` for `K = U M Uᵀ`, and the
//! diagonal entry at `S` is the inclusion probability `det(K_S)`.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{binomial, enumerate_subsets, SubsetIndex};
use crate::dpp::marginal_kernel;
use crate::error::{DppError, Result};
use crate::kdpp::KDppDistribution;
use crate::linalg::{
    check_orthogonal, principal_minor, rectangular_minor, symmetric_eigen, KernelMatrix,
};

/// Largest compound dimension `C(n,k)` that will be materialized.
pub const MAX_COMPOUND_DIM: usize = 1000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompoundMatrix {
    pub k: usize,
    pub base_n: usize,
    /// Entry `(A, B)` is `det(M_{A,B})`, `A` and `B` by canonical rank.
    pub entries: DMatrix<f64>,
}

impl CompoundMatrix {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn subsets(&self) -> Vec<SubsetIndex> {
        enumerate_subsets(self.base_n, self.k).expect("validated on construction")
    }

    pub fn entry(&self, rows: &SubsetIndex, cols: &SubsetIndex) -> f64 {
        self.entries[(rows.rank(), cols.rank())]
    }
}

pub fn compound(m: &DMatrix<f64>, k: usize) -> Result<CompoundMatrix> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(DppError::domain("compound requires a square matrix"));
    }
    if k == 0 || k > n {
        return Err(DppError::domain(format!(
            "compound order must satisfy 1 <= k <= n (n = {n}, k = {k})"
        )));
    }
    let dim = binomial(n, k);
    if dim > MAX_COMPOUND_DIM {
        return Err(DppError::Capacity {
            what: "compound matrix dimension",
            size: dim,
            limit: MAX_COMPOUND_DIM,
        });
    }
    let subsets = enumerate_subsets(n, k)?;
    let rows: Vec<Vec<f64>> = subsets
        .par_iter()
        .map(|a| {
            subsets
                .iter()
                .map(|b| rectangular_minor(m, a, b))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let entries = DMatrix::from_fn(dim, dim, |i, j| rows[i][j]);
    Ok(CompoundMatrix {
        k,
        base_n: n,
        entries,
    })
}

/// `ρ(S) = ⟨v_S, (∧^{|S|} K) v_S⟩` for the marginal kernel `K` of `L`.
pub fn inclusion_via_exterior(l: &KernelMatrix, s: &SubsetIndex) -> Result<f64> {
    if s.is_empty() {
        return Err(DppError::domain("inclusion order must be at least 1"));
    }
    if s.elements().iter().any(|&e| e >= l.n()) {
        return Err(DppError::domain(format!(
            "subset {s} outside 1..={}",
            l.n()
        )));
    }
    let k = marginal_kernel(l)?;
    let c = compound(k.matrix(), s.len())?;
    let s = SubsetIndex::new(l.n(), s.elements().to_vec())?;
    Ok(c.entry(&s, &s))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PluckerReport {
    /// `((i, j), p_ij)` with 1-based `i < j`, in canonical order.
    pub coords: Vec<((usize, usize), f64)>,
    /// `|p12 p34 - p13 p24 + p14 p23|`.
    pub relation_residual: f64,
    /// Smallest `|√(ρ12ρ34) ± √(ρ13ρ24) ± √(ρ14ρ23)|` over the four sign patterns.
    pub sqrt_residual: f64,
    pub passed: bool,
}

/// Checks the Plücker relation for the 2-plane spanned by the orthonormal
/// columns of a `4 x 2` matrix, in coordinates and in inclusion probabilities
/// `ρ_ij = det(K_{ij})` of the projection kernel `K = V Vᵀ`.
pub fn plucker_check(v: &DMatrix<f64>) -> Result<PluckerReport> {
    if v.shape() != (4, 2) {
        return Err(DppError::domain(format!(
            "expected a 4x2 frame, got {}x{}",
            v.nrows(),
            v.ncols()
        )));
    }
    let gram = v.transpose() * v;
    let max_deviation = (gram - DMatrix::<f64>::identity(2, 2)).amax();
    if !(max_deviation <= 1e-10) {
        return Err(DppError::NotOrthogonal { max_deviation });
    }
    let pairs = enumerate_subsets(4, 2)?;
    let cols = SubsetIndex::new(2, [0, 1])?;
    let p: Vec<f64> = pairs
        .iter()
        .map(|s| rectangular_minor(v, s, &cols))
        .collect::<Result<_>>()?;
    // canonical order: 12, 13, 14, 23, 24, 34
    let relation_residual = (p[0] * p[5] - p[1] * p[4] + p[2] * p[3]).abs();

    let k = KernelMatrix::new(v * v.transpose())?;
    let rho: Vec<f64> = pairs
        .iter()
        .map(|s| principal_minor(&k, s).map(|x| x.max(0.0)))
        .collect::<Result<_>>()?;
    let t1 = (rho[0] * rho[5]).sqrt();
    let t2 = (rho[1] * rho[4]).sqrt();
    let t3 = (rho[2] * rho[3]).sqrt();
    let sqrt_residual = [1.0, -1.0]
        .iter()
        .flat_map(|a| [1.0, -1.0].map(|b| (t1 + a * t2 + b * t3).abs()))
        .fold(f64::INFINITY, f64::min);

    Ok(PluckerReport {
        coords: pairs
            .iter()
            .zip(&p)
            .map(|(s, &x)| ((s.elements()[0] + 1, s.elements()[1] + 1), x))
            .collect(),
        relation_residual,
        sqrt_residual,
        passed: relation_residual <= 1e-10 && sqrt_residual <= 1e-10,
    })
}

/// Orthonormal frame of a rank-`rank` orthogonal projection `K`: the
/// eigenvectors of the unit eigenvalues. Fails unless the spectrum is `rank`
/// ones and zeros elsewhere, within `1e-9`.
pub fn projection_frame(k: &KernelMatrix, rank: usize) -> Result<DMatrix<f64>> {
    let spec = symmetric_eigen(k.matrix())?;
    let n = spec.n();
    if rank > n {
        return Err(DppError::NotProjection {
            rank,
            reason: format!("dimension is only {n}"),
        });
    }
    for (i, &lam) in spec.lambdas.iter().enumerate() {
        let target = if i < rank { 1.0 } else { 0.0 };
        if (lam - target).abs() > 1e-9 {
            return Err(DppError::NotProjection {
                rank,
                reason: format!("eigenvalue {} is {lam}, expected {target}", i + 1),
            });
        }
    }
    let frame = spec.u.columns(0, rank).into_owned();
    check_orthogonal(&(frame.transpose() * &frame), 1e-9)?;
    Ok(frame)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContrastReport {
    pub c: f64,
    pub k: usize,
    /// TV distance between the k-DPPs of `L` and `cL`.
    pub kdpp_tv: f64,
    /// `max_S |ρ(S; L) - ρ(S; cL)|` over `|S| = k`.
    pub inclusion_deviation: f64,
}

/// Rescaling `L` leaves the k-DPP unchanged but moves the order-`k`
/// inclusion probabilities of the unconditional DPP.
pub fn scale_invariance_contrast(l: &KernelMatrix, c: f64, k: usize) -> Result<ContrastReport> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(DppError::domain(format!("scale must be positive, got {c}")));
    }
    let scaled = l.scaled(c);
    let kdpp_tv =
        KDppDistribution::new(l, k)?.total_variation(&KDppDistribution::new(&scaled, k)?)?;
    let k_l = marginal_kernel(l)?;
    let k_c = marginal_kernel(&scaled)?;
    let mut inclusion_deviation: f64 = 0.0;
    for s in enumerate_subsets(l.n(), k)? {
        let d = (principal_minor(&k_l, &s)? - principal_minor(&k_c, &s)?).abs();
        inclusion_deviation = inclusion_deviation.max(d);
    }
    Ok(ContrastReport {
        c,
        k,
        kdpp_tv,
        inclusion_deviation,
    })
}
