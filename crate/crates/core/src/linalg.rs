//! Dense symmetric linear algebra on top of `nalgebra`.
//!
//! Eigendecompositions come back with eigenvalues in descending order and each
//! eigenvector's first nonzero entry made positive, so repeated runs on the same
//! input agree bit for bit. Determinants go through partially pivoted LU.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use serde::{Deserialize, Serialize};

use crate::combinatorics::SubsetIndex;
use crate::error::{DppError, Result};

/// Largest supported matrix dimension.
pub const MAX_DIM: usize = 64;

/// Relative symmetry tolerance for kernels and directions.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Relative tolerance on the smallest eigenvalue for the PSD check.
pub const PSD_TOL: f64 = 1e-10;

/// Default relative tolerance of [`rank_and_nullspace`].
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Default relative gap of [`cluster_eigenvalues`].
pub const DEFAULT_CLUSTER_TOL: f64 = 1e-8;

fn check_square_symmetric(m: &DMatrix<f64>) -> Result<()> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(DppError::domain(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if n > MAX_DIM {
        return Err(DppError::Capacity {
            what: "matrix dimension",
            size: n,
            limit: MAX_DIM,
        });
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(DppError::domain("matrix has non-finite entries"));
    }
    let scale = m.amax().max(1.0);
    let tolerance = SYMMETRY_TOL * scale;
    let mut max_asymmetry: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            max_asymmetry = max_asymmetry.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    if max_asymmetry > tolerance {
        return Err(DppError::NotSymmetric {
            max_asymmetry,
            tolerance,
        });
    }
    Ok(())
}

/// A real symmetric `n x n` matrix used as an L-ensemble or marginal kernel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelMatrix(DMatrix<f64>);

impl KernelMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        check_square_symmetric(&m)?;
        Ok(Self(m))
    }

    pub fn from_row_major(n: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != n * n {
            return Err(DppError::domain(format!(
                "expected {} entries for a {n}x{n} matrix, got {}",
                n * n,
                entries.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(n, n, entries))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self(&self.0 * c)
    }

    /// Row-major copy of the entries.
    pub fn row_major(&self) -> Vec<f64> {
        self.0.transpose().as_slice().to_vec()
    }

    /// Eigendecomposes and checks positive semidefiniteness.
    pub fn psd_spectrum(&self) -> Result<SpectralForm> {
        let spec = eig_sym(self);
        let max_abs = spec.lambdas.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        let min = spec.min_eigenvalue();
        if min < -PSD_TOL * max_abs {
            return Err(DppError::NotPsd {
                min_eigenvalue: min,
            });
        }
        Ok(spec)
    }

    /// Eigendecomposes and checks positive definiteness: `λ_min ≥ 1e-10 λ_max`.
    pub fn pd_spectrum(&self) -> Result<SpectralForm> {
        let spec = eig_sym(self);
        let max = spec.max_eigenvalue();
        let min = spec.min_eigenvalue();
        if !(max > 0.0) || min < PSD_TOL * max {
            return Err(DppError::SingularKernel {
                min_eigenvalue: min,
                max_eigenvalue: max,
            });
        }
        Ok(spec)
    }
}

impl AsRef<DMatrix<f64>> for KernelMatrix {
    fn as_ref(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// A symmetric perturbation direction `H ∈ Sym(n)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymDirection(DMatrix<f64>);

impl SymDirection {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        check_square_symmetric(&m)?;
        Ok(Self(m))
    }

    pub fn zeros(n: usize) -> Self {
        Self(DMatrix::zeros(n, n))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    /// Builds `Σ c_ii E_ii + Σ_{i<j} c_ij (E_ij + E_ji)` from coordinates in the
    /// order of [`sym_basis_labels`].
    pub fn from_basis_coords(n: usize, coords: &[f64]) -> Result<Self> {
        let labels = sym_basis_labels(n);
        if coords.len() != labels.len() {
            return Err(DppError::domain(format!(
                "expected {} coordinates for Sym({n}), got {}",
                labels.len(),
                coords.len()
            )));
        }
        let mut m = DMatrix::zeros(n, n);
        for (&(i, j), &c) in labels.iter().zip(coords) {
            m[(i, j)] = c;
            m[(j, i)] = c;
        }
        Ok(Self(m))
    }

    /// Inverse of [`SymDirection::from_basis_coords`].
    pub fn basis_coords(&self) -> Vec<f64> {
        sym_basis_labels(self.n())
            .into_iter()
            .map(|(i, j)| self.0[(i, j)])
            .collect()
    }
}

impl AsRef<DMatrix<f64>> for SymDirection {
    fn as_ref(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// Basis of `Sym(n)`: `(i, i)` for the diagonals first, then `(i, j)` with
/// `i < j` in lexicographic order, standing for `E_ij + E_ji`. Indices 0-based.
pub fn sym_basis_labels(n: usize) -> Vec<(usize, usize)> {
    let mut labels: Vec<(usize, usize)> = (0..n).map(|i| (i, i)).collect();
    for i in 0..n {
        for j in (i + 1)..n {
            labels.push((i, j));
        }
    }
    labels
}

/// Orthogonal eigenvectors (as columns of `u`) and descending eigenvalues.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralForm {
    pub u: DMatrix<f64>,
    pub lambdas: Vec<f64>,
}

impl SpectralForm {
    /// Validates orthogonality of `u` and reorders to descending eigenvalues.
    pub fn new(u: DMatrix<f64>, lambdas: Vec<f64>) -> Result<Self> {
        let n = lambdas.len();
        if u.nrows() != n || u.ncols() != n {
            return Err(DppError::domain(format!(
                "eigenvector matrix is {}x{}, expected {n}x{n}",
                u.nrows(),
                u.ncols()
            )));
        }
        if n > MAX_DIM {
            return Err(DppError::Capacity {
                what: "matrix dimension",
                size: n,
                limit: MAX_DIM,
            });
        }
        if lambdas.iter().chain(u.iter()).any(|x| !x.is_finite()) {
            return Err(DppError::domain("spectral form has non-finite entries"));
        }
        check_orthogonal(&u, 1e-10)?;
        Ok(sorted_descending(u, lambdas))
    }

    pub fn n(&self) -> usize {
        self.lambdas.len()
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.lambdas.first().copied().unwrap_or(0.0)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.lambdas.last().copied().unwrap_or(0.0)
    }

    /// `U diag(λ) Uᵀ`, symmetrized.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        reconstruct_with(&self.u, &self.lambdas)
    }
}

pub(crate) fn reconstruct_with(u: &DMatrix<f64>, values: &[f64]) -> DMatrix<f64> {
    let mut scaled = u.clone();
    for (j, &v) in values.iter().enumerate() {
        scaled.column_mut(j).scale_mut(v);
    }
    let m = scaled * u.transpose();
    (&m + m.transpose()) * 0.5
}

fn sorted_descending(u: DMatrix<f64>, lambdas: Vec<f64>) -> SpectralForm {
    let n = lambdas.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| lambdas[b].total_cmp(&lambdas[a]));
    let mut sorted_u = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = u.column(src).into_owned();
        if let Some(first) = col.iter().find(|x| x.abs() > 1e-12) {
            if *first < 0.0 {
                col.neg_mut();
            }
        }
        sorted_u.set_column(dst, &col);
    }
    SpectralForm {
        u: sorted_u,
        lambdas: order.iter().map(|&i| lambdas[i]).collect(),
    }
}

/// Max entrywise deviation of `UᵀU` from the identity.
pub fn orthogonality_deviation(u: &DMatrix<f64>) -> f64 {
    let n = u.ncols();
    let gram = u.transpose() * u;
    (gram - DMatrix::<f64>::identity(n, n)).amax()
}

pub(crate) fn check_orthogonal(u: &DMatrix<f64>, tol: f64) -> Result<()> {
    if u.nrows() != u.ncols() {
        return Err(DppError::domain("orthogonal matrix must be square"));
    }
    let max_deviation = orthogonality_deviation(u);
    if !(max_deviation <= tol) {
        return Err(DppError::NotOrthogonal { max_deviation });
    }
    Ok(())
}

/// Eigendecomposition of an arbitrary square matrix, checked for symmetry.
pub fn symmetric_eigen(m: &DMatrix<f64>) -> Result<SpectralForm> {
    check_square_symmetric(m)?;
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    Ok(sorted_descending(
        eig.eigenvectors,
        eig.eigenvalues.iter().copied().collect(),
    ))
}

pub fn eig_sym(m: &KernelMatrix) -> SpectralForm {
    symmetric_eigen(m.matrix()).expect("KernelMatrix is symmetric by construction")
}

/// Determinant of the submatrix with the given 0-based rows and columns.
pub(crate) fn submatrix_det(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> f64 {
    debug_assert_eq!(rows.len(), cols.len());
    let k = rows.len();
    if k == 0 {
        return 1.0;
    }
    let sub = DMatrix::from_fn(k, k, |i, j| m[(rows[i], cols[j])]);
    sub.lu().determinant()
}

fn check_in_range(s: &SubsetIndex, n: usize, what: &str) -> Result<()> {
    match s.elements().last() {
        Some(&e) if e >= n => Err(DppError::domain(format!(
            "{what} index {} outside 1..={n}",
            e + 1
        ))),
        _ => Ok(()),
    }
}

/// `det(M_A)`; the empty minor is 1.
pub fn principal_minor(m: &KernelMatrix, a: &SubsetIndex) -> Result<f64> {
    check_in_range(a, m.n(), "subset")?;
    Ok(submatrix_det(m.matrix(), a.elements(), a.elements()))
}

/// `det(M_{rows, cols})` for any matrix.
pub fn rectangular_minor(m: &DMatrix<f64>, rows: &SubsetIndex, cols: &SubsetIndex) -> Result<f64> {
    if rows.len() != cols.len() {
        return Err(DppError::domain(format!(
            "row set has {} elements but column set has {}",
            rows.len(),
            cols.len()
        )));
    }
    check_in_range(rows, m.nrows(), "row")?;
    check_in_range(cols, m.ncols(), "column")?;
    Ok(submatrix_det(m, rows.elements(), cols.elements()))
}

/// Numerical rank of a matrix and an orthonormal basis of its right nullspace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    /// The `min(rows, cols)` singular values, descending.
    pub singular_values: Vec<f64>,
    pub rank: usize,
    pub tolerance_used: f64,
    pub nullspace_basis: Vec<Vec<f64>>,
}

impl RankReport {
    pub fn nullity(&self) -> usize {
        self.nullspace_basis.len()
    }
}

/// SVD-based rank with threshold `rel_tol · σ_max · max(rows, cols)`.
pub fn rank_and_nullspace(m: &DMatrix<f64>, rel_tol: f64) -> RankReport {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return RankReport {
            singular_values: Vec::new(),
            rank: 0,
            tolerance_used: 0.0,
            nullspace_basis: (0..c)
                .map(|i| {
                    let mut v = vec![0.0; c];
                    v[i] = 1.0;
                    v
                })
                .collect(),
        };
    }
    // pad with zero rows so the SVD yields a full set of right singular vectors
    let padded = if r < c {
        let mut p = DMatrix::zeros(c, c);
        p.rows_mut(0, r).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = SVD::new(padded, false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let sv = svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]));

    let sigma_max = sv[order[0]];
    let tolerance_used = rel_tol * sigma_max * r.max(c) as f64;
    let kept = r.min(c);
    let singular_values: Vec<f64> = order.iter().take(kept).map(|&i| sv[i]).collect();
    let rank = singular_values
        .iter()
        .filter(|&&s| s > tolerance_used)
        .count();
    let nullspace_basis = order
        .iter()
        .skip(rank)
        .map(|&i| v_t.row(i).iter().copied().collect())
        .collect();
    RankReport {
        singular_values,
        rank,
        tolerance_used,
        nullspace_basis,
    }
}

/// Groups consecutive eigenvalues of a descending spectrum whose gap is at most
/// `cluster_tol · max(1, |λ_max|)`. Returned indices are 0-based.
pub fn cluster_eigenvalues(lambdas: &[f64], cluster_tol: f64) -> Vec<Vec<usize>> {
    let Some(&first) = lambdas.first() else {
        return Vec::new();
    };
    let scale = lambdas
        .iter()
        .fold(first.abs(), |a, x| a.max(x.abs()))
        .max(1.0);
    let gap = cluster_tol * scale;
    let mut groups = vec![vec![0]];
    for i in 1..lambdas.len() {
        if (lambdas[i - 1] - lambdas[i]).abs() <= gap {
            groups.last_mut().unwrap().push(i);
        } else {
            groups.push(vec![i]);
        }
    }
    groups
}
