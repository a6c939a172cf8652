//! Exact computations for finite determinantal point processes (DPPs) and
//! their fixed-cardinality conditionals (k-DPPs) in spectral coordinates
//! `L = U Λ Uᵀ`.
//!
//! * [`combinatorics`]: size-`k` subsets in canonical order, elementary
//!   symmetric polynomials.
//! * [`linalg`]: kernels, eigendecomposition, minors, numerical rank.
//! * [`dpp`]: subset probabilities, cardinality law, marginal kernel.
//! * [`kdpp`]: k-DPP tables, the diagonal exponential family, Fisher information.
//! * [`identifiability`]: invariance transforms, scores, the trace map `Φ` and
//!   the dimension of non-identifiable directions.
//! * [`exterior`]: compound matrices and Plücker relations.
//! * [`mle`]: maximum likelihood for the diagonal k-DPP.
//!
//! Ground-set elements are 0-based inside the library and 1-based in anything
//! printed or read from files.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod combinatorics;
pub mod dpp;
pub mod error;
pub mod exterior;
pub mod identifiability;
pub mod kdpp;
pub mod linalg;
pub mod mle;
pub mod random;

pub use combinatorics::{binomial, enumerate_subsets, esp, esp_leave_out, EspTable, SubsetIndex};
pub use dpp::{
    cardinality_law, dpp_probability, inclusion_probability, marginal_kernel, CardinalityLaw,
    DppDistribution,
};
pub use error::{DppError, Result};
pub use exterior::{
    compound, inclusion_via_exterior, plucker_check, projection_frame, scale_invariance_contrast,
    CompoundMatrix, ContrastReport, PluckerReport,
};
pub use identifiability::{
    apply_invariance, build_phi, check_kdpp_invariance, h_rho, h_rho_minor, identifiability_report,
    sample_commuting_rotation, score, tv_decay, DecayReport, IdentifiabilityReport,
    InvarianceCheck, InvarianceTransform, PhiMap, TransformedKernel,
};
pub use kdpp::{
    fisher_information, fisher_symmetry_check, from_minimal, kdpp_cauchy_binet, kdpp_distribution,
    log_partition, mean_parameter, minimality_check, to_minimal, DiagonalKDpp, FisherMatrix,
    KDppDistribution, MinimalParam,
};
pub use linalg::{
    cluster_eigenvalues, eig_sym, principal_minor, rank_and_nullspace, rectangular_minor,
    KernelMatrix, RankReport, SpectralForm, SymDirection,
};
pub use mle::{fit, gradient, log_likelihood, FitConfig, FitResult, Init, StepRule};
