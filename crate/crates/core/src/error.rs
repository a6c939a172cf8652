use thiserror::Error;

/// Errors raised by the kernel, model and analysis routines.
///
/// The variants are coarse on purpose: the CLI maps each one onto a stable
/// process exit code.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DppError {
    /// Invalid argument: out-of-range index, bad cardinality, shape mismatch.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("matrix is not symmetric (max asymmetry {max_asymmetry:e}, tolerance {tolerance:e})")]
    NotSymmetric { max_asymmetry: f64, tolerance: f64 },

    #[error("matrix is not positive semidefinite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("matrix is not orthogonal (max |UᵀU - I| = {max_deviation:e})")]
    NotOrthogonal { max_deviation: f64 },

    /// Z_k(L) vanishes: the kernel does not define a k-DPP.
    #[error("degenerate stratum: Z_{k} = {z_k:e} is below threshold {threshold:e}")]
    DegenerateStratum { k: usize, z_k: f64, threshold: f64 },

    /// A positive definite kernel was required.
    #[error("singular kernel: smallest eigenvalue {min_eigenvalue:e}, largest {max_eigenvalue:e}")]
    SingularKernel {
        min_eigenvalue: f64,
        max_eigenvalue: f64,
    },

    /// The maximum likelihood estimate lies on the boundary of the parameter
    /// space. `element` is 1-based.
    #[error("boundary MLE: element {element} is {} every observation", if *.always_present { "present in" } else { "absent from" })]
    BoundaryMle {
        element: usize,
        always_present: bool,
    },

    #[error("capacity exceeded: {what} needs {size}, limit is {limit}")]
    Capacity {
        what: &'static str,
        size: usize,
        limit: usize,
    },

    #[error("not a rank-{rank} projection: {reason}")]
    NotProjection { rank: usize, reason: String },
}

impl DppError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        DppError::Domain(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, DppError>;
