//! JSON kernel files.
//!
//! Either `{"n": 3, "matrix": [..9 row-major entries..]}` or
//! `{"eigenvalues": [..], "eigenvectors": [..row-major, eigenvectors as columns..]}`,
//! with optional `name` and `description`.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use kdpp_core::{KernelMatrix, SpectralForm};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigenvalues: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigenvectors: Option<Vec<f64>>,
}

#[derive(Clone, Debug)]
pub struct LoadedKernel {
    pub name: Option<String>,
    pub kernel: KernelMatrix,
}

fn check_finite(what: &str, values: &[f64]) -> Result<()> {
    if values.iter().any(|x| !x.is_finite()) {
        bail!("{what} contains non-finite values");
    }
    Ok(())
}

impl KernelFile {
    pub fn from_matrix(name: Option<String>, m: &DMatrix<f64>) -> Self {
        Self {
            name,
            n: Some(m.nrows()),
            matrix: Some(m.transpose().as_slice().to_vec()),
            ..Self::default()
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).context("malformed kernel file")
    }

    pub fn into_kernel(self) -> Result<LoadedKernel> {
        let matrix_form = self.matrix.is_some();
        let spectral_form = self.eigenvalues.is_some() || self.eigenvectors.is_some();
        match (matrix_form, spectral_form) {
            (true, true) => bail!("kernel file has both `matrix` and spectral fields"),
            (false, false) => bail!("kernel file needs `matrix` or `eigenvalues`/`eigenvectors`"),
            (true, false) => {
                let entries = self.matrix.unwrap();
                let n = self.n.context("matrix form needs `n`")?;
                check_finite("matrix", &entries)?;
                let kernel = KernelMatrix::from_row_major(n, &entries)?;
                Ok(LoadedKernel {
                    name: self.name,
                    kernel,
                })
            }
            (false, true) => {
                let lambdas = self
                    .eigenvalues
                    .context("spectral form needs `eigenvalues`")?;
                let vectors = self
                    .eigenvectors
                    .context("spectral form needs `eigenvectors`")?;
                let n = lambdas.len();
                if let Some(declared) = self.n {
                    if declared != n {
                        bail!("`n` is {declared} but there are {n} eigenvalues");
                    }
                }
                if vectors.len() != n * n {
                    bail!(
                        "expected {} eigenvector entries, got {}",
                        n * n,
                        vectors.len()
                    );
                }
                check_finite("eigenvalues", &lambdas)?;
                check_finite("eigenvectors", &vectors)?;
                let spec = SpectralForm::new(DMatrix::from_row_slice(n, n, &vectors), lambdas)?;
                Ok(LoadedKernel {
                    name: self.name,
                    kernel: KernelMatrix::new(spec.reconstruct())?,
                })
            }
        }
    }
}

pub fn load_kernel(path: &Path) -> Result<LoadedKernel> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    KernelFile::parse(&text)
        .and_then(KernelFile::into_kernel)
        .with_context(|| format!("in kernel file {}", path.display()))
}
