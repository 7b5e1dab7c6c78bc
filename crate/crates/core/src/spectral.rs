//! Kronecker principal components and array least squares.

use serde::{Deserialize, Serialize};

use crate::array::{rmul, DenseArray, Shape};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::kron::{self, FactorSet, KronEigen, Matrix};

/// One principal component of `rvec(X)`: an eigenvalue of `C Cᵀ` and the
/// per-mode eigenvector ranks that produce it.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub eigenvalue: f64,
    pub factor_indices: Vec<usize>,
    /// Unit eigenvector of `A_j A_jᵀ` for each mode.
    pub factor_vectors: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct PcaResult {
    pub components: Vec<Component>,
    pub total_variance: f64,
    pub param_count_kron: usize,
    pub param_count_full: usize,
    eigen: KronEigen,
}

impl PcaResult {
    /// Full-length eigenvector `v_1 ⊗ⁱ ... ⊗ⁱ v_i` of component `k`.
    pub fn materialize(&self, k: usize, cap: usize) -> Result<Vec<f64>> {
        let c = self
            .components
            .get(k)
            .ok_or_else(|| Error::Index(format!("component {k} of {}", self.components.len())))?;
        let d = self.components.len();
        if d > cap {
            return Err(Error::Capacity(format!("eigenvector of length {d} exceeds cap {cap}")));
        }
        Ok(self.eigen.eigenvector(&c.factor_indices))
    }

    pub fn report(&self) -> PcaReport {
        PcaReport {
            eigenvalues: self.components.iter().map(|c| c.eigenvalue).collect(),
            indices: self.components.iter().map(|c| c.factor_indices.clone()).collect(),
            param_count_kron: self.param_count_kron,
            param_count_full: self.param_count_full,
        }
    }
}

/// Wire form of a PCA result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaReport {
    pub eigenvalues: Vec<f64>,
    pub indices: Vec<Vec<usize>>,
    pub param_count_kron: usize,
    pub param_count_full: usize,
}

/// Principal components of `rvec(X)` when `Cov(rvec X) = C Cᵀ` with
/// `C = A_1 ⊗ⁱ ... ⊗ⁱ A_i`: eigenpairs come from the Gram matrices
/// `A_j A_jᵀ`, so nothing of size `d` is formed.
pub fn kron_pca(factors: &FactorSet) -> Result<PcaResult> {
    kron_pca_with(factors, Execution::default())
}

pub fn kron_pca_with(factors: &FactorSet, exec: Execution) -> Result<PcaResult> {
    let grams = factors.grams();
    let eigen = kron::ikron_eigen_with(&grams, exec)?;
    let components: Vec<Component> = eigen
        .pairs
        .iter()
        .map(|p| Component {
            // Gram eigenvalues are nonnegative up to rounding
            eigenvalue: p.value.max(0.0),
            factor_indices: p.indices.clone(),
            factor_vectors: p
                .indices
                .iter()
                .zip(&eigen.factors)
                .map(|(&r, f)| f.vectors.column(r).iter().copied().collect())
                .collect(),
        })
        .collect();
    let total_variance = components.iter().map(|c| c.eigenvalue).sum();
    let (param_count_kron, param_count_full, _) = parameter_savings(factors.shape());
    Ok(PcaResult {
        components,
        total_variance,
        param_count_kron,
        param_count_full,
        eigen,
    })
}

/// Free covariance parameters under the Kronecker structure
/// (`Σ m_j(m_j+1)/2`) and unstructured (`d(d+1)/2`), and their ratio
/// full/kron.
pub fn parameter_savings(shape: &Shape) -> (usize, usize, f64) {
    let kron: usize = shape.dims().iter().map(|m| m * (m + 1) / 2).sum();
    let d = shape.len();
    let full = d * (d + 1) / 2;
    (kron, full, full as f64 / kron as f64)
}

/// Minimizes `‖y - (A_1)^1 ... (A_i)^i x‖²` over `x` by applying the
/// l-inverses `A_j⁻ = (A_jᵀA_j)⁻¹A_jᵀ` mode by mode.
pub fn array_least_squares(factors: &[Matrix], y: &DenseArray) -> Result<DenseArray> {
    if factors.len() != y.shape().ndim() {
        return Err(Error::Dimension(format!(
            "{} factors for a {}-way array",
            factors.len(),
            y.shape().ndim()
        )));
    }
    for (j, (a, &q)) in factors.iter().zip(y.shape().dims()).enumerate() {
        if a.nrows() != q {
            return Err(Error::Dimension(format!(
                "factor {j} has {} rows, extent is {q}",
                a.nrows()
            )));
        }
    }
    let l_inverses = factors
        .iter()
        .enumerate()
        .map(|(j, a)| {
            kron::l_inverse(a).map_err(|e| match e {
                Error::Rank(msg) => Error::Rank(format!("factor {j}: {msg}")),
                other => other,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rmul(&l_inverses, y)
}
