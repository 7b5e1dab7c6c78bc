//! Array-variate normal distribution with Kronecker delta covariance.
//!
//! `X = (A_1)^1 ... (A_i)^i Z + M` with `Z` standard normal, so
//! `rvec(X) ~ N(rvec(M), C Cᵀ)` where `C = A_1 ⊗ⁱ ... ⊗ⁱ A_i`. Densities are
//! evaluated without forming `C`: the standardized core
//! `(A_1⁻¹)^1 ... (A_i⁻¹)^i (X - M)` is computed mode by mode from the small
//! factor inverses.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::array::{rmul, DenseArray, Shape};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::kron::{FactorSet, Matrix, MatrixDoc};
use crate::rng;
use crate::special::LN_2PI;

/// Default largest `d` for which the dense monolinear bridge is built.
pub const DEFAULT_ORACLE_CAP: usize = 4096;

/// `ln` of the standard array normal density: `-‖z‖²/2 - (d/2) ln(2π)`.
pub fn log_density_standard(z: &DenseArray) -> f64 {
    -0.5 * z.square_norm() - 0.5 * z.shape().len() as f64 * LN_2PI
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArrayNormalParams {
    mean: DenseArray,
    factors: FactorSet,
}

impl ArrayNormalParams {
    pub fn new(mean: DenseArray, factors: FactorSet) -> Result<Self> {
        if mean.shape() != factors.shape() {
            return Err(Error::Dimension(format!(
                "mean shape {:?} does not match factor orders {:?}",
                mean.shape().dims(),
                factors.shape().dims()
            )));
        }
        Ok(ArrayNormalParams { mean, factors })
    }

    /// Zero mean, identity factors.
    pub fn standard(shape: Shape) -> Self {
        let factors = FactorSet::identity(&shape);
        ArrayNormalParams {
            mean: DenseArray::zeros(shape),
            factors,
        }
    }

    pub fn mean(&self) -> &DenseArray {
        &self.mean
    }

    pub fn factors(&self) -> &FactorSet {
        &self.factors
    }

    pub fn shape(&self) -> &Shape {
        self.mean.shape()
    }

    /// `(A_1⁻¹)^1 ... (A_i⁻¹)^i (x - M)`.
    pub fn standardize(&self, x: &DenseArray) -> Result<DenseArray> {
        let centered = x.sub(&self.mean)?;
        rmul(self.factors.inverses(), &centered)
    }

    /// `(A_1)^1 ... (A_i)^i z + M`.
    pub fn destandardize(&self, z: &DenseArray) -> Result<DenseArray> {
        rmul(self.factors.factors(), z)?.add(&self.mean)
    }

    /// Log-density given an already standardized core.
    pub(crate) fn log_density_from_core(&self, core: &DenseArray) -> f64 {
        log_density_standard(core) - self.factors.log_abs_det_chain()
    }

    pub fn log_density(&self, x: &DenseArray) -> Result<f64> {
        let core = self.standardize(x)?;
        Ok(self.log_density_from_core(&core))
    }

    pub fn log_density_batch(&self, xs: &[DenseArray], exec: Execution) -> Result<Vec<f64>> {
        exec.map_slice(xs, |x| self.log_density(x)).into_iter().collect()
    }

    /// Parameters of `rmul(bs, X) + shift` when `X` follows `self`: mean
    /// `rmul(bs, M) + shift`, factors `B_j A_j`.
    pub fn affine(&self, bs: &[Matrix], shift: &DenseArray) -> Result<Self> {
        let mean = rmul(bs, &self.mean)?.add(shift)?;
        let factors = bs.iter().zip(self.factors.factors()).map(|(b, a)| b * a).collect();
        ArrayNormalParams::new(mean, FactorSet::new(factors)?)
    }

    /// Dense `(mu, Λ)` with `Λ = C Cᵀ`; refuses when `d > cap`.
    pub fn to_monolinear(&self, cap: usize) -> Result<MonolinearForm> {
        let d = self.shape().len();
        if d > cap {
            return Err(Error::Capacity(format!(
                "monolinear form of size {d} exceeds cap {cap}"
            )));
        }
        let c = self.factors.chain();
        let mut lambda = &c * c.transpose();
        lambda = (&lambda + lambda.transpose()) * 0.5;
        MonolinearForm::new(DVector::from_column_slice(self.mean.rvec()), lambda)
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> DenseArray {
        let mut z = DenseArray::zeros(self.shape().clone());
        for v in z.rvec_mut() {
            *v = rng.sample(StandardNormal);
        }
        self.destandardize(&z).expect("shapes agree by construction")
    }

    /// `n` draws from a caller-supplied stream.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<DenseArray> {
        (0..n).map(|_| self.draw(rng)).collect()
    }

    /// `n` draws from `seed`, generated in blocks on independent substreams.
    /// The output depends only on `(seed, n)`, not on `exec`.
    pub fn sample_seeded(&self, seed: u64, n: usize, exec: Execution) -> Vec<DenseArray> {
        blocked_sample(seed, n, exec, |rng, k| self.sample(rng, k))
    }
}

pub(crate) fn blocked_sample<F>(seed: u64, n: usize, exec: Execution, f: F) -> Vec<DenseArray>
where
    F: Fn(&mut rng::Stream, usize) -> Vec<DenseArray> + Sync + Send,
{
    let blocks = n.div_ceil(rng::BLOCK);
    exec.map_range(blocks, |b| {
        let count = rng::BLOCK.min(n - b * rng::BLOCK);
        let mut stream = rng::substream(seed, b as u64);
        f(&mut stream, count)
    })
    .into_iter()
    .flatten()
    .collect()
}

/// Flattened representation `rvec(X) ~ N_d(mu, Λ)`.
#[derive(Debug, Clone)]
pub struct MonolinearForm {
    pub mu: DVector<f64>,
    pub lambda: DMatrix<f64>,
    chol_l: DMatrix<f64>,
}

impl MonolinearForm {
    pub fn new(mu: DVector<f64>, lambda: DMatrix<f64>) -> Result<Self> {
        let d = mu.len();
        if lambda.nrows() != d || lambda.ncols() != d {
            return Err(Error::Dimension(format!(
                "covariance is {}x{}, mean has length {d}",
                lambda.nrows(),
                lambda.ncols()
            )));
        }
        let scale = lambda.amax().max(f64::MIN_POSITIVE);
        if (&lambda - lambda.transpose()).amax() > 1e-12 * scale {
            return Err(Error::Domain("covariance is not symmetric".into()));
        }
        let chol = lambda
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Domain("covariance is not positive definite".into()))?;
        Ok(MonolinearForm {
            mu,
            lambda,
            chol_l: chol.unpack(),
        })
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    /// Lower Cholesky factor of `Λ`.
    pub fn cholesky_l(&self) -> &DMatrix<f64> {
        &self.chol_l
    }

    /// Multivariate normal log-density via the Cholesky factor of `Λ`.
    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        let d = self.dim();
        if x.len() != d {
            return Err(Error::Dimension(format!(
                "vector of length {} for a {d}-variate normal",
                x.len()
            )));
        }
        let diff = DVector::from_column_slice(x) - &self.mu;
        let w = self
            .chol_l
            .solve_lower_triangular(&diff)
            .ok_or_else(|| Error::Singular("Cholesky factor".into()))?;
        let log_det: f64 = 2.0 * self.chol_l.diagonal().iter().map(|v| v.ln()).sum::<f64>();
        Ok(-0.5 * w.norm_squared() - 0.5 * log_det - 0.5 * d as f64 * LN_2PI)
    }
}

/// Wire form of normal parameters: `{"mean": <array>, "factors": [<matrix>, ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalParamsDoc {
    pub mean: DenseArray,
    pub factors: Vec<MatrixDoc>,
}

impl NormalParamsDoc {
    pub fn into_params(self) -> Result<ArrayNormalParams> {
        let factors = self
            .factors
            .into_iter()
            .enumerate()
            .map(|(j, m)| m.into_matrix().map_err(|e| Error::Parse(format!("factors[{j}]: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        let factors = FactorSet::new(factors)?;
        ArrayNormalParams::new(self.mean, factors)
    }
}

impl From<&ArrayNormalParams> for NormalParamsDoc {
    fn from(p: &ArrayNormalParams) -> Self {
        NormalParamsDoc {
            mean: p.mean.clone(),
            factors: p.factors.factors().iter().map(MatrixDoc::from).collect(),
        }
    }
}
