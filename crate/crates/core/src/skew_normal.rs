//! Array-variate skew normal distribution.
//!
//! The density is a selection model with the array normal as kernel and the
//! cellwise selection function
//! `g(X) = ∏ Φ(Δ_j · Z_j)`, `Z = (A_1⁻¹)^1 ... (A_i⁻¹)^i (X - M)`,
//! normalized by `2^-d`. Because `g` acts on each cell of the standardized
//! core separately, the core has independent cells, cell `j` following the
//! univariate skew normal `2 φ(z) Φ(Δ_j z)`. The sampler uses that.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::array::{DenseArray, Shape};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::gaussian::{blocked_sample, ArrayNormalParams, NormalParamsDoc};
use crate::kron::{log_abs_det, Matrix, MatrixDoc};
use crate::special::{ln_std_normal_cdf, std_normal_cdf, LN_2PI};
use crate::{kron, rng};

/// Largest `d` accepted by [`ArraySkewNormalParams::rejection_sample_oracle`].
pub const REJECTION_CAP: usize = 16;

/// Constraint applied to the shape array `Δ` at construction.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum DeltaMode {
    #[default]
    Full,
    /// Only cells on the generalized diagonal `j1 = j2 = ... = ji` are kept.
    /// Requires all extents equal.
    Diagonal,
    /// Only the listed cells are kept.
    Sparse(Vec<Vec<usize>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArraySkewNormalParams {
    base: ArrayNormalParams,
    delta: DenseArray,
    mode: DeltaMode,
}

impl ArraySkewNormalParams {
    pub fn new(base: ArrayNormalParams, delta: DenseArray) -> Result<Self> {
        Self::with_mode(base, delta, DeltaMode::Full)
    }

    /// Builds the parameters, zeroing the cells of `delta` excluded by `mode`.
    pub fn with_mode(base: ArrayNormalParams, mut delta: DenseArray, mode: DeltaMode) -> Result<Self> {
        if delta.shape() != base.shape() {
            return Err(Error::Dimension(format!(
                "delta shape {:?} does not match mean shape {:?}",
                delta.shape().dims(),
                base.shape().dims()
            )));
        }
        match &mode {
            DeltaMode::Full => {}
            DeltaMode::Diagonal => {
                let dims = delta.shape().dims();
                if dims.iter().any(|&m| m != dims[0]) {
                    return Err(Error::Domain(format!(
                        "diagonal delta needs equal extents, got {dims:?}"
                    )));
                }
                let shape = delta.shape().clone();
                for (k, idx) in shape.indices().enumerate() {
                    if idx.iter().any(|&j| j != idx[0]) {
                        delta.rvec_mut()[k] = 0.0;
                    }
                }
            }
            DeltaMode::Sparse(support) => {
                let shape = delta.shape().clone();
                let mut keep = vec![false; shape.len()];
                for idx in support {
                    keep[shape.offset(idx)?] = true;
                }
                for (v, k) in delta.rvec_mut().iter_mut().zip(keep) {
                    if !k {
                        *v = 0.0;
                    }
                }
            }
        }
        Ok(ArraySkewNormalParams { base, delta, mode })
    }

    pub fn base(&self) -> &ArrayNormalParams {
        &self.base
    }

    pub fn delta(&self) -> &DenseArray {
        &self.delta
    }

    pub fn mode(&self) -> &DeltaMode {
        &self.mode
    }

    pub fn shape(&self) -> &Shape {
        self.base.shape()
    }

    fn log_weight_from_core(&self, core: &DenseArray) -> f64 {
        core.rvec()
            .iter()
            .zip(self.delta.rvec())
            .map(|(&z, &dl)| ln_std_normal_cdf(dl * z))
            .sum()
    }

    /// `ln g(x)`: the sum over cells of `ln Φ(Δ_j Z_j)`.
    pub fn log_weight(&self, x: &DenseArray) -> Result<f64> {
        let core = self.base.standardize(x)?;
        Ok(self.log_weight_from_core(&core))
    }

    /// `ln φ(x) + ln g(x) + d ln 2`. The `ln 2` is folded into each cell's
    /// term, so with `Δ = 0` every term is exactly zero and the result equals
    /// the normal log-density.
    pub fn log_density(&self, x: &DenseArray) -> Result<f64> {
        let core = self.base.standardize(x)?;
        let excess: f64 = core
            .rvec()
            .iter()
            .zip(self.delta.rvec())
            .map(|(&z, &dl)| ln_std_normal_cdf(dl * z) + std::f64::consts::LN_2)
            .sum();
        Ok(self.base.log_density_from_core(&core) + excess)
    }

    pub fn log_density_batch(&self, xs: &[DenseArray], exec: Execution) -> Result<Vec<f64>> {
        exec.map_slice(xs, |x| self.log_density(x)).into_iter().collect()
    }

    /// The standardized core of a draw: independent univariate skew normals
    /// `δ/√(1+δ²) |u0| + 1/√(1+δ²) u1`.
    fn draw_core<R: Rng + ?Sized>(&self, rng: &mut R) -> DenseArray {
        let mut z = DenseArray::zeros(self.shape().clone());
        for (cell, &dl) in z.rvec_mut().iter_mut().zip(self.delta.rvec()) {
            let u0: f64 = rng.sample(StandardNormal);
            let u1: f64 = rng.sample(StandardNormal);
            let s = (1.0 + dl * dl).sqrt();
            *cell = dl / s * u0.abs() + u1 / s;
        }
        z
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<DenseArray> {
        (0..n)
            .map(|_| {
                let z = self.draw_core(rng);
                self.base.destandardize(&z).expect("shapes agree by construction")
            })
            .collect()
    }

    /// `n` draws from `seed`; output depends only on `(seed, n)`.
    pub fn sample_seeded(&self, seed: u64, n: usize, exec: Execution) -> Vec<DenseArray> {
        blocked_sample(seed, n, exec, |rng, k| self.sample(rng, k))
    }

    /// Selection-model sampler: propose from the base normal, accept with
    /// probability `g(X)`. Only for small `d`; mean acceptance is `2^-d`.
    pub fn rejection_sample_oracle<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Result<RejectionOutcome> {
        let d = self.shape().len();
        if d > REJECTION_CAP {
            return Err(Error::Capacity(format!(
                "rejection oracle limited to d <= {REJECTION_CAP}, got {d}"
            )));
        }
        let mut draws = Vec::with_capacity(n);
        let mut proposals = 0u64;
        while draws.len() < n {
            let x = self.base.sample(rng, 1).pop().expect("one draw");
            proposals += 1;
            let u: f64 = rng.random();
            if u.ln() < self.log_weight(&x)? {
                draws.push(x);
            }
        }
        Ok(RejectionOutcome { draws, proposals })
    }

    /// Monte Carlo check of total mass: draws from the base normal weighted by
    /// `2^d g(X)`. Returns the estimate and its standard error.
    pub fn importance_normalization(&self, seed: u64, n: usize, exec: Execution) -> (f64, f64) {
        let d = self.shape().len() as f64;
        let draws = self.base.sample_seeded(seed, n, exec);
        let weights = exec.map_slice(&draws, |x| {
            (self.log_weight(x).expect("shape") + d * std::f64::consts::LN_2).exp()
        });
        crate::stats::mean_and_se(&weights)
    }

    /// The density written as a generic selection model.
    pub fn selection_model(&self) -> SelectionModel<'_> {
        SelectionModel {
            kernel: Box::new(move |x| self.base.log_density(x)),
            weight: Box::new(move |x| self.log_weight(x)),
            log_norm: -(self.shape().len() as f64) * std::f64::consts::LN_2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RejectionOutcome {
    pub draws: Vec<DenseArray>,
    pub proposals: u64,
}

type LogFn<'a> = Box<dyn Fn(&DenseArray) -> Result<f64> + Send + Sync + 'a>;

/// Weighted density `h = f g / ∫ f g` in log space.
pub struct SelectionModel<'a> {
    pub kernel: LogFn<'a>,
    pub weight: LogFn<'a>,
    /// `ln ∫ f g`.
    pub log_norm: f64,
}

impl SelectionModel<'_> {
    pub fn log_density(&self, x: &DenseArray) -> Result<f64> {
        Ok((self.kernel)(x)? + (self.weight)(x)? - self.log_norm)
    }

    /// Estimates `∫ f g = E_f[g]` from draws of the kernel. Returns the
    /// estimate and its standard error.
    pub fn monte_carlo_norm(&self, kernel_draws: &[DenseArray]) -> Result<(f64, f64)> {
        let w = kernel_draws
            .iter()
            .map(|x| (self.weight)(x).map(f64::exp))
            .collect::<Result<Vec<_>>>()?;
        Ok(crate::stats::mean_and_se(&w))
    }
}

/// Matrix skew normal log-density with factors applied on both sides:
/// `Z = A⁻¹ (X - M) B⁻¹`, density
/// `φ_{k×n}(Z) ∏ Φ(Δ_ji Z_ji) / (|A|^n |B|^k 2^-kn)`.
///
/// For symmetric `B` this equals the array skew normal with factors `(A, B)`;
/// in general it matches factors `(A, Bᵀ)`.
pub fn msn_log_density_2d(x: &Matrix, m: &Matrix, a: &Matrix, b: &Matrix, delta: &Matrix) -> Result<f64> {
    let (k, n) = x.shape();
    if m.shape() != (k, n) || delta.shape() != (k, n) {
        return Err(Error::Dimension(format!(
            "X is {k}x{n}, M is {}x{}, Delta is {}x{}",
            m.nrows(),
            m.ncols(),
            delta.nrows(),
            delta.ncols()
        )));
    }
    if a.shape() != (k, k) || b.shape() != (n, n) {
        return Err(Error::Dimension(format!(
            "A must be {k}x{k} and B {n}x{n}, got {}x{} and {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    let ld_a = log_abs_det(a)?;
    let ld_b = log_abs_det(b)?;
    let z = kron::inverse(a)? * (x - m) * kron::inverse(b)?;
    let kn = (k * n) as f64;
    let log_phi = -0.5 * (z.transpose() * &z).trace() - 0.5 * kn * LN_2PI;
    let log_g: f64 = z
        .iter()
        .zip(delta.iter())
        .map(|(&zv, &dv)| ln_std_normal_cdf(dv * zv))
        .sum();
    Ok(log_phi + log_g - n as f64 * ld_a - k as f64 * ld_b + kn * std::f64::consts::LN_2)
}

/// Log-density of the univariate skew normal `2 φ(z) Φ(δ z)`.
pub fn univariate_log_density(z: f64, delta: f64) -> f64 {
    std::f64::consts::LN_2 - 0.5 * z * z - 0.5 * LN_2PI + ln_std_normal_cdf(delta * z)
}

/// Univariate selection probability `Φ(δ z)`.
pub fn selection_probability(z: f64, delta: f64) -> f64 {
    std_normal_cdf(delta * z)
}

/// Wire form of skew normal parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkewParamsDoc {
    pub mean: DenseArray,
    pub factors: Vec<MatrixDoc>,
    pub delta: DenseArray,
    #[serde(default = "default_mode")]
    pub delta_mode: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_support: Option<Vec<Vec<usize>>>,
}

fn default_mode() -> String {
    "full".into()
}

impl SkewParamsDoc {
    pub fn into_params(self) -> Result<ArraySkewNormalParams> {
        let base = NormalParamsDoc {
            mean: self.mean,
            factors: self.factors,
        }
        .into_params()?;
        let mode = match (self.delta_mode.as_str(), self.delta_support) {
            ("full", None) => DeltaMode::Full,
            ("diagonal", None) => DeltaMode::Diagonal,
            ("sparse", Some(s)) => DeltaMode::Sparse(s),
            ("sparse", None) => return Err(Error::Parse("delta_support: required when delta_mode is sparse".into())),
            ("full" | "diagonal", Some(_)) => {
                return Err(Error::Parse(
                    "delta_support: only allowed when delta_mode is sparse".into(),
                ))
            }
            (other, _) => {
                return Err(Error::Parse(format!(
                    "delta_mode: expected full, diagonal or sparse, got {other:?}"
                )))
            }
        };
        ArraySkewNormalParams::with_mode(base, self.delta, mode)
    }
}

impl From<&ArraySkewNormalParams> for SkewParamsDoc {
    fn from(p: &ArraySkewNormalParams) -> Self {
        let base = NormalParamsDoc::from(p.base());
        let (delta_mode, delta_support) = match p.mode() {
            DeltaMode::Full => ("full", None),
            DeltaMode::Diagonal => ("diagonal", None),
            DeltaMode::Sparse(s) => ("sparse", Some(s.clone())),
        };
        SkewParamsDoc {
            mean: base.mean,
            factors: base.factors,
            delta: p.delta().clone(),
            delta_mode: delta_mode.into(),
            delta_support,
        }
    }
}

/// Draws `n` standardized cores directly; used by goodness-of-fit checks.
pub fn sample_cores(p: &ArraySkewNormalParams, seed: u64, n: usize) -> Vec<DenseArray> {
    let mut stream = rng::stream(seed);
    (0..n).map(|_| p.draw_core(&mut stream)).collect()
}
