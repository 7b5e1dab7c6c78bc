//! Inverse Kronecker products and the factor sets that parameterize
//! Kronecker-structured covariances.
//!
//! The inverse Kronecker product is `A ⊗ⁱ B = B ⊗ A`. With that ordering a
//! chain `A_1 ⊗ⁱ ... ⊗ⁱ A_i` acts on `rvec` vectors exactly as R-matrix
//! multiplication acts on arrays.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::array::Shape;
use crate::error::{Error, Result};
use crate::exec::Execution;

pub type Matrix = DMatrix<f64>;

/// Relative singularity guard: `|det A| < SINGULAR_RTOL * ||A||_inf^n`.
pub const SINGULAR_RTOL: f64 = 1e-12;

/// Condition guard for l-inverses: largest over smallest Cholesky pivot of `AᵀA`.
pub const CHOLESKY_RATIO_LIMIT: f64 = 1e8;

/// Ordinary Kronecker product `a ⊗ b`.
pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    a.kronecker(b)
}

/// Inverse Kronecker product `a ⊗ⁱ b = b ⊗ a`.
pub fn ikron(a: &Matrix, b: &Matrix) -> Matrix {
    b.kronecker(a)
}

/// Left fold `A_1 ⊗ⁱ A_2 ⊗ⁱ ... ⊗ⁱ A_i`.
pub fn ikron_chain(factors: &[Matrix]) -> Result<Matrix> {
    let (first, rest) = factors
        .split_first()
        .ok_or_else(|| Error::Dimension("empty factor chain".into()))?;
    Ok(rest.iter().fold(first.clone(), |acc, f| ikron(&acc, f)))
}

/// `(A ⊗ⁱ B)⁻¹` assembled as `A⁻¹ ⊗ⁱ B⁻¹`.
pub fn ikron_inverse(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    Ok(ikron(&inverse(a)?, &inverse(b)?))
}

/// `(A ⊗ⁱ B)⁺` assembled as `A⁺ ⊗ⁱ B⁺`.
pub fn ikron_pinv(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    Ok(ikron(&pinv(a)?, &pinv(b)?))
}

/// `(A ⊗ⁱ B)⁻` assembled as `A⁻ ⊗ⁱ B⁻` with `A⁻ = (AᵀA)⁻¹Aᵀ`.
pub fn ikron_l_inverse(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    Ok(ikron(&l_inverse(a)?, &l_inverse(b)?))
}

fn max_row_sum(a: &Matrix) -> f64 {
    a.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `ln|det a|` via LU with partial pivoting, after the scale-aware
/// singularity check.
pub fn log_abs_det(a: &Matrix) -> Result<f64> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "determinant of a {}x{} matrix",
            a.nrows(),
            a.ncols()
        )));
    }
    let n = a.nrows();
    let norm = max_row_sum(a);
    let lu = a.clone().lu();
    let log_det: f64 = lu.u().diagonal().iter().map(|u| u.abs().ln()).sum();
    if norm == 0.0 || !log_det.is_finite() || log_det < SINGULAR_RTOL.ln() + n as f64 * norm.ln() {
        return Err(Error::Singular(format!(
            "|det| below {SINGULAR_RTOL:e} * ||A||^{n} for a matrix of order {n}"
        )));
    }
    Ok(log_det)
}

pub fn inverse(a: &Matrix) -> Result<Matrix> {
    log_abs_det(a)?;
    a.clone()
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::Singular("LU inverse failed".into()))
}

/// Moore-Penrose inverse via SVD.
pub fn pinv(a: &Matrix) -> Result<Matrix> {
    let eps = f64::EPSILON * a.nrows().max(a.ncols()) as f64 * a.norm();
    a.clone()
        .svd(true, true)
        .pseudo_inverse(eps)
        .map_err(|e| Error::Domain(e.to_string()))
}

/// Left inverse `(AᵀA)⁻¹Aᵀ` of a full-column-rank matrix.
///
/// Computed as `R⁻¹Qᵀ` from a thin QR of `A`, which avoids squaring the
/// condition number. `|diag R|` is the Cholesky diagonal of `AᵀA`, so the rank
/// guard is the Cholesky pivot ratio.
pub fn l_inverse(a: &Matrix) -> Result<Matrix> {
    if a.nrows() < a.ncols() {
        return Err(Error::Rank(format!(
            "{}x{} matrix cannot have full column rank",
            a.nrows(),
            a.ncols()
        )));
    }
    let qr = a.clone().qr();
    let r = qr.r();
    let (lo, hi) = r.diagonal().iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| {
        (lo.min(v.abs()), hi.max(v.abs()))
    });
    if lo.is_nan() || lo <= 0.0 || hi / lo > CHOLESKY_RATIO_LIMIT {
        return Err(Error::Rank(format!(
            "Cholesky pivot ratio {:e} exceeds {CHOLESKY_RATIO_LIMIT:e}",
            hi / lo
        )));
    }
    r.solve_upper_triangular(&qr.q().transpose())
        .ok_or_else(|| Error::Rank("triangular factor is singular".into()))
}

/// The commutation matrix `K(m, n)`: `K vec(M) = vec(Mᵀ)` for an `m×n` matrix
/// `M` under column-major `vec`.
pub fn commutation_matrix(m: usize, n: usize) -> Matrix {
    let mut k = Matrix::zeros(m * n, m * n);
    for i in 0..m {
        for j in 0..n {
            // vec(M)[i + j*m] = M[i,j] = Mᵀ[j,i] = vec(Mᵀ)[j + i*n]
            k[(j + i * n, i + j * m)] = 1.0;
        }
    }
    k
}

/// Determinant and trace of the assembled chain, from the factors alone.
/// The determinant is `∏ det(A_j)^(d/m_j)` and may overflow for large `d`.
pub fn ikron_det_trace(factors: &[Matrix]) -> Result<(f64, f64)> {
    let shape = square_shape(factors)?;
    let d = shape.len();
    let mut det = 1.0;
    let mut trace = 1.0;
    for a in factors {
        let m = a.nrows();
        det *= a.determinant().powi((d / m) as i32);
        trace *= a.trace();
    }
    Ok((det, trace))
}

fn square_shape(factors: &[Matrix]) -> Result<Shape> {
    let mut dims = Vec::with_capacity(factors.len());
    for (j, a) in factors.iter().enumerate() {
        if !a.is_square() {
            return Err(Error::Dimension(format!(
                "factor {j} is {}x{}, expected square",
                a.nrows(),
                a.ncols()
            )));
        }
        dims.push(a.nrows());
    }
    Shape::new(dims)
}

fn is_symmetric(a: &Matrix) -> bool {
    let scale = a.amax().max(f64::MIN_POSITIVE);
    a.is_square() && (a - a.transpose()).amax() <= 1e-10 * scale
}

/// Eigenpairs of one symmetric factor, sorted by descending eigenvalue.
#[derive(Debug, Clone)]
pub struct FactorEigen {
    pub values: Vec<f64>,
    /// Column `r` is the unit eigenvector for `values[r]`.
    pub vectors: Matrix,
}

impl FactorEigen {
    pub fn new(a: &Matrix) -> Result<Self> {
        if !is_symmetric(a) {
            return Err(Error::Domain("eigen decomposition needs a symmetric factor".into()));
        }
        let eig = SymmetricEigen::new(a.clone());
        let mut order: Vec<usize> = (0..a.nrows()).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]).then(i.cmp(&j)));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let mut vectors = Matrix::zeros(a.nrows(), a.nrows());
        for (dst, &src) in order.iter().enumerate() {
            let mut col = eig.eigenvectors.column(src).into_owned();
            // sign convention: largest-magnitude entry positive
            let lead = col.iamax();
            if col[lead] < 0.0 {
                col.neg_mut();
            }
            vectors.set_column(dst, &col);
        }
        Ok(FactorEigen { values, vectors })
    }
}

/// One eigenvalue of a chain together with the per-factor eigenpair ranks
/// that produce it.
#[derive(Debug, Clone, PartialEq)]
pub struct KronEigenpair {
    pub value: f64,
    pub indices: Vec<usize>,
}

/// Eigen structure of `A_1 ⊗ⁱ ... ⊗ⁱ A_i` for symmetric factors.
#[derive(Debug, Clone)]
pub struct KronEigen {
    pub factors: Vec<FactorEigen>,
    /// All `∏ m_j` products, sorted descending with lexicographic tie-break.
    pub pairs: Vec<KronEigenpair>,
}

impl KronEigen {
    /// Materializes the eigenvector `v_1 ⊗ⁱ ... ⊗ⁱ v_i` for a rank tuple.
    pub fn eigenvector(&self, indices: &[usize]) -> Vec<f64> {
        let cols: Vec<Matrix> = self
            .factors
            .iter()
            .zip(indices)
            .map(|(f, &r)| Matrix::from_column_slice(f.vectors.nrows(), 1, f.vectors.column(r).as_slice()))
            .collect();
        ikron_chain(&cols).expect("non-empty").as_slice().to_vec()
    }
}

/// Eigenvalues of the chain as products of factor eigenvalues.
pub fn ikron_eigen(factors: &[Matrix]) -> Result<KronEigen> {
    ikron_eigen_with(factors, Execution::default())
}

pub fn ikron_eigen_with(factors: &[Matrix], exec: Execution) -> Result<KronEigen> {
    let shape = square_shape(factors)?;
    let per_factor: Vec<Result<FactorEigen>> = exec.map_slice(factors, FactorEigen::new);
    let factors: Vec<FactorEigen> = per_factor.into_iter().collect::<Result<_>>()?;
    let mut pairs: Vec<KronEigenpair> = shape
        .indices()
        .map(|idx| KronEigenpair {
            value: idx.iter().zip(&factors).map(|(&r, f)| f.values[r]).product(),
            indices: idx,
        })
        .collect();
    pairs.sort_by(|a, b| b.value.total_cmp(&a.value).then_with(|| a.indices.cmp(&b.indices)));
    Ok(KronEigen { factors, pairs })
}

/// Square nonsingular factors `A_1, ..., A_i` with cached inverses and
/// log-determinants.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorSet {
    factors: Vec<Matrix>,
    inverses: Vec<Matrix>,
    log_abs_dets: Vec<f64>,
    shape: Shape,
}

impl FactorSet {
    pub fn new(factors: Vec<Matrix>) -> Result<Self> {
        let shape = square_shape(&factors)?;
        let mut inverses = Vec::with_capacity(factors.len());
        let mut log_abs_dets = Vec::with_capacity(factors.len());
        for (j, a) in factors.iter().enumerate() {
            let ld = log_abs_det(a).map_err(|e| match e {
                Error::Singular(msg) => Error::Singular(format!("factor {j}: {msg}")),
                other => other,
            })?;
            log_abs_dets.push(ld);
            inverses.push(inverse(a)?);
        }
        Ok(FactorSet {
            factors,
            inverses,
            log_abs_dets,
            shape,
        })
    }

    pub fn identity(shape: &Shape) -> Self {
        FactorSet::new(shape.dims().iter().map(|&m| Matrix::identity(m, m)).collect())
            .expect("identity factors are nonsingular")
    }

    pub fn factors(&self) -> &[Matrix] {
        &self.factors
    }

    pub fn inverses(&self) -> &[Matrix] {
        &self.inverses
    }

    pub fn log_abs_dets(&self) -> &[f64] {
        &self.log_abs_dets
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    /// `ln|det(A_1 ⊗ⁱ ... ⊗ⁱ A_i)| = Σ_j (d/m_j) ln|det A_j|`.
    pub fn log_abs_det_chain(&self) -> f64 {
        let d = self.shape.len() as f64;
        self.log_abs_dets
            .iter()
            .zip(self.shape.dims())
            .map(|(ld, &m)| d / m as f64 * ld)
            .sum()
    }

    /// Gram matrices `A_j A_jᵀ`.
    pub fn grams(&self) -> Vec<Matrix> {
        self.factors.iter().map(|a| a * a.transpose()).collect()
    }

    pub fn chain(&self) -> Matrix {
        ikron_chain(&self.factors).expect("factor set is non-empty")
    }
}

/// Wire form of a matrix: `{"rows": r, "cols": c, "data": [row-major]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixDoc {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl MatrixDoc {
    pub fn into_matrix(self) -> Result<Matrix> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::Parse("matrix with zero rows or columns".into()));
        }
        if self.data.len() != self.rows * self.cols {
            return Err(Error::Parse(format!(
                "matrix data has {} entries, expected {}x{}",
                self.data.len(),
                self.rows,
                self.cols
            )));
        }
        Ok(Matrix::from_row_slice(self.rows, self.cols, &self.data))
    }
}

impl From<&Matrix> for MatrixDoc {
    fn from(m: &Matrix) -> Self {
        MatrixDoc {
            rows: m.nrows(),
            cols: m.ncols(),
            data: m.transpose().as_slice().to_vec(),
        }
    }
}
