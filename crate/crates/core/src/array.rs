//! Dense multiway arrays stored in `rvec` order (first index varies fastest),
//! with element access, fibers, norms and R-matrix multiplication.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kron::Matrix;

/// Extents `(m1, ..., mi)` of a multiway array.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Shape {
    dims: Vec<usize>,
    len: usize,
}

impl Shape {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::Dimension("shape must have at least one axis".into()));
        }
        if let Some(axis) = dims.iter().position(|&m| m == 0) {
            return Err(Error::Dimension(format!("extent of axis {axis} is zero")));
        }
        let len = dims
            .iter()
            .try_fold(1usize, |acc, &m| acc.checked_mul(m))
            .ok_or_else(|| Error::Capacity(format!("total size of shape {dims:?} overflows")))?;
        Ok(Shape { dims, len })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Number of axes.
    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    /// Total number of cells `d = m1 * ... * mi`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Flat offset of a 0-based multi-index: `j1 + j2*m1 + j3*m1*m2 + ...`.
    pub fn offset(&self, idx: &[usize]) -> Result<usize> {
        if idx.len() != self.dims.len() {
            return Err(Error::Index(format!(
                "multi-index has {} entries, array has {} axes",
                idx.len(),
                self.dims.len()
            )));
        }
        let mut offset = 0;
        let mut stride = 1;
        for (axis, (&j, &m)) in idx.iter().zip(&self.dims).enumerate() {
            if j >= m {
                return Err(Error::Index(format!("index {j} on axis {axis} exceeds extent {m}")));
            }
            offset += j * stride;
            stride *= m;
        }
        Ok(offset)
    }

    /// Inverse of [`Shape::offset`]. Panics if `offset >= len`.
    pub fn unravel(&self, mut offset: usize) -> Vec<usize> {
        assert!(offset < self.len, "offset {offset} out of range");
        self.dims
            .iter()
            .map(|&m| {
                let j = offset % m;
                offset /= m;
                j
            })
            .collect()
    }

    /// Iterates all multi-indices in storage order.
    pub fn indices(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        (0..self.len).map(move |k| self.unravel(k))
    }

    /// Product of extents strictly before `axis`.
    fn stride(&self, axis: usize) -> usize {
        self.dims[..axis].iter().product()
    }
}

impl TryFrom<Vec<usize>> for Shape {
    type Error = Error;

    fn try_from(dims: Vec<usize>) -> Result<Self> {
        Shape::new(dims)
    }
}

impl From<Shape> for Vec<usize> {
    fn from(s: Shape) -> Self {
        s.dims
    }
}

/// An i-way real array. `data` holds the cells in `rvec` order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ArrayDoc", into = "ArrayDoc")]
pub struct DenseArray {
    shape: Shape,
    data: Vec<f64>,
}

/// Wire form of an array: `{"shape": [...], "data": [...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayDoc {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl TryFrom<ArrayDoc> for DenseArray {
    type Error = Error;

    fn try_from(doc: ArrayDoc) -> Result<Self> {
        let shape = Shape::new(doc.shape).map_err(|e| Error::Parse(format!("shape: {e}")))?;
        DenseArray::from_vec(shape, doc.data).map_err(|e| Error::Parse(format!("data: {e}")))
    }
}

impl From<DenseArray> for ArrayDoc {
    fn from(a: DenseArray) -> Self {
        ArrayDoc {
            shape: a.shape.dims,
            data: a.data,
        }
    }
}

impl DenseArray {
    pub fn zeros(shape: Shape) -> Self {
        let data = vec![0.0; shape.len()];
        DenseArray { shape, data }
    }

    pub fn filled(shape: Shape, value: f64) -> Self {
        let data = vec![value; shape.len()];
        DenseArray { shape, data }
    }

    /// Wraps `data` (in rvec order) as an array of the given shape.
    pub fn from_vec(shape: Shape, data: Vec<f64>) -> Result<Self> {
        if data.len() != shape.len() {
            return Err(Error::Dimension(format!(
                "data has {} elements, shape {:?} needs {}",
                data.len(),
                shape.dims(),
                shape.len()
            )));
        }
        Ok(DenseArray { shape, data })
    }

    /// Builds an array by evaluating `f` at every 0-based multi-index.
    pub fn from_fn(shape: Shape, mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let data = shape.indices().map(|idx| f(&idx)).collect();
        DenseArray { shape, data }
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    /// Monolinear form: the cells stacked in order of the dimensions.
    pub fn rvec(&self) -> &[f64] {
        &self.data
    }

    pub fn into_rvec(self) -> Vec<f64> {
        self.data
    }

    pub fn rvec_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn get(&self, idx: &[usize]) -> Result<f64> {
        Ok(self.data[self.shape.offset(idx)?])
    }

    pub fn set(&mut self, idx: &[usize], value: f64) -> Result<()> {
        let k = self.shape.offset(idx)?;
        self.data[k] = value;
        Ok(())
    }

    /// The vector running along `free_axis` with every other axis held at
    /// `fixed`. `fixed` has one entry per axis; the entry at `free_axis` is
    /// ignored.
    pub fn fiber(&self, fixed: &[usize], free_axis: usize) -> Result<Vec<f64>> {
        let n = self.shape.ndim();
        if free_axis >= n {
            return Err(Error::Index(format!(
                "free axis {free_axis} out of range for {n}-way array"
            )));
        }
        let mut idx = fixed.to_vec();
        if idx.len() != n {
            return Err(Error::Index(format!(
                "fixed index has {} entries, array has {n} axes",
                idx.len()
            )));
        }
        idx[free_axis] = 0;
        let start = self.shape.offset(&idx)?;
        let stride = self.shape.stride(free_axis);
        Ok((0..self.shape.dims()[free_axis])
            .map(|r| self.data[start + r * stride])
            .collect())
    }

    /// Sum of squares of all cells.
    pub fn square_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn distance(&self, other: &DenseArray) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt())
    }

    pub fn sub(&self, other: &DenseArray) -> Result<DenseArray> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &DenseArray) -> Result<DenseArray> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn scale(&self, c: f64) -> DenseArray {
        self.map(|v| c * v)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> DenseArray {
        DenseArray {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &DenseArray, f: impl Fn(f64, f64) -> f64) -> Result<DenseArray> {
        self.check_same_shape(other)?;
        Ok(DenseArray {
            shape: self.shape.clone(),
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub(crate) fn check_same_shape(&self, other: &DenseArray) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::Dimension(format!(
                "shape {:?} differs from {:?}",
                self.shape.dims(),
                other.shape.dims()
            )));
        }
        Ok(())
    }

    /// Multiplies along a single axis: cell `(.., q, ..)` of the result is
    /// `sum_r b[q, r] * self(.., r, ..)`.
    pub fn mode_product(&self, axis: usize, b: &Matrix) -> Result<DenseArray> {
        let dims = self.shape.dims();
        if axis >= dims.len() {
            return Err(Error::Index(format!("axis {axis} out of range")));
        }
        let m = dims[axis];
        if b.ncols() != m {
            return Err(Error::Dimension(format!(
                "factor for axis {axis} has {} columns, extent is {m}",
                b.ncols()
            )));
        }
        let q = b.nrows();
        let mut out_dims = dims.to_vec();
        out_dims[axis] = q;
        let out_shape = Shape::new(out_dims)?;
        let left = self.shape.stride(axis);
        let right = self.shape.len() / (left * m);
        let mut out = vec![0.0; out_shape.len()];
        for outer in 0..right {
            let src = &self.data[outer * left * m..(outer + 1) * left * m];
            let dst = &mut out[outer * left * q..(outer + 1) * left * q];
            for r in 0..m {
                let src_row = &src[r * left..(r + 1) * left];
                for qi in 0..q {
                    let coef = b[(qi, r)];
                    if coef == 0.0 {
                        continue;
                    }
                    let dst_row = &mut dst[qi * left..(qi + 1) * left];
                    for (o, &s) in dst_row.iter_mut().zip(src_row) {
                        *o += coef * s;
                    }
                }
            }
        }
        Ok(DenseArray {
            shape: out_shape,
            data: out,
        })
    }
}

/// R-matrix multiplication `(B_1)^1 (B_2)^2 ... (B_i)^i x`, evaluated one mode
/// at a time. `B_j` must have as many columns as axis `j` has cells; the
/// result has extents given by the row counts.
pub fn rmul(factors: &[Matrix], x: &DenseArray) -> Result<DenseArray> {
    if factors.len() != x.shape().ndim() {
        return Err(Error::Dimension(format!(
            "{} factors supplied for a {}-way array",
            factors.len(),
            x.shape().ndim()
        )));
    }
    for (axis, b) in factors.iter().enumerate() {
        if b.ncols() != x.shape().dims()[axis] {
            return Err(Error::Dimension(format!(
                "factor {axis} has {} columns, extent is {}",
                b.ncols(),
                x.shape().dims()[axis]
            )));
        }
    }
    let mut cur = x.clone();
    for (axis, b) in factors.iter().enumerate() {
        cur = cur.mode_product(axis, b)?;
    }
    Ok(cur)
}

/// Rebuilds an array from its monolinear form.
pub fn unrvec(v: Vec<f64>, shape: Shape) -> Result<DenseArray> {
    DenseArray::from_vec(shape, v)
}
