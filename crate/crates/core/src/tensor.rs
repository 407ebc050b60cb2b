//! Dense complex tensors stored row-major, and index contraction.
//!
//! Every other module builds on [`Tensor`] and [`contract`]. Contraction is
//! done by permuting both operands into matrix form and handing the product
//! to BLAS, so the cost is dominated by a single `zgemm` call.

use std::borrow::Cow;

use ndarray::{Array2, ArrayView2};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Dense multi-index complex array.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<C64>,
}

pub(crate) fn strides_of(shape: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; shape.len()];
    for k in (0..shape.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * shape[k + 1];
    }
    strides
}

impl Tensor {
    /// Builds a tensor, checking extents, entry count and finiteness.
    pub fn new(shape: Vec<usize>, data: Vec<C64>) -> Result<Self> {
        if shape.contains(&0) {
            return Err(Error::ZeroExtent(shape));
        }
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::ShapeMismatch {
                shape,
                expected,
                got: data.len(),
            });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { shape, data })
    }

    /// Internal constructor for data produced by trusted arithmetic.
    pub(crate) fn from_parts(shape: Vec<usize>, data: Vec<C64>) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        Self { shape, data }
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let len = shape.iter().product();
        Self::from_parts(shape.to_vec(), vec![C64::new(0.0, 0.0); len])
    }

    pub fn scalar(value: C64) -> Self {
        Self::from_parts(Vec::new(), vec![value])
    }

    pub fn identity(n: usize) -> Self {
        let mut t = Self::zeros(&[n, n]);
        for i in 0..n {
            t.data[i * n + i] = C64::new(1.0, 0.0);
        }
        t
    }

    /// Fills a tensor by evaluating `f` at every multi-index in row-major order.
    pub fn from_fn(shape: &[usize], mut f: impl FnMut(&[usize]) -> C64) -> Self {
        let len: usize = shape.iter().product();
        let mut data = Vec::with_capacity(len);
        let mut idx = vec![0usize; shape.len()];
        for _ in 0..len {
            data.push(f(&idx));
            for d in (0..shape.len()).rev() {
                idx[d] += 1;
                if idx[d] < shape[d] {
                    break;
                }
                idx[d] = 0;
            }
        }
        Self::from_parts(shape.to_vec(), data)
    }

    pub fn from_matrix(m: &Array2<C64>) -> Self {
        let (r, c) = m.dim();
        Self::from_parts(vec![r, c], m.iter().copied().collect())
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    pub fn get(&self, index: &[usize]) -> C64 {
        let strides = strides_of(&self.shape);
        let offset: usize = index.iter().zip(&strides).map(|(i, s)| i * s).sum();
        self.data[offset]
    }

    /// The single entry of a tensor whose extents are all 1.
    pub fn to_scalar(&self) -> Option<C64> {
        (self.data.len() == 1).then(|| self.data[0])
    }

    pub fn reshape(self, shape: &[usize]) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != self.data.len() {
            return Err(Error::ShapeMismatch {
                shape: shape.to_vec(),
                expected,
                got: self.data.len(),
            });
        }
        if shape.contains(&0) {
            return Err(Error::ZeroExtent(shape.to_vec()));
        }
        Ok(Self::from_parts(shape.to_vec(), self.data))
    }

    /// Reorders axes: axis `k` of the result is axis `perm[k]` of `self`.
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.rank())?;
        let shape = perm.iter().map(|&p| self.shape[p]).collect();
        let data = permuted(&self.shape, &self.data, perm).into_owned();
        Ok(Self::from_parts(shape, data))
    }

    pub fn conj(&self) -> Self {
        Self::from_parts(self.shape.clone(), self.data.iter().map(|z| z.conj()).collect())
    }

    pub fn scale_mut(&mut self, factor: C64) {
        self.data.iter_mut().for_each(|z| *z *= factor);
    }

    pub fn scaled(&self, factor: C64) -> Self {
        let mut t = self.clone();
        t.scale_mut(factor);
        t
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Frobenius distance; shapes must agree.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        if self.shape != other.shape {
            return Err(Error::InvalidSplit(format!(
                "cannot compare shapes {:?} and {:?}",
                self.shape, other.shape
            )));
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt())
    }

    pub(crate) fn add_scaled(&mut self, other: &Self, factor: C64) {
        debug_assert_eq!(self.shape, other.shape);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += factor * b;
        }
    }

    /// Matrix view grouping `row_axes` (in the given order) as rows and the
    /// remaining axes (in their original order) as columns.
    pub fn matricize(&self, row_axes: &[usize]) -> Result<(Array2<C64>, Vec<usize>, Vec<usize>)> {
        let (perm, n_rows) = split_permutation(row_axes, self.rank())?;
        let row_ext: Vec<usize> = perm[..n_rows].iter().map(|&p| self.shape[p]).collect();
        let col_ext: Vec<usize> = perm[n_rows..].iter().map(|&p| self.shape[p]).collect();
        let rows = row_ext.iter().product();
        let cols = col_ext.iter().product();
        let data = permuted(&self.shape, &self.data, &perm).into_owned();
        let m = Array2::from_shape_vec((rows, cols), data).expect("consistent extents");
        Ok((m, row_ext, col_ext))
    }

    /// The matrix of a rank-2 tensor.
    pub fn to_matrix(&self) -> Result<Array2<C64>> {
        if self.rank() != 2 {
            return Err(Error::InvalidSplit(format!("rank {} is not a matrix", self.rank())));
        }
        Ok(Array2::from_shape_vec((self.shape[0], self.shape[1]), self.data.clone())
            .expect("consistent extents"))
    }
}

fn check_permutation(perm: &[usize], rank: usize) -> Result<()> {
    if perm.len() != rank {
        return Err(Error::InvalidSplit(format!(
            "permutation of length {} for rank {rank}",
            perm.len()
        )));
    }
    let mut seen = vec![false; rank];
    for &p in perm {
        if p >= rank {
            return Err(Error::AxisOutOfRange { axis: p, rank });
        }
        if std::mem::replace(&mut seen[p], true) {
            return Err(Error::DuplicateAxis(p));
        }
    }
    Ok(())
}

/// Permutation putting `row_axes` first and the rest after, plus the row count.
pub(crate) fn split_permutation(row_axes: &[usize], rank: usize) -> Result<(Vec<usize>, usize)> {
    if row_axes.is_empty() || row_axes.len() >= rank {
        return Err(Error::InvalidSplit(format!(
            "row axes {row_axes:?} must be a non-empty proper subset of {rank} axes"
        )));
    }
    let mut seen = vec![false; rank];
    for &a in row_axes {
        if a >= rank {
            return Err(Error::AxisOutOfRange { axis: a, rank });
        }
        if std::mem::replace(&mut seen[a], true) {
            return Err(Error::DuplicateAxis(a));
        }
    }
    let mut perm = row_axes.to_vec();
    perm.extend((0..rank).filter(|a| !seen[*a]));
    Ok((perm, row_axes.len()))
}

/// Entries of a tensor after an axis permutation; borrows when `perm` is the identity.
pub(crate) fn permuted<'a>(shape: &[usize], data: &'a [C64], perm: &[usize]) -> Cow<'a, [C64]> {
    let rank = shape.len();
    if perm.iter().enumerate().all(|(k, &p)| k == p) {
        return Cow::Borrowed(data);
    }
    let strides = strides_of(shape);
    let new_shape: Vec<usize> = perm.iter().map(|&p| shape[p]).collect();
    let src: Vec<usize> = perm.iter().map(|&p| strides[p]).collect();
    let mut out = Vec::with_capacity(data.len());
    let inner = new_shape[rank - 1];
    let inner_stride = src[rank - 1];
    let mut idx = vec![0usize; rank - 1];
    let mut offset = 0usize;
    loop {
        if inner_stride == 1 {
            out.extend_from_slice(&data[offset..offset + inner]);
        } else {
            out.extend((0..inner).map(|i| data[offset + i * inner_stride]));
        }
        let mut d = rank - 1;
        loop {
            if d == 0 {
                return Cow::Owned(out);
            }
            d -= 1;
            idx[d] += 1;
            offset += src[d];
            if idx[d] < new_shape[d] {
                break;
            }
            offset -= src[d] * new_shape[d];
            idx[d] = 0;
        }
    }
}

/// Contracts `a` with `b` over the listed `(axis_of_a, axis_of_b)` pairs.
///
/// The result carries the free axes of `a` followed by the free axes of `b`,
/// each in their original order. An empty `pairs` gives the outer product.
pub fn contract(a: &Tensor, b: &Tensor, pairs: &[(usize, usize)]) -> Result<Tensor> {
    let (ra, rb) = (a.rank(), b.rank());
    let mut used_a = vec![false; ra];
    let mut used_b = vec![false; rb];
    for &(ia, ib) in pairs {
        if ia >= ra {
            return Err(Error::AxisOutOfRange { axis: ia, rank: ra });
        }
        if ib >= rb {
            return Err(Error::AxisOutOfRange { axis: ib, rank: rb });
        }
        if std::mem::replace(&mut used_a[ia], true) {
            return Err(Error::DuplicateAxis(ia));
        }
        if std::mem::replace(&mut used_b[ib], true) {
            return Err(Error::DuplicateAxis(ib));
        }
        if a.shape[ia] != b.shape[ib] {
            return Err(Error::ExtentMismatch {
                left: a.shape[ia],
                right: b.shape[ib],
            });
        }
    }
    let free_a: Vec<usize> = (0..ra).filter(|&k| !used_a[k]).collect();
    let free_b: Vec<usize> = (0..rb).filter(|&k| !used_b[k]).collect();

    let mut perm_a = free_a.clone();
    perm_a.extend(pairs.iter().map(|p| p.0));
    let mut perm_b: Vec<usize> = pairs.iter().map(|p| p.1).collect();
    perm_b.extend(&free_b);

    let m: usize = free_a.iter().map(|&k| a.shape[k]).product();
    let n: usize = free_b.iter().map(|&k| b.shape[k]).product();
    let k: usize = pairs.iter().map(|p| a.shape[p.0]).product();

    let da = permuted(&a.shape, &a.data, &perm_a);
    let db = permuted(&b.shape, &b.data, &perm_b);
    let ma = ArrayView2::from_shape((m, k), &da).expect("consistent extents");
    let mb = ArrayView2::from_shape((k, n), &db).expect("consistent extents");
    let prod = ma.dot(&mb);

    let mut shape: Vec<usize> = free_a.iter().map(|&k| a.shape[k]).collect();
    shape.extend(free_b.iter().map(|&k| b.shape[k]));
    let data = if prod.is_standard_layout() {
        prod.into_raw_vec_and_offset().0
    } else {
        prod.iter().copied().collect()
    };
    Ok(Tensor::from_parts(shape, data))
}
