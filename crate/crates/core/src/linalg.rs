//! Matrix factorizations on [`Tensor`]s: truncated SVD and phase-fixed QR/LQ.
//!
//! The tensor is matricized with the requested row axes first; the factors
//! come back with the row extents plus the new bond on the left factor, and
//! the new bond plus the column extents on the right factor.

use ndarray::{s, Array1, Array2, Axis, ShapeBuilder};
use ndarray_linalg::{Eigh, JobSvd, SVDDC, QR, SVD, UPLO};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Result of [`svd_split`].
#[derive(Clone, Debug)]
pub struct Factorization {
    /// Row extents followed by the kept rank; orthonormal columns.
    pub left: Tensor,
    /// Kept singular values, non-increasing.
    pub singular_values: Vec<f64>,
    /// Kept rank followed by the column extents; orthonormal rows.
    pub right: Tensor,
    /// Dropped squared singular values over the total squared sum.
    pub discarded_weight: f64,
}

impl Factorization {
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    /// `right` with the singular values multiplied into its bond axis.
    pub fn weighted_right(&self) -> Tensor {
        scale_leading_axis(&self.right, &self.singular_values)
    }
}

pub(crate) fn scale_leading_axis(t: &Tensor, weights: &[f64]) -> Tensor {
    let mut out = t.clone();
    let block = t.len() / weights.len();
    for (chunk, &w) in out.data_mut().chunks_mut(block).zip(weights) {
        chunk.iter_mut().for_each(|z| *z *= w);
    }
    out
}

/// Thin SVD `m = u · diag(s) · vh`, singular values non-increasing.
pub fn svd_thin(m: &Array2<C64>) -> Result<(Array2<C64>, Array1<f64>, Array2<C64>)> {
    if let Ok((Some(u), s, Some(vh))) = m.svddc(JobSvd::Some) {
        if s.iter().all(|x| x.is_finite()) {
            return Ok((u, s, vh));
        }
    }
    // Divide-and-conquer occasionally fails to converge; fall back to QR iteration.
    let (u, s, vh) = m.svd(true, true)?;
    let k = s.len();
    let u = u.expect("requested").slice(s![.., ..k]).to_owned();
    let vh = vh.expect("requested").slice(s![..k, ..]).to_owned();
    Ok((u, s, vh))
}

pub fn singular_values(m: &Array2<C64>) -> Result<Array1<f64>> {
    match m.svddc(JobSvd::None) {
        Ok((_, s, _)) => Ok(s),
        Err(_) => Ok(m.svd(false, false)?.1),
    }
}

/// How many leading singular values survive the relative cutoff and rank cap.
pub(crate) fn kept_rank(s: &[f64], max_rank: Option<usize>, cutoff: f64) -> usize {
    let Some(&s_max) = s.first() else { return 0 };
    if s_max <= 0.0 {
        return 0;
    }
    let threshold = cutoff * s_max;
    let numerical = s.iter().take_while(|&&x| x > threshold && x > 0.0).count();
    max_rank.map_or(numerical, |r| numerical.min(r))
}

pub(crate) fn discarded_fraction(s: &[f64], kept: usize) -> f64 {
    let total: f64 = s.iter().map(|x| x * x).sum();
    if total == 0.0 {
        return 0.0;
    }
    let dropped: f64 = s[kept..].iter().map(|x| x * x).sum();
    (dropped / total).clamp(0.0, 1.0)
}

/// Truncated SVD across the `row_axes` / remaining-axes bipartition.
///
/// Singular values at or below `cutoff · s_max` are dropped, then at most
/// `max_rank` are kept. Ties are resolved by sorted position.
pub fn svd_split(
    t: &Tensor,
    row_axes: &[usize],
    max_rank: Option<usize>,
    cutoff: Option<f64>,
) -> Result<Factorization> {
    let (m, row_ext, col_ext) = t.matricize(row_axes)?;
    let (u, s, vh) = svd_thin(&m)?;
    let s = s.to_vec();
    let keep = kept_rank(&s, max_rank, cutoff.unwrap_or(0.0));
    if keep == 0 {
        return Err(Error::Degenerate);
    }
    let discarded_weight = discarded_fraction(&s, keep);
    let left = matrix_to_tensor(u.slice(s![.., ..keep]).to_owned(), &row_ext, &[keep]);
    let right = matrix_to_tensor(vh.slice(s![..keep, ..]).to_owned(), &[keep], &col_ext);
    Ok(Factorization {
        left,
        singular_values: s[..keep].to_vec(),
        right,
        discarded_weight,
    })
}

pub(crate) fn matrix_to_tensor(m: Array2<C64>, rows: &[usize], cols: &[usize]) -> Tensor {
    let mut shape = rows.to_vec();
    shape.extend_from_slice(cols);
    let data = if m.is_standard_layout() {
        m.into_raw_vec_and_offset().0
    } else {
        m.iter().copied().collect()
    };
    Tensor::from_parts(shape, data)
}

/// Thin QR with the diagonal of `r` made real and non-negative.
pub fn qr_phase_fixed(m: &Array2<C64>) -> Result<(Array2<C64>, Array2<C64>)> {
    let (mut q, mut r) = m.qr()?;
    let k = r.nrows();
    for i in 0..k {
        let d = r[(i, i)];
        let mag = d.norm();
        if mag > 0.0 {
            let phase = d / mag;
            q.column_mut(i).mapv_inplace(|z| z * phase);
            r.row_mut(i).mapv_inplace(|z| z * phase.conj());
        }
    }
    Ok((q, r))
}

/// Thin LQ (`m = l · q`, orthonormal rows of `q`) via QR of the adjoint.
pub fn lq_phase_fixed(m: &Array2<C64>) -> Result<(Array2<C64>, Array2<C64>)> {
    let (q, r) = qr_phase_fixed(&adjoint(m))?;
    Ok((adjoint(&r), adjoint(&q)))
}

pub fn adjoint(m: &Array2<C64>) -> Array2<C64> {
    m.t().mapv(|z| z.conj())
}

/// QR across the `row_axes` bipartition: `q` has orthonormal columns and
/// `r` is upper triangular with a real non-negative diagonal.
pub fn qr_split(t: &Tensor, row_axes: &[usize]) -> Result<(Tensor, Tensor)> {
    let (m, row_ext, col_ext) = t.matricize(row_axes)?;
    let (q, r) = qr_phase_fixed(&m)?;
    let k = r.nrows();
    Ok((matrix_to_tensor(q, &row_ext, &[k]), matrix_to_tensor(r, &[k], &col_ext)))
}

/// LQ across the `row_axes` bipartition: `q` has orthonormal rows and `l` is
/// lower triangular with a real non-negative diagonal.
pub fn lq_split(t: &Tensor, row_axes: &[usize]) -> Result<(Tensor, Tensor)> {
    let (m, row_ext, col_ext) = t.matricize(row_axes)?;
    let (l, q) = lq_phase_fixed(&m)?;
    let k = l.ncols();
    Ok((matrix_to_tensor(l, &row_ext, &[k]), matrix_to_tensor(q, &[k], &col_ext)))
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
///
/// The backend hands back conjugated eigenvectors for row-major complex
/// input, so a column-major copy is passed instead.
pub fn eigh(m: &Array2<C64>) -> Result<(Array1<f64>, Array2<C64>)> {
    let mut f = Array2::zeros(m.raw_dim().f());
    f.assign(m);
    Ok(f.eigh(UPLO::Lower)?)
}

/// `exp(-i · t · h)` for Hermitian `h`.
pub fn unitary_evolution(h: &Array2<C64>, t: f64) -> Result<Array2<C64>> {
    let (vals, vecs) = eigh(h)?;
    let mut scaled = vecs.clone();
    for (mut col, &lam) in scaled.axis_iter_mut(Axis(1)).zip(vals.iter()) {
        let phase = C64::from_polar(1.0, -lam * t);
        col.mapv_inplace(|z| z * phase);
    }
    Ok(scaled.dot(&adjoint(&vecs)))
}

/// Largest entry of `|u†u − I|`.
pub fn unitarity_defect(u: &Array2<C64>) -> f64 {
    let g = adjoint(u).dot(u);
    g.indexed_iter()
        .map(|((i, j), z)| {
            let target = if i == j { 1.0 } else { 0.0 };
            (z - C64::new(target, 0.0)).norm()
        })
        .fold(0.0, f64::max)
}

pub fn kron(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    Array2::from_shape_fn((ar * br, ac * bc), |(i, j)| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}
