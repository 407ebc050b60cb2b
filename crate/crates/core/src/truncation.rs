//! Compression of LPDOs by gauge-aware projectors and of MPOs by a
//! canonical-form SVD sweep.

use ndarray::{s, Array2};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{adjoint, discarded_fraction, kept_rank, lq_split, qr_split, svd_thin};
use crate::reps::{Lpdo, MixedState, Mpo, NormMode};
use crate::tensor::{contract, Tensor};

/// Singular values below this fraction of the largest are never inverted.
const PSEUDO_INVERSE_FLOOR: f64 = 1e-12;

/// Gauge matrices from one QR sweep and one LQ sweep.
///
/// `left[j]` multiplies site `j` on its left bond and `right[j]` on its
/// right bond; `left[0]` and `right[n-1]` are `1 × 1` identities.
#[derive(Clone, Debug)]
pub struct GaugeSet {
    pub left: Vec<Array2<C64>>,
    pub right: Vec<Array2<C64>>,
}

/// Truncating projectors for every Kraus leg and every virtual bond.
#[derive(Clone, Debug)]
pub struct ProjectorSet {
    /// `kraus[j]`: `d_κ × d_κ'` isometry on the Kraus leg of site `j`.
    pub kraus: Vec<Array2<C64>>,
    /// `right[j]`: `χ_j × χ'_j`, applied on the right bond of site `j`.
    pub right: Vec<Array2<C64>>,
    /// `left[j]`: `χ'_{j-1} × χ_{j-1}`, applied on the left bond of site `j`.
    pub left: Vec<Array2<C64>>,
    /// Discarded weight of each virtual bond.
    pub bond_discarded: Vec<f64>,
    /// Discarded weight of each Kraus leg.
    pub kraus_discarded: Vec<f64>,
}

fn unit() -> Array2<C64> {
    Array2::from_elem((1, 1), C64::new(1.0, 0.0))
}

fn tensor_of(m: &Array2<C64>) -> Tensor {
    Tensor::from_matrix(m)
}

/// `L_j · A_j` as `[k, τ, κ, a']`.
fn absorb_left(l: &Array2<C64>, a: &Tensor) -> Tensor {
    contract(&tensor_of(l), a, &[(1, 2)]).expect("matching bond")
}

/// `A_j · R_j` as `[τ, κ, a, c]`.
fn absorb_right(a: &Tensor, r: &Array2<C64>) -> Tensor {
    contract(a, &tensor_of(r), &[(3, 0)]).expect("matching bond")
}

pub fn gauge_sweep(l: &Lpdo) -> Result<GaugeSet> {
    let n = l.n_sites();
    let mut left = Vec::with_capacity(n);
    left.push(unit());
    for j in 0..n - 1 {
        let x = absorb_left(&left[j], l.site(j));
        let (_, r) = qr_split(&x, &[0, 1, 2])?;
        left.push(r.to_matrix()?);
    }
    let mut right = vec![unit(); n];
    for j in (1..n).rev() {
        let y = absorb_right(l.site(j), &right[j]);
        let (lf, _) = lq_split(&y, &[2])?;
        right[j - 1] = lf.to_matrix()?;
    }
    Ok(GaugeSet { left, right })
}

fn gram_residual(x: &Array2<C64>, target: &Array2<C64>) -> f64 {
    let diff = x - target;
    let scale = target.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().max(1.0);
    diff.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() / scale
}

/// Canonical-condition residuals `‖X†X − L†L‖` (left, one per site except the
/// last) and `‖YY† − RR†‖` (right, one per site except the first), where
/// `X = L_j A_j` and `Y = A_j R_j` with physical and Kraus legs traced.
pub fn canonical_residuals(l: &Lpdo, g: &GaugeSet) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = l.n_sites();
    let mut left = Vec::with_capacity(n - 1);
    for j in 0..n - 1 {
        let (x, _, _) = absorb_left(&g.left[j], l.site(j)).matricize(&[0, 1, 2])?;
        let lj = &g.left[j + 1];
        left.push(gram_residual(&adjoint(&x).dot(&x), &adjoint(lj).dot(lj)));
    }
    let mut right = Vec::with_capacity(n - 1);
    for j in 1..n {
        let (y, _, _) = absorb_right(l.site(j), &g.right[j]).matricize(&[2])?;
        let rj = &g.right[j - 1];
        right.push(gram_residual(&y.dot(&adjoint(&y)), &rj.dot(&adjoint(rj))));
    }
    Ok((left, right))
}

/// Builds the Kraus and virtual projectors from the stored gauges.
pub fn build_projectors(
    l: &Lpdo,
    g: &GaugeSet,
    chi_max: usize,
    dkappa_max: usize,
    cutoff: f64,
) -> Result<ProjectorSet> {
    let n = l.n_sites();
    let cut = cutoff.max(PSEUDO_INVERSE_FLOOR);

    let mut right = Vec::with_capacity(n);
    let mut left = vec![unit()];
    let mut bond_discarded = Vec::with_capacity(n - 1);
    for j in 0..n - 1 {
        let m = g.left[j + 1].dot(&g.right[j]);
        let (u, s, vh) = svd_thin(&m)?;
        let s = s.to_vec();
        let keep = kept_rank(&s, Some(chi_max), cut);
        if keep == 0 {
            return Err(Error::Degenerate);
        }
        bond_discarded.push(discarded_fraction(&s, keep));
        let inv_sqrt: Vec<f64> = s[..keep].iter().map(|x| x.powf(-0.5)).collect();
        // P^R = R V S^{-1/2}
        let mut v = adjoint(&vh.slice(s![..keep, ..]).to_owned());
        for (mut col, &w) in v.columns_mut().into_iter().zip(&inv_sqrt) {
            col.mapv_inplace(|z| z * w);
        }
        right.push(g.right[j].dot(&v));
        // P^L = S^{-1/2} U† L
        let mut uh = adjoint(&u.slice(s![.., ..keep]).to_owned());
        for (mut row, &w) in uh.rows_mut().into_iter().zip(&inv_sqrt) {
            row.mapv_inplace(|z| z * w);
        }
        left.push(uh.dot(&g.left[j + 1]));
    }
    right.push(unit());

    let mut kraus = Vec::with_capacity(n);
    let mut kraus_discarded = Vec::with_capacity(n);
    for j in 0..n {
        // Ã = L A R as [k,τ,κ,c], matricized as (k, τ, c) × κ.
        let at = absorb_right(&absorb_left(&g.left[j], l.site(j)), &g.right[j]);
        let (m, _, _) = at.matricize(&[0, 1, 3])?;
        let (_, s, vh) = svd_thin(&m)?;
        let s = s.to_vec();
        let keep = kept_rank(&s, Some(dkappa_max), cutoff);
        if keep == 0 {
            return Err(Error::Degenerate);
        }
        kraus_discarded.push(discarded_fraction(&s, keep));
        kraus.push(adjoint(&vh.slice(s![..keep, ..]).to_owned()));
    }

    Ok(ProjectorSet {
        kraus,
        right,
        left,
        bond_discarded,
        kraus_discarded,
    })
}

/// Applies every projector at once: `A'_j = P^L_j A_j P^R_j P^C_j`.
pub fn apply_projectors(l: &Lpdo, p: &ProjectorSet) -> Result<Lpdo> {
    let sites = l
        .sites()
        .iter()
        .enumerate()
        .map(|(j, a)| {
            let t = contract(&tensor_of(&p.left[j]), a, &[(1, 2)])?; // [k,τ,κ,a']
            let t = contract(&t, &tensor_of(&p.right[j]), &[(3, 0)])?; // [k,τ,κ,k']
            let t = contract(&t, &tensor_of(&p.kraus[j]), &[(2, 0)])?; // [k,τ,k',r]
            t.permute(&[1, 3, 0, 2])
        })
        .collect::<Result<Vec<_>>>()?;
    Lpdo::new(sites)
}

/// Three-step compression: gauge sweep, projector construction with the
/// Kraus legs still untruncated, then simultaneous application followed by
/// a trace renormalization. Returns the summed discarded weight.
pub fn lpdo_compress(l: &Lpdo, chi_max: usize, dkappa_max: usize, cutoff: f64) -> Result<(Lpdo, f64)> {
    if chi_max == 0 || dkappa_max == 0 {
        return Err(Error::InvalidState("caps must be at least 1".into()));
    }
    let g = gauge_sweep(l)?;
    let p = build_projectors(l, &g, chi_max, dkappa_max, cutoff)?;
    let mut out = apply_projectors(l, &p)?;
    out.normalize(NormMode::Trace)?;
    let discarded = p.bond_discarded.iter().chain(&p.kraus_discarded).sum();
    Ok((out, discarded))
}

/// QR left-canonicalization followed by a right-to-left truncated SVD sweep.
/// The overall scale is left untouched.
pub fn mpo_compress(m: &Mpo, d_max: usize, cutoff: f64) -> Result<(Mpo, f64)> {
    if d_max == 0 {
        return Err(Error::InvalidState("caps must be at least 1".into()));
    }
    let n = m.n_sites();
    let mut sites: Vec<Tensor> = Vec::with_capacity(n);
    let mut carry = unit();
    for j in 0..n {
        let x = contract(&tensor_of(&carry), m.site(j), &[(1, 2)])?; // [k,τ,ω,a']
        if j == n - 1 {
            sites.push(x.permute(&[1, 2, 0, 3])?);
            break;
        }
        let (q, r) = qr_split(&x, &[0, 1, 2])?;
        sites.push(q.permute(&[1, 2, 0, 3])?);
        carry = r.to_matrix()?;
    }
    let mut discarded = 0.0;
    for j in (1..n).rev() {
        let (mat, _, col_ext) = sites[j].matricize(&[2])?; // a × (τ,ω,a')
        let (u, s, vh) = svd_thin(&mat)?;
        let s = s.to_vec();
        let keep = kept_rank(&s, Some(d_max), cutoff);
        if keep == 0 {
            return Err(Error::Degenerate);
        }
        discarded += discarded_fraction(&s, keep);
        let vh = vh.slice(s![..keep, ..]).to_owned();
        let mut shape = vec![keep];
        shape.extend_from_slice(&col_ext);
        sites[j] = Tensor::new(shape, vh.iter().copied().collect())?.permute(&[1, 2, 0, 3])?;
        let mut us = u.slice(s![.., ..keep]).to_owned();
        for (mut col, &w) in us.columns_mut().into_iter().zip(&s[..keep]) {
            col.mapv_inplace(|z| z * w);
        }
        sites[j - 1] = contract(&sites[j - 1], &tensor_of(&us), &[(3, 0)])?;
    }
    Ok((Mpo::new(sites)?, discarded))
}
