use num_complex::Complex64 as C64;

use super::lpdo::validate_chain;
use super::{DensityMatrix, MixedState, NormMode, StateView};
use crate::error::{Error, Result};
use crate::linalg::{matrix_to_tensor, svd_thin, kept_rank};
use crate::tensor::Tensor;

/// Matrix product operator with site axes `(ket, bra, left, right)`.
///
/// Nothing in the structure enforces Hermiticity or positivity.
#[derive(Clone, Debug, PartialEq)]
pub struct Mpo {
    sites: Vec<Tensor>,
    phys_dim: usize,
}

impl Mpo {
    pub fn new(sites: Vec<Tensor>) -> Result<Self> {
        validate_chain(&sites, "MPO")?;
        let phys_dim = sites[0].shape()[0];
        if sites
            .iter()
            .any(|t| t.shape()[0] != phys_dim || t.shape()[1] != phys_dim)
        {
            return Err(Error::InvalidState("MPO physical extents differ".into()));
        }
        Ok(Self { sites, phys_dim })
    }

    /// `I / d^n` with unit bond dimension.
    pub fn maximally_mixed(n: usize, phys_dim: usize) -> Self {
        let w = 1.0 / phys_dim as f64;
        let site = Tensor::from_fn(&[phys_dim, phys_dim, 1, 1], |i| {
            if i[0] == i[1] {
                C64::new(w, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        Self::new(vec![site; n]).expect("valid")
    }

    /// Exact MPO of a dense operator by successive SVDs of its supervector.
    ///
    /// Singular values at or below `cutoff · s_max` are dropped at each bond.
    pub fn from_dense(rho: &DensityMatrix, cutoff: f64) -> Result<Self> {
        let n = rho.n_sites();
        let d = rho.phys_dim();
        // Interleave ket and bra digits: [τ1..τn, ω1..ωn] -> [τ1,ω1,…,τn,ωn].
        let m = rho.matrix();
        let mut shape = vec![d; 2 * n];
        let data: Vec<C64> = m.iter().copied().collect();
        let t = Tensor::new(shape.clone(), data)?;
        let perm: Vec<usize> = (0..n).flat_map(|j| [j, n + j]).collect();
        let mut rest = t.permute(&perm)?;
        shape = rest.shape().to_vec();
        let mut sites = Vec::with_capacity(n);
        let mut left = 1usize;
        for j in 0..n - 1 {
            let rows = left * d * d;
            let cols = rest.len() / rows;
            let mat = ndarray::Array2::from_shape_vec((rows, cols), rest.into_data())
                .expect("consistent extents");
            let (u, s, vh) = svd_thin(&mat)?;
            let keep = kept_rank(s.as_slice().expect("contiguous"), None, cutoff).max(1);
            let u = u.slice(ndarray::s![.., ..keep]).to_owned();
            let site = matrix_to_tensor(u, &[left, d, d], &[keep]).permute(&[1, 2, 0, 3])?;
            sites.push(site);
            let mut weighted = vh.slice(ndarray::s![..keep, ..]).to_owned();
            for (mut row, &sv) in weighted.rows_mut().into_iter().zip(s.iter()) {
                row.mapv_inplace(|z| z * sv);
            }
            let tail: Vec<usize> = shape[2 * (j + 1)..].to_vec();
            rest = matrix_to_tensor(weighted, &[keep], &tail);
            left = keep;
        }
        let last = rest.reshape(&[left, d, d, 1])?.permute(&[1, 2, 0, 3])?;
        sites.push(last);
        Self::new(sites)
    }

    pub fn sites(&self) -> &[Tensor] {
        &self.sites
    }

    pub fn site(&self, j: usize) -> &Tensor {
        &self.sites[j]
    }

    pub fn into_sites(self) -> Vec<Tensor> {
        self.sites
    }

    pub(crate) fn sites_mut(&mut self) -> &mut [Tensor] {
        &mut self.sites
    }

    pub fn bond_dims(&self) -> Vec<usize> {
        self.sites[..self.sites.len() - 1].iter().map(|t| t.shape()[3]).collect()
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    /// Operator adjoint: swaps ket and bra legs and conjugates.
    pub fn adjoint(&self) -> Self {
        let sites = self
            .sites
            .iter()
            .map(|t| t.permute(&[1, 0, 2, 3]).expect("rank 4").conj())
            .collect();
        Self::new(sites).expect("valid")
    }
}

impl MixedState for Mpo {
    fn n_sites(&self) -> usize {
        self.sites.len()
    }

    fn phys_dim(&self) -> usize {
        self.phys_dim
    }

    fn view(&self) -> StateView<'_> {
        StateView::Mpo(self)
    }

    fn normalize(&mut self, mode: NormMode) -> Result<()> {
        let norm = match mode {
            NormMode::Trace => self.trace(),
            NormMode::Frobenius => C64::new(self.purity().sqrt(), 0.0),
        };
        if norm.norm() == 0.0 || !norm.re.is_finite() || !norm.im.is_finite() {
            return Err(Error::ZeroNorm);
        }
        self.sites.last_mut().expect("non-empty").scale_mut(norm.inv());
        Ok(())
    }
}
