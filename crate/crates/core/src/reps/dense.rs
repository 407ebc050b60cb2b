use ndarray::Array2;
use num_complex::Complex64 as C64;

use super::{MixedState, NormMode, StateView};
use crate::error::{Error, Result};
use crate::linalg::{adjoint, eigh, singular_values};

/// Dense `d^n × d^n` operator; site 0 is the most significant digit of
/// both the row (ket) and column (bra) index.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    n_sites: usize,
    phys_dim: usize,
    matrix: Array2<C64>,
}

impl DensityMatrix {
    pub fn new(n_sites: usize, phys_dim: usize, matrix: Array2<C64>) -> Result<Self> {
        let dim = phys_dim.pow(n_sites as u32);
        if matrix.dim() != (dim, dim) {
            return Err(Error::InvalidState(format!(
                "{:?} matrix for {n_sites} sites of dimension {phys_dim}",
                matrix.dim()
            )));
        }
        Ok(Self {
            n_sites,
            phys_dim,
            matrix,
        })
    }

    /// `|ψ⟩⟨ψ|` for a state vector of `n` qudits.
    pub fn pure(n_sites: usize, phys_dim: usize, psi: &[C64]) -> Result<Self> {
        let m = Array2::from_shape_fn((psi.len(), psi.len()), |(i, j)| psi[i] * psi[j].conj());
        Self::new(n_sites, phys_dim, m)
    }

    /// `|0…0⟩⟨0…0|` on `n` qubits.
    pub fn all_zeros(n_sites: usize) -> Self {
        let dim = 1usize << n_sites;
        let mut m = Array2::zeros((dim, dim));
        m[(0, 0)] = C64::new(1.0, 0.0);
        Self::new(n_sites, 2, m).expect("consistent")
    }

    pub fn maximally_mixed(n_sites: usize, phys_dim: usize) -> Self {
        let dim = phys_dim.pow(n_sites as u32);
        let m = Array2::from_diag_elem(dim, C64::new(1.0 / dim as f64, 0.0));
        Self::new(n_sites, phys_dim, m).expect("consistent")
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn phys_dim(&self) -> usize {
        self.phys_dim
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    pub(crate) fn matrix_mut(&mut self) -> &mut Array2<C64> {
        &mut self.matrix
    }

    pub fn into_matrix(self) -> Array2<C64> {
        self.matrix
    }

    pub fn trace(&self) -> C64 {
        self.matrix.diag().sum()
    }

    /// `Tr ρ†ρ`, the squared Frobenius norm.
    pub fn purity(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `⟨⟨a|b⟩⟩ = Tr a†b`.
    pub fn overlap(&self, other: &Self) -> Result<C64> {
        if self.matrix.dim() != other.matrix.dim() {
            return Err(Error::SizeMismatch(self.n_sites, other.n_sites));
        }
        Ok(self
            .matrix
            .iter()
            .zip(other.matrix.iter())
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Supervector fidelity `Tr(a†b) / sqrt(Tr a†a · Tr b†b)` (real part).
    pub fn supervector_fidelity(&self, other: &Self) -> Result<f64> {
        let denom = (self.purity() * other.purity()).sqrt();
        if denom == 0.0 {
            return Err(Error::ZeroNorm);
        }
        Ok(self.overlap(other)?.re / denom)
    }

    pub fn frobenius_distance(&self, other: &Self) -> Result<f64> {
        if self.matrix.dim() != other.matrix.dim() {
            return Err(Error::SizeMismatch(self.n_sites, other.n_sites));
        }
        Ok(self
            .matrix
            .iter()
            .zip(other.matrix.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt())
    }

    /// `‖ρ − ρ†‖_F`.
    pub fn hermiticity_defect(&self) -> f64 {
        let adj = adjoint(&self.matrix);
        self.matrix
            .iter()
            .zip(adj.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let herm = (&self.matrix + &adjoint(&self.matrix)).mapv(|z| z * 0.5);
        Ok(eigh(&herm)?.0.to_vec())
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigenvalues()?.first().copied().unwrap_or(0.0))
    }

    /// Sum of singular values after rescaling to unit trace.
    pub fn trace_norm(&self) -> Result<f64> {
        let tr = self.trace();
        if tr.norm() == 0.0 {
            return Err(Error::ZeroNorm);
        }
        let s = singular_values(&self.matrix)?;
        Ok(s.sum() / tr.norm())
    }

    /// Von Neumann entropy (natural log) of the Frobenius-normalized
    /// supervector across the cut after `cut` sites.
    pub fn entanglement_entropy(&self, cut: usize) -> Result<f64> {
        let n = self.n_sites;
        if cut == 0 || cut >= n {
            return Err(Error::OutOfRange {
                name: "cut",
                value: cut as f64,
            });
        }
        let d = self.phys_dim;
        let left = d.pow(cut as u32);
        let right = d.pow((n - cut) as u32);
        // ρ[(τL,τR),(ωL,ωR)] -> M[(τL,ωL),(τR,ωR)]
        let m = Array2::from_shape_fn((left * left, right * right), |(row, col)| {
            let (tl, wl) = (row / left, row % left);
            let (tr, wr) = (col / right, col % right);
            self.matrix[(tl * right + tr, wl * right + wr)]
        });
        let s = singular_values(&m)?;
        Ok(super::entropy_of_spectrum(s.as_slice().expect("contiguous")))
    }

    /// Principal square root of a positive semidefinite operator.
    pub fn sqrt(&self) -> Result<Self> {
        Self::new(self.n_sites, self.phys_dim, psd_sqrt(&self.matrix)?)
    }

    /// Uhlmann fidelity `(Tr sqrt(sqrt(a) b sqrt(a)))²` between unit-trace
    /// positive operators.
    ///
    /// Eigenvalues in `[−1e−9, 0)` are clamped to zero; anything more negative
    /// is rejected.
    pub fn uhlmann_fidelity(&self, other: &Self) -> Result<f64> {
        if self.matrix.dim() != other.matrix.dim() {
            return Err(Error::SizeMismatch(self.n_sites, other.n_sites));
        }
        let sqrt_a = psd_sqrt(&self.matrix)?;
        let inner = sqrt_a.dot(&other.matrix).dot(&sqrt_a);
        check_psd(&other.matrix)?;
        let herm = (&inner + &adjoint(&inner)).mapv(|z| z * 0.5);
        let (vals, _) = eigh(&herm)?;
        let floor = spectral_floor(&vals);
        let root_sum: f64 = vals.iter().filter(|&&v| v > floor).map(|&v| v.sqrt()).sum();
        Ok(root_sum * root_sum)
    }
}

impl MixedState for DensityMatrix {
    fn n_sites(&self) -> usize {
        self.n_sites
    }

    fn phys_dim(&self) -> usize {
        self.phys_dim
    }

    fn view(&self) -> StateView<'_> {
        StateView::Dense(self)
    }

    fn normalize(&mut self, mode: NormMode) -> Result<()> {
        let norm = match mode {
            NormMode::Trace => DensityMatrix::trace(self),
            NormMode::Frobenius => C64::new(DensityMatrix::purity(self).sqrt(), 0.0),
        };
        if norm.norm() == 0.0 || !norm.re.is_finite() || !norm.im.is_finite() {
            return Err(Error::ZeroNorm);
        }
        let inv = norm.inv();
        self.matrix.mapv_inplace(|z| z * inv);
        Ok(())
    }
}

const PSD_TOLERANCE: f64 = 1e-9;

fn check_psd(m: &Array2<C64>) -> Result<()> {
    let herm = (m + &adjoint(m)).mapv(|z| z * 0.5);
    let (vals, _) = eigh(&herm)?;
    match vals.iter().copied().find(|&v| v < -PSD_TOLERANCE) {
        Some(v) => Err(Error::NotPositive(v)),
        None => Ok(()),
    }
}

/// Eigenvalues this far below the largest are rounding noise; their square
/// roots would otherwise leak `~1e-8` into fidelities of nearly pure states.
fn spectral_floor(vals: &ndarray::Array1<f64>) -> f64 {
    let top = vals.iter().fold(0.0f64, |a, &v| a.max(v));
    top * 1e-13
}

fn psd_sqrt(m: &Array2<C64>) -> Result<Array2<C64>> {
    let herm = (m + &adjoint(m)).mapv(|z| z * 0.5);
    let (vals, vecs) = eigh(&herm)?;
    if let Some(v) = vals.iter().copied().find(|&v| v < -PSD_TOLERANCE) {
        return Err(Error::NotPositive(v));
    }
    let floor = spectral_floor(&vals);
    let mut scaled = vecs.clone();
    for (mut col, &lam) in scaled.columns_mut().into_iter().zip(vals.iter()) {
        let r = if lam > floor { lam.sqrt() } else { 0.0 };
        col.mapv_inplace(|z| z * r);
    }
    Ok(scaled.dot(&adjoint(&vecs)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis(n: usize, idx: usize) -> DensityMatrix {
        let dim = 1 << n;
        let mut psi = vec![C64::new(0.0, 0.0); dim];
        psi[idx] = C64::new(1.0, 0.0);
        DensityMatrix::pure(n, 2, &psi).unwrap()
    }

    #[test]
    fn uhlmann_examples() {
        let zero = basis(1, 0);
        let mixed = DensityMatrix::maximally_mixed(1, 2);
        assert!((zero.uhlmann_fidelity(&zero).unwrap() - 1.0).abs() < 1e-12);
        assert!((mixed.uhlmann_fidelity(&zero).unwrap() - 0.5).abs() < 1e-12);
        assert!((zero.uhlmann_fidelity(&mixed).unwrap() - 0.5).abs() < 1e-12);

        let s = 1.0 / 2f64.sqrt();
        let plus = DensityMatrix::pure(1, 2, &[C64::new(s, 0.0), C64::new(s, 0.0)]).unwrap();
        assert!((plus.uhlmann_fidelity(&zero).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn uhlmann_rejects_negative_operators() {
        let m = Array2::from_diag(&ndarray::arr1(&[C64::new(1.5, 0.0), C64::new(-0.5, 0.0)]));
        let bad = DensityMatrix::new(1, 2, m).unwrap();
        assert!(matches!(
            bad.uhlmann_fidelity(&basis(1, 0)),
            Err(Error::NotPositive(_))
        ));
    }

    #[test]
    fn trace_norm_of_diag_operator() {
        let m = Array2::from_diag(&ndarray::arr1(&[C64::new(1.5, 0.0), C64::new(-0.5, 0.0)]));
        let op = DensityMatrix::new(1, 2, m).unwrap();
        assert!((op.trace_norm().unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn maximally_mixed_supervector_is_a_product() {
        let mm = DensityMatrix::maximally_mixed(4, 2);
        for cut in 1..4 {
            assert!(mm.entanglement_entropy(cut).unwrap().abs() < 1e-12);
        }
        assert!(mm.entanglement_entropy(0).is_err());
    }
}
