//! Mixed-state representations and their scalar diagnostics.

mod archive;
mod dense;
mod lpdo;
mod mpo;
pub(crate) mod network;

use ndarray::Array2;
use num_complex::Complex64 as C64;

pub use archive::{read_archive, write_archive, ARCHIVE_MAGIC};
pub use dense::DensityMatrix;
pub use lpdo::Lpdo;
pub use mpo::Mpo;

use crate::error::{Error, Result};
use crate::linalg::{lq_split, qr_split, singular_values};
use crate::tensor::{contract, Tensor};

/// Default ceiling on the number of sites for dense reconstruction.
pub const DEFAULT_DENSE_CAP: usize = 12;

/// Relative threshold below which Schmidt values are left out of entropies.
const SCHMIDT_FLOOR: f64 = 1e-14;

/// Borrowed view used by the network contractions.
#[derive(Clone, Copy, Debug)]
pub enum StateView<'a> {
    Lpdo(&'a Lpdo),
    Mpo(&'a Mpo),
    Dense(&'a DensityMatrix),
}

impl StateView<'_> {
    pub fn n_sites(&self) -> usize {
        match self {
            StateView::Lpdo(l) => l.n_sites(),
            StateView::Mpo(m) => m.n_sites(),
            StateView::Dense(d) => d.n_sites(),
        }
    }

    fn is_dense(&self) -> bool {
        matches!(self, StateView::Dense(_))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormMode {
    /// `Tr ρ = 1`.
    Trace,
    /// `Tr ρ² = 1`.
    Frobenius,
}

/// Common interface of the tensor-network representations.
pub trait MixedState {
    fn n_sites(&self) -> usize;
    fn phys_dim(&self) -> usize;
    fn view(&self) -> StateView<'_>;

    /// Rescales the last site so the chosen norm becomes one.
    fn normalize(&mut self, mode: NormMode) -> Result<()>;

    fn trace(&self) -> C64 {
        trace_of(self.view())
    }

    /// `Tr ρ†ρ`; equals `Tr ρ²` for Hermitian states.
    fn purity(&self) -> f64 {
        match self.view() {
            StateView::Dense(d) => d.purity(),
            v => network::overlap(v, v).re,
        }
    }

    fn to_dense(&self) -> Result<DensityMatrix> {
        self.to_dense_capped(DEFAULT_DENSE_CAP)
    }

    fn to_dense_capped(&self, cap: usize) -> Result<DensityMatrix> {
        if self.n_sites() > cap {
            return Err(Error::SizeCap {
                n_sites: self.n_sites(),
                cap,
            });
        }
        match self.view() {
            StateView::Lpdo(l) => dense_of_lpdo(l),
            StateView::Mpo(m) => dense_of_mpo(m),
            StateView::Dense(d) => Ok(d.clone()),
        }
    }

    /// Von Neumann entropy of the normalized supervector across the bond
    /// after `cut` sites.
    fn entanglement_entropy(&self, cut: usize) -> Result<f64> {
        let n = self.n_sites();
        if cut == 0 || cut >= n {
            return Err(Error::OutOfRange {
                name: "cut",
                value: cut as f64,
            });
        }
        match self.view() {
            StateView::Lpdo(l) => mpo_entropy(&l.to_mpo(), cut),
            StateView::Mpo(m) => mpo_entropy(m, cut),
            StateView::Dense(d) => d.entanglement_entropy(cut),
        }
    }

    /// Entropy at the cut after `⌊N/2⌋` sites (zero for a single site).
    fn half_cut_entropy(&self) -> Result<f64> {
        if self.n_sites() < 2 {
            return Ok(0.0);
        }
        self.entanglement_entropy(half_cut(self.n_sites()))
    }

    /// Sum of singular values of the trace-normalized dense operator.
    fn trace_norm(&self) -> Result<f64> {
        self.to_dense()?.trace_norm()
    }
}

pub fn half_cut(n_sites: usize) -> usize {
    n_sites / 2
}

/// `⟨⟨a|b⟩⟩ = Tr a†b` by network contraction.
pub fn supervector_overlap<A, B>(a: &A, b: &B) -> Result<C64>
where
    A: MixedState + ?Sized,
    B: MixedState + ?Sized,
{
    if a.n_sites() != b.n_sites() {
        return Err(Error::SizeMismatch(a.n_sites(), b.n_sites()));
    }
    if a.phys_dim() != b.phys_dim() {
        return Err(Error::InvalidState("physical dimensions differ".into()));
    }
    if a.view().is_dense() || b.view().is_dense() {
        return a.to_dense()?.overlap(&b.to_dense()?);
    }
    Ok(network::overlap(a.view(), b.view()))
}

/// `Re Tr(a†b) / sqrt(Tr a†a · Tr b†b)`.
pub fn supervector_fidelity<A, B>(a: &A, b: &B) -> Result<f64>
where
    A: MixedState + ?Sized,
    B: MixedState + ?Sized,
{
    let cross = supervector_overlap(a, b)?;
    let denom = (a.purity() * b.purity()).sqrt();
    if !(denom > 0.0) {
        return Err(Error::ZeroNorm);
    }
    Ok(cross.re / denom)
}

/// `-Σ p ln p` with `p = s² / Σ s²`, ignoring values below `1e-14 · s_max`.
pub fn entropy_of_spectrum(s: &[f64]) -> f64 {
    let s_max = s.iter().copied().fold(0.0, f64::max);
    if s_max <= 0.0 {
        return 0.0;
    }
    let kept: Vec<f64> = s.iter().copied().filter(|&x| x >= SCHMIDT_FLOOR * s_max).collect();
    let total: f64 = kept.iter().map(|x| x * x).sum();
    kept.iter()
        .map(|x| x * x / total)
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.ln())
        .sum::<f64>()
        .max(0.0)
}

fn trace_of(view: StateView<'_>) -> C64 {
    match view {
        StateView::Dense(d) => d.trace(),
        StateView::Lpdo(l) => {
            // Tr ρ = ⟨ψ|ψ⟩ over physical and Kraus legs.
            let mut env = Tensor::from_parts(vec![1, 1], vec![C64::new(1.0, 0.0)]);
            for a in l.sites() {
                let t = contract(&env, &a.conj(), &[(0, 2)]).expect("consistent"); // [b,τ,κ,a']
                env = contract(&t, a, &[(0, 2), (1, 0), (2, 1)]).expect("consistent");
            }
            env.to_scalar().expect("closed")
        }
        StateView::Mpo(m) => {
            let mut env = vec![C64::new(1.0, 0.0)];
            for b in m.sites() {
                let s = b.shape();
                let (d, l, r) = (s[0], s[2], s[3]);
                let mut next = vec![C64::new(0.0, 0.0); r];
                for t in 0..d {
                    for (a, &e) in env.iter().enumerate().take(l) {
                        if e == C64::new(0.0, 0.0) {
                            continue;
                        }
                        for (c, slot) in next.iter_mut().enumerate() {
                            *slot += e * b.get(&[t, t, a, c]);
                        }
                    }
                }
                env = next;
            }
            env[0]
        }
    }
}

/// Dense matrix of an LPDO as `ψψ†`, with `ψ` the `(physical) × (Kraus)`
/// matrix of the purification. Falls back to the MPO route when the joint
/// Kraus space is larger than the physical one.
fn dense_of_lpdo(l: &Lpdo) -> Result<DensityMatrix> {
    let n = l.n_sites();
    let d = l.phys_dim();
    let phys_total = d.pow(n as u32);
    let kraus_total = l
        .kraus_dims()
        .iter()
        .try_fold(1usize, |acc, &k| acc.checked_mul(k).filter(|&v| v <= phys_total));
    let Some(kraus_total) = kraus_total else {
        return dense_of_mpo(&l.to_mpo());
    };
    let first = l.site(0);
    let s0 = first.shape();
    // acc axes: [physical block, Kraus block, right bond]
    let mut acc = first.clone().reshape(&[d, s0[1], s0[3]])?;
    for a in &l.sites()[1..] {
        let s = a.shape();
        let (pb, kb) = (acc.shape()[0], acc.shape()[1]);
        acc = contract(&acc, a, &[(2, 2)])? // [T,K,τ,κ,r]
            .permute(&[0, 2, 1, 3, 4])?
            .reshape(&[pb * d, kb * s[1], s[3]])?;
    }
    let psi = Array2::from_shape_vec((phys_total, kraus_total), acc.into_data()).expect("consistent");
    let rho = psi.dot(&psi.t().mapv(|z| z.conj()));
    DensityMatrix::new(n, d, rho)
}

/// Contracts an MPO into its dense matrix, one site at a time.
fn dense_of_mpo(m: &Mpo) -> Result<DensityMatrix> {
    let d = m.phys_dim();
    let first = m.site(0);
    let r0 = first.shape()[3];
    // acc axes: [ket block, bra block, right bond]
    let mut acc = first.clone().reshape(&[d, d, r0])?;
    let mut block = d;
    for b in &m.sites()[1..] {
        let r = b.shape()[3];
        let t = contract(&acc, b, &[(2, 2)])?; // [K,W,τ,ω,s']
        acc = t
            .permute(&[0, 2, 1, 3, 4])?
            .reshape(&[block * d, block * d, r])?;
        block *= d;
    }
    let data = acc.into_data();
    let matrix = Array2::from_shape_vec((block, block), data).expect("square block");
    DensityMatrix::new(m.n_sites(), d, matrix)
}

/// Schmidt spectrum of the MPO supervector across the bond after `cut` sites.
pub(crate) fn mpo_bond_spectrum(m: &Mpo, cut: usize) -> Result<Vec<f64>> {
    let n = m.n_sites();
    let mut r = Tensor::identity(1);
    for b in &m.sites()[..cut] {
        let x = contract(&r, b, &[(1, 2)])?; // [a,τ,ω,b']
        r = qr_split(&x, &[0, 1, 2])?.1;
    }
    let mut l = Tensor::identity(1);
    for b in m.sites()[cut..n].iter().rev() {
        let y = contract(b, &l, &[(3, 0)])?; // [τ,ω,b,c]
        l = lq_split(&y, &[2])?.0;
    }
    let bond = contract(&r, &l, &[(1, 0)])?;
    Ok(singular_values(&bond.to_matrix()?)?.to_vec())
}

fn mpo_entropy(m: &Mpo, cut: usize) -> Result<f64> {
    Ok(entropy_of_spectrum(&mpo_bond_spectrum(m, cut)?))
}

/// Owned state of either kind, as read back from an archive.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyState {
    Lpdo(Lpdo),
    Mpo(Mpo),
    Dense(DensityMatrix),
}

impl MixedState for AnyState {
    fn n_sites(&self) -> usize {
        match self {
            AnyState::Lpdo(l) => l.n_sites(),
            AnyState::Mpo(m) => m.n_sites(),
            AnyState::Dense(d) => d.n_sites(),
        }
    }

    fn phys_dim(&self) -> usize {
        match self {
            AnyState::Lpdo(l) => l.phys_dim(),
            AnyState::Mpo(m) => m.phys_dim(),
            AnyState::Dense(d) => d.phys_dim(),
        }
    }

    fn view(&self) -> StateView<'_> {
        match self {
            AnyState::Lpdo(l) => StateView::Lpdo(l),
            AnyState::Mpo(m) => StateView::Mpo(m),
            AnyState::Dense(d) => StateView::Dense(d),
        }
    }

    fn normalize(&mut self, mode: NormMode) -> Result<()> {
        match self {
            AnyState::Lpdo(l) => l.normalize(mode),
            AnyState::Mpo(m) => m.normalize(mode),
            AnyState::Dense(d) => d.normalize(mode),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bell_lpdo() -> Lpdo {
        let s = 1.0 / 2f64.sqrt();
        let z = C64::new(0.0, 0.0);
        // ψ = (|00⟩ + |11⟩)/√2 with bond index selecting the branch.
        let a = Tensor::new(vec![2, 1, 1, 2], vec![C64::new(1.0, 0.0), z, z, C64::new(1.0, 0.0)]).unwrap();
        let b = Tensor::new(vec![2, 1, 2, 1], vec![C64::new(s, 0.0), z, z, C64::new(s, 0.0)]).unwrap();
        Lpdo::new(vec![a, b]).unwrap()
    }

    #[test]
    fn product_state_examples() {
        let l = Lpdo::all_zeros(3);
        assert!((l.trace() - 1.0).norm() < 1e-14);
        assert!((l.purity() - 1.0).abs() < 1e-14);

        let rho = Lpdo::all_zeros(2).to_dense().unwrap();
        for ((i, j), z) in rho.matrix().indexed_iter() {
            let expect = if i == 0 && j == 0 { 1.0 } else { 0.0 };
            assert!((z - expect).norm() < 1e-14);
        }

        let s = 1.0 / 2f64.sqrt();
        let plus = vec![C64::new(s, 0.0), C64::new(s, 0.0)];
        let rho = Lpdo::product(&[plus.clone(), plus]).unwrap().to_dense().unwrap();
        assert!(rho.matrix().iter().all(|z| (z - 0.25).norm() < 1e-14));
    }

    #[test]
    fn unnormalized_amplitudes_are_rejected() {
        let bad = vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)];
        assert!(matches!(Lpdo::product(&[bad]), Err(Error::Unnormalized(0))));
    }

    #[test]
    fn conversion_squares_bond_dimension() {
        assert_eq!(Lpdo::all_zeros(4).to_mpo().bond_dims(), vec![1, 1, 1]);
        let bell = bell_lpdo();
        assert_eq!(bell.to_mpo().bond_dims(), vec![4]);

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let l = Lpdo::random(4, 2, 3, 2, &mut rng);
        let a = l.to_dense().unwrap();
        let b = l.to_mpo().to_dense().unwrap();
        assert!(a.frobenius_distance(&b).unwrap() < 1e-12);
        // Kraus space larger than the physical one takes the MPO route.
        let wide = Lpdo::random(2, 2, 2, 5, &mut rng);
        let a = wide.to_dense().unwrap();
        let b = wide.to_mpo().to_dense().unwrap();
        assert!(a.frobenius_distance(&b).unwrap() < 1e-12);
        assert!(a.hermiticity_defect() < 1e-14);
    }

    #[test]
    fn dense_cap_boundary() {
        assert!(Lpdo::all_zeros(12).to_dense().is_ok());
        assert!(matches!(
            Lpdo::all_zeros(13).to_dense(),
            Err(Error::SizeCap { n_sites: 13, cap: 12 })
        ));
    }

    #[test]
    fn maximally_mixed_purity() {
        for n in 1..6 {
            let m = Mpo::maximally_mixed(n, 2);
            assert!((m.purity() - 2f64.powi(-(n as i32))).abs() < 1e-14);
            assert!((m.trace() - 1.0).norm() < 1e-14);
            let l = Lpdo::maximally_mixed(n, 2);
            assert!((l.purity() - 2f64.powi(-(n as i32))).abs() < 1e-14);
        }
    }

    #[test]
    fn normalization_modes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut l = Lpdo::random(4, 2, 3, 2, &mut rng);
        let before = l.clone();
        l.normalize(NormMode::Trace).unwrap();
        let drift: f64 = l
            .sites()
            .iter()
            .zip(before.sites())
            .map(|(a, b)| a.distance(b).unwrap())
            .sum();
        assert!(drift < 1e-14);

        l.sites_mut()[0].scale_mut(C64::new(3f64.sqrt(), 0.0));
        l.normalize(NormMode::Trace).unwrap();
        assert!((l.trace() - 1.0).norm() < 1e-12);

        l.normalize(NormMode::Frobenius).unwrap();
        assert!((l.purity() - 1.0).abs() < 1e-12);

        let mut m = l.to_mpo();
        m.sites_mut()[1].scale_mut(C64::new(3.0, 0.0));
        m.normalize(NormMode::Trace).unwrap();
        assert!((m.trace() - 1.0).norm() < 1e-12);
    }

    #[test]
    fn fidelity_examples() {
        let zero = Lpdo::basis_state(&[0], 2).unwrap();
        let one = Lpdo::basis_state(&[1], 2).unwrap();
        assert!(supervector_fidelity(&zero, &one).unwrap().abs() < 1e-14);
        assert!((supervector_fidelity(&zero, &zero).unwrap() - 1.0).abs() < 1e-14);

        for n in 1..6 {
            let pure = Lpdo::all_zeros(n);
            let mixed = Mpo::maximally_mixed(n, 2);
            let f = supervector_fidelity(&pure, &mixed).unwrap();
            assert!((f - 2f64.powf(-(n as f64) / 2.0)).abs() < 1e-12);
        }
        assert!(matches!(
            supervector_fidelity(&Lpdo::all_zeros(2), &Lpdo::all_zeros(3)),
            Err(Error::SizeMismatch(2, 3))
        ));
    }

    #[test]
    fn network_fidelity_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 2..6 {
            let a = Lpdo::random(n, 2, 3, 2, &mut rng);
            let b = Lpdo::random(n, 2, 2, 3, &mut rng);
            let bm = b.to_mpo();
            let dense = a.to_dense().unwrap().supervector_fidelity(&b.to_dense().unwrap()).unwrap();
            assert!((supervector_fidelity(&a, &b).unwrap() - dense).abs() < 1e-10);
            assert!((supervector_fidelity(&a, &bm).unwrap() - dense).abs() < 1e-10);
            assert!((supervector_fidelity(&bm, &a).unwrap() - dense).abs() < 1e-10);
            assert!((supervector_fidelity(&a.to_mpo(), &bm).unwrap() - dense).abs() < 1e-10);
        }
    }

    #[test]
    fn entropy_examples() {
        let prod = Lpdo::all_zeros(4);
        for cut in 1..4 {
            assert!(prod.entanglement_entropy(cut).unwrap().abs() < 1e-12);
        }
        let bell = bell_lpdo();
        let ee = bell.entanglement_entropy(1).unwrap();
        assert!((ee - 2.0 * 2f64.ln()).abs() < 1e-12);
        let dense = bell.to_dense().unwrap().entanglement_entropy(1).unwrap();
        assert!((dense - ee).abs() < 1e-12);

        let mm = Lpdo::maximally_mixed(5, 2);
        for cut in 1..5 {
            assert!(mm.entanglement_entropy(cut).unwrap().abs() < 1e-12);
        }
        assert!(prod.entanglement_entropy(0).is_err());
        assert!(prod.entanglement_entropy(4).is_err());
    }

    #[test]
    fn network_entropy_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 2..6 {
            let l = Lpdo::random(n, 2, 3, 2, &mut rng);
            let rho = l.to_dense().unwrap();
            for cut in 1..n {
                let a = l.entanglement_entropy(cut).unwrap();
                let b = rho.entanglement_entropy(cut).unwrap();
                assert!((a - b).abs() < 1e-10, "n={n} cut={cut}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn lpdo_is_positive_with_unit_trace_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let l = Lpdo::random(4, 2, 4, 3, &mut rng);
        assert!(l.to_dense().unwrap().min_eigenvalue().unwrap() > -1e-10);
        assert!((l.trace_norm().unwrap() - 1.0).abs() < 1e-10);
    }
}
