//! Gates and Kraus channels acting on every representation.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{kron, svd_split, unitarity_defect};
use crate::reps::{DensityMatrix, Lpdo, MixedState, Mpo};
use crate::tensor::{contract, Tensor};

const UNITARY_TOLERANCE: f64 = 1e-10;
const CPTP_TOLERANCE: f64 = 1e-10;

/// Bond and Kraus ceilings used by splits and compression.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Caps {
    pub chi_max: usize,
    pub dkappa_max: usize,
    pub d_max: usize,
    /// Singular values at or below `cutoff · s_max` are dropped.
    pub cutoff: f64,
}

impl Caps {
    pub fn loose() -> Self {
        Self {
            chi_max: usize::MAX,
            dkappa_max: usize::MAX,
            d_max: usize::MAX,
            cutoff: 0.0,
        }
    }

    /// Only the relative cutoff, no dimension ceilings.
    pub fn cutoff_only(&self) -> Self {
        Self {
            cutoff: self.cutoff,
            ..Self::loose()
        }
    }
}

impl Default for Caps {
    fn default() -> Self {
        Self {
            cutoff: 1e-12,
            ..Self::loose()
        }
    }
}

/// Pauli matrix `σ_i` with `σ_0 = I`.
pub fn pauli(i: usize) -> Array2<C64> {
    let o = C64::new(0.0, 0.0);
    let l = C64::new(1.0, 0.0);
    let j = C64::new(0.0, 1.0);
    let entries = match i {
        0 => [l, o, o, l],
        1 => [o, l, l, o],
        2 => [o, -j, j, o],
        3 => [l, o, o, -l],
        _ => panic!("Pauli index {i} out of range"),
    };
    Array2::from_shape_vec((2, 2), entries.to_vec()).expect("2x2")
}

/// Completely positive trace-preserving map in operator-sum form.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausChannel {
    arity: usize,
    ops: Vec<Array2<C64>>,
    label: String,
    error_rate: Option<f64>,
}

impl KrausChannel {
    pub fn new(arity: usize, ops: Vec<Array2<C64>>, label: impl Into<String>) -> Result<Self> {
        if !(1..=2).contains(&arity) {
            return Err(Error::InvalidState(format!("channel arity {arity}")));
        }
        let Some(first) = ops.first() else {
            return Err(Error::InvalidState("channel without Kraus operators".into()));
        };
        let dim = first.nrows();
        if ops.iter().any(|e| e.dim() != (dim, dim)) {
            return Err(Error::InvalidState("Kraus operators must be square and equal-sized".into()));
        }
        let ch = Self {
            arity,
            ops,
            label: label.into(),
            error_rate: None,
        };
        let defect = ch.cptp_defect();
        if defect > CPTP_TOLERANCE {
            return Err(Error::NotTracePreserving(defect));
        }
        Ok(ch)
    }

    /// Two-qubit depolarizing channel with error rate `epsilon ∈ [0, 15/16]`.
    pub fn depolarizing_2q(epsilon: f64) -> Result<Self> {
        if !(0.0..=15.0 / 16.0).contains(&epsilon) {
            return Err(Error::OutOfRange {
                name: "epsilon",
                value: epsilon,
            });
        }
        let mut ops = Vec::with_capacity(16);
        for i in 0..4 {
            for j in 0..4 {
                let w = if i == 0 && j == 0 { 1.0 - epsilon } else { epsilon / 15.0 };
                let amp = C64::new(w.sqrt(), 0.0);
                ops.push(kron(&pauli(i), &pauli(j)).mapv(|z| z * amp));
            }
        }
        let mut ch = Self::new(2, ops, format!("depolarizing_2q({epsilon})"))?;
        ch.error_rate = Some(epsilon);
        Ok(ch)
    }

    /// Single-qubit Pauli channel `Σ p_i σ_i ρ σ_i` with `p = [p_I, p_X, p_Y, p_Z]`.
    pub fn pauli_1q(probs: [f64; 4]) -> Result<Self> {
        if probs.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
            return Err(Error::InvalidState(format!("Pauli probabilities {probs:?}")));
        }
        let ops = probs
            .iter()
            .enumerate()
            .map(|(i, &p)| pauli(i).mapv(|z| z * p.sqrt()))
            .collect();
        Self::new(1, ops, format!("pauli_1q({probs:?})"))
    }

    /// A single unitary viewed as a channel.
    pub fn unitary(arity: usize, u: Array2<C64>) -> Result<Self> {
        check_unitary(&u)?;
        Self::new(arity, vec![u], "unitary")
    }

    pub fn identity(arity: usize, phys_dim: usize) -> Self {
        let dim = phys_dim.pow(arity as u32);
        Self::new(arity, vec![Array2::eye(dim)], "identity").expect("identity is CPTP")
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn ops(&self) -> &[Array2<C64>] {
        &self.ops
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn error_rate(&self) -> Option<f64> {
        self.error_rate
    }

    pub fn dim(&self) -> usize {
        self.ops[0].nrows()
    }

    /// Operators with nonzero weight; the ones actually attached to states.
    pub fn effective_ops(&self) -> Vec<&Array2<C64>> {
        self.ops
            .iter()
            .filter(|e| e.iter().any(|z| z.norm_sqr() > 0.0))
            .collect()
    }

    /// Largest entry of `|Σ_k E_k†E_k − I|`.
    pub fn cptp_defect(&self) -> f64 {
        let dim = self.dim();
        let mut sum = Array2::<C64>::zeros((dim, dim));
        for e in &self.ops {
            sum = sum + e.t().mapv(|z| z.conj()).dot(e);
        }
        sum.indexed_iter()
            .map(|((i, j), z)| (z - if i == j { 1.0 } else { 0.0 }).norm())
            .fold(0.0, f64::max)
    }

    /// Superoperator `Σ_k E_k ⊗ Ē_k` with row index `(out_ket, out_bra)`.
    pub fn superoperator(&self) -> Array2<C64> {
        let dim = self.dim();
        let mut s = Array2::<C64>::zeros((dim * dim, dim * dim));
        for e in self.effective_ops() {
            s = s + kron(e, &e.mapv(|z| z.conj()));
        }
        s
    }

    fn check_arity(&self, arity: usize, phys_dim: usize) -> Result<()> {
        if self.arity != arity {
            return Err(Error::ArityMismatch {
                expected: arity,
                got: self.arity,
            });
        }
        if self.dim() != phys_dim.pow(arity as u32) {
            return Err(Error::InvalidState(format!(
                "channel dimension {} does not match {arity} sites of dimension {phys_dim}",
                self.dim()
            )));
        }
        Ok(())
    }

    /// Effective operators stacked into `[k, out…, in…]`.
    fn stacked(&self, phys_dim: usize) -> Tensor {
        let eff = self.effective_ops();
        let dim = self.dim();
        let mut data = Vec::with_capacity(eff.len() * dim * dim);
        for e in &eff {
            data.extend(e.iter().copied());
        }
        let mut shape = vec![eff.len()];
        shape.extend(std::iter::repeat(phys_dim).take(2 * self.arity));
        Tensor::from_parts(shape, data)
    }
}

pub fn check_unitary(u: &Array2<C64>) -> Result<()> {
    if u.nrows() != u.ncols() {
        return Err(Error::NotUnitary(f64::INFINITY));
    }
    let defect = unitarity_defect(u);
    if defect > UNITARY_TOLERANCE {
        return Err(Error::NotUnitary(defect));
    }
    Ok(())
}

fn check_site(site: usize, n: usize) -> Result<()> {
    if site >= n {
        return Err(Error::SiteOutOfRange { site, n_sites: n });
    }
    Ok(())
}

fn check_pair(left: usize, n: usize) -> Result<()> {
    if left + 1 >= n {
        return Err(Error::NotAdjacent(left, left + 1));
    }
    Ok(())
}

fn op_tensor(u: &Array2<C64>, d: usize, arity: usize) -> Tensor {
    let shape = vec![d; 2 * arity];
    Tensor::from_parts(shape, u.iter().copied().collect())
}

/// Gate and channel application. Two-site operations return the discarded
/// weight of the bond split.
pub trait Evolve: MixedState {
    fn apply_unitary_1q(&mut self, site: usize, u: &Array2<C64>) -> Result<()>;
    fn apply_unitary_2q(&mut self, left: usize, u: &Array2<C64>, caps: &Caps) -> Result<f64>;
    fn apply_channel_1q(&mut self, site: usize, ch: &KrausChannel) -> Result<()>;
    fn apply_channel_2q(&mut self, left: usize, ch: &KrausChannel, caps: &Caps) -> Result<f64>;
}

/// Splits a merged LPDO pair `[τ1,κ1,a,τ2,κ2,c]` back into two sites.
fn split_lpdo_pair(l: &mut Lpdo, left: usize, theta: &Tensor, caps: &Caps) -> Result<f64> {
    let f = svd_split(theta, &[0, 1, 2], Some(caps.chi_max), Some(caps.cutoff))?;
    let right = f.weighted_right().permute(&[1, 2, 0, 3])?;
    let sites = l.sites_mut();
    sites[left] = f.left;
    sites[left + 1] = right;
    Ok(f.discarded_weight)
}

impl Evolve for Lpdo {
    fn apply_unitary_1q(&mut self, site: usize, u: &Array2<C64>) -> Result<()> {
        check_site(site, self.n_sites())?;
        check_unitary(u)?;
        let d = self.phys_dim();
        let a = &self.sites()[site];
        let next = contract(&op_tensor(u, d, 1), a, &[(1, 0)])?;
        self.sites_mut()[site] = next;
        Ok(())
    }

    fn apply_unitary_2q(&mut self, left: usize, u: &Array2<C64>, caps: &Caps) -> Result<f64> {
        check_pair(left, self.n_sites())?;
        check_unitary(u)?;
        let d = self.phys_dim();
        let theta = contract(&self.sites()[left], &self.sites()[left + 1], &[(3, 2)])?; // [τ1,κ1,a,τ2,κ2,c]
        let theta = contract(&op_tensor(u, d, 2), &theta, &[(2, 0), (3, 3)])?; // [τ1',τ2',κ1,a,κ2,c]
        let theta = theta.permute(&[0, 2, 3, 1, 4, 5])?;
        split_lpdo_pair(self, left, &theta, caps)
    }

    fn apply_channel_1q(&mut self, site: usize, ch: &KrausChannel) -> Result<()> {
        check_site(site, self.n_sites())?;
        let d = self.phys_dim();
        ch.check_arity(1, d)?;
        let e = ch.stacked(d); // [k,τ',τ]
        let k = e.shape()[0];
        let a = &self.sites()[site];
        let s = a.shape().to_vec();
        let next = contract(&e, a, &[(2, 0)])? // [k,τ',κ,l,r]
            .permute(&[1, 2, 0, 3, 4])?
            .reshape(&[d, s[1] * k, s[2], s[3]])?;
        self.sites_mut()[site] = next;
        Ok(())
    }

    fn apply_channel_2q(&mut self, left: usize, ch: &KrausChannel, caps: &Caps) -> Result<f64> {
        check_pair(left, self.n_sites())?;
        let d = self.phys_dim();
        ch.check_arity(2, d)?;
        let e = ch.stacked(d); // [k,τ1',τ2',τ1,τ2]
        let k = e.shape()[0];
        let theta = contract(&self.sites()[left], &self.sites()[left + 1], &[(3, 2)])?; // [τ1,κ1,a,τ2,κ2,c]
        let s = theta.shape().to_vec();
        let theta = contract(&e, &theta, &[(3, 0), (4, 3)])? // [k,τ1',τ2',κ1,a,κ2,c]
            .permute(&[1, 3, 0, 4, 2, 5, 6])?
            .reshape(&[d, s[1] * k, s[2], d, s[4], s[5]])?;
        split_lpdo_pair(self, left, &theta, caps)
    }
}

/// Applies a superoperator `[out_ket…, out_bra…, in_ket…, in_bra…]` to one
/// MPO site.
fn mpo_apply_local(m: &mut Mpo, site: usize, sup: &Array2<C64>) -> Result<()> {
    let d = m.phys_dim();
    let s = Tensor::from_parts(vec![d, d, d, d], sup.iter().copied().collect());
    let next = contract(&s, &m.sites()[site], &[(2, 0), (3, 1)])?; // [τ',ω',l,r]
    m.sites_mut()[site] = next;
    Ok(())
}

/// Applies a two-site superoperator to an MPO pair and splits with `d_max`.
fn mpo_apply_pair(m: &mut Mpo, left: usize, sup: &Array2<C64>, caps: &Caps) -> Result<f64> {
    let d = m.phys_dim();
    // Superoperator rows are (τ1',τ2',ω1',ω2'), columns (τ1,τ2,ω1,ω2).
    let s = Tensor::from_parts(vec![d; 8], sup.iter().copied().collect());
    let theta = contract(&m.sites()[left], &m.sites()[left + 1], &[(3, 2)])?; // [τ1,ω1,a,τ2,ω2,c]
    let theta = contract(&s, &theta, &[(4, 0), (5, 3), (6, 1), (7, 4)])? // [τ1',τ2',ω1',ω2',a,c]
        .permute(&[0, 2, 4, 1, 3, 5])?;
    let f = svd_split(&theta, &[0, 1, 2], Some(caps.d_max), Some(caps.cutoff))?;
    let right = f.weighted_right().permute(&[1, 2, 0, 3])?;
    let sites = m.sites_mut();
    sites[left] = f.left;
    sites[left + 1] = right;
    Ok(f.discarded_weight)
}

fn unitary_superoperator(u: &Array2<C64>) -> Array2<C64> {
    kron(u, &u.mapv(|z| z.conj()))
}

impl Evolve for Mpo {
    fn apply_unitary_1q(&mut self, site: usize, u: &Array2<C64>) -> Result<()> {
        check_site(site, self.n_sites())?;
        check_unitary(u)?;
        mpo_apply_local(self, site, &unitary_superoperator(u))
    }

    fn apply_unitary_2q(&mut self, left: usize, u: &Array2<C64>, caps: &Caps) -> Result<f64> {
        check_pair(left, self.n_sites())?;
        check_unitary(u)?;
        mpo_apply_pair(self, left, &unitary_superoperator(u), caps)
    }

    fn apply_channel_1q(&mut self, site: usize, ch: &KrausChannel) -> Result<()> {
        check_site(site, self.n_sites())?;
        ch.check_arity(1, self.phys_dim())?;
        mpo_apply_local(self, site, &ch.superoperator())
    }

    fn apply_channel_2q(&mut self, left: usize, ch: &KrausChannel, caps: &Caps) -> Result<f64> {
        check_pair(left, self.n_sites())?;
        ch.check_arity(2, self.phys_dim())?;
        mpo_apply_pair(self, left, &ch.superoperator(), caps)
    }
}

impl DensityMatrix {
    /// `ρ ← Σ_k E_k ρ E_k†` for operators acting on `width` consecutive
    /// sites starting at `first`, given as the superoperator `Σ E ⊗ Ē`.
    pub(crate) fn apply_local_superoperator(&mut self, first: usize, width: usize, sup: &Array2<C64>) -> Result<()> {
        let n = self.n_sites();
        let d = self.phys_dim();
        if first + width > n {
            return Err(Error::SiteOutOfRange {
                site: first + width - 1,
                n_sites: n,
            });
        }
        let before = d.pow(first as u32);
        let local = d.pow(width as u32);
        let after = d.pow((n - first - width) as u32);
        let data: Vec<C64> = self.matrix().iter().copied().collect();
        let rho = Tensor::from_parts(vec![before, local, after, before, local, after], data);
        let s = Tensor::from_parts(vec![local; 4], sup.iter().copied().collect());
        let out = contract(&s, &rho, &[(2, 1), (3, 4)])? // [k',b',A,B,A2,B2]
            .permute(&[2, 0, 3, 4, 1, 5])?;
        let dim = self.dim();
        *self.matrix_mut() = Array2::from_shape_vec((dim, dim), out.into_data()).expect("square");
        Ok(())
    }
}

impl Evolve for DensityMatrix {
    fn apply_unitary_1q(&mut self, site: usize, u: &Array2<C64>) -> Result<()> {
        check_site(site, self.n_sites())?;
        check_unitary(u)?;
        self.apply_local_superoperator(site, 1, &unitary_superoperator(u))
    }

    fn apply_unitary_2q(&mut self, left: usize, u: &Array2<C64>, _caps: &Caps) -> Result<f64> {
        check_pair(left, self.n_sites())?;
        check_unitary(u)?;
        self.apply_local_superoperator(left, 2, &unitary_superoperator(u))?;
        Ok(0.0)
    }

    fn apply_channel_1q(&mut self, site: usize, ch: &KrausChannel) -> Result<()> {
        check_site(site, self.n_sites())?;
        ch.check_arity(1, self.phys_dim())?;
        self.apply_local_superoperator(site, 1, &ch.superoperator())
    }

    fn apply_channel_2q(&mut self, left: usize, ch: &KrausChannel, _caps: &Caps) -> Result<f64> {
        check_pair(left, self.n_sites())?;
        ch.check_arity(2, self.phys_dim())?;
        self.apply_local_superoperator(left, 2, &ch.superoperator())?;
        Ok(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::haar_random_unitary;
    use crate::reps::supervector_fidelity;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cnot() -> Array2<C64> {
        let mut u = Array2::<C64>::zeros((4, 4));
        for (i, j) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
            u[(i, j)] = C64::new(1.0, 0.0);
        }
        u
    }

    fn dense_distance<A: MixedState, B: MixedState>(a: &A, b: &B) -> f64 {
        a.to_dense().unwrap().frobenius_distance(&b.to_dense().unwrap()).unwrap()
    }

    #[test]
    fn depolarizing_weights() {
        let ch = KrausChannel::depolarizing_2q(0.01).unwrap();
        assert_eq!(ch.ops().len(), 16);
        assert!(ch.cptp_defect() < 1e-12);
        let w: Vec<f64> = ch.ops().iter().map(|e| e.iter().map(|z| z.norm_sqr()).sum::<f64>() / 4.0).collect();
        assert!((w[0] - 0.99).abs() < 1e-14);
        assert!(w[1..].iter().all(|&x| (x - 0.01 / 15.0).abs() < 1e-14));

        let clean = KrausChannel::depolarizing_2q(0.0).unwrap();
        assert_eq!(clean.effective_ops().len(), 1);
        assert!(KrausChannel::depolarizing_2q(-0.1).is_err());
        assert!(KrausChannel::depolarizing_2q(0.95).is_err());
    }

    #[test]
    fn non_cptp_sets_are_rejected() {
        let half = Array2::<C64>::eye(2).mapv(|z| z * 0.5);
        assert!(matches!(
            KrausChannel::new(1, vec![half], "bad"),
            Err(Error::NotTracePreserving(_))
        ));
    }

    #[test]
    fn complete_depolarization_reaches_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ch = KrausChannel::depolarizing_2q(15.0 / 16.0).unwrap();
        let target = DensityMatrix::maximally_mixed(2, 2);
        let mut l = Lpdo::random(2, 2, 2, 2, &mut rng);
        l.apply_channel_2q(0, &ch, &Caps::loose()).unwrap();
        assert!(l.to_dense().unwrap().frobenius_distance(&target).unwrap() < 1e-12);
        let mut m = Lpdo::random(2, 2, 2, 2, &mut rng).to_mpo();
        m.apply_channel_2q(0, &ch, &Caps::loose()).unwrap();
        assert!(m.to_dense().unwrap().frobenius_distance(&target).unwrap() < 1e-12);
    }

    #[test]
    fn single_site_gates() {
        let mut l = Lpdo::all_zeros(3);
        let before = l.clone();
        l.apply_unitary_1q(1, &Array2::eye(2)).unwrap();
        assert_eq!(l, before);

        l.apply_unitary_1q(1, &pauli(1)).unwrap();
        let expect = Lpdo::basis_state(&[0, 1, 0], 2).unwrap();
        assert!(dense_distance(&l, &expect) < 1e-14);

        let not_unitary = Array2::<C64>::eye(2).mapv(|z| z * 2.0);
        assert!(matches!(l.apply_unitary_1q(0, &not_unitary), Err(Error::NotUnitary(_))));
        assert!(matches!(l.apply_unitary_1q(3, &pauli(1)), Err(Error::SiteOutOfRange { .. })));
    }

    #[test]
    fn random_gates_match_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let l0 = Lpdo::random(4, 2, 3, 2, &mut rng);
        let u1 = haar_random_unitary(2, &mut rng);
        let u2 = haar_random_unitary(4, &mut rng);
        let mut l = l0.clone();
        let mut m = l0.to_mpo();
        let mut rho = l0.to_dense().unwrap();
        for s in [&mut l as &mut dyn EvolveDyn, &mut m, &mut rho] {
            s.step(&u1, &u2);
        }
        assert!(dense_distance(&l, &rho) < 1e-10);
        assert!(dense_distance(&m, &rho) < 1e-10);

        let direct = {
            let full = kron(&kron(&Array2::eye(2), &u2), &Array2::eye(2));
            let full = kron(&kron(&u1, &Array2::eye(2)), &Array2::eye(4)).dot(&full);
            full.dot(l0.to_dense().unwrap().matrix()).dot(&full.t().mapv(|z| z.conj()))
        };
        let direct = DensityMatrix::new(4, 2, direct).unwrap();
        assert!(rho.frobenius_distance(&direct).unwrap() < 1e-12);
    }

    trait EvolveDyn {
        fn step(&mut self, u1: &Array2<C64>, u2: &Array2<C64>);
    }

    impl<T: Evolve> EvolveDyn for T {
        fn step(&mut self, u1: &Array2<C64>, u2: &Array2<C64>) {
            self.apply_unitary_2q(1, u2, &Caps::loose()).unwrap();
            self.apply_unitary_1q(0, u1).unwrap();
        }
    }

    #[test]
    fn identity_gate_keeps_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let l0 = Lpdo::random(3, 2, 2, 2, &mut rng);
        let mut l = l0.clone();
        l.apply_unitary_2q(0, &Array2::eye(4), &Caps::loose()).unwrap();
        assert!((supervector_fidelity(&l, &l0).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(
            l.apply_unitary_2q(2, &Array2::eye(4), &Caps::loose()),
            Err(Error::NotAdjacent(2, 3))
        ));
    }

    #[test]
    fn cnot_on_plus_zero_makes_bell_entropy() {
        let s = 1.0 / 2f64.sqrt();
        let plus = vec![C64::new(s, 0.0), C64::new(s, 0.0)];
        let zero = vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        let mut l = Lpdo::product(&[plus, zero]).unwrap();
        assert!(l.half_cut_entropy().unwrap().abs() < 1e-14);
        l.apply_unitary_2q(0, &cnot(), &Caps::loose()).unwrap();
        assert!((l.half_cut_entropy().unwrap() - 2.0 * 2f64.ln()).abs() < 1e-12);
        let mut m = Lpdo::product(&[vec![C64::new(s, 0.0); 2], vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]])
            .unwrap()
            .to_mpo();
        m.apply_unitary_2q(0, &cnot(), &Caps::loose()).unwrap();
        assert!((m.half_cut_entropy().unwrap() - 2.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn single_site_channels() {
        let mut l = Lpdo::all_zeros(1);
        l.apply_channel_1q(0, &KrausChannel::unitary(1, pauli(1)).unwrap()).unwrap();
        assert!(dense_distance(&l, &Lpdo::basis_state(&[1], 2).unwrap()) < 1e-14);

        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let l0 = Lpdo::random(3, 2, 2, 2, &mut rng);
        let mut l = l0.clone();
        l.apply_channel_1q(1, &KrausChannel::identity(1, 2)).unwrap();
        assert!(dense_distance(&l, &l0) < 1e-14);

        let ch = KrausChannel::pauli_1q([0.7, 0.3, 0.0, 0.0]).unwrap();
        let mut l = l0.clone();
        let mut m = l0.to_mpo();
        let mut rho = l0.to_dense().unwrap();
        l.apply_channel_1q(1, &ch).unwrap();
        m.apply_channel_1q(1, &ch).unwrap();
        rho.apply_channel_1q(1, &ch).unwrap();
        assert_eq!(l.kraus_dims()[1], 2 * l0.kraus_dims()[1]);
        assert!(dense_distance(&l, &rho) < 1e-10);
        assert!(dense_distance(&m, &rho) < 1e-10);

        let x = kron(&kron(&Array2::eye(2), &pauli(1)), &Array2::eye(2));
        let r0 = l0.to_dense().unwrap();
        let expect = r0.matrix().mapv(|z| z * 0.7) + x.dot(r0.matrix()).dot(&x).mapv(|z| z * 0.3);
        assert!(rho.frobenius_distance(&DensityMatrix::new(3, 2, expect).unwrap()).unwrap() < 1e-12);

        let two = KrausChannel::depolarizing_2q(0.1).unwrap();
        assert!(matches!(l.apply_channel_1q(0, &two), Err(Error::ArityMismatch { .. })));
    }

    #[test]
    fn two_site_channel_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let ch = KrausChannel::depolarizing_2q(0.03).unwrap();
        let l0 = Lpdo::random(4, 2, 3, 2, &mut rng);
        let mut l = l0.clone();
        let mut m = l0.to_mpo();
        let mut rho = l0.to_dense().unwrap();
        l.apply_channel_2q(1, &ch, &Caps::loose()).unwrap();
        m.apply_channel_2q(1, &ch, &Caps::loose()).unwrap();
        rho.apply_channel_2q(1, &ch, &Caps::loose()).unwrap();
        assert_eq!(l.kraus_dims()[1], 16 * l0.kraus_dims()[1]);
        assert!(dense_distance(&l, &rho) < 1e-9);
        assert!(dense_distance(&m, &rho) < 1e-9);

        let ops: Vec<Array2<C64>> = ch
            .ops()
            .iter()
            .map(|e| kron(&kron(&Array2::eye(2), e), &Array2::eye(2)))
            .collect();
        let r0 = l0.to_dense().unwrap();
        let mut expect = Array2::<C64>::zeros((16, 16));
        for e in &ops {
            expect = expect + e.dot(r0.matrix()).dot(&e.t().mapv(|z| z.conj()));
        }
        assert!(rho.frobenius_distance(&DensityMatrix::new(4, 2, expect).unwrap()).unwrap() < 1e-12);

        let mut same = l0.clone();
        same.apply_channel_2q(0, &KrausChannel::depolarizing_2q(0.0).unwrap(), &Caps::loose())
            .unwrap();
        assert!(dense_distance(&same, &l0) < 1e-12);
    }
}
