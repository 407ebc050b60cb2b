use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{MixedState, Mpo, NormMode, StateView};
use crate::error::{Error, Result};
use crate::tensor::{contract, Tensor};

/// Locally purified density operator.
///
/// Site `j` holds a rank-4 tensor with axes `(physical, kraus, left, right)`.
/// The represented operator is `ρ = Tr_κ |ψ⟩⟨ψ|` where `ψ` is the matrix
/// product state over the combined `(physical, kraus)` legs, so `ρ` is
/// Hermitian and positive semidefinite by construction.
#[derive(Clone, Debug, PartialEq)]
pub struct Lpdo {
    sites: Vec<Tensor>,
    phys_dim: usize,
}

pub(crate) fn validate_chain(sites: &[Tensor], kind: &str) -> Result<()> {
    if sites.is_empty() {
        return Err(Error::InvalidState(format!("{kind} needs at least one site")));
    }
    for (j, t) in sites.iter().enumerate() {
        if t.rank() != 4 {
            return Err(Error::InvalidState(format!(
                "{kind} site {j} has rank {}, expected 4",
                t.rank()
            )));
        }
    }
    if sites[0].shape()[2] != 1 || sites[sites.len() - 1].shape()[3] != 1 {
        return Err(Error::InvalidState(format!("{kind} boundary bonds must have extent 1")));
    }
    for (j, w) in sites.windows(2).enumerate() {
        if w[0].shape()[3] != w[1].shape()[2] {
            return Err(Error::InvalidState(format!(
                "{kind} bond {j}: right extent {} != left extent {}",
                w[0].shape()[3],
                w[1].shape()[2]
            )));
        }
    }
    Ok(())
}

impl Lpdo {
    pub fn new(sites: Vec<Tensor>) -> Result<Self> {
        validate_chain(&sites, "LPDO")?;
        let phys_dim = sites[0].shape()[0];
        if sites.iter().any(|t| t.shape()[0] != phys_dim) {
            return Err(Error::InvalidState("LPDO physical extents differ".into()));
        }
        Ok(Self { sites, phys_dim })
    }

    /// Pure product state from one normalized amplitude vector per site.
    pub fn product(amplitudes: &[Vec<C64>]) -> Result<Self> {
        let sites = amplitudes
            .iter()
            .enumerate()
            .map(|(j, amp)| {
                let norm: f64 = amp.iter().map(|z| z.norm_sqr()).sum();
                if (norm - 1.0).abs() > 1e-12 {
                    return Err(Error::Unnormalized(j));
                }
                Tensor::new(vec![amp.len(), 1, 1, 1], amp.clone())
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(sites)
    }

    /// `|0…0⟩⟨0…0|` on `n` qubits.
    pub fn all_zeros(n: usize) -> Self {
        let zero = vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        Self::product(&vec![zero; n]).expect("normalized")
    }

    /// Computational-basis product state; `bits[j]` selects the level of site `j`.
    pub fn basis_state(bits: &[usize], phys_dim: usize) -> Result<Self> {
        let amps: Vec<Vec<C64>> = bits
            .iter()
            .map(|&b| {
                let mut v = vec![C64::new(0.0, 0.0); phys_dim];
                v[b] = C64::new(1.0, 0.0);
                v
            })
            .collect();
        Self::product(&amps)
    }

    /// `I / d^n`: each site purifies the local identity through its Kraus leg.
    pub fn maximally_mixed(n: usize, phys_dim: usize) -> Self {
        let w = 1.0 / (phys_dim as f64).sqrt();
        let site = Tensor::from_fn(&[phys_dim, phys_dim, 1, 1], |i| {
            if i[0] == i[1] {
                C64::new(w, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        Self::new(vec![site; n]).expect("valid")
    }

    /// Random complex Gaussian tensors, bond extents capped by what the
    /// chain can support, normalized to unit trace.
    pub fn random(n: usize, phys_dim: usize, chi: usize, dkappa: usize, rng: &mut impl Rng) -> Self {
        let bonds = max_bonds(n, phys_dim * dkappa, chi);
        let sites = (0..n)
            .map(|j| {
                let left = if j == 0 { 1 } else { bonds[j - 1] };
                let right = if j == n - 1 { 1 } else { bonds[j] };
                Tensor::from_fn(&[phys_dim, dkappa, left, right], |_| {
                    C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
                })
            })
            .collect();
        let mut l = Self::new(sites).expect("valid");
        l.normalize(NormMode::Trace).expect("random state has nonzero trace");
        l
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

    /// Replaces one site tensor, keeping the chain valid.
    pub fn set_site(&mut self, j: usize, t: Tensor) -> Result<()> {
        let n = self.sites.len();
        if j >= n {
            return Err(Error::SiteOutOfRange { site: j, n_sites: n });
        }
        let old = std::mem::replace(&mut self.sites[j], t);
        if let Err(e) = validate_chain(&self.sites, "LPDO") {
            self.sites[j] = old;
            return Err(e);
        }
        Ok(())
    }

    pub(crate) fn sites_mut(&mut self) -> &mut [Tensor] {
        &mut self.sites
    }

    /// Virtual extents of the `n − 1` internal bonds.
    pub fn bond_dims(&self) -> Vec<usize> {
        self.sites[..self.sites.len() - 1].iter().map(|t| t.shape()[3]).collect()
    }

    pub fn kraus_dims(&self) -> Vec<usize> {
        self.sites.iter().map(|t| t.shape()[1]).collect()
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    pub fn max_kraus(&self) -> usize {
        self.kraus_dims().into_iter().max().unwrap_or(1)
    }

    /// MPO obtained by tracing each Kraus leg against the conjugate copy;
    /// bond `j` becomes the pair `(μ_j, ν_j)` of extent `χ_j²`.
    pub fn to_mpo(&self) -> Mpo {
        let sites = self
            .sites
            .iter()
            .map(|a| {
                let s = a.shape();
                let (d, l, r) = (s[0], s[2], s[3]);
                // [τ,κ,a,a'] · [ω,κ,b,b'] over κ -> [τ,a,a',ω,b,b']
                let b = contract(a, &a.conj(), &[(1, 1)]).expect("matching Kraus legs");
                b.permute(&[0, 3, 1, 4, 2, 5])
                    .expect("valid permutation")
                    .reshape(&[d, d, l * l, r * r])
                    .expect("consistent extents")
            })
            .collect();
        Mpo::new(sites).expect("valid chain")
    }

    /// Grows bonds and Kraus legs to the requested extents (where the chain
    /// allows) by zero padding plus `noise`-scaled Gaussian entries.
    pub fn padded(&self, chi: usize, dkappa: usize, noise: f64, rng: &mut impl Rng) -> Self {
        let n = self.sites.len();
        let d = self.phys_dim;
        let caps = max_bonds(n, d * dkappa, chi);
        let bonds: Vec<usize> = self
            .bond_dims()
            .iter()
            .zip(&caps)
            .map(|(&b, &c)| b.max(c))
            .collect();
        let sites = self
            .sites
            .iter()
            .enumerate()
            .map(|(j, a)| {
                let s = a.shape();
                let k = s[1].max(dkappa);
                let l = if j == 0 { 1 } else { bonds[j - 1] };
                let r = if j == n - 1 { 1 } else { bonds[j] };
                Tensor::from_fn(&[d, k, l, r], |i| {
                    let base = if i[1] < s[1] && i[2] < s[2] && i[3] < s[3] {
                        a.get(i)
                    } else {
                        C64::new(0.0, 0.0)
                    };
                    let z: f64 = StandardNormal.sample(rng);
                    let w: f64 = StandardNormal.sample(rng);
                    base + C64::new(z, w) * noise
                })
            })
            .collect();
        Self::new(sites).expect("valid chain")
    }
}

/// Largest useful internal bond extents for a chain of `n` sites with local
/// dimension `local`, capped at `chi`.
pub(crate) fn max_bonds(n: usize, local: usize, chi: usize) -> Vec<usize> {
    (1..n)
        .map(|j| {
            let span = j.min(n - j) as u32;
            local.checked_pow(span).unwrap_or(usize::MAX).min(chi)
        })
        .collect()
}

impl MixedState for Lpdo {
    fn n_sites(&self) -> usize {
        self.sites.len()
    }

    fn phys_dim(&self) -> usize {
        self.phys_dim
    }

    fn view(&self) -> StateView<'_> {
        StateView::Lpdo(self)
    }

    fn normalize(&mut self, mode: NormMode) -> Result<()> {
        let norm = match mode {
            NormMode::Trace => self.trace().re,
            NormMode::Frobenius => self.purity().sqrt(),
        };
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::ZeroNorm);
        }
        // ρ is quadratic in the site tensors.
        let factor = C64::new(norm.powf(-0.5), 0.0);
        self.sites.last_mut().expect("non-empty").scale_mut(factor);
        Ok(())
    }
}
