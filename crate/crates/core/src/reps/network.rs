//! Transfer-matrix contractions for supervector inner products `⟨⟨x|y⟩⟩ = Tr x†y`.
//!
//! An environment carries the open virtual bonds of `x` followed by those of
//! `y`. An LPDO contributes two bonds (its conjugated copy first), an MPO one.
//! Right environments are obtained by running the same transfer over chains
//! with left and right bonds exchanged.

use num_complex::Complex64 as C64;

use super::StateView;
use crate::tensor::{contract, Tensor};

#[derive(Clone, Copy)]
pub(crate) enum SiteRef<'a> {
    Lpdo(&'a Tensor),
    Mpo(&'a Tensor),
}

impl<'a> SiteRef<'a> {
    fn bonds(&self) -> usize {
        match self {
            SiteRef::Lpdo(_) => 2,
            SiteRef::Mpo(_) => 1,
        }
    }
}

/// Owned site tensors of one chain, optionally mirrored left↔right.
pub(crate) struct Chain {
    pub(crate) sites: Vec<Tensor>,
    pub(crate) conj_sites: Vec<Tensor>,
    lpdo: bool,
}

impl Chain {
    pub(crate) fn of(view: StateView<'_>, mirrored: bool) -> Self {
        let (src, lpdo) = match view {
            StateView::Lpdo(l) => (l.sites(), true),
            StateView::Mpo(m) => (m.sites(), false),
            StateView::Dense(_) => unreachable!("dense states are contracted densely"),
        };
        let sites: Vec<Tensor> = if mirrored {
            src.iter()
                .rev()
                .map(|t| t.permute(&[0, 1, 3, 2]).expect("rank 4"))
                .collect()
        } else {
            src.to_vec()
        };
        let conj_sites = sites.iter().map(Tensor::conj).collect();
        Self {
            sites,
            conj_sites,
            lpdo,
        }
    }

    pub(crate) fn site(&self, j: usize) -> SiteRef<'_> {
        if self.lpdo {
            SiteRef::Lpdo(&self.sites[j])
        } else {
            SiteRef::Mpo(&self.sites[j])
        }
    }

    pub(crate) fn conj_site(&self, j: usize) -> &Tensor {
        &self.conj_sites[j]
    }

    pub(crate) fn len(&self) -> usize {
        self.sites.len()
    }
}

pub(crate) fn unit_env(x: SiteRef<'_>, y: SiteRef<'_>) -> Tensor {
    let rank = x.bonds() + y.bonds();
    Tensor::from_parts(vec![1; rank], vec![C64::new(1.0, 0.0)])
}

/// Absorbs site `j` of both chains into a left environment.
pub(crate) fn transfer(env: &Tensor, x: &Chain, y: &Chain, j: usize) -> Tensor {
    let c = |a: &Tensor, b: &Tensor, p: &[(usize, usize)]| contract(a, b, p).expect("consistent network");
    match (x.site(j), y.site(j)) {
        (SiteRef::Lpdo(a), SiteRef::Lpdo(cc)) => {
            // E[a,b,c,e] · A*[τ,κ,a,a'] · A[ω,κ,b,b'] · C[τ,λ,c,c'] · C*[ω,λ,e,e']
            let t = c(env, x.conj_site(j), &[(0, 2)]); // [b,c,e,τ,κ,a']
            let t = c(&t, a, &[(0, 2), (4, 1)]); // [c,e,τ,a',ω,b']
            let t = c(&t, cc, &[(0, 2), (2, 0)]); // [e,a',ω,b',λ,c']
            c(&t, y.conj_site(j), &[(0, 2), (2, 0), (4, 1)]) // [a',b',c',e']
        }
        (SiteRef::Lpdo(a), SiteRef::Mpo(b)) => {
            // E[a,b,s] · A*[τ,κ,a,a'] · A[ω,κ,b,b'] · B[τ,ω,s,s']
            let t = c(env, x.conj_site(j), &[(0, 2)]); // [b,s,τ,κ,a']
            let t = c(&t, a, &[(0, 2), (3, 1)]); // [s,τ,a',ω,b']
            c(&t, b, &[(0, 2), (1, 0), (3, 1)]) // [a',b',s']
        }
        (SiteRef::Mpo(_), SiteRef::Lpdo(cc)) => {
            // E[s,c,e] · B*[τ,ω,s,s'] · C[τ,κ,c,c'] · C*[ω,κ,e,e']
            let t = c(env, x.conj_site(j), &[(0, 2)]); // [c,e,τ,ω,s']
            let t = c(&t, cc, &[(0, 2), (2, 0)]); // [e,ω,s',κ,c']
            c(&t, y.conj_site(j), &[(0, 2), (1, 0), (3, 1)]) // [s',c',e']
        }
        (SiteRef::Mpo(_), SiteRef::Mpo(b2)) => {
            // E[s,t] · B1*[τ,ω,s,s'] · B2[τ,ω,t,t']
            let t = c(env, x.conj_site(j), &[(0, 2)]); // [t,τ,ω,s']
            c(&t, b2, &[(0, 2), (1, 0), (2, 1)]) // [s',t']
        }
    }
}

/// Left environments `envs[k]` holding sites `0..k` (so `envs[0]` is the unit
/// environment and `envs[n]` the full contraction).
pub(crate) fn left_envs(x: &Chain, y: &Chain) -> Vec<Tensor> {
    let n = x.len();
    let mut envs = Vec::with_capacity(n + 1);
    envs.push(unit_env(x.site(0), y.site(0)));
    for j in 0..n {
        let next = transfer(&envs[j], x, y, j);
        envs.push(next);
    }
    envs
}

/// `⟨⟨x|y⟩⟩` by a single left-to-right sweep.
pub(crate) fn overlap(x: StateView<'_>, y: StateView<'_>) -> C64 {
    let cx = Chain::of(x, false);
    let cy = Chain::of(y, false);
    let mut env = unit_env(cx.site(0), cy.site(0));
    for j in 0..cx.len() {
        env = transfer(&env, &cx, &cy, j);
    }
    env.to_scalar().expect("closed network")
}
