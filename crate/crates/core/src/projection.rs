//! Variational projection of a mixed state onto an LPDO with fixed bond and
//! Kraus extents, by minimizing `Θ = ‖ρ − ρ'‖²_F` with complex Adam.
//!
//! The gradient `∂Θ/∂A*` of site `j` is assembled from cached left and right
//! environments of `⟨⟨ρ'|ρ'⟩⟩` and `⟨⟨ρ'|ρ⟩⟩`, recomputed once per sweep.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::adjoint;
use crate::reps::network::{left_envs, Chain, SiteRef};
use crate::reps::{
    supervector_fidelity, DensityMatrix, Lpdo, MixedState, Mpo, NormMode, StateView,
    DEFAULT_DENSE_CAP,
};
use crate::tensor::{contract, Tensor};
use crate::truncation::lpdo_compress;

pub const ADAM_XI1: f64 = 0.8;
pub const ADAM_XI2: f64 = 0.8;
pub const ADAM_EPS: f64 = 1e-8;
pub const DEFAULT_LEARNING_RATE: f64 = 0.01;
pub const DEFAULT_MAX_ITERS: usize = 2000;

/// Relative cutoff when a dense target is turned into an MPO.
const DENSE_TARGET_CUTOFF: f64 = 1e-14;

/// Largest purification `d^N × ΠK` formed explicitly by the dense engine.
const DENSE_PSI_MAX: usize = 1 << 20;

/// How the loss and gradient are evaluated during [`project`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum GradientEngine {
    /// Dense purification when the system is small enough, else network.
    #[default]
    Auto,
    /// Always contract cached environments.
    Network,
}

#[derive(Clone, Debug)]
pub enum ProjectionInit {
    /// Gaussian tensors rescaled to the target's Frobenius norm.
    Random,
    /// Compression of the target (or of its square-root purification when
    /// the target is not an LPDO and fits densely); random otherwise.
    TruncateTarget,
    /// Warm start from a given LPDO, compressed or padded to the requested size.
    From(Lpdo),
}

#[derive(Clone, Debug)]
pub struct ProjectionOptions {
    pub max_iters: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub init: ProjectionInit,
    /// Stop once the best loss improved by less than `tolerance` (relative)
    /// over this many iterations.
    pub patience: usize,
    pub tolerance: f64,
    pub engine: GradientEngine,
}

impl Default for ProjectionOptions {
    fn default() -> Self {
        Self {
            max_iters: DEFAULT_MAX_ITERS,
            learning_rate: DEFAULT_LEARNING_RATE,
            seed: 0,
            init: ProjectionInit::TruncateTarget,
            patience: 50,
            tolerance: 1e-9,
            engine: GradientEngine::Auto,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ProjectionReport {
    /// Loss before every update, so `loss_trace[0]` is the initial loss.
    pub loss_trace: Vec<f64>,
    pub best_loss: f64,
    pub iterations: usize,
    /// True when the early-stopping rule fired before `max_iters`.
    pub converged: bool,
    /// Supervector fidelity between target and the returned LPDO.
    pub fidelity: f64,
    /// Uhlmann fidelity of the trace-normalized pair, when both fit densely
    /// and the target is positive.
    pub uhlmann: Option<f64>,
}

impl ProjectionReport {
    pub fn initial_loss(&self) -> f64 {
        self.loss_trace.first().copied().unwrap_or(f64::NAN)
    }
}

/// Complex Adam: first moment on the complex gradient, second moment on its
/// squared modulus.
#[derive(Clone, Debug)]
pub struct AdamState {
    pub learning_rate: f64,
    pub xi1: f64,
    pub xi2: f64,
    pub eps: f64,
    step: i32,
    m: Vec<Tensor>,
    v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(shapes: &[&[usize]], learning_rate: f64) -> Self {
        Self {
            learning_rate,
            xi1: ADAM_XI1,
            xi2: ADAM_XI2,
            eps: ADAM_EPS,
            step: 0,
            m: shapes.iter().map(|s| Tensor::zeros(s)).collect(),
            v: shapes
                .iter()
                .map(|s| vec![0.0; s.iter().product()])
                .collect(),
        }
    }

    pub fn steps(&self) -> i32 {
        self.step
    }

    /// One update `A ← A − η m̂ / (√v̂ + ε)` on every tensor.
    pub fn update(&mut self, params: &mut [Tensor], grads: &[Tensor]) {
        self.step += 1;
        let c1 = 1.0 - self.xi1.powi(self.step);
        let c2 = 1.0 - self.xi2.powi(self.step);
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            let md = m.data_mut();
            let pd = p.data_mut();
            for (i, &gi) in g.data().iter().enumerate() {
                md[i] = md[i] * self.xi1 + gi * (1.0 - self.xi1);
                v[i] = v[i] * self.xi2 + gi.norm_sqr() * (1.0 - self.xi2);
                let mhat = md[i] / c1;
                let vhat = v[i] / c2;
                pd[i] -= mhat * (self.learning_rate / (vhat.sqrt() + self.eps));
            }
        }
    }
}

/// `Θ = ‖target − candidate‖²_F`.
pub fn frobenius_loss<T, U>(target: &T, candidate: &U) -> Result<f64>
where
    T: MixedState + ?Sized,
    U: MixedState + ?Sized,
{
    let cross = crate::reps::supervector_overlap(candidate, target)?.re;
    Ok(target.purity() + candidate.purity() - 2.0 * cross)
}

/// Target contracted against the candidate: its chain, mirrored chain and
/// Frobenius norm squared.
struct TargetNet {
    chain: Chain,
    mirrored: Chain,
    purity: f64,
}

impl TargetNet {
    fn new<T: MixedState + ?Sized>(target: &T) -> Result<Self> {
        let owned;
        let view = match target.view() {
            StateView::Dense(rho) => {
                owned = Mpo::from_dense(rho, DENSE_TARGET_CUTOFF)?;
                StateView::Mpo(&owned)
            }
            v => v,
        };
        Ok(Self {
            chain: Chain::of(view, false),
            mirrored: Chain::of(view, true),
            purity: target.purity(),
        })
    }
}

enum Engine {
    Network(TargetNet),
    Dense { rho: Array2<C64>, purity: f64 },
}

impl Engine {
    fn new<T: MixedState + ?Sized>(target: &T, dkappa: usize, choice: GradientEngine) -> Result<Self> {
        let n = target.n_sites();
        let phys = target.phys_dim().checked_pow(n as u32);
        let width = phys.and_then(|p| dkappa.checked_pow(n as u32).and_then(|k| p.checked_mul(k)));
        let small = n <= DEFAULT_DENSE_CAP && width.is_some_and(|w| w <= DENSE_PSI_MAX);
        if choice == GradientEngine::Auto && small {
            let rho = target.to_dense()?.into_matrix();
            let purity = target.purity();
            return Ok(Engine::Dense { rho, purity });
        }
        Ok(Engine::Network(TargetNet::new(target)?))
    }

    fn eval(&self, sites: &[Tensor]) -> (f64, Vec<Tensor>) {
        match self {
            Engine::Network(net) => loss_and_grads(net, sites),
            Engine::Dense { rho, purity } => dense_loss_and_grads(rho, *purity, sites),
        }
    }

    fn purity(&self) -> f64 {
        match self {
            Engine::Network(net) => net.purity,
            Engine::Dense { purity, .. } => *purity,
        }
    }
}

/// Loss and `∂Θ/∂A_j*` for every site of `candidate`.
pub fn loss_gradient<T: MixedState + ?Sized>(target: &T, candidate: &Lpdo) -> Result<(f64, Vec<Tensor>)> {
    check_compatible(target, candidate)?;
    Ok(loss_and_grads(&TargetNet::new(target)?, candidate.sites()))
}

fn loss_and_grads(target: &TargetNet, sites: &[Tensor]) -> (f64, Vec<Tensor>) {
    let n = sites.len();
    let cand = Lpdo::new(sites.to_vec()).expect("shapes are fixed during optimization");
    let cx = Chain::of(cand.view(), false);
    let cm = Chain::of(cand.view(), true);
    let self_left = left_envs(&cx, &cx);
    let self_right = left_envs(&cm, &cm);
    let cross_left = left_envs(&cx, &target.chain);
    let cross_right = left_envs(&cm, &target.mirrored);

    let self_ov = self_left[n].to_scalar().expect("closed").re;
    let cross = cross_left[n].to_scalar().expect("closed").re;
    let loss = target.purity + self_ov - 2.0 * cross;

    let grads = (0..n)
        .map(|j| {
            let r = n - 1 - j;
            let mut g = hole_lpdo(&self_left[j], &cx, &cx, j, &self_right[r]);
            let h = match target.chain.site(j) {
                SiteRef::Lpdo(_) => hole_lpdo(&cross_left[j], &cx, &target.chain, j, &cross_right[r]),
                SiteRef::Mpo(b) => hole_mpo(&cross_left[j], &cx, b, j, &cross_right[r]),
            };
            g.scale_mut(2.0.into());
            g.add_scaled(&h, (-2.0).into());
            g
        })
        .collect();
    (loss, grads)
}

/// Same loss and gradient through the explicit purification `ψ` (rows the
/// physical digits, columns the Kraus digits):
/// `Θ = ‖ρ‖² + ‖ψ†ψ‖² − 2 Re Tr ψ†ρψ` and `∂Θ/∂ψ* = 2(ψψ†ψ − ρψ)`,
/// pulled back to each site through left and right partial products.
fn dense_loss_and_grads(rho: &Array2<C64>, purity: f64, sites: &[Tensor]) -> (f64, Vec<Tensor>) {
    let n = sites.len();
    let d = sites[0].shape()[0];
    let kraus: Vec<usize> = sites.iter().map(|t| t.shape()[1]).collect();
    let reshaped = |m: Array2<C64>, rows: usize| {
        let cols = m.len() / rows;
        m.into_shape_with_order((rows, cols)).expect("standard layout")
    };
    // Site j as [(l, τ, κ), r].
    let mats: Vec<Array2<C64>> = sites
        .iter()
        .map(|a| a.matricize(&[2, 0, 1]).expect("rank 4").0)
        .collect();

    let mut left = Array2::from_elem((1, 1), C64::new(1.0, 0.0));
    for a in sites {
        let (m, _, _) = a.matricize(&[2]).expect("rank 4"); // [l, (τ, κ, r)]
        let rows = left.nrows() * a.shape()[0] * a.shape()[1];
        left = reshaped(left.dot(&m), rows);
    }
    let mut shape = Vec::with_capacity(2 * n);
    for &k in &kraus {
        shape.extend([d, k]);
    }
    let interleaved = Tensor::from_parts(shape, left.into_raw_vec_and_offset().0);
    let phys: Vec<usize> = (0..n).map(|j| 2 * j).collect();
    let (psi, _, _) = interleaved.matricize(&phys).expect("rank 2n");

    let gram = adjoint(&psi).dot(&psi);
    let rho_psi = rho.dot(&psi);
    let self_ov: f64 = gram.iter().map(|z| z.norm_sqr()).sum();
    let cross: f64 = psi.iter().zip(rho_psi.iter()).map(|(a, b)| (a.conj() * b).re).sum();
    let loss = purity + self_ov - 2.0 * cross;

    let g = (psi.dot(&gram) - &rho_psi).mapv(|z| z * 2.0);
    let mut gshape = vec![d; n];
    gshape.extend(&kraus);
    let back: Vec<usize> = (0..n).flat_map(|j| [j, n + j]).collect();
    let g = Tensor::from_parts(gshape, g.into_raw_vec_and_offset().0)
        .permute(&back)
        .expect("rank 2n")
        .into_data();

    // rights[j] = [r_j, S_{>j}].
    let mut rights = vec![Array2::from_elem((1, 1), C64::new(1.0, 0.0)); n];
    for j in (1..n).rev() {
        let prod = mats[j].dot(&rights[j]);
        rights[j - 1] = reshaped(prod, sites[j].shape()[2]);
    }
    let mut grads = Vec::with_capacity(n);
    let mut env = Array2::from_shape_vec((1, g.len()), g).expect("flat");
    for j in 0..n {
        let [dp, k, l, r] = [sites[j].shape()[0], sites[j].shape()[1], sites[j].shape()[2], sites[j].shape()[3]];
        let rows = l * dp * k;
        let env_m = reshaped(env, rows); // [(l, τ, κ), S_{>j}]
        let hole = env_m.dot(&rights[j].t().mapv(|z| z.conj())); // [(l, τ, κ), r]
        let t = Tensor::from_parts(vec![l, dp, k, r], hole.into_raw_vec_and_offset().0);
        grads.push(t.permute(&[1, 2, 0, 3]).expect("rank 4"));
        env = mats[j].t().mapv(|z| z.conj()).dot(&env_m); // [r, S_{>j}]
    }
    (loss, grads)
}

fn c(a: &Tensor, b: &Tensor, pairs: &[(usize, usize)]) -> Tensor {
    contract(a, b, pairs).expect("consistent network")
}

/// The `⟨⟨x|y⟩⟩` network with `x`'s conjugated site `j` removed; `y` an LPDO.
/// Output axes `[τ, κ, a, a']`.
fn hole_lpdo(el: &Tensor, x: &Chain, y: &Chain, j: usize, er: &Tensor) -> Tensor {
    let a = &x.sites[j];
    let t = c(el, a, &[(1, 2)]); // [a,c,e,ω,κ,b']
    let t = c(&t, y.conj_site(j), &[(2, 2), (3, 0)]); // [a,c,κ,b',λ,e']
    let t = c(&t, &y.sites[j], &[(1, 2), (4, 1)]); // [a,κ,b',e',τ,c']
    let t = c(&t, er, &[(2, 1), (5, 2), (3, 3)]); // [a,κ,τ,a']
    t.permute(&[2, 1, 0, 3]).expect("rank 4")
}

/// Same hole against an MPO site `b`.
fn hole_mpo(el: &Tensor, x: &Chain, b: &Tensor, j: usize, er: &Tensor) -> Tensor {
    let t = c(el, &x.sites[j], &[(1, 2)]); // [a,s,ω,κ,b']
    let t = c(&t, b, &[(1, 2), (2, 1)]); // [a,κ,b',τ,s']
    let t = c(&t, er, &[(2, 1), (4, 2)]); // [a,κ,τ,a']
    t.permute(&[2, 1, 0, 3]).expect("rank 4")
}

fn check_compatible<T: MixedState + ?Sized>(target: &T, candidate: &Lpdo) -> Result<()> {
    if target.n_sites() != candidate.n_sites() {
        return Err(Error::SizeMismatch(target.n_sites(), candidate.n_sites()));
    }
    if target.phys_dim() != candidate.phys_dim() {
        return Err(Error::InvalidState(format!(
            "physical dimension {} vs {}",
            target.phys_dim(),
            candidate.phys_dim()
        )));
    }
    Ok(())
}

/// Square-root purification: `ψ = √ρ` read as a chain with the bra index
/// playing the Kraus leg, so `Tr_κ ψψ† = ρ`.
fn sqrt_purification(rho: &DensityMatrix) -> Result<Lpdo> {
    let m = Mpo::from_dense(&rho.sqrt()?, DENSE_TARGET_CUTOFF)?;
    Lpdo::new(m.into_sites())
}

fn initial_guess<T: MixedState + ?Sized>(
    target: &T,
    chi: usize,
    dkappa: usize,
    init: &ProjectionInit,
    rng: &mut ChaCha8Rng,
) -> Result<Lpdo> {
    let n = target.n_sites();
    let d = target.phys_dim();
    let mut fitted = |l: &Lpdo| -> Result<Lpdo> {
        let needs_cut = l.max_bond() > chi || l.max_kraus() > dkappa;
        let l = if needs_cut {
            lpdo_compress(l, chi, dkappa, 0.0)?.0
        } else {
            l.clone()
        };
        // Tiny padding, relative to the typical entry, so every direction of
        // the fixed-size manifold is live.
        let l = balanced(&l)?;
        Ok(l.padded(chi, dkappa, 1e-7 * rms_entry(&l), rng))
    };
    let guess = match init {
        ProjectionInit::From(l) => {
            check_compatible(target, l)?;
            fitted(l)?
        }
        ProjectionInit::TruncateTarget => match target.view() {
            StateView::Lpdo(l) => fitted(l)?,
            _ if n <= DEFAULT_DENSE_CAP => fitted(&sqrt_purification(&target.to_dense()?)?)?,
            _ => Lpdo::random(n, d, chi, dkappa, rng),
        },
        ProjectionInit::Random => Lpdo::random(n, d, chi, dkappa, rng),
    };
    if matches!(init, ProjectionInit::Random) || guess.purity() == 0.0 {
        return balanced(&rescaled_to(guess, target.purity())?);
    }
    balanced(&guess)
}

/// Equal Frobenius norm on every site; the state itself is unchanged.
fn balanced(l: &Lpdo) -> Result<Lpdo> {
    let norms: Vec<f64> = l.sites().iter().map(Tensor::norm).collect();
    if norms.iter().any(|&x| x == 0.0) {
        return Ok(l.clone());
    }
    let log_mean = norms.iter().map(|x| x.ln()).sum::<f64>() / norms.len() as f64;
    let sites = l
        .sites()
        .iter()
        .zip(&norms)
        .map(|(t, &x)| t.scaled((log_mean.exp() / x).into()))
        .collect();
    Lpdo::new(sites)
}

fn rms_entry(l: &Lpdo) -> f64 {
    let (sq, len) = l
        .sites()
        .iter()
        .fold((0.0, 0usize), |(sq, len), t| (sq + t.norm().powi(2), len + t.len()));
    (sq / len as f64).sqrt()
}

/// Scales every site equally so that `Tr ρ'² = purity`.
fn rescaled_to(mut l: Lpdo, purity: f64) -> Result<Lpdo> {
    l.normalize(NormMode::Frobenius)?;
    let n = l.n_sites() as f64;
    let s = purity.powf(1.0 / (4.0 * n));
    let sites: Vec<Tensor> = l.sites().iter().map(|t| t.scaled(s.into())).collect();
    Lpdo::new(sites)
}

/// Best LPDO with bonds `≤ chi` and Kraus legs `≤ dkappa` in Frobenius
/// distance to `target`. The result keeps the target's scale (no trace
/// renormalization) and is the lowest-loss iterate seen.
pub fn project<T: MixedState + ?Sized>(
    target: &T,
    chi: usize,
    dkappa: usize,
    opts: &ProjectionOptions,
) -> Result<(Lpdo, ProjectionReport)> {
    if chi == 0 || dkappa == 0 {
        return Err(Error::OutOfRange {
            name: if chi == 0 { "chi" } else { "dkappa" },
            value: 0.0,
        });
    }
    if !(opts.learning_rate > 0.0) {
        return Err(Error::OutOfRange {
            name: "learning_rate",
            value: opts.learning_rate,
        });
    }
    let engine = Engine::new(target, dkappa, opts.engine)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let start = initial_guess(target, chi, dkappa, &opts.init, &mut rng)?;
    check_compatible(target, &start)?;

    let mut params: Vec<Tensor> = start.into_sites();
    let shapes: Vec<Vec<usize>> = params.iter().map(|t| t.shape().to_vec()).collect();
    let shape_refs: Vec<&[usize]> = shapes.iter().map(Vec::as_slice).collect();
    let mut adam = AdamState::new(&shape_refs, opts.learning_rate);

    let mut trace = Vec::new();
    let mut best_trace: Vec<f64> = Vec::new();
    let mut best = (f64::INFINITY, params.clone());
    let mut converged = false;
    let patience = opts.patience.max(1);
    for it in 0..=opts.max_iters {
        let (loss, grads) = engine.eval(&params);
        if !loss.is_finite() {
            return Err(Error::Diverged(it));
        }
        trace.push(loss);
        if loss < best.0 {
            best = (loss, params.clone());
        }
        best_trace.push(best.0);
        if best.0 <= 1e-14 * engine.purity().max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
        if best_trace.len() > patience {
            let old = best_trace[best_trace.len() - 1 - patience];
            if old - best.0 < opts.tolerance * old.abs() {
                converged = true;
                break;
            }
        }
        if it == opts.max_iters {
            break;
        }
        adam.update(&mut params, &grads);
    }

    let result = Lpdo::new(best.1)?;
    let fidelity = supervector_fidelity(target, &result)?;
    let uhlmann = if target.n_sites() <= DEFAULT_DENSE_CAP {
        uhlmann_of(target, &result).ok()
    } else {
        None
    };
    let report = ProjectionReport {
        iterations: adam.steps() as usize,
        loss_trace: trace,
        best_loss: best.0,
        converged,
        fidelity,
        uhlmann,
    };
    Ok((result, report))
}

fn uhlmann_of<T: MixedState + ?Sized>(target: &T, result: &Lpdo) -> Result<f64> {
    let mut a = target.to_dense()?;
    let mut b = result.to_dense()?;
    a.normalize(NormMode::Trace)?;
    b.normalize(NormMode::Trace)?;
    a.uhlmann_fidelity(&b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::Caps;
    use crate::circuits::{build_brickwall, run_circuit, GateSource, MetricSet};
    use num_complex::Complex64 as C64;

    fn random_pair(n: usize, seed: u64) -> (Lpdo, Lpdo) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (Lpdo::random(n, 2, 4, 2, &mut rng), Lpdo::random(n, 2, 3, 2, &mut rng))
    }

    #[test]
    fn loss_matches_dense() {
        let (t, x) = random_pair(4, 1);
        let (rt, rx) = (t.to_dense().unwrap(), x.to_dense().unwrap());
        let dense = rt.frobenius_distance(&rx).unwrap().powi(2);
        assert!((frobenius_loss(&t, &x).unwrap() - dense).abs() < 1e-12);
        let (loss, _) = loss_gradient(&t.to_mpo(), &x).unwrap();
        assert!((loss - dense).abs() < 1e-12);
        let (loss, _) = loss_gradient(&rt, &x).unwrap();
        assert!((loss - dense).abs() < 1e-12);
    }

    fn finite_difference_check<T: MixedState + ?Sized>(target: &T, x: &Lpdo) {
        let (_, grads) = loss_gradient(target, x).unwrap();
        let h = 1e-6;
        for (j, g) in grads.iter().enumerate() {
            for idx in [0, g.len() / 2, g.len() - 1] {
                let probe = |delta: C64| {
                    let mut sites = x.sites().to_vec();
                    sites[j].data_mut()[idx] += delta;
                    frobenius_loss(target, &Lpdo::new(sites).unwrap()).unwrap()
                };
                let dx = (probe(C64::new(h, 0.0)) - probe(C64::new(-h, 0.0))) / (2.0 * h);
                let dy = (probe(C64::new(0.0, h)) - probe(C64::new(0.0, -h))) / (2.0 * h);
                let fd = C64::new(dx, dy) * 0.5;
                let err = (fd - g.data()[idx]).norm();
                assert!(err < 1e-6 * (1.0 + fd.norm()), "site {j} entry {idx}: {fd} vs {}", g.data()[idx]);
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let (t, x) = random_pair(4, 2);
        finite_difference_check(&t, &x);
        finite_difference_check(&t.to_mpo(), &x);
        finite_difference_check(&t.to_dense().unwrap(), &x);
    }

    #[test]
    fn dense_engine_matches_network() {
        let (t, x) = random_pair(5, 11);
        let rho = t.to_dense().unwrap();
        let (l0, g0) = loss_gradient(&t, &x).unwrap();
        let (l1, g1) = dense_loss_and_grads(rho.matrix(), t.purity(), x.sites());
        assert!((l0 - l1).abs() < 1e-12);
        for (a, b) in g0.iter().zip(&g1) {
            assert_eq!(a.shape(), b.shape());
            assert!(a.distance(b).unwrap() < 1e-10 * (1.0 + a.norm()));
        }
    }

    #[test]
    fn gradient_vanishes_at_exact_fit() {
        let (t, _) = random_pair(3, 3);
        let (loss, grads) = loss_gradient(&t, &t).unwrap();
        assert!(loss.abs() < 1e-12);
        assert!(grads.iter().all(|g| g.norm() < 1e-10));
    }

    #[test]
    fn gradient_is_homogeneous() {
        // Θ(αA) against a target scaled by α^{2n} scales like α^{4n}, and
        // each site gradient picks up α^{4n−1}.
        let (t, x) = random_pair(3, 4);
        let alpha = 1.3f64;
        let n = 3;
        let xs = Lpdo::new(x.sites().iter().map(|s| s.scaled(alpha.into())).collect()).unwrap();
        let ts = Lpdo::new(t.sites().iter().map(|s| s.scaled(alpha.into())).collect()).unwrap();
        let (l0, g0) = loss_gradient(&t, &x).unwrap();
        let (l1, g1) = loss_gradient(&ts, &xs).unwrap();
        assert!((l1 / l0 - alpha.powi(4 * n)).abs() < 1e-9 * alpha.powi(4 * n));
        for (a, b) in g0.iter().zip(&g1) {
            let expect = a.scaled(alpha.powi(4 * n - 1).into());
            assert!(expect.distance(b).unwrap() < 1e-9 * expect.norm());
        }
    }

    #[test]
    fn adam_first_step_moves_by_learning_rate() {
        let g = Tensor::new(vec![2], vec![C64::new(3.0, 0.0), C64::new(0.0, -0.5)]).unwrap();
        let mut p = vec![Tensor::zeros(&[2])];
        let mut adam = AdamState::new(&[&[2]], 0.1);
        adam.update(&mut p, std::slice::from_ref(&g));
        // m̂ = g and v̂ = |g|², so each entry moves by η·g/|g|.
        assert!((p[0].data()[0] - C64::new(-0.1, 0.0)).norm() < 1e-8);
        assert!((p[0].data()[1] - C64::new(0.0, 0.1)).norm() < 1e-8);
    }

    #[test]
    fn exact_target_is_a_fixed_point() {
        let (t, _) = random_pair(4, 5);
        let opts = ProjectionOptions {
            max_iters: 30,
            ..Default::default()
        };
        let (out, report) = project(&t, 16, 2, &opts).unwrap();
        assert!(report.best_loss < 1e-10 * t.purity(), "{}", report.best_loss);
        assert!(report.fidelity > 1.0 - 1e-9);
        assert!(out.max_bond() <= 16 && out.max_kraus() <= 2);
    }

    #[test]
    fn loss_decreases_from_random_start() {
        let (t, _) = random_pair(4, 6);
        let opts = ProjectionOptions {
            max_iters: 300,
            init: ProjectionInit::Random,
            seed: 9,
            learning_rate: 0.02,
            ..Default::default()
        };
        let (_, report) = project(&t, 4, 2, &opts).unwrap();
        assert!(report.best_loss < 0.05 * report.initial_loss());
        assert!(report.loss_trace.iter().all(|l| l.is_finite()));
        let again = project(&t, 4, 2, &opts).unwrap().1;
        assert_eq!(again.loss_trace, report.loss_trace);
    }

    #[test]
    fn bell_state_onto_product_manifold() {
        let s = 1.0 / 2f64.sqrt();
        let z = C64::new(0.0, 0.0);
        let bell = DensityMatrix::pure(2, 2, &[C64::new(s, 0.0), z, z, C64::new(s, 0.0)]).unwrap();
        let opts = ProjectionOptions {
            max_iters: 3000,
            ..Default::default()
        };
        let (out, report) = project(&bell, 1, 1, &opts).unwrap();
        // Best product pure state overlaps the Bell state with |⟨φ|Φ⁺⟩|² = 1/2.
        assert!((report.fidelity - 0.5).abs() < 1e-3, "{}", report.fidelity);
        assert!((report.uhlmann.unwrap() - 0.5).abs() < 1e-2);
        assert_eq!(out.max_bond(), 1);
    }

    #[test]
    fn purification_init_reproduces_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let c = build_brickwall(5, 4, &GateSource::Haar, 0.05, 1.0, &mut rng).unwrap();
        let (m, _) = run_circuit(Mpo::maximally_mixed(5, 2), &c, &Caps::default(), None, MetricSet::default()).unwrap();
        let rho = m.to_dense().unwrap();
        let l = sqrt_purification(&rho).unwrap();
        let back = l.to_dense().unwrap();
        assert!(back.frobenius_distance(&rho).unwrap() < 1e-10);
        assert!(l.max_kraus() <= 2);
    }

    #[test]
    fn projection_beats_or_matches_truncation() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let c = build_brickwall(5, 6, &GateSource::Haar, 0.03, 1.0, &mut rng).unwrap();
        let rho = crate::ed::ed_run(&c, DensityMatrix::all_zeros(5)).unwrap().snapshots.pop().unwrap();
        let start = lpdo_compress(&sqrt_purification(&rho).unwrap(), 2, 2, 0.0).unwrap().0;
        let f_start = supervector_fidelity(&rho, &start).unwrap();
        let opts = ProjectionOptions {
            max_iters: 200,
            ..Default::default()
        };
        let (_, report) = project(&rho, 2, 2, &opts).unwrap();
        assert!(report.fidelity >= f_start - 1e-9, "{} < {f_start}", report.fidelity);
        assert!(report.best_loss <= report.initial_loss());
    }

    #[test]
    fn rejects_bad_arguments() {
        let (t, _) = random_pair(3, 9);
        assert!(project(&t, 0, 2, &ProjectionOptions::default()).is_err());
        let opts = ProjectionOptions {
            learning_rate: -1.0,
            ..Default::default()
        };
        assert!(project(&t, 2, 2, &opts).is_err());
        let other = Lpdo::all_zeros(4);
        assert!(loss_gradient(&t, &other).is_err());
    }
}
