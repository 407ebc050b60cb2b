//! Brick-wall circuit construction and the layer-by-layer driver.

use std::path::Path;

use ndarray::Array2;
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::channels::{check_unitary, pauli, Caps, Evolve, KrausChannel};
use crate::error::{Error, Result};
use crate::linalg::{kron, qr_phase_fixed, unitary_evolution};
use crate::reps::{supervector_fidelity, DensityMatrix, Lpdo, Mpo, NormMode};
use crate::truncation::{lpdo_compress, mpo_compress};

/// Haar-distributed unitary from the phase-fixed QR of a Ginibre matrix.
pub fn haar_random_unitary(dim: usize, rng: &mut impl Rng) -> Array2<C64> {
    let scale = 0.5f64.sqrt();
    let g = Array2::from_shape_simple_fn((dim, dim), || {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re * scale, im * scale)
    });
    qr_phase_fixed(&g).expect("Ginibre matrices are full rank").0
}

/// `exp[−i·dt·(−ZZ − (g/2)XI − (g/2)IX)]`.
pub fn ising_trotter_gate(dt: f64, g: f64) -> Array2<C64> {
    let (x, z, i) = (pauli(1), pauli(3), pauli(0));
    let h = kron(&z, &z).mapv(|v| -v) - (kron(&x, &i) + kron(&i, &x)).mapv(|v| v * (g / 2.0));
    unitary_evolution(&h, dt).expect("Hermitian generator")
}

/// `exp[−i·dt·S⃗·S⃗]` with spin-1/2 operators `S = σ/2`.
pub fn heisenberg_trotter_gate(dt: f64) -> Array2<C64> {
    let mut h = Array2::<C64>::zeros((4, 4));
    for k in 1..4 {
        h = h + kron(&pauli(k), &pauli(k)).mapv(|v| v * 0.25);
    }
    unitary_evolution(&h, dt).expect("Hermitian generator")
}

pub fn cnot() -> Array2<C64> {
    let mut u = Array2::<C64>::zeros((4, 4));
    for (r, c) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
        u[(r, c)] = C64::new(1.0, 0.0);
    }
    u
}

/// Where the two-qubit gates of a brick wall come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GateSource {
    /// Independent Haar unitary per gate, drawn from the circuit generator.
    Haar,
    Ising { dt: f64, g: f64 },
    Heisenberg { dt: f64 },
    /// The same unitary everywhere, as 16 `[re, im]` pairs in row-major order.
    Fixed { unitary: Vec<[f64; 2]> },
}

impl GateSource {
    fn draw(&self, rng: &mut impl Rng) -> Result<Array2<C64>> {
        Ok(match self {
            GateSource::Haar => haar_random_unitary(4, rng),
            GateSource::Ising { dt, g } => ising_trotter_gate(*dt, *g),
            GateSource::Heisenberg { dt } => heisenberg_trotter_gate(*dt),
            GateSource::Fixed { unitary } => matrix_from_pairs(unitary)?,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            GateSource::Haar => "haar",
            GateSource::Ising { .. } => "ising",
            GateSource::Heisenberg { .. } => "heisenberg",
            GateSource::Fixed { .. } => "fixed",
        }
    }
}

fn matrix_from_pairs(pairs: &[[f64; 2]]) -> Result<Array2<C64>> {
    if pairs.len() != 16 {
        return Err(Error::Format(format!("expected 16 unitary entries, got {}", pairs.len())));
    }
    let data = pairs.iter().map(|p| C64::new(p[0], p[1])).collect();
    Ok(Array2::from_shape_vec((4, 4), data).expect("4x4"))
}

fn pairs_from_matrix(u: &Array2<C64>) -> Vec<[f64; 2]> {
    u.iter().map(|z| [z.re, z.im]).collect()
}

/// One two-qubit gate on sites `(left_site, left_site + 1)` with its noise.
#[derive(Clone, Debug, PartialEq)]
pub struct GateRecord {
    pub left_site: usize,
    pub unitary: Array2<C64>,
    pub noise: Option<KrausChannel>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Layer {
    pub gates: Vec<GateRecord>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CircuitSpec {
    n_sites: usize,
    layers: Vec<Layer>,
}

impl CircuitSpec {
    /// Checks that every gate is a unitary on an in-range adjacent pair and
    /// that pairs within a layer are disjoint.
    pub fn new(n_sites: usize, layers: Vec<Layer>) -> Result<Self> {
        for layer in &layers {
            let mut used = vec![false; n_sites];
            for g in &layer.gates {
                if g.left_site + 1 >= n_sites {
                    return Err(Error::NotAdjacent(g.left_site, g.left_site + 1));
                }
                if used[g.left_site] || used[g.left_site + 1] {
                    return Err(Error::InvalidState(format!(
                        "gates overlap at site {} within a layer",
                        g.left_site
                    )));
                }
                used[g.left_site] = true;
                used[g.left_site + 1] = true;
                if g.unitary.dim() != (4, 4) {
                    return Err(Error::NotUnitary(f64::INFINITY));
                }
                check_unitary(&g.unitary)?;
                if let Some(ch) = &g.noise {
                    if ch.arity() != 2 {
                        return Err(Error::ArityMismatch {
                            expected: 2,
                            got: ch.arity(),
                        });
                    }
                }
            }
        }
        Ok(Self { n_sites, layers })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn gate_count(&self) -> usize {
        self.layers.iter().map(|l| l.gates.len()).sum()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: CircuitFile = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        file.into_spec()
    }

    pub fn to_json(&self) -> Result<String> {
        let layers = self
            .layers
            .iter()
            .map(|l| {
                l.gates
                    .iter()
                    .map(|g| {
                        let epsilon = match &g.noise {
                            None => 0.0,
                            Some(ch) => ch.error_rate().ok_or_else(|| {
                                Error::Format(format!("channel {} has no file form", ch.label()))
                            })?,
                        };
                        Ok(GateFile {
                            left_site: g.left_site,
                            unitary: Some(pairs_from_matrix(&g.unitary)),
                            gate: None,
                            epsilon,
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let file = CircuitFile {
            n_sites: self.n_sites,
            layers,
        };
        serde_json::to_string_pretty(&file).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

/// Named two-qubit gates accepted in circuit files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum NamedGate {
    Ising { dt: f64, g: f64 },
    Heisenberg { dt: f64 },
    Cnot,
    Identity,
}

impl NamedGate {
    fn matrix(&self) -> Array2<C64> {
        match self {
            NamedGate::Ising { dt, g } => ising_trotter_gate(*dt, *g),
            NamedGate::Heisenberg { dt } => heisenberg_trotter_gate(*dt),
            NamedGate::Cnot => cnot(),
            NamedGate::Identity => Array2::eye(4),
        }
    }
}

/// Serialized gate: either explicit `unitary` entries or a named `gate`.
#[derive(Clone, Debug, Serialize, Deserialize)]
struct GateFile {
    left_site: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    unitary: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gate: Option<NamedGate>,
    #[serde(default)]
    epsilon: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct CircuitFile {
    n_sites: usize,
    layers: Vec<Vec<GateFile>>,
}

impl CircuitFile {
    fn into_spec(self) -> Result<CircuitSpec> {
        let layers = self
            .layers
            .into_iter()
            .map(|gates| {
                let gates = gates
                    .into_iter()
                    .map(|g| {
                        let unitary = match (&g.unitary, &g.gate) {
                            (Some(u), None) => matrix_from_pairs(u)?,
                            (None, Some(named)) => named.matrix(),
                            _ => {
                                return Err(Error::Format(
                                    "each gate needs exactly one of `unitary` or `gate`".into(),
                                ))
                            }
                        };
                        let noise = noise_for(g.epsilon)?;
                        Ok(GateRecord {
                            left_site: g.left_site,
                            unitary,
                            noise,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Layer { gates })
            })
            .collect::<Result<Vec<_>>>()?;
        CircuitSpec::new(self.n_sites, layers)
    }
}

fn noise_for(epsilon: f64) -> Result<Option<KrausChannel>> {
    if epsilon == 0.0 {
        Ok(None)
    } else {
        KrausChannel::depolarizing_2q(epsilon).map(Some)
    }
}

/// Brick wall of `depth` layers: even layers act on `(0,1), (2,3), …`, odd
/// layers on `(1,2), (3,4), …`. Each gate is kept with probability `p`; a
/// kept gate is followed by two-qubit depolarizing noise of rate `epsilon`.
pub fn build_brickwall(
    n_sites: usize,
    depth: usize,
    source: &GateSource,
    epsilon: f64,
    p: f64,
    rng: &mut impl Rng,
) -> Result<CircuitSpec> {
    if depth == 0 {
        return Err(Error::InvalidState("depth must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::OutOfRange { name: "p", value: p });
    }
    let noise = noise_for(epsilon)?;
    let mut layers = Vec::with_capacity(depth);
    for layer in 0..depth {
        let mut gates = Vec::new();
        let mut left = layer % 2;
        while left + 1 < n_sites {
            let keep = p >= 1.0 || rng.random::<f64>() < p;
            if keep {
                gates.push(GateRecord {
                    left_site: left,
                    unitary: source.draw(rng)?,
                    noise: noise.clone(),
                });
            }
            left += 2;
        }
        layers.push(Layer { gates });
    }
    CircuitSpec::new(n_sites, layers)
}

/// Metrics of one layer, taken after compression and renormalization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerMetrics {
    pub depth: usize,
    pub half_cut_ee: Option<f64>,
    pub purity: f64,
    pub trace: f64,
    /// Virtual bond extents (`χ` for an LPDO, `D` for an MPO).
    pub bond_profile: Vec<usize>,
    /// Kraus extents; empty for representations without Kraus legs.
    pub kraus_profile: Vec<usize>,
    pub fidelity_vs_reference: Option<f64>,
    pub trace_norm: Option<f64>,
    /// Summed discarded weight of the layer's splits and compression.
    pub discarded: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub rows: Vec<LayerMetrics>,
}

impl TrajectoryRecord {
    pub fn depths(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r.depth).collect()
    }

    pub fn entropies(&self) -> Vec<Option<f64>> {
        self.rows.iter().map(|r| r.half_cut_ee).collect()
    }

    pub fn fidelities(&self) -> Vec<Option<f64>> {
        self.rows.iter().map(|r| r.fidelity_vs_reference).collect()
    }
}

/// Which optional metrics to compute per layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MetricSet {
    pub entropy: bool,
    pub trace_norm: bool,
}

impl Default for MetricSet {
    fn default() -> Self {
        Self {
            entropy: true,
            trace_norm: false,
        }
    }
}

/// A representation that can be driven through a circuit.
pub trait Simulable: Evolve + Clone {
    /// Brings the state back within `caps`; returns the discarded weight.
    fn compress(&mut self, caps: &Caps) -> Result<f64>;
    fn bond_profile(&self) -> Vec<usize>;
    fn kraus_profile(&self) -> Vec<usize>;
}

impl Simulable for Lpdo {
    fn compress(&mut self, caps: &Caps) -> Result<f64> {
        let (out, w) = lpdo_compress(self, caps.chi_max, caps.dkappa_max, caps.cutoff)?;
        *self = out;
        Ok(w)
    }

    fn bond_profile(&self) -> Vec<usize> {
        self.bond_dims()
    }

    fn kraus_profile(&self) -> Vec<usize> {
        self.kraus_dims()
    }
}

impl Simulable for Mpo {
    fn compress(&mut self, caps: &Caps) -> Result<f64> {
        let (out, w) = mpo_compress(self, caps.d_max, caps.cutoff)?;
        *self = out;
        Ok(w)
    }

    fn bond_profile(&self) -> Vec<usize> {
        self.bond_dims()
    }

    fn kraus_profile(&self) -> Vec<usize> {
        Vec::new()
    }
}

impl Simulable for DensityMatrix {
    fn compress(&mut self, _caps: &Caps) -> Result<f64> {
        Ok(0.0)
    }

    fn bond_profile(&self) -> Vec<usize> {
        Vec::new()
    }

    fn kraus_profile(&self) -> Vec<usize> {
        Vec::new()
    }
}

/// Runs `circuit` layer by layer and calls `observe` with every recorded
/// state. Gates and noise of a layer are applied with only the relative
/// cutoff; `caps` are enforced by one compression per layer.
///
/// `reference[d - 1]` is the exact state after `d` layers; when given, the
/// supervector fidelity against it is recorded.
pub fn run_circuit_with<S, F>(
    initial: S,
    circuit: &CircuitSpec,
    caps: &Caps,
    reference: Option<&[Mpo]>,
    metrics: MetricSet,
    mut observe: F,
) -> Result<(S, TrajectoryRecord)>
where
    S: Simulable,
    F: FnMut(usize, &S),
{
    if initial.n_sites() != circuit.n_sites() {
        return Err(Error::SizeMismatch(initial.n_sites(), circuit.n_sites()));
    }
    let mut state = initial;
    let loose = caps.cutoff_only();
    let mut record = TrajectoryRecord::default();
    for (idx, layer) in circuit.layers().iter().enumerate() {
        let depth = idx + 1;
        let mut discarded = 0.0;
        for g in &layer.gates {
            discarded += state.apply_unitary_2q(g.left_site, &g.unitary, &loose)?;
        }
        for g in &layer.gates {
            if let Some(ch) = &g.noise {
                discarded += state.apply_channel_2q(g.left_site, ch, &loose)?;
            }
        }
        discarded += state.compress(caps)?;
        state.normalize(NormMode::Trace)?;

        let half_cut_ee = if metrics.entropy {
            Some(state.half_cut_entropy()?)
        } else {
            None
        };
        let trace_norm = if metrics.trace_norm {
            Some(state.trace_norm()?)
        } else {
            None
        };
        let fidelity_vs_reference = match reference.and_then(|r| r.get(idx)) {
            Some(r) => Some(supervector_fidelity(&state, r)?),
            None => None,
        };
        let row = LayerMetrics {
            depth,
            half_cut_ee,
            purity: state.purity(),
            trace: state.trace().re,
            bond_profile: state.bond_profile(),
            kraus_profile: state.kraus_profile(),
            fidelity_vs_reference,
            trace_norm,
            discarded,
        };
        if !row.purity.is_finite() || !row.trace.is_finite() {
            return Err(Error::NonFinite);
        }
        record.rows.push(row);
        observe(depth, &state);
    }
    Ok((state, record))
}

pub fn run_circuit<S: Simulable>(
    initial: S,
    circuit: &CircuitSpec,
    caps: &Caps,
    reference: Option<&[Mpo]>,
    metrics: MetricSet,
) -> Result<(S, TrajectoryRecord)> {
    run_circuit_with(initial, circuit, caps, reference, metrics, |_, _| {})
}
