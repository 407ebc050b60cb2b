//! Exact dense evolution used as the benchmark for the network simulations.

use crate::channels::Caps;
use crate::circuits::{run_circuit_with, CircuitSpec, MetricSet, TrajectoryRecord};
use crate::error::{Error, Result};
use crate::reps::{DensityMatrix, Mpo};

/// Largest system evolved densely.
pub const ED_MAX_SITES: usize = 10;

/// Relative cutoff used when turning snapshots into exact MPOs.
const SNAPSHOT_CUTOFF: f64 = 1e-14;

#[derive(Clone, Debug)]
pub struct DenseTrajectory {
    /// `snapshots[d - 1]` is the state after `d` layers; empty when not retained.
    pub snapshots: Vec<DensityMatrix>,
    pub record: TrajectoryRecord,
}

impl DenseTrajectory {
    /// Exact MPOs of every snapshot, for network fidelities.
    pub fn reference_mpos(&self) -> Result<Vec<Mpo>> {
        self.snapshots
            .iter()
            .map(|rho| Mpo::from_dense(rho, SNAPSHOT_CUTOFF))
            .collect()
    }
}

pub fn ed_run(circuit: &CircuitSpec, init: DensityMatrix) -> Result<DenseTrajectory> {
    ed_run_with(circuit, init, MetricSet::default(), true)
}

/// Dense evolution; `retain = false` keeps only the metric rows.
pub fn ed_run_with(
    circuit: &CircuitSpec,
    init: DensityMatrix,
    metrics: MetricSet,
    retain: bool,
) -> Result<DenseTrajectory> {
    if init.n_sites() > ED_MAX_SITES {
        return Err(Error::SizeCap {
            n_sites: init.n_sites(),
            cap: ED_MAX_SITES,
        });
    }
    let mut snapshots = Vec::new();
    let (_, record) = run_circuit_with(init, circuit, &Caps::loose(), None, metrics, |_, rho| {
        if retain {
            snapshots.push(rho.clone());
        }
    })?;
    Ok(DenseTrajectory { snapshots, record })
}

/// Uhlmann fidelity `(Tr √(√a b √a))²`; rejects operators with eigenvalues
/// below `−1e−9`.
pub fn fidelity_mixed(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    a.uhlmann_fidelity(b)
}
