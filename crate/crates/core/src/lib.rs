//! Tensor-network simulation of mixed states under noisy quantum circuits.
//!
//! Two representations are provided: the matrix product operator ([`Mpo`])
//! and the locally purified density operator ([`Lpdo`]), together with an
//! exact dense evolution used as a reference.

// Links the OpenBLAS backend used by ndarray and ndarray-linalg.
extern crate blas_src;

pub mod channels;
pub mod circuits;
pub mod ed;
pub mod error;
pub mod linalg;
pub mod projection;
pub mod reps;
pub mod tensor;
pub mod truncation;

pub use channels::{Caps, Evolve, KrausChannel};
pub use circuits::{
    build_brickwall, run_circuit, run_circuit_with, CircuitSpec, GateSource, LayerMetrics, MetricSet,
    Simulable, TrajectoryRecord,
};
pub use ed::{ed_run, fidelity_mixed, DenseTrajectory};
pub use error::{Error, Result};
pub use projection::{
    frobenius_loss, loss_gradient, project, AdamState, ProjectionInit, ProjectionOptions,
    ProjectionReport,
};
pub use reps::{
    supervector_fidelity, supervector_overlap, AnyState, DensityMatrix, Lpdo, MixedState, Mpo,
    NormMode, StateView,
};
pub use tensor::{contract, Tensor};
pub use truncation::{lpdo_compress, mpo_compress};
