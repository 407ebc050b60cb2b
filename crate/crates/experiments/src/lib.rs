//! Sweeps, optimal-depth detection and scaling fits on top of `lpdo-core`.

pub mod bound;
pub mod config;
pub mod detect;
pub mod error;
pub mod fit;
pub mod sweep;

pub use bound::{area_law_bound, BoundParams};
pub use config::{Aggregate, InitialState, Rep, SweepConfig};
pub use detect::{detect_optimal_depth, OptimalDepths, Thresholds};
pub use error::{ExperimentError, Result};
pub use fit::{fit_power_law, ScalingFit};
pub use sweep::{
    fit_summary, run_cell, sweep, write_outputs, AggregateRow, CellOutput, FitRow, Metric, ResultRow,
    SummaryRow, SweepOutput,
};
