//! Optimal depth: where a simulation stops tracking the exact trajectory.

use lpdo_core::TrajectoryRecord;
use serde::{Deserialize, Serialize};

use crate::error::{ExperimentError, Result};

/// Reference entropies below this are skipped by the relative EE test.
pub const EE_FLOOR: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    pub fidelity_star: f64,
    pub ee_deviation: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            fidelity_star: 0.95,
            ee_deviation: 0.03,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("fidelity_star", self.fidelity_star), ("ee_deviation", self.ee_deviation)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(ExperimentError::Config(format!("{name} = {v} must lie in (0, 1)")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OptimalDepths {
    pub d_fid: Option<usize>,
    pub d_ee: Option<usize>,
}

/// First depth whose recorded fidelity falls below `fidelity_star`, and
/// first depth whose EE differs from the reference by more than
/// `ee_deviation` relative. Missing metrics never trigger a crossing.
pub fn detect_optimal_depth(
    test: &TrajectoryRecord,
    reference: &TrajectoryRecord,
    thresholds: &Thresholds,
) -> Result<OptimalDepths> {
    if test.rows.len() != reference.rows.len()
        || test.rows.iter().zip(&reference.rows).any(|(a, b)| a.depth != b.depth)
    {
        return Err(ExperimentError::GridMismatch(test.rows.len(), reference.rows.len()));
    }
    let d_fid = test
        .rows
        .iter()
        .find(|r| r.fidelity_vs_reference.is_some_and(|f| f < thresholds.fidelity_star))
        .map(|r| r.depth);
    let d_ee = test
        .rows
        .iter()
        .zip(&reference.rows)
        .find(|(t, r)| match (t.half_cut_ee, r.half_cut_ee) {
            (Some(x), Some(y)) if y >= EE_FLOOR => ((y - x) / y).abs() > thresholds.ee_deviation,
            _ => false,
        })
        .map(|(t, _)| t.depth);
    Ok(OptimalDepths { d_fid, d_ee })
}
