//! Area-law bound on supervector entanglement growth.

use serde::{Deserialize, Serialize};

/// Capacities entering the bound; `c1`, `c2` are usually `a·ε` and `b·ε`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    /// Entangling capacity of one gate (ln 2 for CNOT).
    pub c_u: f64,
    /// Single-qubit noise capacity.
    pub c1: f64,
    /// Two-qubit noise capacity.
    pub c2: f64,
    /// Cut length.
    pub l: f64,
}

impl BoundParams {
    /// Noise capacities proportional to the error rate.
    pub fn from_rates(c_u: f64, a: f64, b: f64, epsilon: f64, l: f64) -> Self {
        Self {
            c_u,
            c1: a * epsilon,
            c2: b * epsilon,
            l,
        }
    }

    pub fn is_valid(&self) -> bool {
        [self.c_u, self.c1, self.c2, self.l]
            .iter()
            .all(|v| v.is_finite() && *v >= 0.0)
    }
}

/// `(depth/2)·(2 C_U + L·C1 + (L+1)·C2)`.
pub fn area_law_bound(depth: usize, p: &BoundParams) -> f64 {
    depth as f64 / 2.0 * (2.0 * p.c_u + p.l * p.c1 + (p.l + 1.0) * p.c2)
}
