//! Sweep configuration, read from TOML.

use std::path::Path;

use lpdo_core::ed::ED_MAX_SITES;
use lpdo_core::{Caps, DensityMatrix, GateSource, Lpdo, MixedState};
use serde::{Deserialize, Serialize};

use crate::detect::Thresholds;
use crate::error::{ExperimentError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rep {
    Lpdo,
    Mpo,
    Ed,
}

impl Rep {
    pub fn name(self) -> &'static str {
        match self {
            Rep::Lpdo => "lpdo",
            Rep::Mpo => "mpo",
            Rep::Ed => "ed",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "lpdo" => Some(Rep::Lpdo),
            "mpo" => Some(Rep::Mpo),
            "ed" => Some(Rep::Ed),
            _ => None,
        }
    }
}

/// Product state every trajectory starts from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialState {
    #[default]
    Zeros,
    /// Alternating `|0101…⟩`; the all-zero state is an eigenstate of the
    /// Heisenberg gate.
    Neel,
}

impl InitialState {
    pub fn bits(self, n: usize) -> Vec<usize> {
        match self {
            InitialState::Zeros => vec![0; n],
            InitialState::Neel => (0..n).map(|j| j % 2).collect(),
        }
    }

    pub fn lpdo(self, n: usize) -> Result<Lpdo> {
        Ok(Lpdo::basis_state(&self.bits(n), 2)?)
    }

    pub fn dense(self, n: usize) -> Result<DensityMatrix> {
        Ok(self.lpdo(n)?.to_dense()?)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregate {
    #[default]
    Median,
    Mean,
}

impl Aggregate {
    /// `None` for an empty sample.
    pub fn apply(self, values: &[f64]) -> Option<f64> {
        if values.is_empty() {
            return None;
        }
        match self {
            Aggregate::Mean => Some(values.iter().sum::<f64>() / values.len() as f64),
            Aggregate::Median => {
                let mut v = values.to_vec();
                v.sort_by(f64::total_cmp);
                let m = v.len() / 2;
                Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub n_sites: usize,
    pub epsilons: Vec<f64>,
    /// Gate-keeping probabilities; every `(ε, p)` pair is a grid point.
    pub p: Vec<f64>,
    pub chi: usize,
    pub dkappa: usize,
    pub d_max: usize,
    pub depth_max: usize,
    pub samples: usize,
    /// Sample `s` uses seed `base_seed + s`.
    pub base_seed: u64,
    pub source: GateSource,
    pub reps: Vec<Rep>,
    /// Run the dense reference (needed for fidelities and detection).
    pub reference: bool,
    pub cutoff: f64,
    pub initial: InitialState,
    pub trace_norm: bool,
    pub thresholds: Thresholds,
    pub aggregate: Aggregate,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            n_sites: 8,
            epsilons: vec![0.01, 0.015, 0.02, 0.03],
            p: vec![1.0],
            chi: 16,
            dkappa: 2,
            d_max: 64,
            depth_max: 40,
            samples: 10,
            base_seed: 0,
            source: GateSource::Haar,
            reps: vec![Rep::Lpdo],
            reference: true,
            cutoff: 1e-12,
            initial: InitialState::Zeros,
            trace_norm: false,
            thresholds: Thresholds::default(),
            aggregate: Aggregate::Median,
        }
    }
}

impl SweepConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(ExperimentError::Config(m));
        if self.n_sites < 2 {
            return bad(format!("n_sites = {} must be at least 2", self.n_sites));
        }
        if self.epsilons.is_empty() || self.p.is_empty() || self.reps.is_empty() {
            return bad("epsilons, p and reps must be non-empty".into());
        }
        if let Some(e) = self.epsilons.iter().find(|e| !(0.0..=1.0).contains(*e)) {
            return bad(format!("epsilon {e} outside [0, 1]"));
        }
        if let Some(p) = self.p.iter().find(|p| !(**p > 0.0 && **p <= 1.0)) {
            return bad(format!("p {p} outside (0, 1]"));
        }
        if self.chi == 0 || self.dkappa == 0 || self.d_max == 0 {
            return bad("chi, dkappa and d_max must be positive".into());
        }
        if self.depth_max == 0 || self.samples == 0 {
            return bad("depth_max and samples must be positive".into());
        }
        if !(self.cutoff >= 0.0 && self.cutoff < 1.0) {
            return bad(format!("cutoff {} outside [0, 1)", self.cutoff));
        }
        self.thresholds.validate()?;
        if self.needs_dense() && self.n_sites > ED_MAX_SITES {
            return Err(ExperimentError::ReferenceTooLarge {
                n_sites: self.n_sites,
                cap: ED_MAX_SITES,
            });
        }
        Ok(())
    }

    pub fn needs_dense(&self) -> bool {
        self.reference || self.reps.contains(&Rep::Ed)
    }

    pub fn lpdo_caps(&self) -> Caps {
        Caps {
            chi_max: self.chi,
            dkappa_max: self.dkappa,
            d_max: usize::MAX,
            cutoff: self.cutoff,
        }
    }

    pub fn mpo_caps(&self) -> Caps {
        Caps {
            chi_max: usize::MAX,
            dkappa_max: usize::MAX,
            d_max: self.d_max,
            cutoff: self.cutoff,
        }
    }
}
