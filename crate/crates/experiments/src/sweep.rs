//! Parameter sweeps over `(ε, p, seed)` cells with deterministic output.

use std::path::Path;

use lpdo_core::{
    build_brickwall, ed::ed_run_with, run_circuit, CircuitSpec, LayerMetrics, MetricSet, Mpo,
    TrajectoryRecord,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Aggregate, Rep, SweepConfig};
use crate::detect::{detect_optimal_depth, OptimalDepths};
use crate::error::{ExperimentError, Result};
use crate::fit::{fit_power_law, ScalingFit};

pub const RESULTS_FILE: &str = "results.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const AGGREGATE_FILE: &str = "aggregate.csv";
pub const FIT_FILE: &str = "fit.csv";

/// One recorded depth of one trajectory. Field order is the column order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub n: usize,
    pub epsilon: f64,
    pub p: f64,
    pub seed: u64,
    pub rep: String,
    pub depth: usize,
    pub ee: Option<f64>,
    pub purity: f64,
    pub trace: f64,
    pub fidelity_vs_ed: Option<f64>,
    pub trace_norm: Option<f64>,
    pub chi_max_seen: Option<usize>,
    pub dkappa_max_seen: Option<usize>,
}

/// Optimal depths of one trajectory; absent when never crossed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub n: usize,
    pub epsilon: f64,
    pub p: f64,
    pub seed: u64,
    pub rep: String,
    pub d_fid: Option<usize>,
    pub d_ee: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    DFid,
    DEe,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::DFid => "d_fid",
            Metric::DEe => "d_ee",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "d_fid" => Some(Metric::DFid),
            "d_ee" => Some(Metric::DEe),
            _ => None,
        }
    }

    fn of(self, row: &SummaryRow) -> Option<usize> {
        match self {
            Metric::DFid => row.d_fid,
            Metric::DEe => row.d_ee,
        }
    }
}

/// Seed-aggregated optimal depth of one grid point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub rep: String,
    pub metric: Metric,
    pub epsilon: f64,
    pub p: f64,
    pub value: Option<f64>,
    pub crossed: usize,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitRow {
    pub rep: String,
    pub metric: Metric,
    pub c: f64,
    pub alpha: f64,
    pub residual: f64,
    pub points: usize,
}

impl FitRow {
    pub fn scaling(&self) -> ScalingFit {
        ScalingFit {
            c: self.c,
            alpha: self.alpha,
            residual: self.residual,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepOutput {
    pub rows: Vec<ResultRow>,
    pub summary: Vec<SummaryRow>,
    pub aggregates: Vec<AggregateRow>,
    pub fits: Vec<FitRow>,
}

/// Everything produced by one `(ε, p, seed)` cell.
#[derive(Clone, Debug, Default)]
pub struct CellOutput {
    pub rows: Vec<ResultRow>,
    pub summary: Vec<SummaryRow>,
    pub records: Vec<(Rep, TrajectoryRecord)>,
}

pub fn cell_circuit(cfg: &SweepConfig, epsilon: f64, p: f64, seed: u64) -> Result<CircuitSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(build_brickwall(cfg.n_sites, cfg.depth_max, &cfg.source, epsilon, p, &mut rng)?)
}

/// Runs every requested representation on one seeded circuit.
pub fn run_cell(cfg: &SweepConfig, epsilon: f64, p: f64, seed: u64) -> Result<CellOutput> {
    let circuit = cell_circuit(cfg, epsilon, p, seed)?;
    let metrics = MetricSet {
        entropy: true,
        trace_norm: cfg.trace_norm,
    };
    let (exact, refs): (Option<TrajectoryRecord>, Option<Vec<Mpo>>) = if cfg.needs_dense() {
        let traj = ed_run_with(&circuit, cfg.initial.dense(cfg.n_sites)?, metrics, cfg.reference)?;
        let refs = if cfg.reference { Some(traj.reference_mpos()?) } else { None };
        (Some(traj.record), refs)
    } else {
        (None, None)
    };

    let mut out = CellOutput::default();
    for &rep in &cfg.reps {
        let record = match rep {
            Rep::Ed => exact.clone().expect("dense run requested"),
            Rep::Lpdo => {
                let init = cfg.initial.lpdo(cfg.n_sites)?;
                run_circuit(init, &circuit, &cfg.lpdo_caps(), refs.as_deref(), metrics)?.1
            }
            Rep::Mpo => {
                let init = cfg.initial.lpdo(cfg.n_sites)?.to_mpo();
                run_circuit(init, &circuit, &cfg.mpo_caps(), refs.as_deref(), metrics)?.1
            }
        };
        let depths = match (&exact, rep, cfg.reference) {
            (Some(reference), r, true) if r != Rep::Ed => {
                detect_optimal_depth(&record, reference, &cfg.thresholds)?
            }
            _ => OptimalDepths::default(),
        };
        out.rows.extend(
            record
                .rows
                .iter()
                .map(|m| result_row(cfg.n_sites, epsilon, p, seed, rep, m)),
        );
        out.summary.push(SummaryRow {
            n: cfg.n_sites,
            epsilon,
            p,
            seed,
            rep: rep.name().into(),
            d_fid: depths.d_fid,
            d_ee: depths.d_ee,
        });
        out.records.push((rep, record));
    }
    Ok(out)
}

fn result_row(n: usize, epsilon: f64, p: f64, seed: u64, rep: Rep, m: &LayerMetrics) -> ResultRow {
    ResultRow {
        n,
        epsilon,
        p,
        seed,
        rep: rep.name().into(),
        depth: m.depth,
        ee: m.half_cut_ee,
        purity: m.purity,
        trace: m.trace,
        fidelity_vs_ed: if rep == Rep::Ed { None } else { m.fidelity_vs_reference },
        trace_norm: m.trace_norm,
        chi_max_seen: m.bond_profile.iter().copied().max(),
        dkappa_max_seen: m.kraus_profile.iter().copied().max(),
    }
}

/// Runs the whole grid on `workers` threads. The output does not depend
/// on `workers` or on completion order.
pub fn sweep(cfg: &SweepConfig, workers: usize) -> Result<SweepOutput> {
    cfg.validate()?;
    let cells: Vec<(f64, f64, u64)> = cfg
        .epsilons
        .iter()
        .flat_map(|&e| cfg.p.iter().map(move |&p| (e, p)))
        .flat_map(|(e, p)| (0..cfg.samples as u64).map(move |s| (e, p, cfg.base_seed + s)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| ExperimentError::Pool(e.to_string()))?;
    let outputs: Vec<CellOutput> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(e, p, s)| run_cell(cfg, e, p, s))
            .collect::<Result<_>>()
    })?;

    let mut out = SweepOutput::default();
    for cell in outputs {
        out.rows.extend(cell.rows);
        out.summary.extend(cell.summary);
    }
    out.rows.sort_by(|a, b| {
        a.epsilon
            .total_cmp(&b.epsilon)
            .then(a.p.total_cmp(&b.p))
            .then(a.seed.cmp(&b.seed))
            .then(a.rep.cmp(&b.rep))
            .then(a.depth.cmp(&b.depth))
    });
    sort_summary(&mut out.summary);
    out.aggregates = aggregate(&out.summary, cfg.aggregate);
    out.fits = fit_aggregates(&out.aggregates);
    Ok(out)
}

fn sort_summary(rows: &mut [SummaryRow]) {
    rows.sort_by(|a, b| {
        a.rep
            .cmp(&b.rep)
            .then(a.epsilon.total_cmp(&b.epsilon))
            .then(a.p.total_cmp(&b.p))
            .then(a.seed.cmp(&b.seed))
    });
}

/// Per `(rep, ε, p)` aggregate of both metrics. For the median a trajectory
/// that never crossed counts as infinitely deep, so the value is absent when
/// at most half of the samples crossed. The mean uses crossed samples only.
pub fn aggregate(summary: &[SummaryRow], how: Aggregate) -> Vec<AggregateRow> {
    let mut sorted = summary.to_vec();
    sort_summary(&mut sorted);
    let mut out = Vec::new();
    for group in sorted.chunk_by(|a, b| a.rep == b.rep && a.epsilon == b.epsilon && a.p == b.p) {
        if group[0].rep == Rep::Ed.name() {
            continue;
        }
        for metric in [Metric::DFid, Metric::DEe] {
            let crossed: Vec<f64> = group.iter().filter_map(|r| metric.of(r)).map(|d| d as f64).collect();
            let value = match how {
                Aggregate::Mean => how.apply(&crossed),
                Aggregate::Median => {
                    let mut all = crossed.clone();
                    all.resize(group.len(), f64::INFINITY);
                    how.apply(&all).filter(|v| v.is_finite())
                }
            };
            out.push(AggregateRow {
                rep: group[0].rep.clone(),
                metric,
                epsilon: group[0].epsilon,
                p: group[0].p,
                value,
                crossed: crossed.len(),
                samples: group.len(),
            });
        }
    }
    out
}

/// Power-law fits of aggregated depth against the effective rate `p·ε`.
/// Groups with fewer than two usable points are skipped.
pub fn fit_aggregates(aggregates: &[AggregateRow]) -> Vec<FitRow> {
    let mut keys: Vec<(String, Metric)> = aggregates.iter().map(|a| (a.rep.clone(), a.metric)).collect();
    keys.sort_by(|a, b| a.0.cmp(&b.0).then((a.1 as u8).cmp(&(b.1 as u8))));
    keys.dedup();
    keys.into_iter()
        .filter_map(|(rep, metric)| {
            let points: Vec<(f64, f64)> = aggregates
                .iter()
                .filter(|a| a.rep == rep && a.metric == metric && a.p * a.epsilon > 0.0)
                .filter_map(|a| a.value.map(|v| (a.p * a.epsilon, v)))
                .collect();
            let fit = fit_power_law(&points).ok()?;
            Some(FitRow {
                rep,
                metric,
                c: fit.c,
                alpha: fit.alpha,
                residual: fit.residual,
                points: points.len(),
            })
        })
        .collect()
}

/// Fit straight from a summary table, as the `fit` subcommand does.
pub fn fit_summary(summary: &[SummaryRow], metric: Metric, how: Aggregate) -> Vec<FitRow> {
    let aggs: Vec<AggregateRow> = aggregate(summary, how)
        .into_iter()
        .filter(|a| a.metric == metric)
        .collect();
    fit_aggregates(&aggs)
}

pub fn write_table<T: Serialize>(path: impl AsRef<Path>, rows: &[T]) -> Result<()> {
    write_table_to(std::fs::File::create(path)?, rows)
}

pub fn write_table_to<W: std::io::Write, T: Serialize>(sink: W, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_table<T: for<'de> Deserialize<'de>>(path: impl AsRef<Path>) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// Writes the four tables into `dir`, creating it if needed.
pub fn write_outputs(out: &SweepOutput, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    write_table(dir.join(RESULTS_FILE), &out.rows)?;
    write_table(dir.join(SUMMARY_FILE), &out.summary)?;
    write_table(dir.join(AGGREGATE_FILE), &out.aggregates)?;
    write_table(dir.join(FIT_FILE), &out.fits)?;
    Ok(())
}
