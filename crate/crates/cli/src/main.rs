use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use lpdo_core::ed::ed_run_with;
use lpdo_core::reps::{read_archive, write_archive};
use lpdo_core::{
    build_brickwall, lpdo_compress, mpo_compress, project, run_circuit, supervector_fidelity, AnyState, Caps,
    CircuitSpec, GateSource, MetricSet, MixedState, ProjectionInit, ProjectionOptions, TrajectoryRecord,
};
use lpdo_experiments::config::{Aggregate, InitialState, Rep};
use lpdo_experiments::sweep::{read_table, write_table, write_table_to, FIT_FILE, RESULTS_FILE, SUMMARY_FILE};
use lpdo_experiments::{fit_summary, sweep, write_outputs, Metric, ResultRow, SummaryRow, SweepConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(name = "lpdo", version, about = "Noisy-circuit simulation with LPDO and MPO tensor networks")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one brick-wall circuit and write its per-layer metrics.
    Simulate(SimulateArgs),
    /// Compress an archived LPDO or MPO.
    Truncate(TruncateArgs),
    /// Variationally fit an LPDO to an archived state.
    Project(ProjectArgs),
    /// Run a parameter sweep from a TOML config.
    Sweep(SweepArgs),
    /// Power-law fit of optimal depths from a summary table.
    Fit(FitArgs),
    /// Entanglement entropy, purity and trace of an archived state.
    Ee(EeArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SourceArg {
    Haar,
    Ising,
    Heisenberg,
}

#[derive(Clone, Copy, ValueEnum)]
enum RepArg {
    Lpdo,
    Mpo,
    Ed,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReferenceArg {
    Ed,
}

#[derive(Clone, Copy, ValueEnum)]
enum InitialArg {
    Zeros,
    Neel,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value_t = 8)]
    n: usize,
    #[arg(long, default_value_t = 20)]
    depth: usize,
    #[arg(long, value_enum, default_value = "haar")]
    source: SourceArg,
    #[arg(long, default_value_t = 0.1)]
    dt: f64,
    #[arg(long, default_value_t = 1.0)]
    g: f64,
    #[arg(long, default_value_t = 0.01)]
    epsilon: f64,
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    #[arg(long, value_enum, default_value = "lpdo")]
    rep: RepArg,
    #[arg(long)]
    chi_max: Option<usize>,
    #[arg(long)]
    dkappa_max: Option<usize>,
    #[arg(long)]
    d_max: Option<usize>,
    #[arg(long, default_value_t = 1e-12)]
    cutoff: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Record fidelities against exact dense evolution.
    #[arg(long, value_enum)]
    reference: Option<ReferenceArg>,
    #[arg(long, value_enum, default_value = "zeros")]
    initial: InitialArg,
    /// Also record the trace norm (dense, N ≤ 12).
    #[arg(long)]
    trace_norm: bool,
    /// Run this circuit file instead of generating one.
    #[arg(long)]
    circuit: Option<PathBuf>,
    /// Save the generated circuit.
    #[arg(long)]
    save_circuit: Option<PathBuf>,
    /// Archive of the final state.
    #[arg(long)]
    state_out: Option<PathBuf>,
    /// Result table; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TruncateArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    chi_max: Option<usize>,
    #[arg(long)]
    dkappa_max: Option<usize>,
    #[arg(long)]
    d_max: Option<usize>,
    #[arg(long, default_value_t = 1e-12)]
    cutoff: f64,
}

#[derive(Args)]
struct ProjectArgs {
    #[arg(long)]
    target: PathBuf,
    #[arg(long)]
    chi: usize,
    #[arg(long)]
    dkappa: usize,
    #[arg(long, default_value_t = 2000)]
    iters: usize,
    #[arg(long, default_value_t = 0.01)]
    eta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `random`, `truncate`, or the path of an LPDO archive to start from.
    #[arg(long, default_value = "truncate")]
    init: String,
    #[arg(long)]
    out: PathBuf,
    /// JSON report; stdout when absent.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Args)]
struct FitArgs {
    /// A summary table written by `sweep`.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value = "d_fid")]
    metric: String,
    #[arg(long, default_value = "median")]
    aggregate: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EeArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Cut after this many sites; the half cut when absent.
    #[arg(long)]
    cut: Option<usize>,
    /// Print every cut.
    #[arg(long)]
    all: bool,
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Command::Simulate(a) => simulate(a),
        Command::Truncate(a) => truncate(a),
        Command::Project(a) => project_cmd(a),
        Command::Sweep(a) => sweep_cmd(a),
        Command::Fit(a) => fit_cmd(a),
        Command::Ee(a) => ee(a),
    }
}

fn cap(v: Option<usize>) -> usize {
    v.unwrap_or(usize::MAX)
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let circuit = match &a.circuit {
        Some(path) => CircuitSpec::load(path).with_context(|| format!("reading {}", path.display()))?,
        None => {
            let source = match a.source {
                SourceArg::Haar => GateSource::Haar,
                SourceArg::Ising => GateSource::Ising { dt: a.dt, g: a.g },
                SourceArg::Heisenberg => GateSource::Heisenberg { dt: a.dt },
            };
            let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
            build_brickwall(a.n, a.depth, &source, a.epsilon, a.p, &mut rng)?
        }
    };
    if let Some(path) = &a.save_circuit {
        circuit.save(path)?;
    }
    let n = circuit.n_sites();
    let initial = match a.initial {
        InitialArg::Zeros => InitialState::Zeros,
        InitialArg::Neel => InitialState::Neel,
    };
    let metrics = MetricSet {
        entropy: true,
        trace_norm: a.trace_norm,
    };
    let caps = Caps {
        chi_max: cap(a.chi_max),
        dkappa_max: cap(a.dkappa_max),
        d_max: cap(a.d_max),
        cutoff: a.cutoff,
    };
    let want_ref = a.reference.is_some();
    let exact = if want_ref || matches!(a.rep, RepArg::Ed) {
        Some(ed_run_with(&circuit, initial.dense(n)?, metrics, want_ref || a.state_out.is_some())?)
    } else {
        None
    };
    let refs = match (&exact, want_ref) {
        (Some(t), true) => Some(t.reference_mpos()?),
        _ => None,
    };
    let (rep, record, final_state): (Rep, TrajectoryRecord, AnyState) = match a.rep {
        RepArg::Lpdo => {
            let (s, r) = run_circuit(initial.lpdo(n)?, &circuit, &caps, refs.as_deref(), metrics)?;
            (Rep::Lpdo, r, AnyState::Lpdo(s))
        }
        RepArg::Mpo => {
            let (s, r) = run_circuit(initial.lpdo(n)?.to_mpo(), &circuit, &caps, refs.as_deref(), metrics)?;
            (Rep::Mpo, r, AnyState::Mpo(s))
        }
        RepArg::Ed => {
            let t = exact.clone().expect("dense run");
            let last = t.snapshots.last().cloned();
            let state = match last {
                Some(rho) => AnyState::Dense(rho),
                None => AnyState::Dense(initial.dense(n)?),
            };
            (Rep::Ed, t.record, state)
        }
    };
    if let Some(path) = &a.state_out {
        write_archive(path, &final_state)?;
    }
    let rows: Vec<ResultRow> = record
        .rows
        .iter()
        .map(|m| ResultRow {
            n,
            epsilon: a.epsilon,
            p: a.p,
            seed: a.seed,
            rep: rep.name().into(),
            depth: m.depth,
            ee: m.half_cut_ee,
            purity: m.purity,
            trace: m.trace,
            fidelity_vs_ed: if rep == Rep::Ed { None } else { m.fidelity_vs_reference },
            trace_norm: m.trace_norm,
            chi_max_seen: m.bond_profile.iter().copied().max(),
            dkappa_max_seen: m.kraus_profile.iter().copied().max(),
        })
        .collect();
    match &a.out {
        Some(path) => write_table(path, &rows)?,
        None => write_table_to(std::io::stdout().lock(), &rows)?,
    }
    Ok(())
}

fn truncate(a: TruncateArgs) -> Result<()> {
    let input = read_archive(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let (out, discarded) = match &input {
        AnyState::Lpdo(l) => {
            let (c, w) = lpdo_compress(l, cap(a.chi_max), cap(a.dkappa_max), a.cutoff)?;
            (AnyState::Lpdo(c), w)
        }
        AnyState::Mpo(m) => {
            let (c, w) = mpo_compress(m, cap(a.d_max), a.cutoff)?;
            (AnyState::Mpo(c), w)
        }
        AnyState::Dense(_) => bail!("dense archives cannot be truncated"),
    };
    write_archive(&a.out, &out)?;
    println!("fidelity {:.12}", supervector_fidelity(&input, &out)?);
    println!("discarded {discarded:.6e}");
    println!("bonds {:?}", bonds(&out));
    Ok(())
}

fn bonds(s: &AnyState) -> Vec<usize> {
    match s {
        AnyState::Lpdo(l) => l.bond_dims(),
        AnyState::Mpo(m) => m.bond_dims(),
        AnyState::Dense(_) => Vec::new(),
    }
}

fn project_cmd(a: ProjectArgs) -> Result<()> {
    let target = read_archive(&a.target).with_context(|| format!("reading {}", a.target.display()))?;
    let init = match a.init.as_str() {
        "random" => ProjectionInit::Random,
        "truncate" => ProjectionInit::TruncateTarget,
        path => match read_archive(path).with_context(|| format!("reading initial state {path}"))? {
            AnyState::Lpdo(l) => ProjectionInit::From(l),
            _ => bail!("--init archive must hold an LPDO"),
        },
    };
    let opts = ProjectionOptions {
        max_iters: a.iters,
        learning_rate: a.eta,
        seed: a.seed,
        init,
        ..Default::default()
    };
    let (fitted, report) = project(&target, a.chi, a.dkappa, &opts)?;
    write_archive(&a.out, &fitted)?;
    let json = serde_json::json!({
        "chi": a.chi,
        "dkappa": a.dkappa,
        "iterations": report.iterations,
        "converged": report.converged,
        "initial_loss": report.initial_loss(),
        "best_loss": report.best_loss,
        "fidelity": report.fidelity,
        "uhlmann_fidelity": report.uhlmann,
        "loss_trace": report.loss_trace,
    });
    let text = serde_json::to_string_pretty(&json)?;
    match &a.report {
        Some(path) => std::fs::write(path, text + "\n")?,
        None => println!("{text}"),
    }
    Ok(())
}

fn sweep_cmd(a: SweepArgs) -> Result<()> {
    let cfg = SweepConfig::load(&a.config).with_context(|| format!("reading {}", a.config.display()))?;
    let out = sweep(&cfg, a.workers)?;
    write_outputs(&out, &a.out)?;
    println!(
        "{} rows -> {}, {} summaries -> {}",
        out.rows.len(),
        a.out.join(RESULTS_FILE).display(),
        out.summary.len(),
        a.out.join(SUMMARY_FILE).display()
    );
    for f in &out.fits {
        println!("{} {}: c = {:.4}, alpha = {:.4}, residual = {:.4}", f.rep, f.metric.name(), f.c, f.alpha, f.residual);
    }
    if out.fits.is_empty() {
        println!("no fit ({} has no rows)", a.out.join(FIT_FILE).display());
    }
    Ok(())
}

fn fit_cmd(a: FitArgs) -> Result<()> {
    let Some(metric) = Metric::parse(&a.metric) else {
        bail!("--metric must be d_fid or d_ee, got {}", a.metric);
    };
    let how = match a.aggregate.as_str() {
        "median" => Aggregate::Median,
        "mean" => Aggregate::Mean,
        other => bail!("--aggregate must be median or mean, got {other}"),
    };
    let rows: Vec<SummaryRow> = read_table(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let fits = fit_summary(&rows, metric, how);
    if fits.is_empty() {
        bail!("fewer than two usable (epsilon, depth) points");
    }
    println!("rep,metric,c,alpha,residual,points");
    for f in &fits {
        println!("{},{},{},{},{},{}", f.rep, f.metric.name(), f.c, f.alpha, f.residual, f.points);
    }
    if let Some(path) = &a.out {
        write_table(path, &fits)?;
    }
    Ok(())
}

fn ee(a: EeArgs) -> Result<()> {
    let state = read_archive(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let n = state.n_sites();
    println!("n_sites {n}");
    println!("trace {:.12}", state.trace().re);
    println!("purity {:.12}", state.purity());
    if a.all {
        for cut in 1..n {
            println!("ee[{cut}] {:.12}", state.entanglement_entropy(cut)?);
        }
    } else {
        let value = match a.cut {
            Some(cut) => state.entanglement_entropy(cut)?,
            None => state.half_cut_entropy()?,
        };
        println!("ee {value:.12}");
    }
    Ok(())
}
