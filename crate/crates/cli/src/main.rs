use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use spectral_edge::experiment::{self, run_edge_experiment, ExperimentConfig, ExperimentError};
use spectral_edge::graph::{self, degree_benchmark, GraphConfig, GraphError, SparseGraph, Vertex};
use spectral_edge::local::{self, check_omega_with, classify_regimes, extract_ball, RegimePartition};
use spectral_edge::pointproc::{self, Origin, PointProcessSample};
use spectral_edge::probdist;
use spectral_edge::prune::{self, PruneError};
use spectral_edge::sparse_eigen::{self, LanczosOptions};
use spectral_edge::tree_eig;

/// Spectral-edge experiments on sparse Erdős–Rényi graphs.
///
/// Exit codes: 0 success, 2 invalid input or configuration, 3 a checked
/// postcondition failed, 1 anything else.
#[derive(Parser)]
#[command(name = "spectral-edge", version = env!("CARGO_PKG_VERSION"))]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample G(N, d/N) and write it as binary (default) or edge list.
    Generate(GenerateArgs),
    /// Degree benchmark, regimes, Ω conditions and per-vertex local statistics.
    Stats(StatsArgs),
    /// Top eigenpair of one ball with estimators and decay profile.
    BallEig(BallEigArgs),
    /// Extreme eigenpairs of the whole graph.
    Spectrum(SpectrumArgs),
    /// Prune edges so radius-3 balls around rough vertices are disjoint trees.
    Prune(PruneArgs),
    /// Evaluate the probability bounds.
    Bounds(BoundsArgs),
    /// Intensity ρ, κ, a Ψ sample and, given a spectrum, Φ and their distance.
    Pointprocess(PointProcessArgs),
    /// Full ensemble experiment writing CSV tables and report.json.
    Report(ReportArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long = "n", short = 'n')]
    n_vertices: usize,
    #[arg(long = "d", short = 'd', default_value_t = 1.0)]
    expected_degree: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Ensemble member; selects an independent random stream.
    #[arg(long, default_value_t = 0)]
    replicate: u64,
    /// Output path; `.txt`/`.edges` files get an edge list.
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct GraphArg {
    /// Graph file, binary or edge list (detected from content).
    #[arg(long, short)]
    graph: PathBuf,
    /// Expected degree the graph was sampled with.
    #[arg(long = "d", short = 'd', default_value_t = 1.0)]
    expected_degree: f64,
}

#[derive(Args)]
struct StatsArgs {
    #[command(flatten)]
    input: GraphArg,
    #[arg(long, default_value_t = 5)]
    radius: usize,
    /// Vertices to describe (comma separated); defaults to the fine regime.
    #[arg(long, value_delimiter = ',')]
    vertices: Vec<Vertex>,
    /// Local statistics CSV; the summary JSON goes to stdout.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long, default_value_t = local::OMEGA_ENVELOPE_CONSTANT)]
    omega_constant: f64,
}

#[derive(Args)]
struct BallEigArgs {
    #[command(flatten)]
    input: GraphArg,
    #[arg(long)]
    vertex: Vertex,
    #[arg(long, default_value_t = 5)]
    radius: usize,
}

#[derive(Args)]
struct SpectrumArgs {
    #[command(flatten)]
    input: GraphArg,
    #[arg(long, short, default_value_t = 20)]
    k: usize,
    /// Most negative eigenvalues instead of the largest.
    #[arg(long)]
    bottom: bool,
    #[arg(long)]
    vectors: bool,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Match eigenvectors to fine-regime balls of this radius.
    #[arg(long)]
    match_radius: Option<usize>,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PruneArgs {
    #[command(flatten)]
    input: GraphArg,
    #[arg(long, default_value_t = 2)]
    c1: usize,
    #[arg(long, default_value_t = 5)]
    c2: usize,
    /// Removed edges as an edge list.
    #[arg(long)]
    removed: Option<PathBuf>,
    /// The pruned graph.
    #[arg(long)]
    pruned: Option<PathBuf>,
}

#[derive(Args)]
struct BoundsArgs {
    #[command(subcommand)]
    which: BoundsCmd,
}

#[derive(Subcommand)]
enum BoundsCmd {
    /// Sharp bounds on P(Pois(λ) ≥ λ(1+δ)).
    Poisson {
        #[arg(long)]
        lambda: f64,
        #[arg(long, conflicts_with = "threshold", required_unless_present = "threshold")]
        delta: Option<f64>,
        #[arg(long)]
        threshold: Option<u64>,
    },
    /// Binomial pmf against the Poisson pmf at k.
    Binomial {
        #[arg(long = "n", short = 'n')]
        n: u64,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        k: u64,
    },
    /// Chernoff bound on P(Binom(n,p) ≥ τ) next to the exact tail.
    HeavyTail {
        #[arg(long = "n", short = 'n')]
        n: u64,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        tau: f64,
    },
    /// Recompute the sharp-tail lower constant.
    Calibrate,
}

#[derive(Args)]
struct PointProcessArgs {
    #[arg(long = "n", short = 'n')]
    n_vertices: usize,
    #[arg(long = "d", short = 'd', default_value_t = 1.0)]
    expected_degree: f64,
    /// Spectrum JSON from `spectrum`, for Φ.
    #[arg(long)]
    spectrum: Option<PathBuf>,
    /// K for κ; defaults to exp(log^{1/8} N).
    #[arg(long)]
    kappa_k: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    replicate: u64,
    /// Number of top order statistics for the window.
    #[arg(long, default_value_t = 3)]
    top: u64,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Flat `key = value` config file.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Extra `key=value` overrides, applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long = "n", short = 'n')]
    n_vertices: Option<usize>,
    #[arg(long = "d", short = 'd')]
    expected_degree: Option<f64>,
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long)]
    base_seed: Option<u64>,
    #[arg(long)]
    radius: Option<usize>,
    #[arg(long)]
    top_k: Option<usize>,
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Print the effective configuration and exit.
    #[arg(long)]
    dry_run: bool,
}

/// Bad input or configuration (exit 2).
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct Invalid(String);

/// A checked postcondition failed (exit 3).
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct Violated(String);

fn invalid(e: impl std::fmt::Display) -> anyhow::Error {
    Invalid(e.to_string()).into()
}

fn graph_err(e: GraphError) -> anyhow::Error {
    match e {
        GraphError::Io(_) => anyhow::Error::new(e),
        other => invalid(other),
    }
}

fn experiment_err(e: ExperimentError) -> anyhow::Error {
    match e {
        ExperimentError::Config(_) | ExperimentError::Regime(_) => invalid(e),
        ExperimentError::Graph(g) => graph_err(g),
        other => anyhow::Error::new(other),
    }
}

fn read_graph(path: &Path) -> Result<SparseGraph> {
    let mut r = BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?);
    let binary = r.fill_buf()?.starts_with(b"SPEG");
    let g = if binary { graph::read_binary(r) } else { graph::read_edge_list(r) };
    g.map_err(graph_err).with_context(|| format!("reading {}", path.display()))
}

fn writer(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(std::io::stdout())),
    })
}

fn emit(value: &Value, path: Option<&Path>) -> Result<()> {
    let mut w = writer(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn regimes(g: &SparseGraph, d: f64) -> Result<RegimePartition> {
    let bench = degree_benchmark(g.n_vertices(), d).map_err(graph_err)?;
    classify_regimes(g, bench.u_star).map_err(invalid)
}

fn generate(a: GenerateArgs) -> Result<()> {
    let cfg = GraphConfig::new(a.n_vertices, a.expected_degree, a.seed);
    let g = graph::sample_er_replicate(&cfg, a.replicate).map_err(graph_err)?;
    let mut w = writer(Some(&a.out))?;
    let text = matches!(a.out.extension().and_then(|e| e.to_str()), Some("txt" | "edges"));
    if text {
        graph::write_edge_list(&g, &mut w)
    } else {
        graph::write_binary(&g, &mut w)
    }
    .map_err(graph_err)?;
    w.flush()?;
    eprintln!("{} vertices, {} edges, max degree {}", g.n_vertices(), g.edge_count(), g.max_degree());
    Ok(())
}

fn stats(a: StatsArgs) -> Result<()> {
    if a.radius == 0 {
        return Err(invalid("radius must be at least 1"));
    }
    let g = read_graph(&a.input.graph)?;
    let d = a.input.expected_degree;
    let bench = degree_benchmark(g.n_vertices(), d).map_err(graph_err)?;
    let part = classify_regimes(&g, bench.u_star).map_err(invalid)?;
    let omega = check_omega_with(&g, &part, a.radius, d, a.omega_constant);
    let vertices = if a.vertices.is_empty() { part.fine.clone() } else { a.vertices.clone() };
    if let Some(&v) = vertices.iter().find(|&&v| v as usize >= g.n_vertices()) {
        return Err(invalid(format!("vertex {v} out of range")));
    }
    if let Some(path) = &a.csv {
        let rows = local::batch_stats(&g, &vertices, a.radius);
        local::write_stats_csv(&rows, a.radius, writer(Some(path))?)?;
    }
    emit(
        &json!({
            "n_vertices": g.n_vertices(),
            "edges": g.edge_count(),
            "max_degree": g.max_degree(),
            "degree_benchmark": bench,
            "thresholds": part.thresholds,
            "fine": part.fine.len(),
            "intermediate": part.intermediate.len(),
            "rough": part.rough.len(),
            "omega": omega,
        }),
        None,
    )
}

fn ball_eig(a: BallEigArgs) -> Result<()> {
    let g = read_graph(&a.input.graph)?;
    if a.vertex as usize >= g.n_vertices() {
        return Err(invalid(format!("vertex {} out of range", a.vertex)));
    }
    let d = a.input.expected_degree;
    let ball = extract_ball(&g, a.vertex, a.radius);
    let pair = sparse_eigen::ball_top_pair(&g, &ball);
    let st = local::local_stats(&ball);
    let u = degree_benchmark(g.n_vertices(), d).map_err(graph_err)?.u_star;
    emit(
        &json!({
            "vertex": a.vertex,
            "radius": a.radius,
            "ball_size": ball.len(),
            "is_tree": ball.is_tree(),
            "lambda": pair.lambda,
            "residual": pair.residual,
            "iterations": pair.iterations,
            "truncation_residual": tree_eig::truncation_residual(&g, &ball, &pair),
            "truncation_envelope": tree_eig::truncation_envelope(d, u, a.radius),
            "stats": st,
            "estimates": tree_eig::estimator_table(&st, d, pair.lambda).estimates,
            "decay": tree_eig::decay_profile(&pair, &ball, d),
        }),
        None,
    )
}

fn spectrum(a: SpectrumArgs) -> Result<()> {
    let g = read_graph(&a.input.graph)?;
    let opts = LanczosOptions { tol: a.tol, seed: a.seed, ..Default::default() };
    let res = if a.bottom {
        sparse_eigen::bottom_k::<f64>(&g, a.k, &opts)
    } else {
        sparse_eigen::top_k::<f64>(&g, a.k, &opts)
    }
    .map_err(invalid)?;
    let matches = match a.match_radius {
        Some(r) => {
            let part = regimes(&g, a.input.expected_degree)?;
            let balls = sparse_eigen::fine_balls(&g, &part, r);
            Some(sparse_eigen::match_eigenpairs(&res, &balls, a.input.expected_degree))
        }
        None => None,
    };
    let mut w = writer(a.out.as_deref())?;
    sparse_eigen::write_spectral_json(&res, matches.as_deref(), a.vectors, &mut w)?;
    writeln!(w)?;
    w.flush()?;
    if res.converged.iter().any(|c| !c) {
        return Err(Violated("some eigenpairs did not converge".into()).into());
    }
    Ok(())
}

fn prune_cmd(a: PruneArgs) -> Result<()> {
    let g = read_graph(&a.input.graph)?;
    let part = regimes(&g, a.input.expected_degree)?;
    let pg = prune::prune(&g, &part.rough, a.c1, a.c2).map_err(|e| match e {
        PruneError::InvalidConstants { .. } => invalid(e),
        other => Violated(other.to_string()).into(),
    })?;
    if let Some(p) = &a.removed {
        pg.write_removed_edges(writer(Some(p))?).map_err(graph_err)?;
    }
    if let Some(p) = &a.pruned {
        let mut w = writer(Some(p))?;
        graph::write_binary(&pg.graph, &mut w).map_err(graph_err)?;
        w.flush()?;
    }
    let idempotent = prune::prune(&pg.graph, &part.rough, a.c1, a.c2).is_ok_and(|again| again.removed_edges.is_empty());
    emit(
        &json!({
            "rough": pg.rough.len(),
            "removed_edges": pg.removed_edges.len(),
            "removed_max_degree": pg.removed_max_degree,
            "removal_bound": pg.removal_bound(),
            "within_bound": pg.within_removal_bound(),
            "idempotent": idempotent,
            "hat_stats": pg.hat_stats,
        }),
        None,
    )?;
    if !pg.within_removal_bound() || !idempotent {
        return Err(Violated("pruning postcondition failed".into()).into());
    }
    Ok(())
}

fn bounds(a: BoundsArgs) -> Result<()> {
    let value = match a.which {
        BoundsCmd::Poisson { lambda, delta, threshold } => {
            let r = match (delta, threshold) {
                (Some(delta), _) => probdist::sharp_pois_tail_bounds(lambda, delta),
                (None, Some(t)) => probdist::sharp_pois_tail_bounds_at(lambda, t),
                (None, None) => unreachable!("clap requires one of them"),
            }
            .map_err(invalid)?;
            json!({ "result": r, "sandwiched": r.sandwiched() })
        }
        BoundsCmd::Binomial { n, p, k } => {
            let c = probdist::binom_pois_compare(n, p, k).map_err(invalid)?;
            json!({ "result": c, "within": c.within() })
        }
        BoundsCmd::HeavyTail { n, p, tau } => {
            let bound = probdist::binom_heavy_tail_bound(n, p, tau).map_err(invalid)?;
            let exact = probdist::binom_tail(n, p, tau.ceil() as u64);
            json!({ "bound": bound, "exact": exact, "holds": exact <= bound })
        }
        BoundsCmd::Calibrate => json!({
            "calibrated": probdist::calibrate_sharp_constant(),
            "pinned": probdist::SHARP_TAIL_CONSTANT,
        }),
    };
    emit(&value, None)
}

fn read_eigenvalues(path: &Path) -> Result<Vec<f64>> {
    let mut text = String::new();
    File::open(path).with_context(|| format!("opening {}", path.display()))?.read_to_string(&mut text)?;
    let v: Value = serde_json::from_str(&text).map_err(invalid)?;
    v.get("eigenvalues")
        .and_then(Value::as_array)
        .and_then(|a| a.iter().map(Value::as_f64).collect::<Option<Vec<_>>>())
        .ok_or_else(|| invalid(format!("{}: no numeric `eigenvalues` array", path.display())))
}

fn point_process(a: PointProcessArgs) -> Result<()> {
    let (n, d) = (a.n_vertices, a.expected_degree);
    let bench = degree_benchmark(n, d).map_err(graph_err)?;
    let u = bench.u_star;
    let rho = pointproc::build_rho(n, d, u).map_err(invalid)?;
    let k = a.kappa_k.unwrap_or_else(|| pointproc::default_k(n));
    let kappa = pointproc::kappa(&rho, k).map_err(invalid)?;
    let psi = pointproc::sample_psi(&rho, a.seed, a.replicate).truncated(kappa.value);
    let phi = match &a.spectrum {
        Some(p) => {
            let pts = read_eigenvalues(p)?
                .into_iter()
                .map(|l| pointproc::phi_point(l, d, u))
                .filter(|&x| x >= kappa.value)
                .collect();
            Some(PointProcessSample::new(pts, Origin::EmpiricalPhi))
        }
        None => None,
    };
    let lp = phi.as_ref().map(|phi| pointproc::lp_distance(phi, &psi));
    let window = pointproc::order_stat_window(d, u as u64, bench.mu(u), a.top).ok();
    let spacing = pointproc::predicted_spacing(n, d, u, a.top).ok();
    emit(
        &json!({
            "rho_metadata": {
                "n_vertices": n,
                "d": d,
                "u_star": u,
                "ell_max": rho.ell_max,
                "atoms": rho.atoms,
                "total_mass": rho.total_mass(),
                "dropped_mass": rho.dropped_mass,
                "mass_floor": pointproc::RHO_MASS_FLOOR,
            },
            "kappa": kappa,
            "kappa_k": k,
            "phi_points": phi.as_ref().map(|p| &p.points),
            "psi_sample_summary": {
                "seed": a.seed,
                "replicate": a.replicate,
                "count": psi.points.len(),
                "points": psi.points,
            },
            "lp_distance": lp,
            "window": window,
            "spacing": spacing,
        }),
        a.out.as_deref(),
    )
}

fn report(a: ReportArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            ExperimentConfig::from_kv(&text).map_err(experiment_err)?
        }
        None => ExperimentConfig::default(),
    };
    for kv in &a.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| invalid(format!("expected KEY=VALUE, got {kv:?}")))?;
        cfg.set(k.trim(), v.trim()).map_err(experiment_err)?;
    }
    let overrides = [
        ("n_vertices", a.n_vertices.map(|v| v.to_string())),
        ("expected_degree", a.expected_degree.map(|v| v.to_string())),
        ("n_seeds", a.seeds.map(|v| v.to_string())),
        ("base_seed", a.base_seed.map(|v| v.to_string())),
        ("radius", a.radius.map(|v| v.to_string())),
        ("top_k", a.top_k.map(|v| v.to_string())),
        ("output_dir", a.out.as_ref().map(|p| p.display().to_string())),
    ];
    for (k, v) in overrides {
        if let Some(v) = v {
            cfg.set(k, &v).map_err(experiment_err)?;
        }
    }
    let warnings = cfg.validate().map_err(experiment_err)?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    if a.dry_run {
        print!("{}", cfg.to_kv());
        return Ok(());
    }
    let report = run_edge_experiment(&cfg).map_err(experiment_err)?;
    eprintln!("{} {} seeds written to {}", experiment::version(), report.metrics.seeds, cfg.output_dir.display());
    emit(&serde_json::to_value(&report.metrics)?, None)?;
    if report.metrics.prune_ok_fraction < 1.0 {
        return Err(Violated("pruning postconditions failed on some seeds".into()).into());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = match cli.cmd {
        Cmd::Generate(a) => generate(a),
        Cmd::Stats(a) => stats(a),
        Cmd::BallEig(a) => ball_eig(a),
        Cmd::Spectrum(a) => spectrum(a),
        Cmd::Prune(a) => prune_cmd(a),
        Cmd::Bounds(a) => bounds(a),
        Cmd::Pointprocess(a) => point_process(a),
        Cmd::Report(a) => report(a),
    };
    match out {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = if e.downcast_ref::<Invalid>().is_some() {
                2
            } else if e.downcast_ref::<Violated>().is_some() {
                3
            } else {
                1
            };
            ExitCode::from(code)
        }
    }
}
