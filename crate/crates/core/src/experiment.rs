//! Ensemble runs: every per-seed statistic the validation suite and the
//! `report` command need, from one deterministic pipeline.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::graph::{degree_benchmark, sample_er_replicate, GraphConfig, GraphError, SparseGraph, Vertex};
use crate::local::{check_omega_with, classify_regimes, extract_ball, local_stats, RegimeError, RegimeThresholds};
use crate::pointproc::{self, Kappa, Spacing};
use crate::prune::{prune, rough_test_vector};
use crate::sparse_eigen::{fine_balls, match_eigenpairs, top_k, EigenVertexMatch, LanczosOptions, SpectralError, SpectralResult};
use crate::tree_eig::{estimate, estimator_table, EstimatorKind, EstimatorRow};

/// Version string embedded in every report.
pub fn version() -> String {
    match option_env!("SPECTRAL_EDGE_GIT_DESCRIBE") {
        Some(v) => v.to_string(),
        None => concat!("v", env!("CARGO_PKG_VERSION")).to_string(),
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Regime(#[from] RegimeError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub n_vertices: usize,
    pub expected_degree: f64,
    pub n_seeds: usize,
    pub base_seed: u64,
    /// Ball radius `r`.
    pub radius: usize,
    /// Localization radius `r'`; when set, `r ≥ max(5, 2r')`.
    pub localization_radius: Option<usize>,
    pub top_k: usize,
    pub output_dir: PathBuf,
    pub omega_constant: f64,
    pub prune_c1: usize,
    pub prune_c2: usize,
    pub lanczos_tol: f64,
    /// `K` for the κ cut; `exp(log^{1/8} N)` when unset.
    pub kappa_k: Option<f64>,
    /// Constant in front of `log log N` for rough test-vector residuals.
    pub residual_envelope_constant: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_vertices: 1_000_000,
            expected_degree: 1.0,
            n_seeds: 1,
            base_seed: 0,
            radius: 5,
            localization_radius: None,
            top_k: 20,
            output_dir: PathBuf::from("out"),
            omega_constant: crate::local::OMEGA_ENVELOPE_CONSTANT,
            prune_c1: 2,
            prune_c2: 5,
            lanczos_tol: 1e-10,
            kappa_k: None,
            residual_envelope_constant: 1.0,
        }
    }
}

pub const CONFIG_KEYS: [&str; 14] = [
    "n_vertices",
    "expected_degree",
    "n_seeds",
    "base_seed",
    "radius",
    "localization_radius",
    "top_k",
    "output_dir",
    "omega_constant",
    "prune_c1",
    "prune_c2",
    "lanczos_tol",
    "kappa_k",
    "residual_envelope_constant",
];

impl ExperimentConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ExperimentError> {
        fn parse<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, ExperimentError> {
            v.parse().map_err(|_| ExperimentError::Config(format!("bad value for {key}: {v:?}")))
        }
        let opt = |v: &str| !(v.is_empty() || v == "none");
        match key {
            "n_vertices" => self.n_vertices = parse(key, value)?,
            "expected_degree" => self.expected_degree = parse(key, value)?,
            "n_seeds" => self.n_seeds = parse(key, value)?,
            "base_seed" => self.base_seed = parse(key, value)?,
            "radius" => self.radius = parse(key, value)?,
            "localization_radius" => self.localization_radius = if opt(value) { Some(parse(key, value)?) } else { None },
            "top_k" => self.top_k = parse(key, value)?,
            "output_dir" => self.output_dir = PathBuf::from(value),
            "omega_constant" => self.omega_constant = parse(key, value)?,
            "prune_c1" => self.prune_c1 = parse(key, value)?,
            "prune_c2" => self.prune_c2 = parse(key, value)?,
            "lanczos_tol" => self.lanczos_tol = parse(key, value)?,
            "kappa_k" => self.kappa_k = if opt(value) { Some(parse(key, value)?) } else { None },
            "residual_envelope_constant" => self.residual_envelope_constant = parse(key, value)?,
            _ => return Err(ExperimentError::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Flat `key = value` text; `#` starts a comment.
    pub fn apply_kv(&mut self, text: &str) -> Result<(), ExperimentError> {
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| ExperimentError::Config(format!("line {}: expected key = value", no + 1)))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn from_kv(text: &str) -> Result<Self, ExperimentError> {
        let mut cfg = Self::default();
        cfg.apply_kv(text)?;
        Ok(cfg)
    }

    pub fn to_kv(&self) -> String {
        self.entries().iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    fn entries(&self) -> BTreeMap<&'static str, String> {
        let opt = |v: Option<String>| v.unwrap_or_else(|| "none".into());
        BTreeMap::from([
            ("n_vertices", self.n_vertices.to_string()),
            ("expected_degree", self.expected_degree.to_string()),
            ("n_seeds", self.n_seeds.to_string()),
            ("base_seed", self.base_seed.to_string()),
            ("radius", self.radius.to_string()),
            ("localization_radius", opt(self.localization_radius.map(|r| r.to_string()))),
            ("top_k", self.top_k.to_string()),
            ("output_dir", self.output_dir.display().to_string()),
            ("omega_constant", self.omega_constant.to_string()),
            ("prune_c1", self.prune_c1.to_string()),
            ("prune_c2", self.prune_c2.to_string()),
            ("lanczos_tol", self.lanczos_tol.to_string()),
            ("kappa_k", opt(self.kappa_k.map(|k| k.to_string()))),
            ("residual_envelope_constant", self.residual_envelope_constant.to_string()),
        ])
    }

    /// Hard errors; returns warnings (currently: `d` outside
    /// `[log^{−1/9} N, log^{1/40} N]`).
    pub fn validate(&self) -> Result<Vec<String>, ExperimentError> {
        let bad = |m: String| Err(ExperimentError::Config(m));
        if self.n_seeds == 0 {
            return bad("n_seeds must be at least 1".into());
        }
        if self.radius < 3 {
            return bad(format!("radius {} < 3", self.radius));
        }
        if let Some(rl) = self.localization_radius {
            if self.radius < 5.max(2 * rl) {
                return bad(format!("radius {} < max(5, 2·{rl})", self.radius));
            }
        }
        if self.top_k == 0 || self.top_k > crate::sparse_eigen::MAX_K {
            return bad(format!("top_k {} outside 1..={}", self.top_k, crate::sparse_eigen::MAX_K));
        }
        if self.prune_c1 < 2 || self.prune_c2 < 5 {
            return bad(format!("prune constants c1 = {}, c2 = {} (need ≥ 2, ≥ 5)", self.prune_c1, self.prune_c2));
        }
        if !(self.lanczos_tol > 0.0) || !(self.omega_constant > 0.0) || self.kappa_k.is_some_and(|k| !(k > 0.0)) {
            return bad("tolerances and constants must be positive".into());
        }
        self.graph_config().validate()?;
        let ln = (self.n_vertices as f64).ln();
        let (lo, hi) = (ln.powf(-1.0 / 9.0), ln.powf(1.0 / 40.0));
        let d = self.expected_degree;
        Ok(if d < lo || d > hi {
            vec![format!("d = {d} outside the asymptotic range [{lo:.4}, {hi:.4}] for N = {}", self.n_vertices)]
        } else {
            vec![]
        })
    }

    pub fn graph_config(&self) -> GraphConfig {
        GraphConfig { n_vertices: self.n_vertices, expected_degree: self.expected_degree, seed: self.base_seed }
    }

    pub fn kappa_k(&self) -> f64 {
        self.kappa_k.unwrap_or_else(|| pointproc::default_k(self.n_vertices))
    }
}

/// Constants reported alongside results.
#[derive(Debug, Clone, Serialize)]
pub struct Constants {
    pub omega_envelope: f64,
    pub truncation_envelope: f64,
    pub sharp_tail: f64,
    pub binom_pois_envelope: f64,
    pub weibull_default: f64,
    pub rho_mass_floor: f64,
    pub prune_c1: usize,
    pub prune_c2: usize,
    pub residual_envelope: f64,
    pub kappa_k: f64,
    pub rng: &'static str,
}

impl Constants {
    pub fn of(cfg: &ExperimentConfig) -> Self {
        Self {
            omega_envelope: cfg.omega_constant,
            truncation_envelope: crate::tree_eig::TRUNCATION_ENVELOPE_CONSTANT,
            sharp_tail: crate::probdist::SHARP_TAIL_CONSTANT,
            binom_pois_envelope: crate::probdist::BINOM_POIS_ENVELOPE,
            weibull_default: crate::probdist::WEIBULL_DEFAULT_C,
            rho_mass_floor: pointproc::RHO_MASS_FLOOR,
            prune_c1: cfg.prune_c1,
            prune_c2: cfg.prune_c2,
            residual_envelope: cfg.residual_envelope_constant,
            kappa_k: cfg.kappa_k(),
            rng: crate::rng::RNG_ID,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OmegaSummary {
    pub all: bool,
    pub disjoint: bool,
    pub trees: bool,
    pub sphere_growth: bool,
    pub child_bound: bool,
    pub square_sum: bool,
    pub fine_pass_fraction: f64,
}

/// One of the top eigenpairs, read against the vertex it localizes on.
#[derive(Debug, Clone, Serialize)]
pub struct TopPair {
    pub index: usize,
    pub lambda: f64,
    pub vertex: Vertex,
    pub alpha: usize,
    pub beta: usize,
    /// `|λ − √(α + β/α + (d²+d)/α)|`.
    pub simplified_error: f64,
    /// `|λ² − e²|` for the star, two- and four-term estimates `e`.
    pub sq_err_star: f64,
    pub sq_err_two_term: f64,
    pub sq_err_four_term: Option<f64>,
    /// `|v_x|`.
    pub root_mass: f64,
    /// `‖v|_{S_i(x)}‖`, `i = 0..=r`.
    pub level_norms: Vec<f64>,
    /// `‖v|_{S₂}‖ / ‖v|_{S₁}‖`.
    pub ratio: f64,
    /// `√(d/α)`.
    pub predicted_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PruneSummary {
    pub rough: usize,
    pub removed_edges: usize,
    pub removed_max_degree: usize,
    pub removal_bound: usize,
    pub within_bound: bool,
    pub idempotent: bool,
    pub residual_median: f64,
    pub residual_max: f64,
    /// `C log log N`.
    pub residual_envelope: f64,
    pub child_spread_max: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeedReport {
    pub seed_index: u64,
    pub n_vertices: usize,
    pub d: f64,
    pub u_star: usize,
    /// `μ_u`, the expected number of degree-`u` vertices.
    pub mu_u: f64,
    pub max_degree: usize,
    pub thresholds: RegimeThresholds,
    pub n_fine: usize,
    pub n_intermediate: usize,
    pub n_rough: usize,
    pub omega: OmegaSummary,
    pub eigenvalues: Vec<f64>,
    pub residuals: Vec<f64>,
    pub converged: Vec<bool>,
    pub unresolved: Vec<bool>,
    pub matches: Vec<EigenVertexMatch>,
    pub top: Vec<TopPair>,
    pub top3_gaps: Vec<f64>,
    /// Top-3 gaps all exceed `10 · tol`.
    pub gaps_resolved: bool,
    /// Each of the top three eigenvalues sits in its lexicographic tie group.
    pub lex_top3: bool,
    pub spacing: Option<Spacing>,
    pub spacing_exceeded: bool,
    pub kappa: Kappa,
    pub phi: Vec<f64>,
    pub phi_covered: bool,
    pub psi: Vec<f64>,
    pub lp_distance: f64,
    pub prune: Result<PruneSummary, String>,
}

/// Everything a seed produces; tables are kept out of the JSON report.
pub struct SeedOutput {
    pub report: SeedReport,
    pub estimators: Vec<EstimatorRow>,
    pub spectrum: SpectralResult<f64>,
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

fn top_pair(g: &SparseGraph, res: &SpectralResult<f64>, i: usize, d: f64, r: usize) -> Option<TopPair> {
    let v = &res.eigenvectors[i];
    let x = v.argmax_abs()?;
    let lambda = res.eigenvalues[i];
    let ball = extract_ball(g, x, r);
    let stats = local_stats(&ball);
    let est = |k| estimate(&stats, d, k).ok().map(|e| e.value);
    let sq = |e: Option<f64>| e.map(|e| (lambda * lambda - e * e).abs());
    let level_norms: Vec<f64> =
        (0..=ball.depth()).map(|l| ball.level(l).iter().map(|&u| v.get(u).powi(2)).sum::<f64>().sqrt()).collect();
    let norm = |l: usize| level_norms.get(l).copied().unwrap_or(0.0);
    Some(TopPair {
        index: i,
        lambda,
        vertex: x,
        alpha: stats.alpha,
        beta: stats.beta,
        simplified_error: (lambda - est(EstimatorKind::Simplified)?).abs(),
        sq_err_star: sq(est(EstimatorKind::Star))?,
        sq_err_two_term: sq(est(EstimatorKind::TwoTerm))?,
        sq_err_four_term: sq(est(EstimatorKind::FourTerm)),
        root_mass: v.get(x).abs(),
        ratio: norm(2) / norm(1),
        predicted_ratio: (d / stats.alpha as f64).sqrt(),
        level_norms,
    })
}

/// Runs the full pipeline on ensemble member `seed_index`.
pub fn run_seed(cfg: &ExperimentConfig, seed_index: u64) -> Result<SeedOutput, ExperimentError> {
    let n = cfg.n_vertices;
    let d = cfg.expected_degree;
    let r = cfg.radius;
    let g = sample_er_replicate(&cfg.graph_config(), seed_index)?;
    let bench = degree_benchmark(n, d)?;
    let u = bench.u_star;
    let part = classify_regimes(&g, u)?;
    let omega = check_omega_with(&g, &part, r, d, cfg.omega_constant);

    let balls = fine_balls(&g, &part, r);
    let estimators = balls.iter().map(|b| estimator_table(&b.stats, d, b.pair.lambda)).collect();

    let opts = LanczosOptions { tol: cfg.lanczos_tol, seed: cfg.base_seed, replicate: seed_index, ..Default::default() };
    let k = cfg.top_k.min(n - 1);
    let res = top_k::<f64>(&g, k, &opts)?;
    let matches = match_eigenpairs(&res, &balls, d);
    let top: Vec<TopPair> = (0..res.eigenvalues.len().min(5)).filter_map(|i| top_pair(&g, &res, i, d, r)).collect();

    let top3_gaps: Vec<f64> = res.eigenvalues.windows(2).take(2).map(|w| w[0] - w[1]).collect();
    let gaps_resolved = top3_gaps.len() == 2 && top3_gaps.iter().all(|&gap| gap > 10.0 * cfg.lanczos_tol);
    let lex_top3 = matches.len() >= 3 && matches[..3].iter().all(|m| m.lex_agreement == Some(true));
    let spacing = pointproc::predicted_spacing(n, d, u, 3).ok();
    let spacing_exceeded = spacing.is_some_and(|s| top3_gaps.len() == 2 && top3_gaps.iter().all(|&gap| gap > s.lambda));

    let rho = pointproc::build_rho(n, d, u).map_err(|e| ExperimentError::Config(e.to_string()))?;
    let kappa = pointproc::kappa(&rho, cfg.kappa_k()).map_err(|e| ExperimentError::Config(e.to_string()))?;
    let phi = pointproc::empirical_phi(&res, d, u, kappa.value);
    let phi_covered = pointproc::phi_covers(&res, d, u, kappa.value);
    let psi = pointproc::sample_psi(&rho, cfg.base_seed, seed_index).truncated(kappa.value);
    let lp = pointproc::lp_distance(&phi, &psi);

    let prune = prune_summary(cfg, &g, &part.rough);

    let report = SeedReport {
        seed_index,
        n_vertices: n,
        d,
        u_star: u,
        mu_u: bench.mu(u),
        max_degree: g.max_degree(),
        thresholds: part.thresholds,
        n_fine: part.fine.len(),
        n_intermediate: part.intermediate.len(),
        n_rough: part.rough.len(),
        omega: OmegaSummary {
            all: omega.all(),
            disjoint: omega.disjoint,
            trees: omega.trees,
            sphere_growth: omega.sphere_growth,
            child_bound: omega.child_bound,
            square_sum: omega.square_sum,
            fine_pass_fraction: omega.fine_pass_fraction(),
        },
        eigenvalues: res.eigenvalues.clone(),
        residuals: res.residuals.clone(),
        converged: res.converged.clone(),
        unresolved: res.unresolved.clone(),
        matches,
        top,
        top3_gaps,
        gaps_resolved,
        lex_top3,
        spacing,
        spacing_exceeded,
        kappa,
        phi: phi.points,
        phi_covered,
        psi: psi.points,
        lp_distance: lp,
        prune,
    };
    Ok(SeedOutput { report, estimators, spectrum: res })
}

fn prune_summary(cfg: &ExperimentConfig, g: &SparseGraph, rough: &[Vertex]) -> Result<PruneSummary, String> {
    let pg = prune(g, rough, cfg.prune_c1, cfg.prune_c2).map_err(|e| e.to_string())?;
    let idempotent = prune(&pg.graph, rough, cfg.prune_c1, cfg.prune_c2).map_err(|e| e.to_string())?.removed_edges.is_empty();
    let residuals: Vec<f64> = pg
        .rough
        .par_iter()
        .filter_map(|&x| rough_test_vector(&pg, g, x, 1).ok())
        .map(|t| t.residual)
        .collect();
    let lnln = (cfg.n_vertices as f64).ln().ln();
    Ok(PruneSummary {
        rough: pg.rough.len(),
        removed_edges: pg.removed_edges.len(),
        removed_max_degree: pg.removed_max_degree,
        removal_bound: pg.removal_bound(),
        within_bound: pg.within_removal_bound(),
        idempotent,
        residual_max: residuals.iter().copied().fold(0.0, f64::max),
        residual_median: median(residuals),
        residual_envelope: cfg.residual_envelope_constant * lnln,
        child_spread_max: pg.hat_stats.iter().map(|h| h.child_spread).fold(0.0, f64::max),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Metrics {
    pub seeds: usize,
    /// Median over seeds of the max over the top five of `simplified_error`.
    pub median_max_formula_error: f64,
    pub median_sq_err_star: f64,
    pub median_sq_err_two_term: f64,
    pub median_sq_err_four_term: f64,
    pub omega_pass_fraction: f64,
    pub lex_qualifying: usize,
    pub lex_agreeing: usize,
    pub root_mass_in_range_fraction: f64,
    pub ratio_within_factor2_fraction: f64,
    pub median_root_mass_deviation: f64,
    pub median_ratio_deviation: f64,
    pub prune_ok_fraction: f64,
    pub median_lp_distance: f64,
    pub pooled_lp_distance: f64,
    pub spacing_exceeded_fraction: f64,
    pub phi_covered_fraction: f64,
    pub max_degree_variance: f64,
    pub mu_u: f64,
}

pub fn metrics(seeds: &[SeedReport]) -> Metrics {
    let frac = |f: &dyn Fn(&SeedReport) -> bool| seeds.iter().filter(|s| f(s)).count() as f64 / seeds.len().max(1) as f64;
    let all_top = || seeds.iter().flat_map(|s| s.top.iter());
    let first_top = || seeds.iter().filter_map(|s| s.top.first());
    let qualifying: Vec<&SeedReport> = seeds.iter().filter(|s| s.omega.all && s.gaps_resolved).collect();
    let phis: Vec<_> = seeds.iter().map(|s| pointproc::PointProcessSample::new(s.phi.clone(), pointproc::Origin::EmpiricalPhi)).collect();
    let psis: Vec<_> = seeds.iter().map(|s| pointproc::PointProcessSample::new(s.psi.clone(), pointproc::Origin::SampledPsi)).collect();
    let degs: Vec<f64> = seeds.iter().map(|s| s.max_degree as f64).collect();
    let mean = degs.iter().sum::<f64>() / degs.len().max(1) as f64;
    let c = std::f64::consts::FRAC_1_SQRT_2;
    Metrics {
        seeds: seeds.len(),
        median_max_formula_error: median(
            seeds.iter().map(|s| s.top.iter().map(|t| t.simplified_error).fold(0.0, f64::max)).collect(),
        ),
        median_sq_err_star: median(all_top().map(|t| t.sq_err_star).collect()),
        median_sq_err_two_term: median(all_top().map(|t| t.sq_err_two_term).collect()),
        median_sq_err_four_term: median(all_top().filter_map(|t| t.sq_err_four_term).collect()),
        omega_pass_fraction: frac(&|s| s.omega.all),
        lex_qualifying: qualifying.len(),
        lex_agreeing: qualifying.iter().filter(|s| s.lex_top3).count(),
        root_mass_in_range_fraction: frac(&|s| s.top.first().is_some_and(|t| (0.5..=0.85).contains(&t.root_mass))),
        ratio_within_factor2_fraction: frac(&|s| {
            s.top.first().is_some_and(|t| t.ratio <= 2.0 * t.predicted_ratio && t.ratio >= 0.5 * t.predicted_ratio)
        }),
        median_root_mass_deviation: median(first_top().map(|t| (t.root_mass - c).abs()).collect()),
        median_ratio_deviation: median(first_top().map(|t| (t.ratio / t.predicted_ratio - 1.0).abs()).collect()),
        prune_ok_fraction: frac(&|s| s.prune.as_ref().is_ok_and(|p| p.within_bound && p.idempotent)),
        median_lp_distance: median(seeds.iter().map(|s| s.lp_distance).collect()),
        pooled_lp_distance: pointproc::pooled_lp_distance(&phis, &psis),
        spacing_exceeded_fraction: frac(&|s| s.spacing_exceeded),
        phi_covered_fraction: frac(&|s| s.phi_covered),
        max_degree_variance: degs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / degs.len().max(1) as f64,
        mu_u: seeds.first().map_or(f64::NAN, |s| s.mu_u),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub version: String,
    pub config: BTreeMap<&'static str, String>,
    pub constants: Constants,
    pub warnings: Vec<String>,
    pub metrics: Metrics,
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), ExperimentError> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Runs every seed, flushing `seed_NNNN.json` as each finishes, then writes
/// `estimators.csv`, `localization.csv`, `regimes.csv` and `report.json`.
pub fn run_edge_experiment(cfg: &ExperimentConfig) -> Result<Report, ExperimentError> {
    let warnings = cfg.validate()?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    let outputs: Vec<SeedOutput> = (0..cfg.n_seeds as u64)
        .into_par_iter()
        .map(|i| {
            let out = run_seed(cfg, i)?;
            write_json(&cfg.output_dir.join(format!("seed_{i:04}.json")), &out.report)?;
            Ok(out)
        })
        .collect::<Result<_, ExperimentError>>()?;

    let mut est = csv::Writer::from_path(cfg.output_dir.join("estimators.csv"))?;
    est.write_record(["seed", "vertex", "lambda_cf", "star", "two_term", "four_term", "simplified", "adk"])?;
    let fmt = |x: Option<f64>| x.map(|v| format!("{v:.15e}")).unwrap_or_default();
    for o in &outputs {
        for row in &o.estimators {
            let mut rec = vec![o.report.seed_index.to_string(), row.vertex.to_string(), format!("{:.15e}", row.lambda_cf)];
            rec.extend(row.estimates.iter().map(|e| fmt(e.1)));
            est.write_record(&rec)?;
        }
    }
    est.flush()?;

    let mut loc = csv::Writer::from_path(cfg.output_dir.join("localization.csv"))?;
    let mut header = vec!["seed".to_string(), "index".into(), "lambda".into(), "vertex".into(), "alpha".into(), "beta".into()];
    header.extend((0..=cfg.radius).map(|i| format!("s{i}_norm")));
    header.extend(["ratio".into(), "predicted_ratio".into()]);
    loc.write_record(&header)?;
    for o in &outputs {
        for t in &o.report.top {
            let mut rec = vec![
                o.report.seed_index.to_string(),
                t.index.to_string(),
                format!("{:.15e}", t.lambda),
                t.vertex.to_string(),
                t.alpha.to_string(),
                t.beta.to_string(),
            ];
            rec.extend((0..=cfg.radius).map(|i| fmt(t.level_norms.get(i).copied())));
            rec.extend([format!("{:.15e}", t.ratio), format!("{:.15e}", t.predicted_ratio)]);
            loc.write_record(&rec)?;
        }
    }
    loc.flush()?;

    let mut reg = csv::Writer::from_path(cfg.output_dir.join("regimes.csv"))?;
    reg.write_record(["seed", "u_star", "max_degree", "fine", "intermediate", "rough", "omega_all", "fine_pass_fraction"])?;
    for o in &outputs {
        let s = &o.report;
        reg.write_record([
            s.seed_index.to_string(),
            s.u_star.to_string(),
            s.max_degree.to_string(),
            s.n_fine.to_string(),
            s.n_intermediate.to_string(),
            s.n_rough.to_string(),
            s.omega.all.to_string(),
            format!("{:.6}", s.omega.fine_pass_fraction),
        ])?;
    }
    reg.flush()?;

    let seeds: Vec<SeedReport> = outputs.into_iter().map(|o| o.report).collect();
    let report = Report {
        version: version(),
        config: cfg.entries(),
        constants: Constants::of(cfg),
        warnings,
        metrics: metrics(&seeds),
    };
    write_json(&cfg.output_dir.join("report.json"), &report)?;
    Ok(report)
}
