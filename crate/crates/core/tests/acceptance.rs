//! Acceptance criteria. Each test prints one `criterion N: PASS|FAIL` line
//! straight to stderr so it shows up without `--nocapture`.
//!
//! Exact property suites (1–4, 11, 12) and the structural part of 9 assert.
//! Trend and frequency checks (5–8, 10) and the degree bound in 9 report
//! their verdict without panicking: they measure high-probability
//! statements at desk scale and may legitimately fail.

mod common;

use std::io::Write;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use spectral_edge::experiment::{metrics, run_seed, ExperimentConfig, Metrics, SeedReport};
use spectral_edge::graph::{degree_benchmark, sample_er, GraphConfig, SparseGraph};
use spectral_edge::local::extract_ball;
use spectral_edge::pointproc::{self, lp_distance_weighted};
use spectral_edge::probdist::{binom_pois_compare, calibrate_sharp_constant, sharp_pois_tail_bounds_at, SHARP_TAIL_CONSTANT};
use spectral_edge::sparse_eigen::{bottom_k, residual_norm, top_k, LanczosOptions};
use spectral_edge::tree_eig::{cf_eigenvalue, forest_bound};

// Pinned thresholds.
const LEX_AGREEMENT: f64 = 0.90;
const ROOT_MASS_RANGE: (f64, f64) = (0.5, 0.85);
const ROOT_MASS_FRACTION: f64 = 0.90;
const RATIO_FRACTION: f64 = 0.80;
const FORMULA_SEEDS: usize = 50;
const POOLED_SEEDS: usize = 100;
const LARGE_SEEDS: usize = 10;
const PSI_ENSEMBLES: usize = 21;

fn report(n: u32, name: &str, pass: bool, detail: String) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "criterion {n:>2} [{verdict}] {name}: {detail}");
}

fn within(t: Instant, budget: Duration) -> (bool, Duration) {
    let e = t.elapsed();
    (e < budget, e)
}

fn ensemble(n: usize, seeds: usize) -> Vec<SeedReport> {
    let cfg = ExperimentConfig { n_vertices: n, expected_degree: 1.0, n_seeds: seeds, ..Default::default() };
    (0..seeds as u64).into_par_iter().map(|i| run_seed(&cfg, i).expect("seed run").report).collect()
}

macro_rules! shared {
    ($name:ident, $n:expr, $seeds:expr) => {
        fn $name() -> &'static [SeedReport] {
            static CELL: OnceLock<Vec<SeedReport>> = OnceLock::new();
            CELL.get_or_init(|| ensemble($n, $seeds))
        }
    };
}

shared!(ens_1e4, 10_000, POOLED_SEEDS);
shared!(ens_1e5, 100_000, FORMULA_SEEDS);
shared!(ens_1e6, 1_000_000, POOLED_SEEDS);
shared!(ens_1e7, 10_000_000, LARGE_SEEDS);

fn formula_metrics(seeds: &[SeedReport]) -> Metrics {
    metrics(&seeds[..FORMULA_SEEDS.min(seeds.len())])
}

#[test]
fn c01_tree_solver_matches_dense() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let (mut worst_val, mut worst_vec) = (0.0f64, 0.0f64);
    for _ in 0..200 {
        let n = rng.random_range(1..=200);
        let g = SparseGraph::from_edges(n, random_tree(n, 20, &mut rng)).unwrap();
        let root = rng.random_range(0..n) as u32;
        let ball = extract_ball(&g, root, n);
        let pair = cf_eigenvalue::<f64>(&ball, 1e-13).unwrap();
        let (vals, vecs) = dense_eigen(&g);
        let mut w = vec![0.0; n];
        for (i, &v) in ball.vertices().iter().enumerate() {
            w[v as usize] = pair.vector[i];
        }
        worst_val = worst_val.max((pair.lambda - vals[0]).abs());
        worst_vec = worst_vec.max(aligned_distance(&w, &vecs[0]));
    }
    let (fast, elapsed) = within(t, Duration::from_secs(10));
    let pass = worst_val <= 1e-10 && worst_vec <= 1e-8 && fast;
    report(1, "tree eigensolver vs dense", pass, format!("max |Δλ| {worst_val:.2e}, max vector distance {worst_vec:.2e}, {elapsed:.2?}"));
    assert!(pass);
}

#[test]
fn c02_lanczos_matches_dense() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let (mut worst_val, mut worst_res) = (0.0f64, 0.0f64);
    for rep in 0..50 {
        let n = rng.random_range(20..=500);
        let d = rng.random_range(0.5..8.0);
        let g = sample_er(&GraphConfig::new(n, d, 1000 + rep)).unwrap();
        let res = top_k::<f64>(&g, 5, &LanczosOptions { replicate: rep, ..Default::default() }).unwrap();
        let (vals, _) = dense_eigen(&g);
        for i in 0..5 {
            worst_val = worst_val.max((res.eigenvalues[i] - vals[i]).abs());
            worst_res = worst_res.max(residual_norm(&g, res.eigenvalues[i], &res.eigenvectors[i]));
        }
    }
    let (fast, elapsed) = within(t, Duration::from_secs(30));
    let pass = worst_val <= 1e-9 && worst_res <= 1e-8 && fast;
    report(2, "Lanczos vs dense", pass, format!("max |Δλ| {worst_val:.2e}, max residual {worst_res:.2e}, {elapsed:.2?}"));
    assert!(pass);
}

#[test]
fn c03_poisson_tail_sandwich() {
    let t = Instant::now();
    let c = calibrate_sharp_constant();
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let (mut upper_ok, mut lower_ok, mut cases, mut worst) = (0, 0, 0, f64::INFINITY);
    while cases < 500 {
        let lambda = rng.random_range(10.0..=1000.0f64);
        let delta = rng.random_range(lambda.powf(-0.5)..=3.0);
        let threshold = (lambda * (1.0 + delta)).ceil() as u64;
        let r = sharp_pois_tail_bounds_at(lambda, threshold).unwrap();
        if !(r.params.delta >= lambda.powf(-0.5) && r.params.delta <= 3.0) {
            continue;
        }
        cases += 1;
        let e = r.log_exact.unwrap();
        upper_ok += (e <= r.log_upper) as usize;
        lower_ok += (e >= c.ln() + r.log_upper) as usize;
        worst = worst.min(e - r.log_upper);
    }
    let (fast, elapsed) = within(t, Duration::from_secs(5));
    let pass = upper_ok == cases && lower_ok == cases && fast && (c - SHARP_TAIL_CONSTANT).abs() < 1e-12;
    report(
        3,
        "Poisson tail sandwich",
        pass,
        format!("upper {upper_ok}/{cases}, lower {lower_ok}/{cases} with c = {c:.6}, min exact/upper {:.4}, {elapsed:.2?}", worst.exp()),
    );
    assert!(pass);
}

#[test]
fn c04_binomial_poisson_envelope() {
    let t = Instant::now();
    let (mut ok, mut total) = (0, 0);
    for n in [1_000u64, 10_000, 100_000] {
        let half = (n as f64).sqrt() / 2.0;
        let nps: Vec<f64> = (0..=20).map(|i| half * i as f64 / 20.0).collect();
        for np in nps {
            for k in 0..=half.floor() as u64 {
                let cmp = binom_pois_compare(n, np / n as f64, k).unwrap();
                // both pmfs vanish together at np = 0, k > 0
                if cmp.pois_pmf == 0.0 && cmp.binom_pmf == 0.0 {
                    continue;
                }
                total += 1;
                ok += cmp.within() as usize;
            }
        }
    }
    let (fast, elapsed) = within(t, Duration::from_secs(5));
    let pass = ok == total && fast;
    report(4, "binomial→Poisson envelope", pass, format!("{ok}/{total} grid points, {elapsed:.2?}"));
    assert!(pass);
}

#[test]
fn c05_eigenvalue_formula_trend() {
    let errs: Vec<f64> = [ens_1e4(), ens_1e5(), ens_1e6()].iter().map(|e| formula_metrics(e).median_max_formula_error).collect();
    let pass = errs.windows(2).all(|w| w[1] < w[0]);
    report(
        5,
        "eigenvalue formula trend",
        pass,
        format!("median max error N=1e4 {:.4}, 1e5 {:.4}, 1e6 {:.4} ({FORMULA_SEEDS} seeds each)", errs[0], errs[1], errs[2]),
    );
}

#[test]
fn c06_estimator_dominance() {
    let m = formula_metrics(ens_1e6());
    let pass = m.median_sq_err_four_term <= m.median_sq_err_two_term && m.median_sq_err_two_term <= m.median_sq_err_star;
    report(
        6,
        "estimator dominance",
        pass,
        format!(
            "median |λ²−e²| four-term {:.4} ≤ two-term {:.4} ≤ star {:.4}",
            m.median_sq_err_four_term, m.median_sq_err_two_term, m.median_sq_err_star
        ),
    );
}

#[test]
fn c07_lexicographic_order() {
    let m = metrics(ens_1e6());
    let frac = m.lex_agreeing as f64 / m.lex_qualifying.max(1) as f64;
    let pass = m.lex_qualifying > 0 && frac >= LEX_AGREEMENT;
    let all_lex = ens_1e6().iter().filter(|s| s.lex_top3).count();
    report(
        7,
        "lexicographic ordering",
        pass,
        format!(
            "qualifying seeds {}/{} (Ω pass fraction {:.2}), agreeing {}; unconditioned lex agreement {all_lex}/{}",
            m.lex_qualifying, m.seeds, m.omega_pass_fraction, m.lex_agreeing, m.seeds
        ),
    );
}

#[test]
fn c08_localization() {
    let m6 = metrics(ens_1e6());
    let (m5, m7) = (metrics(ens_1e5()), metrics(ens_1e7()));
    let root_ok = m6.root_mass_in_range_fraction >= ROOT_MASS_FRACTION;
    let ratio_ok = m6.ratio_within_factor2_fraction >= RATIO_FRACTION;
    let root_trend = m7.median_root_mass_deviation < m5.median_root_mass_deviation;
    let ratio_trend = m7.median_ratio_deviation < m5.median_ratio_deviation;
    let pass = root_ok && ratio_ok && root_trend && ratio_trend;
    report(
        8,
        "localization",
        pass,
        format!(
            "root mass in [{}, {}] {:.2} (need {ROOT_MASS_FRACTION}), ratio within ×2 {:.2} (need {RATIO_FRACTION}); \
             median |root−1/√2| 1e5 {:.4} → 1e7 {:.4}, median |ratio/pred−1| 1e5 {:.4} → 1e7 {:.4} ({LARGE_SEEDS} seeds at 1e7)",
            ROOT_MASS_RANGE.0,
            ROOT_MASS_RANGE.1,
            m6.root_mass_in_range_fraction,
            m6.ratio_within_factor2_fraction,
            m5.median_root_mass_deviation,
            m7.median_root_mass_deviation,
            m5.median_ratio_deviation,
            m7.median_ratio_deviation
        ),
    );
}

#[test]
fn c09_pruning_postconditions() {
    let seeds = ens_1e6();
    // disjoint tree balls (checked inside `prune`) and idempotence hold by
    // construction; the degree bound only with high probability
    let mut broken = Vec::new();
    let mut over = Vec::new();
    let mut worst = (0, 0);
    for s in seeds {
        match &s.prune {
            Ok(p) => {
                worst = worst.max((p.removed_max_degree, p.removal_bound));
                if !p.idempotent {
                    broken.push(format!("seed {}: not idempotent", s.seed_index));
                }
                if p.removed_max_degree > p.removal_bound {
                    over.push((s.seed_index, p.removed_max_degree));
                }
            }
            Err(e) => broken.push(format!("seed {}: {e}", s.seed_index)),
        }
    }
    let pass = broken.is_empty() && over.is_empty();
    report(
        9,
        "pruning postconditions",
        pass,
        format!(
            "{} seeds; disjoint trees + idempotence failures {:?}; removed-edge degree > {} on {} seeds {:?} (worst {})",
            seeds.len(),
            broken,
            worst.1,
            over.len(),
            over,
            worst.0
        ),
    );
    assert!(broken.is_empty(), "{broken:?}");
}

/// Median over independent pooled-Ψ ensembles of the distance between the
/// pooled truncated Φ and the pooled truncated Ψ.
fn pooled_phi_psi(seeds: &[SeedReport]) -> f64 {
    let first = &seeds[0];
    let u = degree_benchmark(first.n_vertices, first.d).unwrap().u_star;
    let rho = pointproc::build_rho(first.n_vertices, first.d, u).unwrap();
    let w = 1.0 / seeds.len() as f64;
    let phi: Vec<(f64, f64)> = seeds.iter().flat_map(|s| s.phi.iter().map(move |&p| (p, w))).collect();
    let mut ds: Vec<f64> = (0..PSI_ENSEMBLES as u64)
        .into_par_iter()
        .map(|b| {
            let psi: Vec<(f64, f64)> = (0..seeds.len() as u64)
                .flat_map(|i| pointproc::sample_psi(&rho, 7_000 + b, i).truncated(first.kappa.value).points)
                .map(|p| (p, w))
                .collect();
            lp_distance_weighted(&phi, &psi)
        })
        .collect();
    ds.sort_by(f64::total_cmp);
    ds[ds.len() / 2]
}

fn phi_count(seeds: &[SeedReport]) -> f64 {
    seeds.iter().map(|s| s.phi.len() as f64).sum::<f64>() / seeds.len() as f64
}

#[test]
fn c10_point_process_trend() {
    let (e4, e5, e6) = (ens_1e4(), ens_1e5(), ens_1e6());
    let d4 = pooled_phi_psi(e4);
    let d5 = pooled_phi_psi(e5);
    let d6 = pooled_phi_psi(e6);
    let pass = d6 < d4;
    let psi_mean = |s: &[SeedReport]| s.iter().map(|r| r.psi.len() as f64).sum::<f64>() / s.len() as f64;
    report(
        10,
        "point process trend",
        pass,
        format!(
            "median pooled LP N=1e4 {d4:.4} → 1e6 {d6:.4} (1e5 {d5:.4}, {} seeds); mean Φ/Ψ counts above κ: 1e4 {:.2}/{:.2}, 1e6 {:.2}/{:.2}",
            e6.len(),
            phi_count(e4),
            psi_mean(e4),
            phi_count(e6),
            psi_mean(e6)
        ),
    );
}

#[test]
fn c11_forest_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(111);
    let (mut ok, mut total, mut tightest) = (0, 0, 0.0f64);
    while total < 200 {
        let n = rng.random_range(2..=200);
        let cap = rng.random_range(2..=10);
        let g = random_forest(n, cap, &mut rng);
        let delta = g.max_degree();
        // the bound is false for matchings (Δ = 1, λ = 1)
        if delta < 2 {
            continue;
        }
        total += 1;
        let (vals, _) = dense_eigen(&g);
        let bound = forest_bound(delta).unwrap();
        ok += (vals[0] <= bound + 1e-12) as usize;
        tightest = tightest.max(vals[0] / bound);
    }
    let pass = ok == total;
    report(11, "forest bound", pass, format!("{ok}/{total} forests, max λ/bound {tightest:.4}"));
    assert!(pass);
}

#[test]
fn c12_bipartite_symmetry() {
    let mut rng = ChaCha8Rng::seed_from_u64(112);
    let mut worst = 0.0f64;
    for rep in 0..50 {
        let n = rng.random_range(2..=3000);
        let g = random_forest(n, rng.random_range(2..=30), &mut rng);
        let opts = LanczosOptions { replicate: rep, ..Default::default() };
        let k = 3.min(n - 1);
        let top = top_k::<f64>(&g, k, &opts).unwrap();
        let bottom = bottom_k::<f64>(&g, k, &opts).unwrap();
        worst = worst.max((bottom.eigenvalues[0] + top.eigenvalues[0]).abs());
    }
    let pass = worst <= 1e-9;
    report(12, "bipartite symmetry", pass, format!("50 forests, max |λ_min + λ₁| {worst:.2e}"));
    assert!(pass);
}
