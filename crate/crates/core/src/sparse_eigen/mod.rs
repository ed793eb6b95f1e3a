//! Extreme eigenpairs of the full adjacency operator and their matching to
//! fine-regime vertices.

mod dense;
mod lanczos;
mod matching;
mod tree_solver;

pub use dense::symmetric_eigen;
pub use matching::{ball_top_pair, fine_balls, lex_ranks, match_eigenpairs, EigenVertexMatch, FineBall};

use std::io::Write;

use serde::Serialize;

use crate::graph::{matvec_into, SparseGraph, Vertex};
use crate::local::extract_ball;
use crate::tree_eig::cf_eigenvalue;
use crate::rng::{self, Purpose, StreamRng};
use crate::Scalar;
use lanczos::{LanczosRun, RitzPair};
use tree_solver::TreeOperator;

pub const MAX_K: usize = 64;
/// Components up to this size are diagonalized densely.
const DENSE_MAX: usize = 128;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpectralError {
    #[error("k = {k} must satisfy 1 <= k <= {MAX_K} and k < N = {n}")]
    InvalidK { k: usize, n: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LanczosOptions {
    /// Relative residual target `‖Av − λv‖ ≤ tol · max(1, |λ|)`.
    pub tol: f64,
    /// Matrix-vector budget per Lanczos run.
    pub max_matvecs: usize,
    pub seed: u64,
    pub replicate: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_matvecs: 50_000, seed: 0, replicate: 0 }
    }
}

/// A vector stored on its support, indices ascending.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SparseVector<S> {
    pub indices: Vec<Vertex>,
    pub values: Vec<S>,
}

impl<S: Scalar> SparseVector<S> {
    pub fn get(&self, v: Vertex) -> S {
        match self.indices.binary_search(&v) {
            Ok(i) => self.values[i],
            Err(_) => S::zero(),
        }
    }

    pub fn to_dense(&self, n: usize) -> Vec<S> {
        let mut out = vec![S::zero(); n];
        for (&i, &x) in self.indices.iter().zip(&self.values) {
            out[i as usize] = x;
        }
        out
    }

    /// Vertex of largest `|entry|`, smallest id on ties.
    pub fn argmax_abs(&self) -> Option<Vertex> {
        let mut best: Option<(Vertex, S)> = None;
        for (&i, &x) in self.indices.iter().zip(&self.values) {
            if best.is_none_or(|(_, b)| x.abs() > b) {
                best = Some((i, x.abs()));
            }
        }
        best.map(|b| b.0)
    }

    pub fn dot(&self, other: &SparseVector<S>) -> S {
        self.indices.iter().zip(&self.values).map(|(&i, &x)| x * other.get(i)).sum()
    }
}

/// Extreme eigenpairs, ordered from the edge inward: descending for the top
/// of the spectrum, ascending for the bottom.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralResult<S> {
    pub eigenvalues: Vec<S>,
    pub eigenvectors: Vec<SparseVector<S>>,
    pub residuals: Vec<S>,
    pub converged: Vec<bool>,
    /// Within `10 · tol` of a neighboring eigenvalue.
    pub unresolved: Vec<bool>,
    pub matvec_count: usize,
    pub tol: f64,
}

struct Found<S> {
    value: S,
    vector: SparseVector<S>,
    residual: S,
    converged: bool,
}

/// Sign-aware operator `x ↦ sign · A x` on one component.
fn operator<S: Scalar>(g: &SparseGraph, sign: S) -> impl FnMut(&[S], &mut [S]) + '_ {
    move |x: &[S], out: &mut [S]| {
        matvec_into(g, x, out).expect("dimensions fixed by construction");
        if sign < S::zero() {
            out.iter_mut().for_each(|e| *e = -*e);
        }
    }
}

/// `max_v √(Σ_{u∼v} deg u)` and `max_{uv} √(deg u · deg v)` both bound
/// the spectral radius; the smaller is used.
fn spectral_radius_bound(g: &SparseGraph, comp: &[Vertex]) -> f64 {
    let mut row = 0usize;
    let mut edge = 0usize;
    for &v in comp {
        let dv = g.degree(v);
        let mut s = 0;
        for &u in g.neighbors(v) {
            s += g.degree(u);
            edge = edge.max(dv * g.degree(u));
        }
        row = row.max(s);
    }
    (row.min(edge) as f64).sqrt()
}

/// Top `m` eigenpairs of `sign · A` on a connected graph (local ids).
fn solve_component<S: Scalar>(
    sub: &SparseGraph,
    m: usize,
    sign: S,
    opts: &LanczosOptions,
    rng: &mut StreamRng,
    matvecs: &mut usize,
) -> Vec<RitzPair<S>> {
    let n = sub.n_vertices();
    let m = m.min(n);
    if n > 1 && sub.edge_count() + 1 == n {
        let ball = extract_ball(sub, 0, n);
        let bound = S::of(spectral_radius_bound(sub, ball.vertices()));
        let pairs = TreeOperator::new(&ball).top(m, sign, bound, S::of(opts.tol), rng);
        if pairs.iter().all(|p| p.converged) {
            // Back from BFS order to local ids.
            return pairs
                .into_iter()
                .map(|p| {
                    let mut vector = vec![S::zero(); n];
                    for (i, &v) in ball.vertices().iter().enumerate() {
                        vector[v as usize] = p.vector[i];
                    }
                    RitzPair { vector, ..p }
                })
                .collect();
        }
    }
    if n <= DENSE_MAX {
        let mut a = vec![S::zero(); n * n];
        for (u, v) in sub.edges() {
            a[u as usize * n + v as usize] = sign;
            a[v as usize * n + u as usize] = sign;
        }
        let (vals, vecs) = symmetric_eigen(a, n);
        let mut apply = operator(sub, sign);
        let mut w = vec![S::zero(); n];
        return vals
            .into_iter()
            .zip(vecs)
            .take(m)
            .map(|(value, vector)| {
                apply(&vector, &mut w);
                let residual = w.iter().zip(&vector).map(|(&a, &b)| (a - value * b).powi(2)).sum::<S>().sqrt();
                RitzPair { value, vector, residual, converged: true }
            })
            .collect();
    }
    let tol = S::of(opts.tol);
    let mut run = LanczosRun { n, apply: operator(sub, sign), locked: &[], tol, max_matvecs: opts.max_matvecs, matvecs: 0 };
    let mut pairs = run.top(m, rng);
    *matvecs += run.matvecs;
    // A single Krylov space sees one vector per eigenspace. Search the
    // complement of what was found for anything that belongs among the top m.
    for _ in 0..m {
        let locked: Vec<Vec<S>> = pairs.iter().map(|p| p.vector.clone()).collect();
        let mut check = LanczosRun {
            n,
            apply: operator(sub, sign),
            locked: &locked,
            tol,
            max_matvecs: opts.max_matvecs,
            matvecs: 0,
        };
        let extra = check.top(1, rng);
        *matvecs += check.matvecs;
        let Some(extra) = extra.into_iter().next() else { break };
        let floor = pairs.last().map(|p| p.value).unwrap_or(S::neg_infinity());
        if pairs.len() >= m && extra.value <= floor + tol * floor.abs().max(S::one()) {
            break;
        }
        pairs.push(extra);
        pairs.sort_by(|a, b| b.value.partial_cmp(&a.value).unwrap());
        pairs.truncate(m);
    }
    pairs
}

fn check_k(g: &SparseGraph, k: usize) -> Result<(), SpectralError> {
    let n = g.n_vertices();
    if k == 0 || k > MAX_K || k >= n {
        return Err(SpectralError::InvalidK { k, n });
    }
    Ok(())
}

fn finish<S: Scalar>(mut found: Vec<Found<S>>, k: usize, sign: S, matvecs: usize, tol: f64) -> SpectralResult<S> {
    found.sort_by(|a, b| b.value.partial_cmp(&a.value).unwrap());
    found.truncate(k);
    let values: Vec<S> = found.iter().map(|f| f.value).collect();
    let gap = |i: usize, j: usize| {
        let scale = values[i].abs().max(S::one());
        (values[i] - values[j]).abs() < S::of(10.0 * tol) * scale
    };
    let unresolved = (0..values.len())
        .map(|i| (i > 0 && gap(i, i - 1)) || (i + 1 < values.len() && gap(i, i + 1)))
        .collect();
    SpectralResult {
        eigenvalues: values.iter().map(|&v| v * sign).collect(),
        residuals: found.iter().map(|f| f.residual).collect(),
        converged: found.iter().map(|f| f.converged).collect(),
        eigenvectors: found.into_iter().map(|f| f.vector).collect(),
        unresolved,
        matvec_count: matvecs,
        tol,
    }
}

fn edge_of_spectrum<S: Scalar>(
    g: &SparseGraph,
    k: usize,
    opts: &LanczosOptions,
    sign: S,
) -> Result<SpectralResult<S>, SpectralError> {
    check_k(g, k)?;
    let mut rng = rng::stream(opts.seed, opts.replicate, Purpose::LanczosStart);
    let mut comps: Vec<(f64, Vec<Vertex>)> =
        g.components().into_iter().map(|c| (spectral_radius_bound(g, &c), c)).collect();
    comps.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1[0].cmp(&b.1[0])));

    let mut found: Vec<Found<S>> = Vec::new();
    let mut matvecs = 0;
    for (bound, comp) in comps {
        if found.len() >= k && S::of(bound) <= found[k - 1].value {
            break;
        }
        let sub = g.induced_subgraph(&comp);
        // On a tree the Perron root is cheap and, by bipartiteness, also
        // bounds the bottom of the spectrum; skip trees that cannot enter.
        if found.len() >= k && sub.edge_count() + 1 == sub.n_vertices() {
            let ball = extract_ball(&sub, 0, sub.n_vertices());
            if let Ok(pair) = cf_eigenvalue::<S>(&ball, S::of(opts.tol)) {
                if pair.lambda <= found[k - 1].value {
                    continue;
                }
            }
        }
        for p in solve_component(&sub, k, sign, opts, &mut rng, &mut matvecs) {
            let mut entries: Vec<(Vertex, S)> =
                comp.iter().zip(p.vector).filter(|e| e.1 != S::zero()).map(|(&v, x)| (v, x)).collect();
            entries.sort_unstable_by_key(|e| e.0);
            found.push(Found {
                value: p.value,
                vector: SparseVector {
                    indices: entries.iter().map(|e| e.0).collect(),
                    values: entries.iter().map(|e| e.1).collect(),
                },
                residual: p.residual,
                converged: p.converged,
            });
        }
        found.sort_by(|a, b| b.value.partial_cmp(&a.value).unwrap());
        found.truncate(k);
    }
    Ok(finish(found, k, sign, matvecs, opts.tol))
}

/// The `k` largest eigenpairs of `A`, descending.
///
/// Connected components are solved separately, in order of decreasing
/// spectral-radius bound, stopping once no remaining component can reach the
/// current `k`-th value. Small components are diagonalized densely, larger
/// ones by Lanczos.
pub fn top_k<S: Scalar>(g: &SparseGraph, k: usize, opts: &LanczosOptions) -> Result<SpectralResult<S>, SpectralError> {
    edge_of_spectrum(g, k, opts, S::one())
}

/// The `k` most negative eigenpairs of `A`, ascending.
pub fn bottom_k<S: Scalar>(g: &SparseGraph, k: usize, opts: &LanczosOptions) -> Result<SpectralResult<S>, SpectralError> {
    edge_of_spectrum(g, k, opts, -S::one())
}

/// `top_k` by a single Lanczos iteration over the whole graph, without
/// splitting into components.
pub fn top_k_global<S: Scalar>(
    g: &SparseGraph,
    k: usize,
    opts: &LanczosOptions,
) -> Result<SpectralResult<S>, SpectralError> {
    check_k(g, k)?;
    let mut rng = rng::stream(opts.seed, opts.replicate, Purpose::LanczosStart);
    let mut matvecs = 0;
    let n = g.n_vertices();
    let mut run =
        LanczosRun { n, apply: operator(g, S::one()), locked: &[], tol: S::of(opts.tol), max_matvecs: opts.max_matvecs, matvecs: 0 };
    let pairs = run.top(k, &mut rng);
    matvecs += run.matvecs;
    let found = pairs
        .into_iter()
        .map(|p| Found {
            value: p.value,
            vector: SparseVector { indices: (0..n as Vertex).collect(), values: p.vector },
            residual: p.residual,
            converged: p.converged,
        })
        .collect();
    Ok(finish(found, k, S::one(), matvecs, opts.tol))
}

/// `‖A v − λ v‖` over the whole graph.
pub fn residual_norm<S: Scalar>(g: &SparseGraph, lambda: S, v: &SparseVector<S>) -> S {
    let mut touched: std::collections::BTreeMap<Vertex, S> = Default::default();
    for (&i, &x) in v.indices.iter().zip(&v.values) {
        for &u in g.neighbors(i) {
            let e = touched.entry(u).or_insert(S::zero());
            *e = *e + x;
        }
        let e = touched.entry(i).or_insert(S::zero());
        *e = *e - lambda * x;
    }
    touched.values().map(|&x| x * x).sum::<S>().sqrt()
}

#[derive(Serialize)]
struct SpectralJson<'a> {
    eigenvalues: Vec<f64>,
    residuals: Vec<f64>,
    converged: &'a [bool],
    unresolved: &'a [bool],
    matvec_count: usize,
    tol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    matches: Option<&'a [EigenVertexMatch]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    eigenvectors: Option<Vec<SparseVector<f64>>>,
}

/// JSON with eigenvalues, residuals and matches; eigenvector payloads only
/// when `include_vectors`.
pub fn write_spectral_json<S: Scalar>(
    res: &SpectralResult<S>,
    matches: Option<&[EigenVertexMatch]>,
    include_vectors: bool,
    w: impl Write,
) -> serde_json::Result<()> {
    let lossy = |v: &[S]| v.iter().map(|x| x.to_f64_lossy()).collect::<Vec<_>>();
    let json = SpectralJson {
        eigenvalues: lossy(&res.eigenvalues),
        residuals: lossy(&res.residuals),
        converged: &res.converged,
        unresolved: &res.unresolved,
        matvec_count: res.matvec_count,
        tol: res.tol,
        matches,
        eigenvectors: include_vectors.then(|| {
            res.eigenvectors
                .iter()
                .map(|v| SparseVector { indices: v.indices.clone(), values: lossy(&v.values) })
                .collect()
        }),
    };
    serde_json::to_writer_pretty(w, &json)
}
