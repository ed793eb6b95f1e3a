//! Sparse Erdős–Rényi graphs in compressed adjacency form.

mod degree;
mod io;

pub use degree::{degree_benchmark, log_binomial_pmf, DegreeBenchmark};
pub use io::{read_binary, read_edge_list, write_binary, write_edge_list};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::rng::{self, Purpose, StreamRng};
use crate::Scalar;

/// Vertex identifier.
pub type Vertex = u32;

#[derive(Debug, thiserror::Error)]
pub enum GraphError {
    #[error("invalid graph configuration: {0}")]
    InvalidConfig(String),
    #[error("vector length {got} does not match vertex count {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid edge ({0}, {1})")]
    InvalidEdge(u64, u64),
    #[error("malformed graph file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Parameters of `G(N, d/N)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphConfig {
    pub n_vertices: usize,
    pub expected_degree: f64,
    pub seed: u64,
}

impl GraphConfig {
    pub fn new(n_vertices: usize, expected_degree: f64, seed: u64) -> Self {
        Self { n_vertices, expected_degree, seed }
    }

    /// Edge probability `d / N`.
    pub fn edge_probability(&self) -> f64 {
        self.expected_degree / self.n_vertices as f64
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        if self.n_vertices < 2 {
            return Err(GraphError::InvalidConfig(format!(
                "need at least 2 vertices, got {}",
                self.n_vertices
            )));
        }
        if self.n_vertices > Vertex::MAX as usize {
            return Err(GraphError::InvalidConfig(format!(
                "{} vertices exceed the 32-bit vertex id range",
                self.n_vertices
            )));
        }
        let p = self.edge_probability();
        if !p.is_finite() || p < 0.0 {
            return Err(GraphError::InvalidConfig(format!(
                "expected degree {} must be finite and non-negative",
                self.expected_degree
            )));
        }
        if p >= 1.0 {
            return Err(GraphError::InvalidConfig(format!(
                "edge probability {p} must be below 1"
            )));
        }
        Ok(())
    }
}

/// Immutable undirected simple graph. Neighbor lists are sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseGraph {
    offsets: Vec<usize>,
    neighbors: Vec<Vertex>,
    edge_count: usize,
}

impl SparseGraph {
    /// Builds a graph from an undirected edge list. Duplicates (in either
    /// orientation) are merged; self-loops and out-of-range ids are rejected.
    pub fn from_edges(
        n_vertices: usize,
        edges: impl IntoIterator<Item = (Vertex, Vertex)>,
    ) -> Result<Self, GraphError> {
        let mut pairs = Vec::new();
        for (u, v) in edges {
            if u == v || u as usize >= n_vertices || v as usize >= n_vertices {
                return Err(GraphError::InvalidEdge(u as u64, v as u64));
            }
            pairs.push(if u < v { (u, v) } else { (v, u) });
        }
        pairs.sort_unstable();
        pairs.dedup();
        Ok(Self::from_sorted_pairs(n_vertices, &pairs))
    }

    /// `pairs` must be sorted, deduplicated and have `u < v`.
    fn from_sorted_pairs(n_vertices: usize, pairs: &[(Vertex, Vertex)]) -> Self {
        let mut degree = vec![0usize; n_vertices];
        for &(u, v) in pairs {
            degree[u as usize] += 1;
            degree[v as usize] += 1;
        }
        let mut offsets = Vec::with_capacity(n_vertices + 1);
        offsets.push(0);
        let mut acc = 0;
        for d in &degree {
            acc += d;
            offsets.push(acc);
        }
        let mut cursor: Vec<usize> = offsets[..n_vertices].to_vec();
        let mut neighbors = vec![0 as Vertex; acc];
        // Lower neighbors of `v` arrive before any upper neighbor, and both in
        // ascending order, so each list comes out sorted.
        let mut by_upper: Vec<(Vertex, Vertex)> = pairs.iter().map(|&(u, v)| (v, u)).collect();
        by_upper.sort_unstable();
        for &(v, u) in &by_upper {
            neighbors[cursor[v as usize]] = u;
            cursor[v as usize] += 1;
        }
        for &(u, v) in pairs {
            neighbors[cursor[u as usize]] = v;
            cursor[u as usize] += 1;
        }
        Self { offsets, neighbors, edge_count: pairs.len() }
    }

    pub fn empty(n_vertices: usize) -> Self {
        Self::from_sorted_pairs(n_vertices, &[])
    }

    pub fn n_vertices(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    #[inline]
    pub fn neighbors(&self, v: Vertex) -> &[Vertex] {
        let v = v as usize;
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }

    #[inline]
    pub fn degree(&self, v: Vertex) -> usize {
        let v = v as usize;
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n_vertices() as Vertex).map(|v| self.degree(v)).max().unwrap_or(0)
    }

    pub fn has_edge(&self, u: Vertex, v: Vertex) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Edges as `(u, v)` with `u < v`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (Vertex, Vertex)> + '_ {
        (0..self.n_vertices() as Vertex).flat_map(move |u| {
            self.neighbors(u).iter().copied().filter(move |&v| v > u).map(move |v| (u, v))
        })
    }

    /// Copy of the graph without the given edges (orientation ignored).
    pub fn without_edges(&self, removed: &[(Vertex, Vertex)]) -> Self {
        let mut drop: Vec<(Vertex, Vertex)> =
            removed.iter().map(|&(u, v)| if u < v { (u, v) } else { (v, u) }).collect();
        drop.sort_unstable();
        let kept: Vec<_> = self.edges().filter(|e| drop.binary_search(e).is_err()).collect();
        Self::from_sorted_pairs(self.n_vertices(), &kept)
    }

    /// Induced subgraph on `vertices` (need not be sorted). Local id `i`
    /// corresponds to `vertices[i]`.
    pub fn induced_subgraph(&self, vertices: &[Vertex]) -> SparseGraph {
        let local: std::collections::HashMap<Vertex, Vertex> =
            vertices.iter().enumerate().map(|(i, &v)| (v, i as Vertex)).collect();
        let mut pairs = Vec::new();
        for (i, &v) in vertices.iter().enumerate() {
            for w in self.neighbors(v) {
                if let Some(&j) = local.get(w) {
                    if (i as Vertex) < j {
                        pairs.push((i as Vertex, j));
                    }
                }
            }
        }
        pairs.sort_unstable();
        Self::from_sorted_pairs(vertices.len(), &pairs)
    }

    /// Connected components, each sorted ascending; components are ordered
    /// by their smallest vertex.
    pub fn components(&self) -> Vec<Vec<Vertex>> {
        let n = self.n_vertices();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        let mut stack = Vec::new();
        for s in 0..n {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            stack.push(s as Vertex);
            let mut comp = Vec::new();
            while let Some(v) = stack.pop() {
                comp.push(v);
                for &w in self.neighbors(v) {
                    if !seen[w as usize] {
                        seen[w as usize] = true;
                        stack.push(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Checks symmetry, sortedness, absence of loops and duplicates, and the
    /// handshake identity. Returns a description of the first violation.
    pub fn check_invariants(&self) -> Result<(), String> {
        let mut total = 0;
        for u in 0..self.n_vertices() as Vertex {
            let nb = self.neighbors(u);
            total += nb.len();
            for (i, &v) in nb.iter().enumerate() {
                if v == u {
                    return Err(format!("self-loop at {u}"));
                }
                if i > 0 && nb[i - 1] >= v {
                    return Err(format!("neighbors of {u} not strictly sorted"));
                }
                if !self.has_edge(v, u) {
                    return Err(format!("edge ({u}, {v}) not symmetric"));
                }
            }
        }
        if total != 2 * self.edge_count {
            return Err(format!("adjacency length {total} != 2 * {}", self.edge_count));
        }
        Ok(())
    }
}

/// Samples `G(N, d/N)` from the graph stream of `config.seed`.
pub fn sample_er(config: &GraphConfig) -> Result<SparseGraph, GraphError> {
    sample_er_replicate(config, 0)
}

/// Samples ensemble member `replicate` of `G(N, d/N)` under `config.seed`.
pub fn sample_er_replicate(config: &GraphConfig, replicate: u64) -> Result<SparseGraph, GraphError> {
    config.validate()?;
    let mut rng = rng::stream(config.seed, replicate, Purpose::Graph);
    let pairs = sample_pairs(config.n_vertices, config.edge_probability(), &mut rng);
    Ok(SparseGraph::from_sorted_pairs(config.n_vertices, &pairs))
}

/// Geometric skipping over the lexicographic sequence of pairs `(w, v)`,
/// `w < v` (ordered by `v`, then `w`). Expected work is `O(N + pN²)`.
/// Returns pairs as `(w, v)` sorted ascending.
pub(crate) fn sample_pairs(n: usize, p: f64, rng: &mut StreamRng) -> Vec<(Vertex, Vertex)> {
    let mut out = Vec::new();
    if n < 2 || p <= 0.0 {
        return out;
    }
    let log_q = (-p).ln_1p();
    let mut v: u64 = 1;
    let mut w: i64 = -1;
    let n = n as u64;
    loop {
        let r: f64 = rng.random();
        let skip = ((-r).ln_1p() / log_q).floor();
        // A skip beyond every remaining pair ends the scan.
        if !(skip < (n * n) as f64) {
            break;
        }
        w += 1 + skip as i64;
        while w >= v as i64 && v < n {
            w -= v as i64;
            v += 1;
        }
        if v >= n {
            break;
        }
        out.push((w as Vertex, v as Vertex));
    }
    out.sort_unstable();
    out
}

const PARALLEL_MATVEC_MIN: usize = 1 << 15;

/// Adjacency operator applied to a dense vector: `out[u] = Σ_{w~u} v[w]`.
pub fn matvec<S: Scalar>(g: &SparseGraph, v: &[S]) -> Result<Vec<S>, GraphError> {
    let mut out = vec![S::zero(); g.n_vertices()];
    matvec_into(g, v, &mut out)?;
    Ok(out)
}

/// In-place variant of [`matvec`].
pub fn matvec_into<S: Scalar>(g: &SparseGraph, v: &[S], out: &mut [S]) -> Result<(), GraphError> {
    let n = g.n_vertices();
    if v.len() != n {
        return Err(GraphError::DimensionMismatch { expected: n, got: v.len() });
    }
    if out.len() != n {
        return Err(GraphError::DimensionMismatch { expected: n, got: out.len() });
    }
    let row = |u: usize| -> S {
        g.neighbors(u as Vertex).iter().map(|&w| v[w as usize]).sum()
    };
    if n >= PARALLEL_MATVEC_MIN {
        out.par_iter_mut().enumerate().for_each(|(u, o)| *o = row(u));
    } else {
        out.iter_mut().enumerate().for_each(|(u, o)| *o = row(u));
    }
    Ok(())
}
