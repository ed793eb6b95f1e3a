//! Edge pruning around rough-regime vertices and the rough test vector.

use std::collections::HashSet;
use std::io::Write;

use serde::Serialize;

use crate::graph::{write_edge_list, GraphError, SparseGraph, Vertex};
use crate::local::{extract_ball, local_stats};
use crate::sparse_eigen::{residual_norm, SparseVector};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PruneError {
    #[error("invalid pruning constants c1 = {c1}, c2 = {c2} (need c1 >= 2, c2 >= 5)")]
    InvalidConstants { c1: usize, c2: usize },
    #[error("pruned 3-ball around {vertex} is not a tree")]
    NotATree { vertex: Vertex, ball: Vec<Vertex> },
    #[error("pruned 3-balls around {vertex} and {other} intersect at {shared}")]
    Overlap { vertex: Vertex, other: Vertex, shared: Vertex },
    #[error("{0} is not a rough-regime vertex")]
    NotRough(Vertex),
    #[error("{0} is isolated after pruning")]
    Isolated(Vertex),
}

/// Pruned-graph statistics at one rough vertex.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HatStats {
    pub vertex: Vertex,
    pub alpha: usize,
    pub alpha_hat: usize,
    pub beta_hat: usize,
    /// `|Ŝ_i|`, `i = 0..=3`.
    pub sphere_sizes: Vec<usize>,
    /// `Σ_{y∈Ŝ₁} (N̂_y − β̂/α̂)²`.
    pub child_spread: f64,
}

#[derive(Debug, Clone)]
pub struct PrunedGraph {
    pub c1: usize,
    pub c2: usize,
    /// `Ĝ`.
    pub graph: SparseGraph,
    pub rough: Vec<Vertex>,
    /// `∪ P_x`, as `(u, v)` with `u < v`, sorted.
    pub removed_edges: Vec<(Vertex, Vertex)>,
    pub hat_stats: Vec<HatStats>,
    /// Maximum degree of `G − Ĝ`.
    pub removed_max_degree: usize,
}

impl PrunedGraph {
    /// `c1 + c2 − 2`.
    pub fn removal_bound(&self) -> usize {
        self.c1 + self.c2 - 2
    }

    pub fn within_removal_bound(&self) -> bool {
        self.removed_max_degree <= self.removal_bound()
            && self.hat_stats.iter().all(|h| h.alpha - h.alpha_hat <= self.removal_bound())
    }

    pub fn write_removed_edges(&self, w: impl Write) -> Result<(), GraphError> {
        let h = SparseGraph::from_edges(self.graph.n_vertices(), self.removed_edges.iter().copied())?;
        write_edge_list(&h, w)
    }
}

/// BFS over `G` minus removed edges, with an epoch-stamped visited array.
struct Walker<'a> {
    g: &'a SparseGraph,
    removed: HashSet<(Vertex, Vertex)>,
    stamp: Vec<u32>,
    epoch: u32,
}

fn key(u: Vertex, v: Vertex) -> (Vertex, Vertex) {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

impl<'a> Walker<'a> {
    fn new(g: &'a SparseGraph) -> Self {
        Self { g, removed: HashSet::new(), stamp: vec![0; g.n_vertices()], epoch: 0 }
    }

    fn live(&self, u: Vertex, v: Vertex) -> bool {
        !self.removed.contains(&key(u, v))
    }

    fn neighbors(&self, u: Vertex) -> impl Iterator<Item = Vertex> + '_ {
        self.g.neighbors(u).iter().copied().filter(move |&v| self.live(u, v))
    }

    /// Vertices within `depth` of `y`, never traversing `(x, y)` and, if
    /// `block_x`, never entering `x`. Stops early once `stop` matches.
    fn reach(&mut self, x: Vertex, y: Vertex, depth: usize, block_x: bool, stop: impl Fn(Vertex) -> bool) -> (Vec<Vertex>, bool) {
        self.epoch += 1;
        let e = self.epoch;
        self.stamp[y as usize] = e;
        if block_x {
            self.stamp[x as usize] = e;
        }
        if y != x && stop(y) {
            return (vec![y], true);
        }
        let mut seen = vec![y];
        let mut frontier = vec![y];
        for _ in 0..depth {
            let mut next = Vec::new();
            for &u in &frontier {
                for v in self.neighbors(u).collect::<Vec<_>>() {
                    if u == y && v == x {
                        continue;
                    }
                    if self.stamp[v as usize] != e {
                        self.stamp[v as usize] = e;
                        if stop(v) {
                            return (seen, true);
                        }
                        seen.push(v);
                        next.push(v);
                    }
                }
            }
            frontier = next;
        }
        (seen, false)
    }

    fn induced_edges(&self, set: &[Vertex]) -> usize {
        let members: HashSet<Vertex> = set.iter().copied().collect();
        set.iter().map(|&u| self.neighbors(u).filter(|v| members.contains(v)).count()).sum::<usize>() / 2
    }
}

/// Prunes edges so that the radius-3 balls around `rough` become disjoint
/// trees. Vertices are handled in ascending order, each in two phases:
///
/// 1. drop `(x, y)` if `x` is reachable from `y` within 6 steps without the
///    edge `(x, y)` (a cycle through `x` inside `B_3(x)`), or if the
///    vertices within 2 steps of `y` in `G − x` induce a non-tree;
/// 2. drop `(x, y)` if another rough vertex is reachable from `y` within 5
///    steps without `(x, y)` (which would bring it within distance 6).
///
/// Both phases work on the graph with all earlier deletions applied. Since
/// later deletions never create paths, the resulting balls stay disjoint
/// trees and a second pass removes nothing.
pub fn prune(g: &SparseGraph, rough: &[Vertex], c1: usize, c2: usize) -> Result<PrunedGraph, PruneError> {
    if c1 < 2 || c2 < 5 {
        return Err(PruneError::InvalidConstants { c1, c2 });
    }
    let mut rough: Vec<Vertex> = rough.to_vec();
    rough.sort_unstable();
    rough.dedup();
    let is_rough = {
        let mut flag = vec![false; g.n_vertices()];
        rough.iter().for_each(|&x| flag[x as usize] = true);
        flag
    };
    let mut walk = Walker::new(g);
    for &x in &rough {
        let ys: Vec<Vertex> = walk.neighbors(x).collect();
        for &y in &ys {
            let (_, cycle) = walk.reach(x, y, 6, false, |v| v == x);
            let cyclic_branch = !cycle && {
                let (near, _) = walk.reach(x, y, 2, true, |_| false);
                walk.induced_edges(&near) + 1 != near.len()
            };
            if cycle || cyclic_branch {
                walk.removed.insert(key(x, y));
            }
        }
        for &y in &ys {
            if !walk.live(x, y) {
                continue;
            }
            let (_, hit) = walk.reach(x, y, 5, false, |v| v != x && is_rough[v as usize]);
            if hit {
                walk.removed.insert(key(x, y));
            }
        }
    }

    let mut removed_edges: Vec<_> = walk.removed.into_iter().collect();
    removed_edges.sort_unstable();
    let graph = g.without_edges(&removed_edges);
    let mut removed_degree = std::collections::HashMap::<Vertex, usize>::new();
    for &(u, v) in &removed_edges {
        *removed_degree.entry(u).or_default() += 1;
        *removed_degree.entry(v).or_default() += 1;
    }
    let removed_max_degree = removed_degree.values().copied().max().unwrap_or(0);

    check_postconditions(&graph, &rough)?;
    let hat_stats = rough.iter().map(|&x| hat_stats(g, &graph, x)).collect();
    Ok(PrunedGraph { c1, c2, graph, rough, removed_edges, hat_stats, removed_max_degree })
}

/// Radius-3 balls around `rough` in `graph` are trees and pairwise disjoint.
pub fn check_postconditions(graph: &SparseGraph, rough: &[Vertex]) -> Result<(), PruneError> {
    const FREE: Vertex = Vertex::MAX;
    let mut owner = vec![FREE; graph.n_vertices()];
    for &x in rough {
        let ball = extract_ball(graph, x, 3);
        if !ball.is_tree() {
            return Err(PruneError::NotATree { vertex: x, ball: ball.vertices().to_vec() });
        }
        for &v in ball.vertices() {
            match owner[v as usize] {
                FREE => owner[v as usize] = x,
                o => return Err(PruneError::Overlap { vertex: x, other: o, shared: v }),
            }
        }
    }
    Ok(())
}

fn hat_stats(g: &SparseGraph, pruned: &SparseGraph, x: Vertex) -> HatStats {
    let ball = extract_ball(pruned, x, 3);
    let s = local_stats(&ball);
    let mean = if s.alpha > 0 { s.beta as f64 / s.alpha as f64 } else { 0.0 };
    let child_spread = ball.level_range(1).map(|y| (ball.child_count(y) as f64 - mean).powi(2)).sum();
    HatStats {
        vertex: x,
        alpha: g.degree(x),
        alpha_hat: s.alpha,
        beta_hat: s.beta,
        sphere_sizes: s.sphere_sizes,
        child_spread,
    }
}

/// The rough-regime test vector at `x` with its residual against `A_G`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoughTestVector {
    pub vertex: Vertex,
    pub sigma: i8,
    pub vector: SparseVector<f64>,
    /// `√(α̂ + β̂/α̂)`.
    pub lambda_hat: f64,
    /// `√(α + β/α)` from the unpruned graph.
    pub lambda: f64,
    /// `‖A_G w − σλ w‖`.
    pub residual: f64,
    /// `‖A_Ĝ w − σλ̂ w‖`.
    pub pruned_residual: f64,
}

/// `w = (1/√2)(√α̂/λ̂ 1_x + σ/√α̂ 1_{Ŝ₁} + 1/(√α̂ λ̂) 1_{Ŝ₂})` on the pruned
/// ball of `x`.
pub fn rough_test_vector(pg: &PrunedGraph, g: &SparseGraph, x: Vertex, sigma: i8) -> Result<RoughTestVector, PruneError> {
    if pg.rough.binary_search(&x).is_err() {
        return Err(PruneError::NotRough(x));
    }
    let ball = extract_ball(&pg.graph, x, 2);
    let hat = local_stats(&ball);
    if hat.alpha == 0 {
        return Err(PruneError::Isolated(x));
    }
    let s = if sigma < 0 { -1.0 } else { 1.0 };
    let a = hat.alpha as f64;
    let lambda_hat = (a + hat.beta as f64 / a).sqrt();
    let c = std::f64::consts::FRAC_1_SQRT_2;
    let mut entries: Vec<(Vertex, f64)> = vec![(x, c * a.sqrt() / lambda_hat)];
    entries.extend(ball.level(1).iter().map(|&y| (y, c * s / a.sqrt())));
    entries.extend(ball.level(2).iter().map(|&z| (z, c / (a.sqrt() * lambda_hat))));
    entries.sort_unstable_by_key(|e| e.0);
    let vector = SparseVector { indices: entries.iter().map(|e| e.0).collect(), values: entries.iter().map(|e| e.1).collect() };

    let full = local_stats(&extract_ball(g, x, 2));
    let fa = full.alpha as f64;
    let lambda = (fa + full.beta as f64 / fa).sqrt();
    Ok(RoughTestVector {
        vertex: x,
        sigma: s as i8,
        residual: residual_norm(g, s * lambda, &vector),
        pruned_residual: residual_norm(&pg.graph, s * lambda_hat, &vector),
        vector,
        lambda_hat,
        lambda,
    })
}
