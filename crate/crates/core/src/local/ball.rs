use std::collections::HashMap;

use crate::graph::{SparseGraph, Vertex};

/// Breadth-first ball `B_r(root)` with canonical BFS parents.
///
/// Vertices are stored level by level, each level sorted by id; local index
/// `i` refers to `vertices()[i]`, so the root has index 0.
#[derive(Debug, Clone, PartialEq)]
pub struct RootedBall {
    root: Vertex,
    radius: usize,
    vertices: Vec<Vertex>,
    level_start: Vec<usize>,
    /// Local index of the BFS parent; `usize::MAX` for the root.
    parent: Vec<usize>,
    /// `N_y`: neighbors one level further from the root than `y`. For the
    /// outermost level these lie outside the ball.
    child_counts: Vec<usize>,
    intra_ball_edges: usize,
    index: HashMap<Vertex, usize>,
}

impl RootedBall {
    pub fn root(&self) -> Vertex {
        self.root
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Number of non-empty levels (at most `radius + 1`).
    pub fn depth(&self) -> usize {
        self.level_start.len() - 1
    }

    /// Sphere `S_i`; empty past the last populated level.
    pub fn level(&self, i: usize) -> &[Vertex] {
        if i >= self.depth() {
            return &[];
        }
        &self.vertices[self.level_start[i]..self.level_start[i + 1]]
    }

    /// Local index range of sphere `S_i`.
    pub fn level_range(&self, i: usize) -> std::ops::Range<usize> {
        if i >= self.depth() {
            let n = self.len();
            return n..n;
        }
        self.level_start[i]..self.level_start[i + 1]
    }

    /// `|S_i|` for `i = 0..=radius`.
    pub fn sphere_sizes(&self) -> Vec<usize> {
        (0..=self.radius).map(|i| self.level(i).len()).collect()
    }

    pub fn level_of(&self, local: usize) -> usize {
        self.level_start.partition_point(|&s| s <= local) - 1
    }

    pub fn local_index(&self, v: Vertex) -> Option<usize> {
        self.index.get(&v).copied()
    }

    pub fn contains(&self, v: Vertex) -> bool {
        self.index.contains_key(&v)
    }

    pub fn parent(&self, local: usize) -> Option<usize> {
        (local != 0).then(|| self.parent[local])
    }

    pub fn child_count(&self, local: usize) -> usize {
        self.child_counts[local]
    }

    pub fn child_counts(&self) -> &[usize] {
        &self.child_counts
    }

    /// Local indices of the BFS children of `local`.
    pub fn children(&self, local: usize) -> impl Iterator<Item = usize> + '_ {
        let next = self.level_range(self.level_of(local) + 1);
        next.filter(move |&c| self.parent[c] == local)
    }

    pub fn intra_ball_edges(&self) -> usize {
        self.intra_ball_edges
    }

    pub fn is_tree(&self) -> bool {
        self.intra_ball_edges + 1 == self.vertices.len()
    }

    /// Induced subgraph in local indexing.
    pub fn subgraph(&self, g: &SparseGraph) -> SparseGraph {
        g.induced_subgraph(&self.vertices)
    }
}

/// BFS from `root` to depth `radius`. Levels are expanded in ascending id
/// order, so a vertex's parent is its smallest-id neighbor on the previous
/// level.
pub fn extract_ball(g: &SparseGraph, root: Vertex, radius: usize) -> RootedBall {
    assert!((root as usize) < g.n_vertices(), "root {root} out of range");
    let mut index = HashMap::new();
    index.insert(root, 0usize);
    let mut vertices = vec![root];
    let mut parent = vec![usize::MAX];
    let mut level_start = vec![0, 1];
    for _ in 0..radius {
        let (lo, hi) = (level_start[level_start.len() - 2], level_start[level_start.len() - 1]);
        let mut next: Vec<(Vertex, usize)> = Vec::new();
        for p in lo..hi {
            for &w in g.neighbors(vertices[p]) {
                if let std::collections::hash_map::Entry::Vacant(e) = index.entry(w) {
                    e.insert(usize::MAX);
                    next.push((w, p));
                }
            }
        }
        if next.is_empty() {
            break;
        }
        next.sort_unstable();
        for (w, p) in next {
            index.insert(w, vertices.len());
            vertices.push(w);
            parent.push(p);
        }
        level_start.push(vertices.len());
    }

    let level_of = |i: usize| level_start.partition_point(|&s| s <= i) - 1;
    let mut child_counts = vec![0; vertices.len()];
    let mut twice_edges = 0;
    for (i, &v) in vertices.iter().enumerate() {
        let li = level_of(i);
        for w in g.neighbors(v) {
            match index.get(w) {
                Some(&j) => {
                    twice_edges += 1;
                    if level_of(j) == li + 1 {
                        child_counts[i] += 1;
                    }
                }
                // Only the outermost level has neighbors outside the ball,
                // all at distance r + 1.
                None => {
                    debug_assert_eq!(li, radius);
                    child_counts[i] += 1;
                }
            }
        }
    }
    RootedBall {
        root,
        radius,
        vertices,
        level_start,
        parent,
        child_counts,
        intra_ball_edges: twice_edges / 2,
        index,
    }
}
