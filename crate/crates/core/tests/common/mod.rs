#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use spectral_edge::graph::{SparseGraph, Vertex};

/// Random tree on `n` vertices with every degree ≤ `max_degree`; vertex
/// `i > 0` hangs off a uniformly chosen earlier vertex with spare capacity.
pub fn random_tree(n: usize, max_degree: usize, rng: &mut impl Rng) -> Vec<(Vertex, Vertex)> {
    random_tree_at(0, n, max_degree, rng)
}

fn random_tree_at(offset: usize, n: usize, max_degree: usize, rng: &mut impl Rng) -> Vec<(Vertex, Vertex)> {
    let mut deg = vec![0usize; n];
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    for i in 1..n {
        let open: Vec<usize> = (0..i).filter(|&j| deg[j] < max_degree).collect();
        let p = open[rng.random_range(0..open.len())];
        deg[p] += 1;
        deg[i] += 1;
        edges.push(((offset + p) as Vertex, (offset + i) as Vertex));
    }
    edges
}

/// Disjoint union of random trees covering `n` vertices.
pub fn random_forest(n: usize, max_degree: usize, rng: &mut impl Rng) -> SparseGraph {
    let mut edges = Vec::new();
    let mut start = 0;
    while start < n {
        let size = rng.random_range(1..=(n - start));
        edges.extend(random_tree_at(start, size, max_degree, rng));
        start += size;
    }
    SparseGraph::from_edges(n, edges).unwrap()
}

pub fn dense(g: &SparseGraph) -> DMatrix<f64> {
    let n = g.n_vertices();
    let mut a = DMatrix::zeros(n, n);
    for (u, v) in g.edges() {
        a[(u as usize, v as usize)] = 1.0;
        a[(v as usize, u as usize)] = 1.0;
    }
    a
}

/// Eigenvalues descending with matching eigenvector columns.
pub fn dense_eigen(g: &SparseGraph) -> (Vec<f64>, Vec<Vec<f64>>) {
    let e = SymmetricEigen::new(dense(g));
    let mut order: Vec<usize> = (0..e.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| e.eigenvalues[j].total_cmp(&e.eigenvalues[i]));
    let vals = order.iter().map(|&i| e.eigenvalues[i]).collect();
    let vecs = order.iter().map(|&i| e.eigenvectors.column(i).iter().copied().collect()).collect();
    (vals, vecs)
}

/// ℓ² distance after aligning signs.
pub fn aligned_distance(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let s = if dot < 0.0 { -1.0 } else { 1.0 };
    a.iter().zip(b).map(|(x, y)| (x - s * y).powi(2)).sum::<f64>().sqrt()
}
