mod common;

use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spectral_edge::graph::{sample_er, GraphConfig, SparseGraph};
use spectral_edge::local::extract_ball;
use spectral_edge::sparse_eigen::{bottom_k, residual_norm, top_k, top_k_global, LanczosOptions};
use spectral_edge::tree_eig::{cf_eigenvalue, forest_bound};

fn ball_vector_in_graph_order(g: &SparseGraph, root: u32, w: &[f64]) -> Vec<f64> {
    let ball = extract_ball(g, root, g.n_vertices());
    let mut out = vec![0.0; g.n_vertices()];
    for (i, &v) in ball.vertices().iter().enumerate() {
        out[v as usize] = w[i];
    }
    out
}

#[test]
fn cf_matches_dense_on_random_trees() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..40 {
        let n = rng.random_range(2..=120);
        let cap = rng.random_range(2..=12);
        let g = SparseGraph::from_edges(n, random_tree(n, cap, &mut rng)).unwrap();
        let root = rng.random_range(0..n) as u32;
        let pair = cf_eigenvalue::<f64>(&extract_ball(&g, root, n), 1e-13).unwrap();
        let (vals, vecs) = dense_eigen(&g);
        assert!((pair.lambda - vals[0]).abs() < 1e-10, "{} vs {}", pair.lambda, vals[0]);
        let w = ball_vector_in_graph_order(&g, root, &pair.vector);
        assert!(aligned_distance(&w, &vecs[0]) < 1e-8);
    }
}

#[test]
fn cf_single_precision_is_close() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..20 {
        let n = rng.random_range(2..=80);
        let g = SparseGraph::from_edges(n, random_tree(n, 8, &mut rng)).unwrap();
        let pair = cf_eigenvalue::<f32>(&extract_ball(&g, 0, n), 1e-6).unwrap();
        let (vals, _) = dense_eigen(&g);
        assert!((pair.lambda as f64 - vals[0]).abs() < 1e-4);
    }
}

#[test]
fn lanczos_matches_dense_at_both_edges() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for rep in 0..12 {
        let n = rng.random_range(30..=300);
        let d = rng.random_range(0.8..6.0);
        let g = sample_er(&GraphConfig::new(n, d, rep)).unwrap();
        let opts = LanczosOptions { seed: 5, replicate: rep, ..Default::default() };
        let (vals, _) = dense_eigen(&g);
        let top = top_k::<f64>(&g, 5, &opts).unwrap();
        let bottom = bottom_k::<f64>(&g, 5, &opts).unwrap();
        for i in 0..5 {
            assert!((top.eigenvalues[i] - vals[i]).abs() < 1e-9, "rep {rep} top {i}");
            assert!((bottom.eigenvalues[i] - vals[n - 1 - i]).abs() < 1e-9, "rep {rep} bottom {i}");
            let r = residual_norm(&g, top.eigenvalues[i], &top.eigenvectors[i]);
            assert!(r <= 1e-8, "residual {r}");
        }
    }
}

#[test]
fn global_and_componentwise_agree() {
    let g = sample_er(&GraphConfig::new(400, 3.0, 3)).unwrap();
    let opts = LanczosOptions::default();
    let a = top_k::<f64>(&g, 4, &opts).unwrap();
    let b = top_k_global::<f64>(&g, 4, &opts).unwrap();
    for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
        assert!((x - y).abs() < 1e-8);
    }
}

#[test]
fn forests_of_degree_five_stay_below_four() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let bound = forest_bound(5).unwrap();
    assert_eq!(bound, 4.0);
    for _ in 0..50 {
        let n = rng.random_range(10..=150);
        let g = random_forest(n, 5, &mut rng);
        let (vals, _) = dense_eigen(&g);
        assert!(vals[0] <= bound + 1e-12);
    }
}
