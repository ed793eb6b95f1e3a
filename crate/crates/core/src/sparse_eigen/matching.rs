use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use super::{top_k, LanczosOptions, SpectralResult};
use crate::graph::{SparseGraph, Vertex};
use crate::local::{extract_ball, local_stats, LocalStats, RegimePartition, RootedBall};
use crate::tree_eig::{cf_eigenvalue, estimate, BallEigenPair, EstimatorKind, DEFAULT_TOL};
use crate::Scalar;

/// A fine-regime vertex with its ball, statistics and top ball eigenpair.
#[derive(Debug, Clone)]
pub struct FineBall {
    pub vertex: Vertex,
    pub ball: RootedBall,
    pub stats: LocalStats,
    pub pair: BallEigenPair<f64>,
}

/// Top eigenpair of `A_{B_r(x)}`: the continued fraction on trees, a direct
/// eigensolve otherwise. The vector is oriented to be non-negative.
pub fn ball_top_pair(g: &SparseGraph, ball: &RootedBall) -> BallEigenPair<f64> {
    if let Ok(pair) = cf_eigenvalue(ball, DEFAULT_TOL) {
        return pair;
    }
    let sub = ball.subgraph(g);
    let res = top_k::<f64>(&sub, 1, &LanczosOptions::default()).expect("a ball with a cycle has at least 3 vertices");
    let mut vector = res.eigenvectors[0].to_dense(ball.len());
    if vector.iter().sum::<f64>() < 0.0 {
        vector.iter_mut().for_each(|x| *x = -*x);
    }
    BallEigenPair {
        root: ball.root(),
        lambda: res.eigenvalues[0],
        vector,
        iterations: res.matvec_count,
        residual: res.residuals[0],
    }
}

pub fn fine_balls(g: &SparseGraph, part: &RegimePartition, r: usize) -> Vec<FineBall> {
    part.fine
        .par_iter()
        .map(|&x| {
            let ball = extract_ball(g, x, r);
            let stats = local_stats(&ball);
            let pair = ball_top_pair(g, &ball);
            FineBall { vertex: x, ball, stats, pair }
        })
        .collect()
}

/// Rank of each vertex under descending lexicographic order of `(α, β)`,
/// with the size of its tie group. Tied vertices share the smallest rank.
pub fn lex_ranks(balls: &[FineBall]) -> HashMap<Vertex, (usize, usize)> {
    let mut keys: Vec<(usize, usize)> = balls.iter().map(|b| (b.stats.alpha, b.stats.beta)).collect();
    keys.sort_unstable_by(|a, b| b.cmp(a));
    balls
        .iter()
        .map(|b| {
            let key = (b.stats.alpha, b.stats.beta);
            let first = keys.partition_point(|k| *k > key);
            let last = keys.partition_point(|k| *k >= key);
            (b.vertex, (first + 1, last - first))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenVertexMatch {
    /// Position in the spectral result, 0-based.
    pub index: usize,
    pub eigenvalue: f64,
    /// Vertex carrying the largest eigenvector entry.
    pub vertex: Vertex,
    /// False when that vertex is not in 𝒲; the fields below are then empty.
    pub in_fine: bool,
    /// Sign-aligned `‖v_k − w₊(x)‖`, in `[0, √2]` for unit vectors.
    pub overlap: Option<f64>,
    pub lex_rank: Option<usize>,
    pub lex_group_size: Option<usize>,
    /// `|λ_k − √(α + β/α + (d²+d)/α)|`.
    pub formula_error: Option<f64>,
    /// Eigenvalue rank `index + 1` falls in the lexicographic tie group.
    pub lex_agreement: Option<bool>,
    pub unresolved: bool,
}

pub fn match_eigenpairs<S: Scalar>(res: &SpectralResult<S>, balls: &[FineBall], d: f64) -> Vec<EigenVertexMatch> {
    let ranks = lex_ranks(balls);
    let by_vertex: HashMap<Vertex, &FineBall> = balls.iter().map(|b| (b.vertex, b)).collect();
    res.eigenvalues
        .iter()
        .zip(&res.eigenvectors)
        .enumerate()
        .filter_map(|(k, (&lambda, v))| {
            let x = v.argmax_abs()?;
            let lambda = lambda.to_f64_lossy();
            let mut m = EigenVertexMatch {
                index: k,
                eigenvalue: lambda,
                vertex: x,
                in_fine: false,
                overlap: None,
                lex_rank: None,
                lex_group_size: None,
                formula_error: None,
                lex_agreement: None,
                unresolved: res.unresolved[k],
            };
            if let Some(fb) = by_vertex.get(&x) {
                let dot: f64 = fb
                    .ball
                    .vertices()
                    .iter()
                    .zip(&fb.pair.vector)
                    .map(|(&u, &w)| w * v.get(u).to_f64_lossy())
                    .sum();
                let sign = if dot < 0.0 { -1.0 } else { 1.0 };
                // Summed entrywise: `2 − 2|⟨v, w⟩|` loses half the digits.
                let mut sq = 0.0;
                for (&u, &vu) in v.indices.iter().zip(&v.values) {
                    let wu = fb.ball.local_index(u).map_or(0.0, |j| fb.pair.vector[j]);
                    sq += (vu.to_f64_lossy() - sign * wu).powi(2);
                }
                for (&u, &wu) in fb.ball.vertices().iter().zip(&fb.pair.vector) {
                    if v.indices.binary_search(&u).is_err() {
                        sq += wu * wu;
                    }
                }
                let (rank, group) = ranks[&x];
                m.in_fine = true;
                m.overlap = Some(sq.sqrt());
                m.lex_rank = Some(rank);
                m.lex_group_size = Some(group);
                m.formula_error =
                    estimate(&fb.stats, d, EstimatorKind::Simplified).ok().map(|e| (lambda - e.value).abs());
                m.lex_agreement = Some(rank <= k + 1 && k + 1 < rank + group);
            }
            Some(m)
        })
        .collect()
}
