//! Balls, local statistics, degree regimes and the structural event.

mod ball;
mod omega;
mod regimes;

pub use ball::{extract_ball, RootedBall};
pub use omega::{check_omega, check_omega_with, OmegaReport, OMEGA_ENVELOPE_CONSTANT};
pub use regimes::{classify_regimes, RegimeError, RegimePartition, RegimeThresholds};

use std::io::Write;

use serde::Serialize;

use crate::graph::{SparseGraph, Vertex};

/// The inputs of the eigenvalue formulas at one vertex.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LocalStats {
    pub vertex: Vertex,
    /// `|S₁|`, the degree.
    pub alpha: usize,
    /// `Σ_{y∈S₁} N_y`.
    pub beta: usize,
    /// `Σ_{y∈S₁} N_y²`.
    pub beta2: usize,
    /// `Σ_{y∈S₂} N_y`; needs radius ≥ 3.
    pub beta11: Option<usize>,
    pub sphere_sizes: Vec<usize>,
    /// On non-tree balls the child counts use all next-level neighbors, so
    /// `beta` and `beta11` can exceed the sphere sizes.
    pub is_tree: bool,
}

pub fn local_stats(ball: &RootedBall) -> LocalStats {
    let s1 = ball.level_range(1);
    let beta = s1.clone().map(|y| ball.child_count(y)).sum();
    let beta2 = s1.map(|y| ball.child_count(y).pow(2)).sum();
    let beta11 = (ball.radius() >= 3).then(|| ball.level_range(2).map(|y| ball.child_count(y)).sum());
    LocalStats {
        vertex: ball.root(),
        // The root's children are exactly its neighbors.
        alpha: if ball.radius() == 0 { ball.child_count(0) } else { ball.level(1).len() },
        beta,
        beta2,
        beta11,
        sphere_sizes: ball.sphere_sizes(),
        is_tree: ball.is_tree(),
    }
}

/// Statistics at each vertex of `vertices` over balls of radius `r`.
pub fn batch_stats(g: &SparseGraph, vertices: &[Vertex], r: usize) -> Vec<LocalStats> {
    use rayon::prelude::*;
    vertices.par_iter().map(|&v| local_stats(&extract_ball(g, v, r))).collect()
}

/// CSV with columns `vertex, alpha, beta, beta2, beta11, s1..s_r, is_tree`.
/// A missing `beta11` is written as an empty field.
pub fn write_stats_csv(stats: &[LocalStats], r: usize, w: impl Write) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header: Vec<String> = ["vertex", "alpha", "beta", "beta2", "beta11"].map(String::from).into();
    header.extend((1..=r).map(|i| format!("s{i}")));
    header.push("is_tree".into());
    out.write_record(&header)?;
    for s in stats {
        let mut row = vec![
            s.vertex.to_string(),
            s.alpha.to_string(),
            s.beta.to_string(),
            s.beta2.to_string(),
            s.beta11.map(|b| b.to_string()).unwrap_or_default(),
        ];
        row.extend((1..=r).map(|i| s.sphere_sizes.get(i).copied().unwrap_or(0).to_string()));
        row.push(s.is_tree.to_string());
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(n: u32) -> SparseGraph {
        SparseGraph::from_edges(n as usize, (1..n).map(|i| (i - 1, i))).unwrap()
    }

    /// Root 0 with `alpha` children, each with `c` children.
    pub(crate) fn spider(alpha: u32, c: u32) -> SparseGraph {
        let mut edges = Vec::new();
        let mut next = alpha + 1;
        for y in 1..=alpha {
            edges.push((0, y));
            for _ in 0..c {
                edges.push((y, next));
                next += 1;
            }
        }
        SparseGraph::from_edges(next as usize, edges).unwrap()
    }

    #[test]
    fn path_ball() {
        let g = path(3);
        let ball = extract_ball(&g, 0, 2);
        assert_eq!(ball.level(0), &[0]);
        assert_eq!(ball.level(1), &[1]);
        assert_eq!(ball.level(2), &[2]);
        assert_eq!(ball.child_counts(), &[1, 1, 0]);
        assert!(ball.is_tree());
        assert_eq!(ball.parent(2), Some(1));
    }

    #[test]
    fn triangle_is_not_a_tree() {
        let g = SparseGraph::from_edges(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
        let ball = extract_ball(&g, 1, 1);
        assert_eq!(ball.len(), 3);
        assert_eq!(ball.intra_ball_edges(), 3);
        assert!(!ball.is_tree());
    }

    #[test]
    fn parent_is_smallest_id_discoverer() {
        // 0 - {3, 1}, both adjacent to 2.
        let g = SparseGraph::from_edges(4, [(0, 3), (0, 1), (1, 2), (3, 2)]).unwrap();
        let ball = extract_ball(&g, 0, 2);
        let two = ball.local_index(2).unwrap();
        assert_eq!(ball.vertices()[ball.parent(two).unwrap()], 1);
        assert_eq!(ball.child_count(ball.local_index(3).unwrap()), 1);
    }

    #[test]
    fn stats_of_two_level_spider() {
        // The leaves at level 2 of a radius-3 ball have no children.
        let ball = extract_ball(&spider(5, 2), 0, 3);
        let s = local_stats(&ball);
        assert_eq!((s.alpha, s.beta, s.beta2, s.beta11), (5, 10, 20, Some(0)));
        assert_eq!(s.sphere_sizes, vec![1, 5, 10, 0]);
    }

    #[test]
    fn stats_of_path_from_end() {
        let s = local_stats(&extract_ball(&path(4), 0, 3));
        assert_eq!((s.alpha, s.beta, s.beta2, s.beta11), (1, 1, 1, Some(1)));
        let short = local_stats(&extract_ball(&path(4), 0, 2));
        assert_eq!(short.beta11, None);
    }

    #[test]
    fn csv_layout() {
        let s = local_stats(&extract_ball(&path(4), 0, 2));
        let mut buf = Vec::new();
        write_stats_csv(&[s], 2, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "vertex,alpha,beta,beta2,beta11,s1,s2,is_tree\n0,1,1,1,,1,1,true\n"
        );
    }
}
