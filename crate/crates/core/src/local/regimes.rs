use std::collections::HashMap;

use serde::Serialize;

use crate::graph::{SparseGraph, Vertex};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RegimeError {
    #[error("u_star must be at least 2, got {0}")]
    UStarTooSmall(usize),
    #[error("fine threshold {fine} exceeds rough threshold {rough} at u_star = {u_star}")]
    Unordered { u_star: usize, fine: usize, rough: usize },
}

/// Offsets `m` defining `X_m = {x : α_x ≥ u − m}` for the three regimes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RegimeThresholds {
    pub fine: usize,
    pub intermediate: usize,
    pub rough: usize,
    /// Set when `⌈u^{2/3}⌉ > ⌈u/2⌉` (small `u`) and the intermediate offset
    /// was lowered to the rough one to keep the sets nested.
    pub clamped: bool,
}

impl RegimeThresholds {
    pub fn for_u(u_star: usize) -> Result<Self, RegimeError> {
        if u_star < 2 {
            return Err(RegimeError::UStarTooSmall(u_star));
        }
        let u = u_star as f64;
        let fine = u.powf(0.25).ceil() as usize;
        let mut intermediate = u.powf(2.0 / 3.0).ceil() as usize;
        let rough = (u / 2.0).ceil() as usize;
        if fine > rough {
            return Err(RegimeError::Unordered { u_star, fine, rough });
        }
        let clamped = intermediate > rough;
        if clamped {
            intermediate = rough;
        }
        Ok(Self { fine, intermediate, rough, clamped })
    }
}

/// The vertex classes 𝒲 ⊆ 𝒱 ⊆ 𝒰, each sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimePartition {
    pub u_star: usize,
    pub thresholds: RegimeThresholds,
    pub fine: Vec<Vertex>,
    pub intermediate: Vec<Vertex>,
    pub rough: Vec<Vertex>,
    /// Degrees of the rough-regime vertices.
    pub degrees: HashMap<Vertex, usize>,
}

impl RegimePartition {
    pub fn degree(&self, v: Vertex) -> Option<usize> {
        self.degrees.get(&v).copied()
    }

    pub fn is_fine(&self, v: Vertex) -> bool {
        self.fine.binary_search(&v).is_ok()
    }

    pub fn is_intermediate(&self, v: Vertex) -> bool {
        self.intermediate.binary_search(&v).is_ok()
    }

    pub fn is_rough(&self, v: Vertex) -> bool {
        self.rough.binary_search(&v).is_ok()
    }
}

pub fn classify_regimes(g: &SparseGraph, u_star: usize) -> Result<RegimePartition, RegimeError> {
    let thresholds = RegimeThresholds::for_u(u_star)?;
    let min_degree = |m: usize| u_star.saturating_sub(m);
    let (fine_min, mid_min, rough_min) =
        (min_degree(thresholds.fine), min_degree(thresholds.intermediate), min_degree(thresholds.rough));
    let mut part = RegimePartition {
        u_star,
        thresholds,
        fine: Vec::new(),
        intermediate: Vec::new(),
        rough: Vec::new(),
        degrees: HashMap::new(),
    };
    for v in 0..g.n_vertices() as Vertex {
        let a = g.degree(v);
        if a >= rough_min {
            part.rough.push(v);
            part.degrees.insert(v, a);
            if a >= mid_min {
                part.intermediate.push(v);
                if a >= fine_min {
                    part.fine.push(v);
                }
            }
        }
    }
    Ok(part)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thresholds_at_typical_scales() {
        let t = RegimeThresholds::for_u(9).unwrap();
        assert_eq!((t.fine, t.intermediate, t.rough, t.clamped), (2, 5, 5, false));
        let t = RegimeThresholds::for_u(6).unwrap();
        assert_eq!((t.fine, t.intermediate, t.rough, t.clamped), (2, 3, 3, true));
        assert!(RegimeThresholds::for_u(3).is_ok());
        assert!(matches!(RegimeThresholds::for_u(2), Err(RegimeError::Unordered { .. })));
        assert!(RegimeThresholds::for_u(1).is_err());
    }

    #[test]
    fn empty_graph_has_empty_regimes() {
        let part = classify_regimes(&SparseGraph::empty(50), 9).unwrap();
        assert!(part.fine.is_empty() && part.intermediate.is_empty() && part.rough.is_empty());
    }

    #[test]
    fn single_hub_is_in_every_regime() {
        let g = SparseGraph::from_edges(10, (1..10).map(|l| (0, l))).unwrap();
        let part = classify_regimes(&g, 9).unwrap();
        assert_eq!(part.fine, vec![0]);
        assert_eq!(part.intermediate, vec![0]);
        assert_eq!(part.rough, vec![0]);
        assert_eq!(part.degree(0), Some(9));
    }
}
