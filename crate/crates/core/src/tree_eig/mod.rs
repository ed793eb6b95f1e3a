//! Top eigenpair of a tree ball through its continued fraction, and the
//! closed-form approximations built from local statistics.

mod estimators;

pub use estimators::{estimate, estimator_table, write_estimator_csv, EigenvalueEstimate, EstimatorKind, EstimatorRow};

use serde::Serialize;

use crate::graph::{SparseGraph, Vertex};
use crate::local::RootedBall;
use crate::scalar::norm2;
use crate::Scalar;

/// Constant in front of the truncation-residual envelope.
pub const TRUNCATION_ENVELOPE_CONSTANT: f64 = 4.0;
pub const DEFAULT_TOL: f64 = 1e-12;
const MAX_ITER: usize = 200;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TreeEigError {
    #[error("ball around {0} is not a tree")]
    NotATree(Vertex),
    #[error("could not bracket the top eigenvalue in [{lo}, {hi}]")]
    Bracket { lo: f64, hi: f64 },
    #[error("{kind:?} estimate out of domain: {reason}")]
    OutOfDomain { kind: EstimatorKind, reason: String },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// Top eigenvalue of `A_{B_r(x)}` with its Perron vector, indexed like
/// `ball.vertices()`.
#[derive(Debug, Clone, PartialEq)]
pub struct BallEigenPair<S> {
    pub root: Vertex,
    pub lambda: S,
    pub vector: Vec<S>,
    pub iterations: usize,
    /// `‖A_ball w − λ w‖`.
    pub residual: S,
}

impl<S: Scalar> BallEigenPair<S> {
    /// The `−λ` eigenvector of a tree: entries flipped on odd levels.
    pub fn parity_flipped(&self, ball: &RootedBall) -> Vec<S> {
        let mut out = self.vector.clone();
        for i in 1..ball.depth() {
            if i % 2 == 1 {
                for j in ball.level_range(i) {
                    out[j] = -out[j];
                }
            }
        }
        out
    }
}

/// Pivots of `λI − A` eliminated from the leaves upward, together with
/// their λ-derivatives. Zero pivots are nudged off zero.
struct Pivots<S> {
    g: Vec<S>,
    dg: Vec<S>,
    negatives: usize,
}

fn pivots<S: Scalar>(ball: &RootedBall, lambda: S) -> Pivots<S> {
    let n = ball.len();
    let mut sum = vec![S::zero(); n];
    let mut dsum = vec![S::zero(); n];
    let mut g = vec![S::zero(); n];
    let mut dg = vec![S::zero(); n];
    let mut negatives = 0;
    let nudge = S::eps() * lambda.abs().max(S::one());
    for v in (0..n).rev() {
        let mut gv = lambda - sum[v];
        if gv == S::zero() {
            gv = nudge;
        }
        let dgv = S::one() + dsum[v];
        if gv < S::zero() {
            negatives += 1;
        }
        g[v] = gv;
        dg[v] = dgv;
        if let Some(p) = ball.parent(v) {
            sum[p] = sum[p] + gv.recip();
            dsum[p] = dsum[p] + dgv / (gv * gv);
        }
    }
    Pivots { g, dg, negatives }
}

/// `max_v √(Σ_{u∼v} deg(u))` over the tree, an upper bound on `λ₁`.
fn row_sum_bound(ball: &RootedBall) -> f64 {
    let n = ball.len();
    let mut deg = vec![0usize; n];
    for v in 1..n {
        deg[v] += 1;
        deg[ball.parent(v).unwrap()] += 1;
    }
    let mut second = vec![0usize; n];
    for v in 1..n {
        let p = ball.parent(v).unwrap();
        second[v] += deg[p];
        second[p] += deg[v];
    }
    (second.into_iter().max().unwrap_or(0) as f64).sqrt()
}

/// Solves `f(λ) = λ − Σ_{y∼x} 1/g_y(λ) = 0` for the Perron root.
///
/// The bracket starts at `[√α, max_v √(Σ_{u∼v} deg u)]`. Eliminating
/// `λI − A` from the leaves gives one pivot per vertex, and by Sylvester's
/// law of inertia the number of negative pivots counts the eigenvalues
/// above `λ`; this keeps the bracket valid even where the continued fraction
/// has poles. Above `λ₁` every pivot is positive and `f` is increasing and
/// concave, so Newton steps are safe once inside the bracket.
pub fn cf_eigenvalue<S: Scalar>(ball: &RootedBall, tol: S) -> Result<BallEigenPair<S>, TreeEigError> {
    if !ball.is_tree() {
        return Err(TreeEigError::NotATree(ball.root()));
    }
    let n = ball.len();
    if n == 1 {
        return Ok(BallEigenPair {
            root: ball.root(),
            lambda: S::zero(),
            vector: vec![S::one()],
            iterations: 0,
            residual: S::zero(),
        });
    }
    let alpha = ball.level(1).len() as f64;
    let hi0 = row_sum_bound(ball);
    let mut lo = S::of(alpha.sqrt());
    let mut hi = S::of(hi0) * (S::one() + S::of(4.0) * S::eps()) + S::eps();
    if pivots(ball, hi).negatives != 0 {
        return Err(TreeEigError::Bracket { lo: alpha.sqrt(), hi: hi0 });
    }

    // λ₁ ≥ √α always; no eigenvalue above √α means equality (stars).
    let mut lambda = if pivots(ball, lo).negatives == 0 { lo } else { hi };
    let mut iterations = 0;
    loop {
        iterations += 1;
        let p = pivots(ball, lambda);
        if p.negatives == 0 {
            hi = lambda;
        } else {
            lo = lambda;
        }
        let (f, df) = (p.g[0], p.dg[0]);
        if (p.negatives <= 1 && f.abs() <= tol) || iterations >= MAX_ITER {
            break;
        }
        if hi - lo <= S::of(4.0) * S::eps() * hi {
            lambda = hi;
            break;
        }
        // On the left of λ₁ the root pivot is the only negative one; any
        // other inertia means a pole lies in between and we bisect.
        let newton = lambda - f / df;
        lambda = if p.negatives <= 1 && newton > lo && newton < hi {
            newton
        } else {
            (lo + hi) / S::of(2.0)
        };
    }

    let p = pivots(ball, lambda);
    let mut vector = vec![S::zero(); n];
    vector[0] = S::one();
    for v in 1..n {
        vector[v] = vector[ball.parent(v).unwrap()] / p.g[v];
    }
    let norm = norm2(&vector);
    vector.iter_mut().for_each(|x| *x = *x / norm);
    let residual = tree_residual(ball, lambda, &vector);
    Ok(BallEigenPair { root: ball.root(), lambda, vector, iterations, residual })
}

/// `‖A_ball w − λ w‖` for a tree ball.
fn tree_residual<S: Scalar>(ball: &RootedBall, lambda: S, w: &[S]) -> S {
    let mut aw = vec![S::zero(); w.len()];
    for v in 1..w.len() {
        let p = ball.parent(v).unwrap();
        aw[v] = aw[v] + w[p];
        aw[p] = aw[p] + w[v];
    }
    aw.iter().zip(w).map(|(&a, &x)| (a - lambda * x).powi(2)).sum::<S>().sqrt()
}

/// `2√(Δ−1)`, the spectral-radius bound for forests of maximum degree `Δ`.
pub fn forest_bound(max_degree: usize) -> Result<f64, TreeEigError> {
    if max_degree == 0 {
        return Err(TreeEigError::InvalidInput("max degree must be at least 1".into()));
    }
    Ok(2.0 * ((max_degree - 1) as f64).sqrt())
}

/// Sphere and tail masses of a ball eigenvector next to their predicted
/// values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayProfile {
    pub alpha: usize,
    /// `‖w|_{S_i}‖`, `i = 0..=r`; entry 0 is the root magnitude.
    pub level_norms: Vec<f64>,
    /// `‖w|_{B_r ∖ B_i}‖`, `i = 0..=r`.
    pub tail_norms: Vec<f64>,
    /// `1/√2`.
    pub predicted_center: f64,
    /// `(d/α)^{(i−1)/2}/√2`, `i = 1..=r` (entry 0 repeats the center).
    pub predicted_levels: Vec<f64>,
    /// `(1 − d/α)^{−1/2} (d/α)^{i/2}/√2`; NaN when `d ≥ α`.
    pub predicted_tails: Vec<f64>,
}

pub fn decay_profile<S: Scalar>(pair: &BallEigenPair<S>, ball: &RootedBall, d: f64) -> DecayProfile {
    let r = ball.radius();
    let sq: Vec<f64> = (0..=r)
        .map(|i| ball.level_range(i).map(|j| pair.vector[j].to_f64_lossy().powi(2)).sum())
        .collect();
    let level_norms = sq.iter().map(|s: &f64| s.sqrt()).collect();
    let tail_norms = (0..=r).map(|i| sq[i + 1..].iter().sum::<f64>().sqrt()).collect();
    let alpha = ball.level(1).len();
    let q = d / alpha as f64;
    let c = std::f64::consts::FRAC_1_SQRT_2;
    DecayProfile {
        alpha,
        level_norms,
        tail_norms,
        predicted_center: c,
        predicted_levels: (0..=r).map(|i| if i == 0 { c } else { q.powf((i as f64 - 1.0) / 2.0) * c }).collect(),
        predicted_tails: (0..=r).map(|i| (1.0 / (1.0 - q)).sqrt() * q.powf(i as f64 / 2.0) * c).collect(),
    }
}

/// `‖(A_G − A_ball) w‖` for `w` extended by zero: the only contributions
/// come from vertices outside the ball adjacent to its last sphere.
pub fn truncation_residual<S: Scalar>(g: &SparseGraph, ball: &RootedBall, pair: &BallEigenPair<S>) -> S {
    let mut outside: std::collections::HashMap<Vertex, S> = Default::default();
    for j in ball.level_range(ball.radius()) {
        for &v in g.neighbors(ball.vertices()[j]) {
            if !ball.contains(v) {
                let e = outside.entry(v).or_insert(S::zero());
                *e = *e + pair.vector[j];
            }
        }
    }
    outside.values().map(|&x| x * x).sum::<S>().sqrt()
}

/// `C (d^{r/2} + 1) u^{−(r−1)/2}`.
pub fn truncation_envelope(d: f64, u_star: usize, r: usize) -> f64 {
    TRUNCATION_ENVELOPE_CONSTANT * (d.powf(r as f64 / 2.0) + 1.0) * (u_star as f64).powf(-(r as f64 - 1.0) / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::local::extract_ball;

    fn star(alpha: u32) -> SparseGraph {
        SparseGraph::from_edges(alpha as usize + 1, (1..=alpha).map(|l| (0, l))).unwrap()
    }

    #[test]
    fn star_eigenpair() {
        let ball = extract_ball(&star(16), 0, 2);
        let pair = cf_eigenvalue(&ball, 1e-12f64).unwrap();
        assert_eq!(pair.lambda, 4.0);
        assert!((pair.vector[0] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-14);
        let prof = decay_profile(&pair, &ball, 1.0);
        assert!((prof.level_norms[1] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-14);
    }

    #[test]
    fn star_rooted_at_leaf() {
        let ball = extract_ball(&star(9), 3, 2);
        let pair = cf_eigenvalue(&ball, 1e-12f64).unwrap();
        assert!((pair.lambda - 3.0).abs() < 1e-12);
        assert!(pair.vector.iter().all(|&x| x > 0.0));
    }

    #[test]
    fn single_vertex_and_edge() {
        let g = SparseGraph::from_edges(3, [(0, 1)]).unwrap();
        assert_eq!(cf_eigenvalue::<f64>(&extract_ball(&g, 2, 1), 1e-12).unwrap().lambda, 0.0);
        let pair = cf_eigenvalue::<f64>(&extract_ball(&g, 0, 1), 1e-12).unwrap();
        assert!((pair.lambda - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_cycles() {
        let g = SparseGraph::from_edges(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
        assert_eq!(cf_eigenvalue::<f64>(&extract_ball(&g, 0, 1), 1e-12), Err(TreeEigError::NotATree(0)));
    }

    #[test]
    fn single_precision() {
        let ball = extract_ball(&star(16), 0, 1);
        let pair = cf_eigenvalue::<f32>(&ball, 1e-5).unwrap();
        assert!((pair.lambda - 4.0).abs() < 1e-5);
    }

    #[test]
    fn forest_bound_values() {
        assert_eq!(forest_bound(1).unwrap(), 0.0);
        assert_eq!(forest_bound(2).unwrap(), 2.0);
        assert!(forest_bound(0).is_err());
    }

    #[test]
    fn truncation_of_star_with_outside_neighbor() {
        // Star on 0..=4, leaf 1 also adjacent to vertex 5.
        let g = SparseGraph::from_edges(6, [(0, 1), (0, 2), (0, 3), (0, 4), (1, 5)]).unwrap();
        let ball = extract_ball(&g, 0, 1);
        let pair = cf_eigenvalue(&ball, 1e-12f64).unwrap();
        let res = truncation_residual(&g, &ball, &pair);
        assert!((res - 1.0 / 8f64.sqrt()).abs() < 1e-12);
        let whole = extract_ball(&star(4), 0, 1);
        let pair = cf_eigenvalue(&whole, 1e-12f64).unwrap();
        assert_eq!(truncation_residual(&star(4), &whole, &pair), 0.0);
    }

    #[test]
    fn parity_flip_gives_negative_eigenvalue() {
        let g = SparseGraph::from_edges(6, [(0, 1), (0, 2), (1, 3), (1, 4), (2, 5)]).unwrap();
        let ball = extract_ball(&g, 0, 3);
        let pair = cf_eigenvalue(&ball, 1e-12f64).unwrap();
        let w = pair.parity_flipped(&ball);
        let aw = crate::graph::matvec(&ball.subgraph(&g), &w).unwrap();
        let rq: f64 = aw.iter().zip(&w).map(|(a, b)| a * b).sum();
        assert!((rq + pair.lambda).abs() < 1e-12);
    }
}
