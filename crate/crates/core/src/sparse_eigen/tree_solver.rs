//! Extreme eigenpairs of trees: Sturm-count bisection for the eigenvalues
//! and inverse iteration through the tree's own elimination for vectors.

use rand::Rng;

use super::lanczos::RitzPair;
use crate::local::RootedBall;
use crate::rng::StreamRng;
use crate::scalar::{axpy, dot, norm2};
use crate::Scalar;

pub(crate) struct TreeOperator<'a> {
    /// BFS order from an arbitrary root; parents precede children.
    ball: &'a RootedBall,
}

impl<'a> TreeOperator<'a> {
    pub fn new(ball: &'a RootedBall) -> Self {
        debug_assert!(ball.is_tree());
        Self { ball }
    }

    fn parent(&self, v: usize) -> Option<usize> {
        self.ball.parent(v)
    }

    /// Pivots of `σI − sA`, leaves first; zero pivots are nudged.
    fn pivots<S: Scalar>(&self, sigma: S) -> (Vec<S>, usize) {
        let n = self.ball.len();
        let mut sum = vec![S::zero(); n];
        let mut g = vec![S::zero(); n];
        let mut negatives = 0;
        let nudge = S::eps() * sigma.abs().max(S::one());
        for v in (0..n).rev() {
            let mut gv = sigma - sum[v];
            if gv == S::zero() {
                gv = nudge;
            }
            if gv < S::zero() {
                negatives += 1;
            }
            g[v] = gv;
            if let Some(p) = self.parent(v) {
                sum[p] = sum[p] + gv.recip();
            }
        }
        (g, negatives)
    }

    /// Number of eigenvalues above `sigma` (the same for `A` and `−A`).
    fn count_above<S: Scalar>(&self, sigma: S) -> usize {
        self.pivots(sigma).1
    }

    /// Solves `(σI − sA) x = b`.
    fn solve<S: Scalar>(&self, sigma: S, s: S, b: &[S]) -> Vec<S> {
        let n = self.ball.len();
        let (g, _) = self.pivots(sigma);
        let mut rhs = b.to_vec();
        for v in (1..n).rev() {
            let p = self.parent(v).unwrap();
            rhs[p] = rhs[p] + s * rhs[v] / g[v];
        }
        let mut x = vec![S::zero(); n];
        x[0] = rhs[0] / g[0];
        for v in 1..n {
            x[v] = (rhs[v] + s * x[self.parent(v).unwrap()]) / g[v];
        }
        x
    }

    fn residual<S: Scalar>(&self, lambda: S, s: S, x: &[S]) -> S {
        let mut ax = vec![S::zero(); x.len()];
        for v in 1..x.len() {
            let p = self.parent(v).unwrap();
            ax[v] = ax[v] + s * x[p];
            ax[p] = ax[p] + s * x[v];
        }
        ax.iter().zip(x).map(|(&a, &b)| (a - lambda * b).powi(2)).sum::<S>().sqrt()
    }

    /// The `m` largest eigenpairs of `sA`; `bound` must dominate the
    /// spectral radius.
    pub fn top<S: Scalar>(&self, m: usize, s: S, bound: S, tol: S, rng: &mut StreamRng) -> Vec<RitzPair<S>> {
        let n = self.ball.len();
        let m = m.min(n);
        let two = S::of(2.0);
        let hi0 = bound * (S::one() + S::of(8.0) * S::eps()) + S::eps();
        let mut values = Vec::with_capacity(m);
        for j in 1..=m {
            // λ_j = inf{x : count_above(x) < j}.
            let (mut lo, mut hi) = (-hi0, hi0);
            while hi - lo > S::of(4.0) * S::eps() * hi.abs().max(lo.abs()).max(S::one()) {
                let mid = (lo + hi) / two;
                if mid <= lo || mid >= hi {
                    break;
                }
                if self.count_above(mid) >= j {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            values.push((lo + hi) / two);
        }

        let mut out: Vec<RitzPair<S>> = Vec::with_capacity(m);
        for (j, &lambda) in values.iter().enumerate() {
            let scale = lambda.abs().max(S::one());
            // Shift just off the eigenvalue so the solve stays finite.
            let sigma = lambda + S::of(64.0) * S::eps() * scale;
            let cluster: Vec<usize> =
                (0..j).filter(|&i| (values[i] - lambda).abs() <= S::of(1e-8) * scale).collect();
            let mut x: Vec<S> = (0..n).map(|_| S::of(rng.random_range(-1.0..1.0))).collect();
            for _ in 0..3 {
                for &i in &cluster {
                    let c = dot(&out[i].vector, &x);
                    axpy(-c, &out[i].vector, &mut x);
                }
                let nx = norm2(&x);
                x.iter_mut().for_each(|e| *e = *e / nx);
                x = self.solve(sigma, s, &x);
                let nx = norm2(&x);
                if !nx.is_finite() || nx == S::zero() {
                    break;
                }
                x.iter_mut().for_each(|e| *e = *e / nx);
            }
            for &i in &cluster {
                let c = dot(&out[i].vector, &x);
                axpy(-c, &out[i].vector, &mut x);
            }
            let nx = norm2(&x);
            x.iter_mut().for_each(|e| *e = *e / nx);
            let residual = self.residual(lambda, s, &x);
            let converged = residual.is_finite() && residual <= S::of(10.0) * tol * scale;
            out.push(RitzPair { value: lambda, vector: x, residual, converged });
        }
        out
    }
}
