//! Thick-restart Lanczos with full reorthogonalization.

use rand::Rng;

use super::dense::symmetric_eigen;
use crate::rng::StreamRng;
use crate::scalar::{axpy, dot, norm2};
use crate::Scalar;

pub(crate) struct RitzPair<S> {
    pub value: S,
    pub vector: Vec<S>,
    pub residual: S,
    pub converged: bool,
}

pub(crate) struct LanczosRun<'a, S, F> {
    pub n: usize,
    pub apply: F,
    /// Vectors the search space is kept orthogonal to.
    pub locked: &'a [Vec<S>],
    pub tol: S,
    pub max_matvecs: usize,
    pub matvecs: usize,
}

impl<S: Scalar, F: FnMut(&[S], &mut [S])> LanczosRun<'_, S, F> {
    fn project_out(&self, basis: &[Vec<S>], w: &mut [S]) {
        // Two passes of classical Gram–Schmidt.
        for _ in 0..2 {
            for q in self.locked.iter().chain(basis) {
                let h = dot(q, w);
                axpy(-h, q, w);
            }
        }
    }

    /// Random unit vector orthogonal to `basis` and the locked vectors, or
    /// `None` when they already span the space numerically.
    fn fresh_vector(&self, basis: &[Vec<S>], rng: &mut StreamRng) -> Option<Vec<S>> {
        for _ in 0..3 {
            let mut v: Vec<S> = (0..self.n).map(|_| S::of(rng.random_range(-1.0..1.0))).collect();
            let before = norm2(&v);
            self.project_out(basis, &mut v);
            let after = norm2(&v);
            if after > S::of(1e-6) * before {
                v.iter_mut().for_each(|x| *x = *x / after);
                return Some(v);
            }
        }
        None
    }

    fn apply_counted(&mut self, v: &[S], out: &mut [S]) {
        self.matvecs += 1;
        (self.apply)(v, out);
    }

    /// The `m` largest eigenpairs of the operator restricted to the
    /// orthogonal complement of the locked vectors.
    pub fn top(&mut self, m: usize, rng: &mut StreamRng) -> Vec<RitzPair<S>> {
        let avail = self.n.saturating_sub(self.locked.len());
        let m = m.min(avail);
        if m == 0 {
            return Vec::new();
        }
        let p = avail.min((2 * m + 20).max(40));
        let mut basis: Vec<Vec<S>> = Vec::with_capacity(p + 1);
        let mut h = vec![S::zero(); p * p];
        let Some(start) = self.fresh_vector(&basis, rng) else { return Vec::new() };
        basis.push(start);
        let mut w = vec![S::zero(); self.n];
        let mut kept = 0;
        loop {
            // Expand to p vectors; `beta` couples the last one to `next`.
            let mut beta = S::zero();
            let mut next: Option<Vec<S>> = None;
            let mut j = kept;
            while j < basis.len() && j < p {
                let vj = std::mem::take(&mut basis[j]);
                self.apply_counted(&vj, &mut w);
                basis[j] = vj;
                let scale = norm2(&w);
                // Gram–Schmidt, repeated only when cancellation was severe.
                let mut before = scale;
                for _ in 0..2 {
                    for q in self.locked {
                        let c = dot(q, &w);
                        axpy(-c, q, &mut w);
                    }
                    for (i, q) in basis.iter().enumerate() {
                        let c = dot(q, &w);
                        axpy(-c, q, &mut w);
                        h[i * p + j] = h[i * p + j] + c;
                    }
                    let after = norm2(&w);
                    if after > S::of(0.7) * before {
                        break;
                    }
                    before = after;
                }
                for i in 0..j {
                    h[j * p + i] = h[i * p + j];
                }
                beta = norm2(&w);
                let breakdown = beta <= S::of(1e3) * S::eps() * scale.max(S::one());
                let v = if breakdown {
                    beta = S::zero();
                    self.fresh_vector(&basis, rng)
                } else {
                    Some(w.iter().map(|&x| x / beta).collect())
                };
                match v {
                    Some(v) if j + 1 < p => basis.push(v),
                    Some(v) => next = Some(v),
                    None => {}
                }
                j += 1;
            }
            let size = basis.len().min(p);
            let sub: Vec<S> = (0..size).flat_map(|i| (0..size).map(move |k| (i, k))).map(|(i, k)| h[i * p + k]).collect();
            let (theta, y) = symmetric_eigen(sub, size);
            let estimate = |i: usize| (beta * y[i][size - 1]).abs();
            let tol = self.tol;
            let limit = |t: S| tol * t.abs().max(S::one());
            let done = (0..m.min(size)).all(|i| estimate(i) <= limit(theta[i]));
            let exhausted = next.is_none() || self.matvecs >= self.max_matvecs;
            if done || exhausted {
                let mut out = Vec::with_capacity(m);
                for i in 0..m.min(size) {
                    let mut x = vec![S::zero(); self.n];
                    for (k, q) in basis.iter().take(size).enumerate() {
                        axpy(y[i][k], q, &mut x);
                    }
                    let nx = norm2(&x);
                    x.iter_mut().for_each(|e| *e = *e / nx);
                    self.apply_counted(&x, &mut w);
                    let residual = w.iter().zip(&x).map(|(&a, &b)| (a - theta[i] * b).powi(2)).sum::<S>().sqrt();
                    out.push(RitzPair {
                        value: theta[i],
                        vector: x,
                        residual,
                        converged: residual <= limit(theta[i]) * S::of(10.0),
                    });
                }
                return out;
            }
            // Thick restart: keep the leading Ritz vectors plus the residual
            // direction.
            kept = (m + (size - m) / 2).min(size - 1).max(m);
            let mut new_basis = Vec::with_capacity(p + 1);
            for i in 0..kept {
                let mut x = vec![S::zero(); self.n];
                for (k, q) in basis.iter().take(size).enumerate() {
                    axpy(y[i][k], q, &mut x);
                }
                new_basis.push(x);
            }
            h.iter_mut().for_each(|e| *e = S::zero());
            for i in 0..kept {
                h[i * p + i] = theta[i];
            }
            new_basis.push(next.take().unwrap());
            basis = new_basis;
        }
    }
}
