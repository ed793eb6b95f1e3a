//! Poisson and binomial pmfs, exact tails, and the closed-form tail bounds
//! used throughout the analysis. Everything is evaluated in log space.

use serde::Serialize;
use statrs::function::factorial::ln_factorial;

pub use crate::graph::log_binomial_pmf;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProbError {
    #[error("precondition violated: {0}")]
    Domain(String),
}

fn domain<T>(msg: impl Into<String>) -> Result<T, ProbError> {
    Err(ProbError::Domain(msg.into()))
}

/// Calibrated lower-bound constant for [`sharp_pois_tail_bounds`]; equals
/// [`calibrate_sharp_constant`] and is pinned so callers need not rerun the sweep.
pub const SHARP_TAIL_CONSTANT: f64 = 0.241_204_933_293_621_5;

pub const BINOM_POIS_ENVELOPE: f64 = 4.0;
pub const WEIBULL_DEFAULT_C: f64 = 0.1;
/// Sandwich exact tails are only summed up to this threshold.
pub const EXACT_TAIL_LIMIT: f64 = 1e6;

pub fn log_pois_pmf(lambda: f64, k: u64) -> f64 {
    if lambda == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    k as f64 * lambda.ln() - lambda - ln_factorial(k)
}

pub fn pois_pmf(lambda: f64, k: u64) -> f64 {
    log_pois_pmf(lambda, k).exp()
}

/// Sums `first, first·r(first), …` until terms stop contributing.
fn geometric_like_sum(first: f64, mut ratio: impl FnMut(u64) -> f64, max_terms: u64) -> f64 {
    let (mut term, mut sum) = (first, 0.0);
    for i in 0..max_terms {
        sum += term;
        term *= ratio(i);
        if term <= sum * 1e-18 || term == 0.0 {
            break;
        }
    }
    sum
}

/// `P(Pois(λ) ≥ k)`, summing whichever side of the mean is smaller.
pub fn pois_tail(lambda: f64, k: u64) -> f64 {
    log_pois_tail(lambda, k).exp()
}

/// `ln P(Pois(λ) ≥ k)`; finite far beyond the range where the tail underflows.
pub fn log_pois_tail(lambda: f64, k: u64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    if lambda == 0.0 {
        return f64::NEG_INFINITY;
    }
    if k as f64 > lambda {
        // pmf(k) · Σ_j Π_{i<j} λ/(k+i+1)
        log_pois_pmf(lambda, k) + geometric_like_sum(1.0, |i| lambda / (k + i + 1) as f64, u64::MAX).ln()
    } else {
        // 1 − P(X ≤ k−1), summing downwards from k−1
        let top = k - 1;
        let lower = geometric_like_sum(pois_pmf(lambda, top), |i| (top - i) as f64 / lambda, top + 1);
        (-lower).ln_1p()
    }
}

pub fn binom_pmf(n: u64, p: f64, k: u64) -> f64 {
    log_binomial_pmf(k, n, p).exp()
}

/// `P(Binom(n, p) ≥ k)`.
pub fn binom_tail(n: u64, p: f64, k: u64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if k > n || p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return 1.0;
    }
    let odds = p / (1.0 - p);
    if k as f64 > n as f64 * p {
        geometric_like_sum(binom_pmf(n, p, k), |i| {
            let j = k + i;
            if j >= n {
                0.0
            } else {
                (n - j) as f64 / (j + 1) as f64 * odds
            }
        }, n - k + 1)
    } else {
        let top = k - 1;
        let lower = geometric_like_sum(binom_pmf(n, p, top), |i| {
            let j = top - i;
            if j == 0 {
                0.0
            } else {
                j as f64 / (n - j + 1) as f64 / odds
            }
        }, top + 1);
        (1.0 - lower).max(0.0)
    }
}

/// `h(δ) = (δ+1) ln(δ+1) − δ`.
pub fn h(delta: f64) -> f64 {
    (1.0 + delta) * delta.ln_1p() - delta
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailParams {
    pub lambda: f64,
    pub threshold: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailBoundResult {
    pub exact: Option<f64>,
    pub upper: f64,
    pub lower: Option<f64>,
    pub params: TailParams,
    /// Natural logs of the above; the linear values underflow for large `λδ`.
    pub log_exact: Option<f64>,
    pub log_upper: f64,
    pub log_lower: Option<f64>,
}

impl TailBoundResult {
    fn build(params: TailParams, log_exact: Option<f64>, log_upper: f64, log_lower: Option<f64>) -> Self {
        Self {
            exact: log_exact.map(f64::exp),
            upper: log_upper.exp(),
            lower: log_lower.map(f64::exp),
            params,
            log_exact,
            log_upper,
            log_lower,
        }
    }

    pub fn upper_holds(&self) -> bool {
        self.log_exact.is_none_or(|e| e <= self.log_upper)
    }

    pub fn lower_holds(&self) -> bool {
        match (self.log_exact, self.log_lower) {
            (Some(e), Some(l)) => l <= e,
            _ => true,
        }
    }

    pub fn sandwiched(&self) -> bool {
        self.upper_holds() && self.lower_holds()
    }
}

fn log_sharp_upper(lambda: f64, delta: f64) -> f64 {
    -lambda * h(delta) - 0.5 * (lambda * delta.min(delta * delta)).ln()
}

/// Bounds on `P(Pois(λ) ≥ λ(1+δ))`: the upper bound always, the lower bound
/// `c·upper` only when `λ(1+δ)` is an integer, the exact value when the
/// threshold is at most [`EXACT_TAIL_LIMIT`].
pub fn sharp_pois_tail_bounds(lambda: f64, delta: f64) -> Result<TailBoundResult, ProbError> {
    sharp_bounds_with(lambda, delta, SHARP_TAIL_CONSTANT)
}

fn sharp_bounds_with(lambda: f64, delta: f64, c: f64) -> Result<TailBoundResult, ProbError> {
    if !(lambda >= 1.0 && lambda.is_finite()) {
        return domain(format!("need λ ≥ 1, got {lambda}"));
    }
    if !(delta >= 1.0 / lambda.sqrt()) || !delta.is_finite() {
        return domain(format!("need δ ≥ 1/√λ = {}, got {delta}", 1.0 / lambda.sqrt()));
    }
    let threshold = lambda * (1.0 + delta);
    let nearest = threshold.round();
    let integral = (threshold - nearest).abs() <= 1e-9 * threshold.max(1.0);
    let log_upper = log_sharp_upper(lambda, delta);
    let log_exact = (threshold <= EXACT_TAIL_LIMIT)
        .then(|| log_pois_tail(lambda, if integral { nearest } else { threshold.ceil() } as u64));
    let log_lower = integral.then(|| c.ln() + log_upper);
    Ok(TailBoundResult::build(TailParams { lambda, threshold, delta }, log_exact, log_upper, log_lower))
}

/// Same, parametrised by an integer threshold `t = λ(1+δ)`.
pub fn sharp_pois_tail_bounds_at(lambda: f64, threshold: u64) -> Result<TailBoundResult, ProbError> {
    let delta = threshold as f64 / lambda - 1.0;
    let r = sharp_pois_tail_bounds(lambda, delta)?;
    let log_exact = (threshold as f64 <= EXACT_TAIL_LIMIT).then(|| log_pois_tail(lambda, threshold));
    let params = TailParams { threshold: threshold as f64, ..r.params };
    Ok(TailBoundResult::build(params, log_exact, r.log_upper, Some(SHARP_TAIL_CONSTANT.ln() + r.log_upper)))
}

/// `0.9 · min exact/upper` over `λ ∈ {10, 30, 100, 300, 1000}` and every
/// integer threshold with `δ ∈ [λ^{-1/2}, 3]`.
pub fn calibrate_sharp_constant() -> f64 {
    let mut worst = f64::INFINITY;
    for lambda in [10.0f64, 30.0, 100.0, 300.0, 1000.0] {
        let lo = (lambda + lambda.sqrt()).ceil() as u64;
        let hi = (4.0 * lambda).floor() as u64;
        for t in lo..=hi {
            let delta = t as f64 / lambda - 1.0;
            worst = worst.min(log_pois_tail(lambda, t) - log_sharp_upper(lambda, delta));
        }
    }
    0.9 * worst.exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BinomPoisComparison {
    pub binom_pmf: f64,
    pub pois_pmf: f64,
    pub ratio: f64,
    /// `4(k² + (np)² + 1)/n`, the envelope for `|ratio − 1|`.
    pub bound: f64,
}

impl BinomPoisComparison {
    pub fn within(&self) -> bool {
        (self.ratio - 1.0).abs() <= self.bound
    }
}

pub fn binom_pois_compare(n: u64, p: f64, k: u64) -> Result<BinomPoisComparison, ProbError> {
    let nf = n as f64;
    let np = nf * p;
    if !(0.0..=1.0).contains(&p) || n == 0 {
        return domain(format!("need n ≥ 1 and p ∈ [0,1], got n = {n}, p = {p}"));
    }
    if k as f64 > nf.sqrt() || np > nf.sqrt() {
        return domain(format!("need k, np ≤ √n, got k = {k}, np = {np}"));
    }
    let lb = log_binomial_pmf(k, n, p);
    let lp = log_pois_pmf(np, k);
    Ok(BinomPoisComparison {
        binom_pmf: lb.exp(),
        pois_pmf: lp.exp(),
        ratio: (lb - lp).exp(),
        bound: BINOM_POIS_ENVELOPE * ((k * k) as f64 + np * np + 1.0) / nf,
    })
}

/// `exp(−τ ln τ + τ ln(np) + τ − np)`, the Chernoff bound for
/// `P(Binom(n,p) ≥ τ)` with `τ > np`.
pub fn binom_heavy_tail_bound(n: u64, p: f64, tau: f64) -> Result<f64, ProbError> {
    let np = n as f64 * p;
    if !(tau > np) || !(0.0..=1.0).contains(&p) {
        return domain(format!("need τ > np, got τ = {tau}, np = {np}"));
    }
    if np == 0.0 {
        return Ok(0.0);
    }
    Ok((-tau * tau.ln() + tau * np.ln() + tau - np).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    Upper,
    Lower,
}

/// Bernstein-type bound on `P(X − λ ≥ t)` (upper) or `P(X − λ ≤ −t)` (lower)
/// for `X ~ Binom(N, λ/N)`.
pub fn bernstein_tail(lambda: f64, t: f64, side: Side) -> Result<f64, ProbError> {
    if !(lambda >= 0.0) || !(t >= 0.0) {
        return domain(format!("need λ, t ≥ 0, got λ = {lambda}, t = {t}"));
    }
    if t == 0.0 {
        return Ok(1.0);
    }
    let denom = match side {
        Side::Upper => 2.0 * lambda + 2.0 * t / 3.0,
        Side::Lower => 2.0 * lambda,
    };
    Ok((-t * t / denom).exp())
}

/// `2n exp(−c √t / (d³+1))` for `t > n^{2/3}`.
pub fn weibull_sq_sum_bound(n: u64, d: f64, t: f64, c: f64) -> Result<f64, ProbError> {
    if !(t > (n as f64).powf(2.0 / 3.0)) || !(d >= 0.0) || !(c > 0.0) {
        return domain(format!("need t > n^(2/3), d ≥ 0, c > 0; got n = {n}, t = {t}, d = {d}, c = {c}"));
    }
    Ok(2.0 * n as f64 * (-c * t.sqrt() / (d.powi(3) + 1.0)).exp())
}

/// Relative entropy `I_p(q) = q ln(q/p) + (1−q) ln((1−q)/(1−p))`.
pub fn relative_entropy(p: f64, q: f64) -> f64 {
    let term = |a: f64, b: f64| if a == 0.0 { 0.0 } else { a * (a / b).ln() };
    term(q, p) + term(1.0 - q, 1.0 - p)
}

/// `e^{−n I_p(k/n)}`, bounding `P(X ≥ k)` for `k > np` and `P(X ≤ k)` for `k < np`.
pub fn ash_binomial_bound(n: u64, p: f64, k: u64) -> Result<f64, ProbError> {
    if n == 0 || !(p > 0.0 && p < 1.0) || k > n || (k as f64 - n as f64 * p).abs() == 0.0 {
        return domain(format!("need 0 < p < 1, k ≤ n, k ≠ np; got n = {n}, p = {p}, k = {k}"));
    }
    Ok((-(n as f64) * relative_entropy(p, k as f64 / n as f64)).exp())
}

/// `e^{−τ ln τ + cτ}`.
pub fn binom_rel_ent_bound(tau: f64, c: f64) -> Result<f64, ProbError> {
    if !(tau > 0.0) {
        return domain(format!("need τ > 0, got {tau}"));
    }
    Ok((-tau * tau.ln() + c * tau).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn poisson_basics() {
        assert_eq!(pois_pmf(0.0, 0), 1.0);
        assert_eq!(pois_pmf(0.0, 3), 0.0);
        let total: f64 = (0..=30).map(|k| pois_pmf(1.0, k)).sum();
        assert!((total - 1.0).abs() < 1e-12);
        // mpmath, 50 digits
        assert_relative_eq!(pois_tail(4.0, 8), 0.051_133_615_792_847_34, max_relative = 1e-13);
        assert_relative_eq!(pois_tail(4.0, 3), 0.761_896_694_446_455_7, max_relative = 1e-13);
    }

    #[test]
    fn sharp_bound_examples() {
        let r = sharp_pois_tail_bounds(100.0, 0.3).unwrap();
        assert_eq!(r.params.threshold.round(), 130.0);
        assert_relative_eq!(r.upper, (-100.0 * (1.3 * 1.3f64.ln() - 0.3)).exp() / 3.0, max_relative = 1e-12);
        assert!(r.lower.is_some() && r.sandwiched());

        let g = sharp_pois_tail_bounds(100.0, 0.1).unwrap();
        let gauss = (-100.0f64 * 0.01 / 2.0).exp() / (0.1 * 10.0);
        assert!(g.upper / gauss <= 1.2 && gauss / g.upper <= 1.2);

        assert!(sharp_pois_tail_bounds(100.0, 0.099).is_err());
        assert!(sharp_pois_tail_bounds(100.0, 0.25).unwrap().lower.is_some());
        assert!(sharp_pois_tail_bounds(100.0, 0.255).unwrap().lower.is_none());
    }

    #[test]
    fn pinned_constant_matches_calibration() {
        assert_relative_eq!(calibrate_sharp_constant(), SHARP_TAIL_CONSTANT, max_relative = 1e-10);
    }

    #[test]
    fn binomial_poisson_examples() {
        let r = binom_pois_compare(10_000, 1e-4, 0).unwrap();
        assert_relative_eq!(r.ratio, (10_000.0 * (-1e-4f64).ln_1p() + 1.0).exp(), max_relative = 1e-12);
        assert!(r.within());
        let r = binom_pois_compare(10_000, 5e-4, 10).unwrap();
        assert_relative_eq!(r.bound, 0.0504, max_relative = 1e-12);
        assert!(r.within());
        let r = binom_pois_compare(10, 0.0, 0).unwrap();
        assert_eq!((r.binom_pmf, r.pois_pmf, r.ratio), (1.0, 1.0, 1.0));
        assert!(binom_pois_compare(100, 0.01, 11).is_err());
    }

    #[test]
    fn chernoff_examples() {
        let exact = binom_tail(10_000, 1e-3, 20);
        let bound = binom_heavy_tail_bound(10_000, 1e-3, 20.0).unwrap();
        assert!(exact <= 1.1 * bound, "{exact} vs {bound}");
        let exact = binom_tail(100, 0.1, 30);
        assert!(exact <= ash_binomial_bound(100, 0.1, 30).unwrap());
        assert_eq!(bernstein_tail(10.0, 0.0, Side::Upper).unwrap(), 1.0);
    }

    #[test]
    fn binomial_tail_both_sides() {
        let direct = |n: u64, p: f64, k: u64| (k..=n).map(|j| binom_pmf(n, p, j)).sum::<f64>();
        for (n, p, k) in [(50, 0.3, 20), (50, 0.3, 10), (200, 0.01, 1), (200, 0.01, 6)] {
            assert_relative_eq!(binom_tail(n, p, k), direct(n, p, k), max_relative = 1e-11);
        }
    }
}
