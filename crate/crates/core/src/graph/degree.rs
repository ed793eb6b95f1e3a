use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial;

use super::GraphError;

/// Expected degree counts `μ_k = N·Bin(k; N−1, d/N)` and the degree scale
/// `u_star` at which `μ_k` crosses one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeBenchmark {
    pub u_star: usize,
    /// `ln μ_k` for `k = 0..=k_max`.
    pub log_mu: Vec<f64>,
}

impl DegreeBenchmark {
    pub fn mu(&self, k: usize) -> f64 {
        self.log_mu[k].exp()
    }

    pub fn k_max(&self) -> usize {
        self.log_mu.len() - 1
    }
}

const MU_CUTOFF: f64 = 1e-6;

/// `ln Bin(k; n, p)`.
///
/// The falling factorial `n(n−1)…(n−k+1)` is summed as
/// `k ln n + Σ ln(1 − i/n)`; subtracting two log-gammas of size `n` would
/// cancel away most significant digits at `n ~ 10⁸`.
pub fn log_binomial_pmf(k: u64, n: u64, p: f64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    if p <= 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if p >= 1.0 {
        return if k == n { 0.0 } else { f64::NEG_INFINITY };
    }
    let nf = n as f64;
    let falling = if 2 * k <= n {
        (0..k).map(|i| (-(i as f64) / nf).ln_1p()).sum::<f64>() + k as f64 * nf.ln()
    } else {
        ln_factorial(n) - ln_factorial(n - k)
    };
    falling - ln_factorial(k) + k as f64 * p.ln() + (n - k) as f64 * (-p).ln_1p()
}

pub fn degree_benchmark(n: usize, d: f64) -> Result<DegreeBenchmark, GraphError> {
    if !(d > 0.0 && d < n as f64) {
        return Err(GraphError::InvalidConfig(format!("need 0 < d < N, got d = {d}, N = {n}")));
    }
    let nf = n as f64;
    let p = d / nf;
    let trials = n as u64 - 1;
    let mode = ((trials as f64 + 1.0) * p).floor() as u64;
    let cutoff = MU_CUTOFF.ln();
    let mut log_mu = Vec::new();
    for k in 0..=trials {
        let l = nf.ln() + log_binomial_pmf(k, trials, p);
        log_mu.push(l);
        if k >= mode && l < cutoff {
            break;
        }
    }
    // max{μ, 1/μ} is minimised where |ln μ| is; `<=` keeps the larger k.
    let mut u_star = 0;
    for (k, l) in log_mu.iter().enumerate() {
        if l.abs() <= log_mu[u_star].abs() {
            u_star = k;
        }
    }
    Ok(DegreeBenchmark { u_star, log_mu })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn million_vertices_unit_degree() {
        let b = degree_benchmark(1_000_000, 1.0).unwrap();
        assert_eq!(b.u_star, 9);
        // μ₉ ≈ N e⁻¹ / 9!
        let approx = 1e6 * (-1.0f64).exp() / 362_880.0;
        assert!((b.mu(9) / approx - 1.0).abs() < 1e-4);
        assert!(b.mu(b.k_max()) < 1e-6);
    }

    #[test]
    fn consecutive_ratio_matches_closed_form() {
        let (n, d) = (1_000_000usize, 1.0);
        let b = degree_benchmark(n, d).unwrap();
        let u = b.u_star as f64;
        let p = d / n as f64;
        let closed = (n as f64 - u - 1.0) * p / ((u + 1.0) * (1.0 - p));
        let direct = (b.log_mu[b.u_star + 1] - b.log_mu[b.u_star]).exp();
        assert!((direct / closed - 1.0).abs() < 1e-12, "{direct} vs {closed}");
    }

    #[test]
    fn pmf_sums_to_one() {
        let total: f64 = (0..=40).map(|k| log_binomial_pmf(k, 40, 0.3).exp()).sum();
        assert!((total - 1.0).abs() < 1e-13);
    }

    #[test]
    fn rejects_out_of_range_degree() {
        assert!(degree_benchmark(10, 0.0).is_err());
        assert!(degree_benchmark(10, 10.0).is_err());
    }
}
