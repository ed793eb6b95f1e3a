//! The limiting intensity ρ of the transformed edge eigenvalues, Poisson
//! sampling from it, and the Lévy–Prokhorov comparison with the empirical
//! process.
//!
//! Both processes live on the `u`-scaled axis: an `(α, β)` atom sits at
//! `u·(α + β/α)` and an eigenvalue `λ` at `u·λ² − d² − d`, so that the two
//! agree to first order when `λ² ≈ α + β/α + (d²+d)/α` and `α ≈ u`.

use num_rational::Ratio;
use num_traits::ToPrimitive;
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::Serialize;

use crate::probdist::{log_pois_pmf, pois_tail, SHARP_TAIL_CONSTANT};
use crate::rng::{stream, Purpose};
use crate::sparse_eigen::SpectralResult;
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PointProcessError {
    #[error("precondition violated: {0}")]
    Domain(String),
}

fn domain<T>(msg: impl Into<String>) -> Result<T, PointProcessError> {
    Err(PointProcessError::Domain(msg.into()))
}

/// Atoms lighter than this are dropped.
pub const RHO_MASS_FLOOR: f64 = 1e-30;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RhoAtom {
    /// `α + β/α` for the smallest-`α` representation.
    pub s: Ratio<u64>,
    /// `u·s`, where the point is placed.
    pub point: f64,
    pub mass: f64,
    /// `(α, β)` pairs merged into this atom.
    pub pairs: Vec<(u64, u64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntensityRho {
    pub n_vertices: usize,
    pub d: f64,
    pub u_star: usize,
    /// `⌊2 log^{1/8} N⌋`.
    pub ell_max: usize,
    /// Atoms sorted by increasing `s`.
    pub atoms: Vec<RhoAtom>,
    pub dropped_mass: f64,
}

impl IntensityRho {
    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    /// `ρ([x, ∞))` on the point axis.
    pub fn tail_mass(&self, x: f64) -> f64 {
        self.atoms.iter().filter(|a| a.point >= x).map(|a| a.mass).sum()
    }
}

/// `K = exp(log^{1/8} N)`.
pub fn default_k(n: usize) -> f64 {
    (n as f64).ln().powf(0.125).exp()
}

pub fn build_rho(n: usize, d: f64, u_star: usize) -> Result<IntensityRho, PointProcessError> {
    if !(d > 0.0) || n < 2 || u_star == 0 {
        return domain(format!("need d > 0, N ≥ 2, u ≥ 1; got d = {d}, N = {n}, u = {u_star}"));
    }
    let ell_max = (2.0 * (n as f64).ln().powf(0.125)).floor() as usize;
    let u = u_star as u64;
    let slack = (u as f64).powf(7.0 / 8.0);
    let mut raw: Vec<(Ratio<u64>, f64, (u64, u64))> = Vec::new();
    let mut dropped = 0.0;
    for ell in 0..=ell_max.min(u_star - 1) {
        let alpha = u - ell as u64;
        let la = log_pois_pmf(d, alpha);
        let mean = d * alpha as f64;
        let beta_max = (mean + slack).floor() as u64;
        for beta in 0..=beta_max {
            let mass = n as f64 * (la + log_pois_pmf(mean, beta)).exp();
            if mass < RHO_MASS_FLOOR {
                dropped += mass;
                continue;
            }
            raw.push((Ratio::from_integer(alpha) + Ratio::new(beta, alpha), mass, (alpha, beta)));
        }
    }
    raw.sort_by(|a, b| a.0.cmp(&b.0).then(a.2.cmp(&b.2)));
    let mut atoms: Vec<RhoAtom> = Vec::new();
    for (s, mass, pair) in raw {
        match atoms.last_mut() {
            Some(last) if last.s == s => {
                last.mass += mass;
                last.pairs.push(pair);
            }
            _ => atoms.push(RhoAtom {
                s,
                point: u as f64 * s.to_f64().unwrap_or(f64::NAN),
                mass,
                pairs: vec![pair],
            }),
        }
    }
    Ok(IntensityRho { n_vertices: n, d, u_star, ell_max, atoms, dropped_mass: dropped })
}

/// `N Σ_α P(Pois(d) = α) P(Pois(dα) ≤ dα + u^{7/8})` over the same α range.
pub fn rho_total_mass_closed_form(n: usize, d: f64, u_star: usize) -> f64 {
    let ell_max = (2.0 * (n as f64).ln().powf(0.125)).floor() as usize;
    let slack = (u_star as f64).powf(7.0 / 8.0);
    (0..=ell_max.min(u_star - 1))
        .map(|ell| {
            let alpha = (u_star - ell) as u64;
            let mean = d * alpha as f64;
            let cdf = 1.0 - pois_tail(mean, (mean + slack).floor() as u64 + 1);
            n as f64 * log_pois_pmf(d, alpha).exp() * cdf
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum KappaKind {
    /// `value` is the smallest atom whose closed tail is at most `K`.
    Atom,
    /// Even the top atom carries more than `K`; `value` is that atom and the
    /// infimum is approached from above without being attained.
    OpenInfimum,
    /// Total mass at most `K`: `value = −∞`.
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Kappa {
    pub value: f64,
    pub kind: KappaKind,
    /// `inf{s : ρ([s, ∞)) ≤ K}` over the reals: the largest atom whose
    /// closed tail exceeds `K`, or `−∞`.
    pub infimum: f64,
}

pub fn kappa(rho: &IntensityRho, k: f64) -> Result<Kappa, PointProcessError> {
    if !(k > 0.0) {
        return domain(format!("need K > 0, got {k}"));
    }
    let mut tail = 0.0;
    let mut value = None;
    for atom in rho.atoms.iter().rev() {
        tail += atom.mass;
        if tail > k {
            return Ok(match value {
                Some(v) => Kappa { value: v, kind: KappaKind::Atom, infimum: atom.point },
                None => Kappa { value: atom.point, kind: KappaKind::OpenInfimum, infimum: atom.point },
            });
        }
        value = Some(atom.point);
    }
    Ok(Kappa { value: f64::NEG_INFINITY, kind: KappaKind::Unbounded, infimum: f64::NEG_INFINITY })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Origin {
    EmpiricalPhi,
    SampledPsi,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointProcessSample {
    /// Sorted descending.
    pub points: Vec<f64>,
    pub origin: Origin,
}

impl PointProcessSample {
    pub fn new(mut points: Vec<f64>, origin: Origin) -> Self {
        points.sort_by(|a, b| b.total_cmp(a));
        Self { points, origin }
    }

    /// Points `≥ cut`.
    pub fn truncated(&self, cut: f64) -> Self {
        Self { points: self.points.iter().copied().filter(|&p| p >= cut).collect(), origin: self.origin }
    }
}

/// One draw of Ψ: an independent Poisson multiplicity per atom.
pub fn sample_psi(rho: &IntensityRho, seed: u64, replicate: u64) -> PointProcessSample {
    let mut rng = stream(seed, replicate, Purpose::PoissonProcess);
    sample_psi_with(rho, &mut rng)
}

pub fn sample_psi_with(rho: &IntensityRho, rng: &mut impl Rng) -> PointProcessSample {
    let mut points = Vec::new();
    for atom in &rho.atoms {
        if atom.mass <= 0.0 {
            continue;
        }
        let count = Poisson::new(atom.mass).map(|p| p.sample(rng)).unwrap_or(0.0) as usize;
        points.extend(std::iter::repeat_n(atom.point, count));
    }
    PointProcessSample::new(points, Origin::SampledPsi)
}

/// `u·(λ² − (d²+d)/u)` for the computed eigenvalues, kept when `≥ cut`.
///
/// Pass the top of the spectrum only: a bipartite local structure mirrors
/// each edge eigenvalue at `−λ`, which would be counted twice here.
pub fn empirical_phi<S: Scalar>(res: &SpectralResult<S>, d: f64, u_star: usize, cut: f64) -> PointProcessSample {
    let points = res.eigenvalues.iter().map(|l| phi_point(l.to_f64_lossy(), d, u_star)).filter(|&p| p >= cut).collect();
    PointProcessSample::new(points, Origin::EmpiricalPhi)
}

pub fn phi_point(lambda: f64, d: f64, u_star: usize) -> f64 {
    let u = u_star as f64;
    u * (lambda * lambda - (d * d + d) / u)
}

/// Whether the computed eigenvalues reach below `cut`, i.e. the truncated
/// empirical process is complete.
pub fn phi_covers<S: Scalar>(res: &SpectralResult<S>, d: f64, u_star: usize, cut: f64) -> bool {
    res.eigenvalues.iter().any(|l| phi_point(l.to_f64_lossy(), d, u_star) < cut)
}

/// Maximum transport between weighted atoms when mass may only move a
/// distance `≤ eps`. Greedy in sorted order is optimal for equal-width windows.
fn matched_mass(a: &[(f64, f64)], b: &[(f64, f64)], eps: f64) -> f64 {
    let mut left: Vec<f64> = b.iter().map(|p| p.1).collect();
    let (mut j, mut total) = (0, 0.0);
    for &(x, w) in a {
        let mut need = w;
        while j < b.len() && (x - b[j].0 > eps || left[j] <= 0.0) {
            j += 1;
        }
        let mut k = j;
        // distances compared as `|x − y| ≤ ε` so breakpoints match exactly
        while need > 0.0 && k < b.len() && b[k].0 - x <= eps {
            let take = need.min(left[k]);
            left[k] -= take;
            need -= take;
            total += take;
            k += 1;
        }
    }
    total
}

/// Lévy–Prokhorov distance between finite weighted atomic measures given as
/// `(location, mass)` pairs, with closed ε-neighbourhoods.
///
/// The worst set for `ν₁(A) ≤ ν₂(A_ε) + ε` has deficit `|ν₁| − T(ε)` with
/// `T` the maximum `ε`-constrained transport (Hall), and the same `T` serves
/// the reverse direction. `max(|ν₁|, |ν₂|) − T(ε)` only drops at pairwise
/// distances, so the infimum is found by bisecting those breakpoints.
/// Not bounded by 1 when total masses differ by more than 1.
pub fn lp_distance_weighted(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let sorted = |v: &[(f64, f64)]| {
        let mut v: Vec<(f64, f64)> = v.iter().copied().filter(|p| p.1 > 0.0).collect();
        v.sort_by(|x, y| x.0.total_cmp(&y.0));
        v
    };
    let (a, b) = (sorted(a), sorted(b));
    let total = |v: &[(f64, f64)]| v.iter().map(|p| p.1).sum::<f64>();
    let m = total(&a).max(total(&b));
    // tolerate rounding in summed masses
    let slack = 1e-12 * m.max(1.0);
    let deficit = |eps: f64| (m - matched_mass(&a, &b, eps)).max(0.0);

    let mut breaks: Vec<f64> = a.iter().flat_map(|x| b.iter().map(move |y| (x.0 - y.0).abs())).collect();
    breaks.push(0.0);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    // first breakpoint c with deficit(c) ≤ c
    let (mut lo, mut hi) = (0usize, breaks.len());
    while lo < hi {
        let mid = (lo + hi) / 2;
        if deficit(breaks[mid]) <= breaks[mid] + slack {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let at = breaks.get(lo).copied().unwrap_or(f64::INFINITY);
    let before = if lo > 0 { deficit(breaks[lo - 1]) } else { f64::INFINITY };
    let d = at.min(before);
    if d <= slack {
        0.0
    } else {
        d
    }
}

/// [`lp_distance_weighted`] with unit masses.
pub fn lp_distance(a: &PointProcessSample, b: &PointProcessSample) -> f64 {
    let unit = |s: &PointProcessSample| s.points.iter().map(|&p| (p, 1.0)).collect::<Vec<_>>();
    lp_distance_weighted(&unit(a), &unit(b))
}

/// Distance between the mean measures of two ensembles (each sample carries
/// mass `1/len`).
pub fn pooled_lp_distance(a: &[PointProcessSample], b: &[PointProcessSample]) -> f64 {
    let pool = |v: &[PointProcessSample]| {
        let w = 1.0 / v.len().max(1) as f64;
        v.iter().flat_map(|s| s.points.iter().map(move |&p| (p, w))).collect::<Vec<_>>()
    };
    lp_distance_weighted(&pool(a), &pool(b))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
}

impl Window {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Interval expected to hold the `k` largest of `ζ` iid `Pois(d·a)` draws.
pub fn order_stat_window(d: f64, a: u64, zeta: f64, k: u64) -> Result<Window, PointProcessError> {
    let m = d * a as f64;
    if !(m >= 1.0) {
        return domain(format!("need d·a ≥ 1, got {m}"));
    }
    if !(zeta > 1.0) || k == 0 || (k as f64) > zeta {
        return domain(format!("need ζ ≥ k ≥ 1 and ζ > 1; got ζ = {zeta}, k = {k}"));
    }
    let lz = zeta.ln();
    let hi = m + (2.0 * m * lz).sqrt();
    let corr = (k as f64).ln() + 0.5 * 2f64.ln() - SHARP_TAIL_CONSTANT.ln() + 1.5 * lz.ln();
    Ok(Window { lo: hi - m.sqrt() * corr / (2.0 * lz).sqrt(), hi })
}

/// Fraction of trials in which all `k` largest of `ζ` iid `Pois(d·a)` fall
/// in [`order_stat_window`].
pub fn window_coverage(d: f64, a: u64, zeta: usize, k: usize, trials: usize, seed: u64) -> Result<f64, PointProcessError> {
    use rayon::prelude::*;
    let w = order_stat_window(d, a, zeta as f64, k as u64)?;
    let pois = Poisson::new(d * a as f64).map_err(|e| PointProcessError::Domain(e.to_string()))?;
    let hits = (0..trials)
        .into_par_iter()
        .filter(|&t| {
            let mut rng = stream(seed, t as u64, Purpose::Auxiliary);
            let mut ys: Vec<f64> = (0..zeta).map(|_| pois.sample(&mut rng)).collect();
            ys.select_nth_unstable_by(zeta - k, f64::total_cmp);
            ys[zeta - k..].iter().all(|&y| w.contains(y))
        })
        .count();
    Ok(hits as f64 / trials as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Spacing {
    pub beta: f64,
    pub lambda: f64,
}

/// Predicted separation of the `k+1` largest 2-sphere sizes (`beta`) and of
/// the corresponding eigenvalues (`lambda`).
pub fn predicted_spacing(n: usize, d: f64, u_star: usize, k: u64) -> Result<Spacing, PointProcessError> {
    let u = u_star as f64;
    if k == 0 || !(d > 0.0) || !(u > d) {
        return domain(format!("need k ≥ 1, 0 < d < u; got k = {k}, d = {d}, u = {u}"));
    }
    let lll = (n as f64).ln().ln().ln();
    let denom = (u / d).ln().powi(3) * ((k + 1) as f64).powf(3.0 * lll);
    Ok(Spacing { beta: (d * u).sqrt() / denom, lambda: d.sqrt() / (3.0 * u * denom) })
}
