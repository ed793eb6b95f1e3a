use serde::Serialize;

use super::{extract_ball, RegimePartition};
use crate::graph::{SparseGraph, Vertex};

/// Default constant in front of the sphere-growth and square-sum envelopes.
pub const OMEGA_ENVELOPE_CONSTANT: f64 = 4.0;

/// Outcome of the five structural conditions on the balls `B_{r+3}(x)`,
/// `x ∈ 𝒱`, each with the first witness found.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OmegaReport {
    pub radius: usize,
    pub envelope_constant: f64,
    /// (1) pairwise disjoint balls; witness is an overlapping pair.
    pub disjoint: bool,
    pub overlap_witness: Option<(Vertex, Vertex)>,
    /// (2) every ball is a tree.
    pub trees: bool,
    pub cycle_witness: Option<Vertex>,
    /// (3) sphere sizes `|S_i|`, `1 ≤ i ≤ r`, near `d^{i−1}α`; witness is
    /// (center, level).
    pub sphere_growth: bool,
    pub growth_witness: Option<(Vertex, usize)>,
    /// (4) child counts bounded; witness is (center, offending vertex).
    pub child_bound: bool,
    pub child_witness: Option<(Vertex, Vertex)>,
    /// (5) `Σ_{S₁} N_y²` near `(d²+d)α`.
    pub square_sum: bool,
    pub square_sum_witness: Option<Vertex>,
    /// For each 𝒲 vertex: whether its own ball meets (2)–(5) and touches no
    /// other 𝒱 ball.
    pub fine_pass: Vec<(Vertex, bool)>,
}

impl OmegaReport {
    pub fn all(&self) -> bool {
        self.disjoint && self.trees && self.sphere_growth && self.child_bound && self.square_sum
    }

    pub fn fine_pass_fraction(&self) -> f64 {
        if self.fine_pass.is_empty() {
            return 0.0;
        }
        self.fine_pass.iter().filter(|p| p.1).count() as f64 / self.fine_pass.len() as f64
    }
}

struct Envelopes {
    growth_scale: f64,
    child_max: f64,
    square_sum: f64,
}

pub fn check_omega(g: &SparseGraph, part: &RegimePartition, r: usize, d: f64) -> OmegaReport {
    check_omega_with(g, part, r, d, OMEGA_ENVELOPE_CONSTANT)
}

pub fn check_omega_with(
    g: &SparseGraph,
    part: &RegimePartition,
    r: usize,
    d: f64,
    constant: f64,
) -> OmegaReport {
    let u = part.u_star as f64;
    let wide = Envelopes {
        growth_scale: constant * u.powf(7.0 / 8.0),
        child_max: u.powf(0.75),
        square_sum: constant * u.powf(1.5),
    };
    let narrow = Envelopes {
        growth_scale: constant * u.powf(2.0 / 3.0),
        child_max: u.powf(1.0 / 3.0),
        square_sum: constant * u.powf(2.0 / 3.0),
    };

    let mut report = OmegaReport {
        radius: r,
        envelope_constant: constant,
        disjoint: true,
        overlap_witness: None,
        trees: true,
        cycle_witness: None,
        sphere_growth: true,
        growth_witness: None,
        child_bound: true,
        child_witness: None,
        square_sum: true,
        square_sum_witness: None,
        fine_pass: Vec::new(),
    };
    const FREE: Vertex = Vertex::MAX;
    let mut owner = vec![FREE; g.n_vertices()];
    let mut local_ok = vec![true; part.intermediate.len()];
    let slot = |v: Vertex| part.intermediate.binary_search(&v).unwrap();

    for (k, &x) in part.intermediate.iter().enumerate() {
        let ball = extract_ball(g, x, r + 3);
        for &v in ball.vertices() {
            let o = owner[v as usize];
            if o == FREE {
                owner[v as usize] = x;
            } else if o != x {
                report.disjoint = false;
                report.overlap_witness.get_or_insert((o, x));
                local_ok[k] = false;
                local_ok[slot(o)] = false;
            }
        }
        if !ball.is_tree() {
            report.trees = false;
            report.cycle_witness.get_or_insert(x);
            local_ok[k] = false;
        }

        let env = if part.is_fine(x) { &narrow } else { &wide };
        let alpha = g.degree(x) as f64;
        let sizes = ball.sphere_sizes();
        for i in 1..=r {
            let dev = (sizes[i] as f64 - d.powi(i as i32 - 1) * alpha).abs();
            if dev > (d.powf(i as f64 - 1.5) + 1.0) * env.growth_scale {
                report.sphere_growth = false;
                report.growth_witness.get_or_insert((x, i));
                local_ok[k] = false;
                break;
            }
        }
        if let Some(y) = (1..ball.len()).find(|&y| ball.child_count(y) as f64 > env.child_max) {
            report.child_bound = false;
            report.child_witness.get_or_insert((x, ball.vertices()[y]));
            local_ok[k] = false;
        }
        let sq: usize = ball.level_range(1).map(|y| ball.child_count(y).pow(2)).sum();
        if (sq as f64 - (d * d + d) * alpha).abs() > env.square_sum {
            report.square_sum = false;
            report.square_sum_witness.get_or_insert(x);
            local_ok[k] = false;
        }
    }
    report.fine_pass = part.fine.iter().map(|&x| (x, local_ok[slot(x)])).collect();
    report
}
