use spectral_edge::pointproc::*;

// Enumerated independently in 40-digit arithmetic.
#[test]
fn rho_matches_enumeration() {
    for (n, u, atoms, total, heavy_point, heavy_mass, top_point, top_mass) in [
        (1_000_000, 9, 43, 82.014803308009036, 72.0, 10.87906459228131, 96.0, 0.019698364915130088),
        (10_000, 7, 33, 35.953759382770255, 42.0, 5.3919015218010142, 61.0, 0.019233269825910772),
    ] {
        let rho = build_rho(n, 1.0, u).unwrap();
        assert_eq!(rho.ell_max, 2);
        assert_eq!(rho.atoms.len(), atoms);
        assert!((rho.total_mass() - total).abs() < 1e-9 * total);
        assert!((rho_total_mass_closed_form(n, 1.0, u) - total).abs() < 1e-9 * total);
        let heavy = rho.atoms.iter().max_by(|a, b| a.mass.total_cmp(&b.mass)).unwrap();
        assert!((heavy.point - heavy_point).abs() < 1e-12);
        assert!((heavy.mass - heavy_mass).abs() < 1e-9 * heavy_mass);
        let top = rho.atoms.last().unwrap();
        assert!((top.point - top_point).abs() < 1e-9);
        assert!((top.mass - top_mass).abs() < 1e-9 * top_mass);
    }
}

#[test]
fn rho_support_is_the_indicator_set() {
    let (n, u) = (1_000_000, 9usize);
    let rho = build_rho(n, 1.0, u).unwrap();
    let slack = (u as f64).powf(7.0 / 8.0);
    for atom in &rho.atoms {
        for &(alpha, beta) in &atom.pairs {
            assert!(alpha as usize + rho.ell_max >= u && alpha as usize <= u);
            assert!((beta as f64) <= alpha as f64 + slack);
        }
    }
}

#[test]
fn kappa_at_default_k() {
    let rho = build_rho(1_000_000, 1.0, 9).unwrap();
    let k = kappa(&rho, default_k(1_000_000)).unwrap();
    assert_eq!(k.kind, KappaKind::Atom);
    assert!(rho.tail_mass(k.value) <= default_k(1_000_000));
    assert!(rho.tail_mass(k.infimum) > default_k(1_000_000));
    assert!(k.infimum < k.value);
}

// Exact coverage P(all top-k of 10⁴ iid Pois(100) in window) for k = 1, 2, 3.
const EXACT_COVERAGE: [f64; 3] = [0.736288867695033, 0.736291961482041, 0.736291964268131];

#[test]
fn window_monte_carlo_matches_exact_coverage() {
    for (k, exact) in EXACT_COVERAGE.iter().enumerate() {
        let cov = window_coverage(1.0, 100, 10_000, k + 1, 1000, 3).unwrap();
        let se = (exact * (1.0 - exact) / 1000.0).sqrt();
        assert!((cov - exact).abs() < 4.0 * se, "k = {}: {cov} vs {exact}", k + 1);
        assert!(cov >= 0.68);
    }
}

#[test]
fn sampled_psi_is_reproducible() {
    let rho = build_rho(10_000, 1.0, 7).unwrap();
    assert_eq!(sample_psi(&rho, 4, 2), sample_psi(&rho, 4, 2));
    assert_ne!(sample_psi(&rho, 4, 2), sample_psi(&rho, 4, 3));
    let s = sample_psi(&rho, 4, 2);
    assert!(s.points.windows(2).all(|w| w[0] >= w[1]));
    assert!(s.points.iter().all(|p| rho.atoms.iter().any(|a| a.point == *p)));
}
