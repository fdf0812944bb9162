use num_complex::Complex64;
use rand::{Rng, SeedableRng};

use bergman_lab::bergman::{default_quadrature_grid, monomial_log_norms, SectionSpace};
use bergman_lab::envelope::SlopeWindow;
use bergman_lab::grid::VGrid;
use bergman_lab::presets::find_preset;
use bergman_lab::verify::{decay_report, gap_at, log_bergman_at, Setting};
use bergman_lab::LabError;

/// No unit-norm section exceeds the Bergman function at any point.
#[test]
fn extremal_property() {
    let mut rng = rand::rngs::StdRng::seed_from_u64(11);
    let w = find_preset("bump").unwrap().weight;
    let space = SectionSpace::full(w, 30).unwrap();
    let norms = monomial_log_norms(&space, &default_quadrature_grid()).unwrap();
    let k = space.k as f64;
    for _ in 0..200 {
        let v: f64 = rng.gen_range(-6.0..6.0);
        let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let coeffs: Vec<Complex64> = (0..space.dimension())
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        // ||p||^2 = sum |a_j|^2 c_j^2 by orthogonality
        let norm_sq: f64 = norms.iter().zip(&coeffs).map(|((_, c), a)| a.norm_sqr() * c.exp()).sum();
        let value: Complex64 = norms
            .iter()
            .zip(&coeffs)
            .map(|((j, _), a)| a * Complex64::from_polar((0.5 * j as f64 * v).exp(), j as f64 * theta))
            .sum();
        let lhs = value.norm_sqr().ln() - k * w.potential(v) - norm_sq.ln();
        assert!(lhs <= log_bergman_at(&space, &norms, v) + 1e-12);
    }
}

/// Shrinking the index window can only lower the Bergman function.
#[test]
fn window_nesting() {
    let w = find_preset("example_5_2").unwrap().weight;
    let q = default_quadrature_grid();
    let k = 60;
    let full = SectionSpace::full(w, k).unwrap();
    let sub = SectionSpace::from_window(w, k, SlopeWindow { s_lo: 0.5, s_hi: 1.25 }).unwrap();
    let nf = monomial_log_norms(&full, &q).unwrap();
    let ns = monomial_log_norms(&sub, &q).unwrap();
    for i in 0..=80 {
        let v = -10.0 + 0.25 * i as f64;
        assert!(log_bergman_at(&sub, &ns, v) <= log_bergman_at(&full, &nf, v) + 1e-12);
    }
}

/// Off the contact set `B_k` decays like `k e^{-k (u - u_e)}` up to a modest factor.
#[test]
fn decay_bound_off_contact() {
    let p = find_preset("example_5_2").unwrap();
    let s = Setting::new(p.weight, p.window, VGrid::default_analysis()).unwrap();
    for k in [50usize, 100, 200] {
        let bundle = s.kernel(k).unwrap();
        let (space, norms, _) = &*bundle;
        for v in [0.5, 1.0, 2.0, 3.0, 4.0] {
            let gap = gap_at(&s, v).unwrap();
            let lb = log_bergman_at(space, norms, v);
            assert!(lb + k as f64 * gap <= (k as f64).ln() + 2.0, "k={k} v={v}");
        }
    }
}

#[test]
fn decay_rejects_probes_in_contact() {
    let p = find_preset("fs").unwrap();
    let s = Setting::new(p.weight, p.window, VGrid::default_analysis()).unwrap();
    assert!(matches!(
        decay_report(&s, &[0.0], &[10, 20]),
        Err(LabError::ProbeInContact { .. })
    ));
}

#[test]
fn example_gap_at_two() {
    // tangent line of slope 1 touches 2 ln(1 + e^v) at v = 0
    let p = find_preset("example_5_2").unwrap();
    let s = Setting::new(p.weight, p.window, VGrid::new(-12.0, 12.0, 1 << 14).unwrap()).unwrap();
    let exact = 2.0 * (1.0 + 2f64.exp()).ln() - 2.0 - 2.0 * 2f64.ln();
    assert!((exact - 0.8675617).abs() < 1e-7);
    assert!((gap_at(&s, 2.0).unwrap() - exact).abs() < 1e-6);
}
