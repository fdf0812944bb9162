//! Closed forms for `m = 1` without a bump, where `B_k = k + 1` exactly.

use bergman_lab::grid::VGrid;
use bergman_lab::presets::find_preset;
use bergman_lab::verify::{expansion_probe, l1_report, morse_report, uniform_report, Setting};
use bergman_lab::weight::logistic;

fn wide_setting() -> Setting {
    let p = find_preset("fs").unwrap();
    Setting::new(p.weight, p.window, VGrid::new(-40.0, 40.0, 8001).unwrap()).unwrap()
}

const KS: [usize; 3] = [10, 40, 160];

#[test]
fn l1_error_is_one_over_k() {
    let s = wide_setting();
    let r = l1_report(&s, &KS).unwrap();
    let mass = logistic(40.0) - logistic(-40.0);
    for row in &r.rows {
        let exact = mass / row.k as f64;
        assert!((row.error / exact - 1.0).abs() < 1e-8, "k={}", row.k);
    }
}

#[test]
fn morse_constant_is_k_plus_one_over_k() {
    let s = wide_setting();
    let r = morse_report(&s, &KS, 0.01).unwrap();
    for row in &r.rows {
        let exact = (row.k + 1) as f64 / row.k as f64;
        assert!((row.get("c_k") / exact - 1.0).abs() < 1e-8);
    }
    assert!(r.verdict.passed());
}

#[test]
fn expansion_term_is_the_curvature() {
    let s = wide_setting();
    let r = expansion_probe(&s, 0.0, &KS).unwrap();
    for row in &r.rows {
        assert!((row.get("scaled") / 0.25 - 1.0).abs() < 1e-8);
    }
    assert!(r.verdict.passed());
}

#[test]
fn uniform_error_is_log_k_plus_one_over_k() {
    let s = wide_setting();
    let r = uniform_report(&s, &[2, 10], None).unwrap();
    // the Bergman metric is u + ln(k+1)/k, and u_e = u
    assert!((r.rows[0].error - 3f64.ln() / 2.0).abs() < 1e-8);
    assert!((r.rows[1].error - 11f64.ln() / 10.0).abs() < 1e-8);
}
