use proptest::prelude::*;

use bergman_lab::envelope::{constrained_envelope, envelope_oracle, SlopeWindow};
use bergman_lab::grid::VGrid;
use bergman_lab::weight::{Bump, Weight};

fn grid() -> VGrid {
    VGrid::new(-12.0, 12.0, 2049).unwrap()
}

fn weight_strategy() -> impl Strategy<Value = Weight> {
    (1u32..4, -3.0..3.0f64, -3.0..3.0f64, 0.5..3.0f64).prop_map(|(m, a, c, w)| {
        Weight::fubini_study(m).with_bump(Bump {
            amplitude: a,
            center: c,
            halfwidth: w,
        })
    })
}

fn window_strategy() -> impl Strategy<Value = (f64, f64)> {
    (0.0..1.0f64, 0.0..1.0f64).prop_map(|(a, b)| {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        (lo, hi.max(lo + 0.05))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn envelope_is_idempotent(w in weight_strategy(), (a, b) in window_strategy()) {
        let m = w.m();
        let window = SlopeWindow::new(a * m, (b * m).min(m)).unwrap();
        let once = constrained_envelope(&w.sample(&grid()), window).unwrap();
        let twice = constrained_envelope(&once.u_e, window).unwrap();
        prop_assert!(once.u_e.max_abs_diff(&twice.u_e).unwrap() <= 1e-12 * (1.0 + m * 12.0));
    }

    #[test]
    fn envelope_lies_below_and_is_monotone(w in weight_strategy(), shift in 0.0..2.0f64) {
        let window = SlopeWindow::full(&w);
        let g = grid();
        let lower = constrained_envelope(&w.sample(&g), window).unwrap();
        let raised = g.sample(|v| w.potential(v) + shift * (-v * v).exp());
        let upper = constrained_envelope(&raised, window).unwrap();
        for i in 0..g.len() {
            prop_assert!(lower.u_e.values[i] <= lower.obstacle.values[i] + 1e-12);
            prop_assert!(lower.u_e.values[i] <= upper.u_e.values[i] + 1e-12);
        }
    }

    #[test]
    fn narrower_windows_give_lower_envelopes(w in weight_strategy(), (a, b) in window_strategy()) {
        let m = w.m();
        let wide = SlopeWindow::full(&w);
        let narrow = SlopeWindow::new(a * m, (b * m).min(m)).unwrap();
        let g = grid();
        let e_wide = constrained_envelope(&w.sample(&g), wide).unwrap();
        let e_narrow = constrained_envelope(&w.sample(&g), narrow).unwrap();
        for i in 0..g.len() {
            prop_assert!(e_narrow.u_e.values[i] <= e_wide.u_e.values[i] + 1e-12);
        }
    }

    #[test]
    fn agrees_with_hull_oracle(w in weight_strategy(), (a, b) in window_strategy()) {
        let m = w.m();
        let window = SlopeWindow::new(a * m, (b * m).min(m)).unwrap();
        let u = w.sample(&grid());
        let fast = constrained_envelope(&u, window).unwrap();
        let slow = envelope_oracle(&u, window).unwrap();
        prop_assert!(fast.u_e.max_abs_diff(&slow).unwrap() <= 1e-9);
    }
}
