//! Built-in weights and slope windows.

use serde::{Deserialize, Serialize};

use crate::envelope::SlopeWindow;
use crate::weight::{Bump, Weight};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preset {
    pub name: String,
    pub description: String,
    pub weight: Weight,
    pub window: SlopeWindow,
}

fn preset(name: &str, description: &str, weight: Weight, lo: f64, hi: f64) -> Preset {
    Preset {
        name: name.into(),
        description: description.into(),
        weight,
        window: SlopeWindow { s_lo: lo, s_hi: hi },
    }
}

/// The preset catalog, in a fixed order.
pub fn list_presets() -> Vec<Preset> {
    let dip = Bump {
        amplitude: -1.5,
        center: 0.0,
        halfwidth: 2.0,
    };
    let spike = Bump {
        amplitude: 3.0,
        center: 0.0,
        halfwidth: 1.5,
    };
    vec![
        preset(
            "fs",
            "Fubini-Study metric ln(1+|z|^2) on O(1) over P^1; the envelope is the metric itself (projective space example).",
            Weight::fubini_study(1),
            0.0,
            1.0,
        ),
        preset(
            "bump",
            "Fubini-Study on O(1) plus a radial mollifier dip (amplitude -1.5, center 0, halfwidth 2); envelope is the convex hull in v = ln|z|^2 (perturbed projective space example).",
            Weight::fubini_study(1).with_bump(dip),
            0.0,
            1.0,
        ),
        preset(
            "example_5_2",
            "O(2) with 2 ln(1+|z|^2), sections vanishing to order k at infinity (degree <= k); contact set is the unit disc (divisor at infinity example).",
            Weight::fubini_study(2),
            0.0,
            1.0,
        ),
        preset(
            "example_5_3",
            "O(2) with 2 ln(1+|z|^2), sections vanishing to order k at the origin; contact set is the complement of the unit disc (blow-up example).",
            Weight::fubini_study(2),
            1.0,
            2.0,
        ),
        preset(
            "extreme_bump",
            "Fubini-Study on O(1) plus a tall mollifier spike (amplitude 3, center 0, halfwidth 1.5); drives the monomial Gram matrix past double precision at k = 40.",
            Weight::fubini_study(1).with_bump(spike),
            0.0,
            1.0,
        ),
    ]
}

pub fn find_preset(name: &str) -> Option<Preset> {
    list_presets().into_iter().find(|p| p.name == name)
}
