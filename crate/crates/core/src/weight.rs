//! Radial metrics on `O(m)` over the Riemann sphere.
//!
//! A radial metric is encoded by its potential on the log-modulus line,
//! `u(v) = m ln(1 + e^v) + chi(v)`, where `chi` is an optional smooth
//! compactly supported bump built from the standard mollifier
//! `exp(1 - 1/(1 - t^2))`.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::grid::{GridFn, Mask, VGrid};

/// `ln(1 + e^v)` without overflow.
pub fn softplus(v: f64) -> f64 {
    v.max(0.0) + (-v.abs()).exp().ln_1p()
}

/// `e^v / (1 + e^v)`.
pub fn logistic(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

/// Density of the Fubini-Study volume form pushed forward to the v-line:
/// `e^v / (1 + e^v)^2`. Integrates to one over the real line.
pub fn fs_density(v: f64) -> f64 {
    let e = (-v.abs()).exp();
    e / ((1.0 + e) * (1.0 + e))
}

/// `ln fs_density(v)`, accurate for large `|v|`.
pub fn ln_fs_density(v: f64) -> f64 {
    -v.abs() - 2.0 * (-v.abs()).exp().ln_1p()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    Value,
    First,
    Second,
}

impl TryFrom<u8> for Order {
    type Error = LabError;

    fn try_from(order: u8) -> Result<Self> {
        match order {
            0 => Ok(Order::Value),
            1 => Ok(Order::First),
            2 => Ok(Order::Second),
            _ => Err(LabError::InvalidWeight(format!(
                "derivative order {order} not in {{0, 1, 2}}"
            ))),
        }
    }
}

/// Mollifier bump `amplitude * exp(1 - 1/(1 - t^2))`, `t = (v - center)/halfwidth`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub amplitude: f64,
    pub center: f64,
    pub halfwidth: f64,
}

impl Bump {
    /// Value and first two derivatives at `v`; all zero off the support.
    fn eval3(&self, v: f64) -> [f64; 3] {
        let t = (v - self.center) / self.halfwidth;
        if t.abs() >= 1.0 {
            return [0.0; 3];
        }
        let q = 1.0 - t * t;
        let psi = (1.0 - 1.0 / q).exp();
        if psi == 0.0 {
            return [0.0; 3];
        }
        let q2 = q * q;
        let d1 = -2.0 * t / q2;
        let d2 = d1 * d1 - 2.0 / q2 - 8.0 * t * t / (q2 * q);
        let w = self.halfwidth;
        [
            self.amplitude * psi,
            self.amplitude * psi * d1 / w,
            self.amplitude * psi * d2 / (w * w),
        ]
    }

    pub fn support(&self) -> (f64, f64) {
        (self.center - self.halfwidth, self.center + self.halfwidth)
    }
}

/// Smooth radial metric on `O(degree_m)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weight {
    pub degree_m: u32,
    pub bump: Option<Bump>,
}

impl Weight {
    pub fn new(degree_m: u32, bump: Option<Bump>) -> Result<Self> {
        let w = Self { degree_m, bump };
        w.validate()?;
        Ok(w)
    }

    /// `m ln(1 + e^v)` with no perturbation.
    pub fn fubini_study(degree_m: u32) -> Self {
        Self {
            degree_m,
            bump: None,
        }
    }

    pub fn with_bump(self, bump: Bump) -> Self {
        Self {
            bump: Some(bump),
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.degree_m == 0 {
            return Err(LabError::InvalidWeight("degree_m must be positive".into()));
        }
        if let Some(b) = &self.bump {
            if !(b.amplitude.is_finite() && b.center.is_finite() && b.halfwidth.is_finite()) {
                return Err(LabError::InvalidWeight("bump parameters must be finite".into()));
            }
            if b.halfwidth <= 0.0 {
                return Err(LabError::InvalidWeight("bump halfwidth must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let w: Weight = serde_json::from_str(text)?;
        w.validate()?;
        Ok(w)
    }

    pub fn m(&self) -> f64 {
        self.degree_m as f64
    }

    pub fn eval(&self, v: f64, order: Order) -> f64 {
        let m = self.m();
        let base = match order {
            Order::Value => m * softplus(v),
            Order::First => m * logistic(v),
            Order::Second => m * fs_density(v),
        };
        let idx = match order {
            Order::Value => 0,
            Order::First => 1,
            Order::Second => 2,
        };
        base + self.bump.map_or(0.0, |b| b.eval3(v)[idx])
    }

    pub fn potential(&self, v: f64) -> f64 {
        self.eval(v, Order::Value)
    }

    pub fn slope(&self, v: f64) -> f64 {
        self.eval(v, Order::First)
    }

    pub fn curvature(&self, v: f64) -> f64 {
        self.eval(v, Order::Second)
    }

    pub fn sample(&self, grid: &VGrid) -> GridFn {
        grid.sample(|v| self.potential(v))
    }

    pub fn sample_curvature(&self, grid: &VGrid) -> GridFn {
        grid.sample(|v| self.curvature(v))
    }

    /// Grid realization of the set where the curvature is positive: `u'' > eps`.
    pub fn positive_set(&self, grid: &VGrid, eps: f64) -> Mask {
        grid.nodes()
            .into_iter()
            .map(|v| self.curvature(v) > eps)
            .collect()
    }

    /// Total Monge-Ampere mass `u'(v_max) - u'(v_min)`, which equals `degree_m`
    /// once the grid reaches the asymptotic slopes.
    pub fn curvature_mass(&self, grid: &VGrid) -> Result<f64> {
        let lo = self.slope(grid.v_min());
        let hi = self.slope(grid.v_max());
        if lo >= 1e-6 || self.m() - hi >= 1e-6 {
            return Err(LabError::GridTooNarrow(format!(
                "end slopes {lo:e} and {hi} are not within 1e-6 of 0 and {}",
                self.degree_m
            )));
        }
        Ok(hi - lo)
    }
}
