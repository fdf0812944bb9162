//! Weighted polynomial section spaces and their Bergman kernels.
//!
//! Sections of `O(m)^k` in the affine chart are polynomials of degree at most
//! `m k`. A radial weight makes the monomials `z^j` orthogonal, so the
//! Bergman function is a weighted sum of `e^{j v}` with weights `1 / c_j^2`,
//! where `c_j^2 = \int e^{j v - k u(v)} g''(v) dv`. Every sum and integral
//! is carried in log scale relative to its largest exponent.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::envelope::SlopeWindow;
use crate::error::{LabError, Result};
use crate::grid::{GridFn, VGrid};
use crate::quadrature::{log_simpson_exp, log_sum_exp, simpson};
use crate::weight::{fs_density, ln_fs_density, Weight};

/// Integrand exponents at both ends must sit this far below the peak.
pub const TRUNCATION_MARGIN: f64 = 92.0;
/// Relative change between two Simpson levels accepted as converged.
pub const QUADRATURE_RTOL: f64 = 1e-12;
const MAX_REFINEMENTS: usize = 4;

/// Default quadrature grid for monomial norms: `[-110, 110]`, `h = 0.005`.
pub fn default_quadrature_grid() -> VGrid {
    VGrid::new(-110.0, 110.0, 44_001).expect("static grid")
}

/// Which divisor the sections are forced to vanish on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Divisor {
    None,
    AtZero,
    AtInfinity,
}

/// Polynomials `sum_{j_lo <= j <= j_hi} a_j z^j` at tensor power `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectionSpace {
    pub k: usize,
    pub j_lo: usize,
    pub j_hi: usize,
    pub weight: Weight,
}

impl SectionSpace {
    pub fn new(weight: Weight, k: usize, j_lo: usize, j_hi: usize) -> Result<Self> {
        let top = weight.degree_m as usize * k;
        if k == 0 && j_hi > 0 {
            return Err(LabError::InvalidSpace("k = 0 only admits constants".into()));
        }
        if j_lo > j_hi || j_hi > top {
            return Err(LabError::InvalidSpace(format!(
                "index window [{j_lo}, {j_hi}] not inside [0, {top}]"
            )));
        }
        Ok(Self {
            k,
            j_lo,
            j_hi,
            weight,
        })
    }

    /// All polynomials of degree at most `m k`.
    pub fn full(weight: Weight, k: usize) -> Result<Self> {
        Self::new(weight, k, 0, weight.degree_m as usize * k)
    }

    /// Sections vanishing to order `k + offset` at `z = 0` (or at infinity).
    /// `offset = 0` follows the order-`k` definition; `offset = 1` the
    /// "degree at least k+1" reading of the blow-up example.
    pub fn with_divisor(weight: Weight, k: usize, divisor: Divisor, offset: usize) -> Result<Self> {
        let top = weight.degree_m as usize * k;
        let order = k + offset;
        match divisor {
            Divisor::None => Self::full(weight, k),
            Divisor::AtZero => Self::new(weight, k, order, top),
            Divisor::AtInfinity => {
                if order > top {
                    return Err(LabError::InvalidSpace(format!(
                        "vanishing order {order} at infinity exceeds degree {top}"
                    )));
                }
                Self::new(weight, k, 0, top - order)
            }
        }
    }

    /// Integer index window `[ceil(s_lo k), floor(s_hi k)]` of a slope window.
    pub fn from_window(weight: Weight, k: usize, window: SlopeWindow) -> Result<Self> {
        let kf = k as f64;
        let lo = (window.s_lo * kf - 1e-9).ceil().max(0.0) as usize;
        let hi = (window.s_hi * kf + 1e-9).floor().max(0.0) as usize;
        Self::new(weight, k, lo, hi)
    }

    pub fn dimension(&self) -> usize {
        self.j_hi - self.j_lo + 1
    }

    /// Slope window `[j_lo / k, j_hi / k]` seen by the Bergman metric.
    pub fn window(&self) -> Result<SlopeWindow> {
        let k = self.k as f64;
        SlopeWindow::new(self.j_lo as f64 / k, self.j_hi as f64 / k)
    }

    fn indices(&self) -> std::ops::RangeInclusive<usize> {
        self.j_lo..=self.j_hi
    }
}

/// `ln c_j^2` for `j` in the space's index window.
#[derive(Debug, Clone, PartialEq)]
pub struct LogNorms {
    pub j_lo: usize,
    pub log_c2: Vec<f64>,
}

impl LogNorms {
    pub fn get(&self, j: usize) -> f64 {
        self.log_c2[j - self.j_lo]
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + Clone + '_ {
        self.log_c2
            .iter()
            .enumerate()
            .map(move |(i, &c)| (self.j_lo + i, c))
    }
}

/// `-k u(v) + ln g''(v)` on the nodes of `grid`.
fn base_exponent(space: &SectionSpace, grid: &VGrid) -> Vec<f64> {
    let k = space.k as f64;
    grid.nodes()
        .into_iter()
        .map(|v| -k * space.weight.potential(v) + ln_fs_density(v))
        .collect()
}

fn log_norm_on(j: usize, grid: &VGrid, base: &[f64]) -> (f64, Option<f64>, f64) {
    let jf = j as f64;
    let e: Vec<f64> = grid
        .nodes()
        .into_iter()
        .zip(base)
        .map(|(v, b)| jf * v + b)
        .collect();
    let peak = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let margin = (peak - e[0]).min(peak - e[e.len() - 1]);
    let (fine, coarse) = log_simpson_exp(&e, grid.step());
    (fine, coarse, margin)
}

/// Squared monomial norms by log-domain composite Simpson quadrature, refined
/// by grid doubling until two levels agree to [`QUADRATURE_RTOL`].
pub fn monomial_log_norms(space: &SectionSpace, grid: &VGrid) -> Result<LogNorms> {
    let base0 = base_exponent(space, grid);
    let log_c2 = space
        .indices()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|j| {
            let (mut fine, coarse, margin) = log_norm_on(j, grid, &base0);
            if margin < TRUNCATION_MARGIN {
                return Err(LabError::Truncation { j, margin });
            }
            // The previous level is either the embedded coarse grid or the
            // last fine estimate.
            let mut previous = match coarse {
                Some(c) => c,
                None => {
                    let prev = fine;
                    let g = grid.refined();
                    fine = log_norm_on(j, &g, &base_exponent(space, &g)).0;
                    prev
                }
            };
            let mut g = *grid;
            for _ in 0..MAX_REFINEMENTS {
                let change = (fine - previous).abs();
                if change < QUADRATURE_RTOL {
                    return Ok(fine);
                }
                g = g.refined();
                previous = fine;
                fine = log_norm_on(j, &g, &base_exponent(space, &g)).0;
            }
            let change = (fine - previous).abs();
            if change < QUADRATURE_RTOL {
                Ok(fine)
            } else {
                Err(LabError::QuadratureNotConverged { j, change })
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(LogNorms {
        j_lo: space.j_lo,
        log_c2,
    })
}

/// Bergman function and Bergman metric sampled on a grid.
#[derive(Debug, Clone)]
pub struct KernelEval {
    pub k: usize,
    /// `ln B_k(v)`.
    pub log_b: GridFn,
    /// `(1/k) ln K_k(x, x)` in the affine trivialization.
    pub bergman_metric: GridFn,
}

impl KernelEval {
    pub fn grid(&self) -> &VGrid {
        &self.log_b.grid
    }

    pub fn b(&self, i: usize) -> f64 {
        self.log_b.values[i].exp()
    }
}

/// `ln B_k(v) = ln sum_j exp(j v - k u(v) - ln c_j^2)` and the Bergman metric.
pub fn bergman_function(space: &SectionSpace, norms: &LogNorms, grid: &VGrid) -> KernelEval {
    let k = space.k as f64;
    let (log_k, weight) = grid
        .nodes()
        .into_par_iter()
        .map(|v| {
            let lk = log_sum_exp(norms.iter().map(|(j, c)| j as f64 * v - c));
            (lk, space.weight.potential(v))
        })
        .collect::<(Vec<f64>, Vec<f64>)>();
    let log_b = log_k.iter().zip(&weight).map(|(l, u)| l - k * u).collect();
    let metric = if space.k == 0 {
        vec![0.0; grid.len()]
    } else {
        log_k.iter().map(|l| l / k).collect()
    };
    KernelEval {
        k: space.k,
        log_b: GridFn {
            grid: *grid,
            values: log_b,
        },
        bergman_metric: GridFn {
            grid: *grid,
            values: metric,
        },
    }
}

/// Norms and kernel in one call: norms on `quad_grid`, kernel on `eval_grid`.
pub fn compute_kernel(
    space: &SectionSpace,
    quad_grid: &VGrid,
    eval_grid: &VGrid,
) -> Result<(LogNorms, KernelEval)> {
    let norms = monomial_log_norms(space, quad_grid)?;
    let eval = bergman_function(space, &norms, eval_grid);
    Ok((norms, eval))
}

/// Relative tolerance of the dimension identity.
pub const DIMENSION_RTOL: f64 = 1e-6;

/// `\int B_k g'' dv` by Simpson on the evaluation grid; must equal the dimension.
/// The grid has to cover the tails (the integrand decays like `e^{-|v|}`).
pub fn dimension_identity(space: &SectionSpace, eval: &KernelEval) -> Result<f64> {
    let g = eval.grid();
    let integrand: Vec<f64> = g
        .nodes()
        .iter()
        .zip(&eval.log_b.values)
        .map(|(&v, lb)| (lb + ln_fs_density(v)).exp())
        .collect();
    let integral = simpson(&integrand, g.step());
    let dimension = space.dimension();
    if ((integral - dimension as f64) / dimension as f64).abs() > DIMENSION_RTOL {
        return Err(LabError::DimensionMismatch {
            integral,
            dimension,
        });
    }
    Ok(integral)
}

/// A point `z = e^{v/2 + i theta}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarPoint {
    pub v: f64,
    pub theta: f64,
}

impl PolarPoint {
    pub fn new(v: f64, theta: f64) -> Self {
        Self { v, theta }
    }
}

/// `|K_k(x, y)|^2_{k phi}`, summed in log-modulus with explicit phases.
pub fn kernel_offdiag_sq(space: &SectionSpace, norms: &LogNorms, x: PolarPoint, y: PolarPoint) -> f64 {
    let k = space.k as f64;
    let shift = 0.5 * k * (space.weight.potential(x.v) + space.weight.potential(y.v));
    let exps: Vec<f64> = norms
        .iter()
        .map(|(j, c)| 0.5 * j as f64 * (x.v + y.v) - c - shift)
        .collect();
    let max = exps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let dtheta = x.theta - y.theta;
    let (mut re, mut im) = (0.0, 0.0);
    for ((j, _), e) in norms.iter().zip(&exps) {
        let r = (e - max).exp();
        let phase = j as f64 * dtheta;
        re += r * phase.cos();
        im += r * phase.sin();
    }
    (2.0 * max).exp() * (re * re + im * im)
}

/// Second difference quotient of the Bergman metric (its Monge-Ampere density).
pub fn bergman_measure(eval: &KernelEval) -> GridFn {
    GridFn {
        grid: *eval.grid(),
        values: eval.bergman_metric.second_differences(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum End {
    Left,
    Right,
}

/// One-sided difference quotient of the Bergman metric at a grid end.
pub fn lelong_slope(eval: &KernelEval, end: End) -> f64 {
    let m = &eval.bergman_metric.values;
    let h = eval.grid().step();
    let n = m.len();
    match end {
        End::Left => (m[1] - m[0]) / h,
        End::Right => (m[n - 1] - m[n - 2]) / h,
    }
}

/// Reference density helper for callers that integrate against `g''`.
pub fn reference_density(grid: &VGrid) -> GridFn {
    grid.sample(fs_density)
}
