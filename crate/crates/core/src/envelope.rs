//! Slope-constrained convex envelopes on the v-line.
//!
//! The equilibrium potential of a radial metric is the largest convex
//! minorant of `u` whose slopes stay inside a window `[s_lo, s_hi]`. It is
//! computed as a double discrete Legendre transform with the dual domain
//! clipped to the window. The first transform is exact for grid data and
//! piecewise linear in the slope, so the back-transform only has to visit
//! the breakpoints of the dual, which keeps the result exact for the
//! sampled obstacle.
//!
//! [`envelope_oracle`] recomputes the same object with a monotone-chain hull
//! of the samples plus two rays. It shares no code with the transform path.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::grid::{GridFn, Mask, VGrid};
use crate::weight::Weight;

/// Admissible slope range for the envelope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeWindow {
    pub s_lo: f64,
    pub s_hi: f64,
}

impl SlopeWindow {
    pub fn new(s_lo: f64, s_hi: f64) -> Result<Self> {
        if !(s_lo.is_finite() && s_hi.is_finite()) || s_lo >= s_hi {
            return Err(LabError::InvalidWindow {
                lo: s_lo,
                hi: s_hi,
                reason: "need finite s_lo < s_hi".into(),
            });
        }
        Ok(Self { s_lo, s_hi })
    }

    /// `[0, m]`: no divisor constraint.
    pub fn full(weight: &Weight) -> Self {
        Self {
            s_lo: 0.0,
            s_hi: weight.m(),
        }
    }

    /// Checks `0 <= s_lo < s_hi <= m`.
    pub fn check_for(&self, weight: &Weight) -> Result<()> {
        if self.s_lo < 0.0 || self.s_hi > weight.m() || self.s_lo >= self.s_hi {
            return Err(LabError::InvalidWindow {
                lo: self.s_lo,
                hi: self.s_hi,
                reason: format!("must satisfy 0 <= s_lo < s_hi <= {}", weight.degree_m),
            });
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        self.s_hi - self.s_lo
    }
}

/// Equilibrium potential together with its contact set and dual data.
#[derive(Debug, Clone)]
pub struct EnvelopeResult {
    pub window: SlopeWindow,
    pub obstacle: GridFn,
    pub u_e: GridFn,
    pub contact_mask: Mask,
    pub dual: GridFn,
    pub slope_fn: GridFn,
}

impl EnvelopeResult {
    pub fn grid(&self) -> &VGrid {
        &self.u_e.grid
    }

    /// `u - u_e` at every node.
    pub fn gap(&self) -> Vec<f64> {
        self.obstacle
            .values
            .iter()
            .zip(&self.u_e.values)
            .map(|(u, e)| u - e)
            .collect()
    }

    pub fn free_boundaries(&self) -> Vec<FreeBoundary> {
        free_boundaries(&self.contact_mask, self.grid())
    }
}

/// Lower convex hull vertices of sorted points, tested by consecutive slopes.
/// Collinear interior points are dropped.
fn hull_by_slopes(xs: &[f64], fs: &[f64]) -> Vec<usize> {
    let slope = |a: usize, b: usize| (fs[b] - fs[a]) / (xs[b] - xs[a]);
    let mut stack: Vec<usize> = Vec::with_capacity(xs.len());
    for i in 0..xs.len() {
        while stack.len() >= 2 {
            let b = stack[stack.len() - 1];
            let a = stack[stack.len() - 2];
            if slope(a, b) >= slope(b, i) {
                stack.pop();
            } else {
                break;
            }
        }
        stack.push(i);
    }
    stack
}

/// `max_i (s x_i - f_i)` for every `s` in `slopes` (ascending), by merging the
/// slopes against the hull edges. Linear in `xs.len() + slopes.len()`.
fn conjugate_sorted(xs: &[f64], fs: &[f64], slopes: &[f64]) -> Vec<f64> {
    let hull = hull_by_slopes(xs, fs);
    let edge: Vec<f64> = hull
        .windows(2)
        .map(|w| (fs[w[1]] - fs[w[0]]) / (xs[w[1]] - xs[w[0]]))
        .collect();
    let mut p = 0;
    slopes
        .iter()
        .map(|&s| {
            while p < edge.len() && edge[p] < s {
                p += 1;
            }
            let i = hull[p];
            s * xs[i] - fs[i]
        })
        .collect()
}

/// Discrete Legendre transform `f*(s) = max_v (s v - f(v))` sampled on `slope_grid`.
pub fn legendre_transform(f: &GridFn, slope_grid: &VGrid) -> GridFn {
    let xs = f.grid.nodes();
    let values = conjugate_sorted(&xs, &f.values, &slope_grid.nodes());
    GridFn {
        grid: *slope_grid,
        values,
    }
}

/// Relative contact tolerance `1e-9 (1 + |u|)`.
pub fn contact_tolerance(u: f64) -> f64 {
    1e-9 * (1.0 + u.abs())
}

/// Largest convex minorant of `u` with slopes in `window`.
pub fn constrained_envelope(u: &GridFn, window: SlopeWindow) -> Result<EnvelopeResult> {
    let window = SlopeWindow::new(window.s_lo, window.s_hi)?;
    let xs = u.grid.nodes();

    // Dual breakpoints inside the window: hull edge slopes plus the window ends.
    let hull = hull_by_slopes(&xs, &u.values);
    let mut breaks = Vec::with_capacity(hull.len() + 1);
    breaks.push(window.s_lo);
    breaks.extend(
        hull.windows(2)
            .map(|w| (u.values[w[1]] - u.values[w[0]]) / (xs[w[1]] - xs[w[0]]))
            .filter(|&s| s > window.s_lo && s < window.s_hi),
    );
    breaks.push(window.s_hi);
    let dual_at_breaks = conjugate_sorted(&xs, &u.values, &breaks);

    // Back-transform: u_e(v) = max_b (s_b v - u*(s_b)).
    let u_e_values = conjugate_sorted(&breaks, &dual_at_breaks, &xs);
    let u_e = GridFn {
        grid: u.grid,
        values: u_e_values,
    };

    let contact_mask = u
        .values
        .iter()
        .zip(&u_e.values)
        .map(|(a, e)| a - e <= contact_tolerance(*a))
        .collect();

    let slope_grid = VGrid::new(window.s_lo, window.s_hi, u.grid.len())?;
    let dual = legendre_transform(u, &slope_grid);
    let slope_fn = GridFn {
        grid: u.grid,
        values: u_e.forward_differences(),
    };
    Ok(EnvelopeResult {
        window,
        obstacle: u.clone(),
        u_e,
        contact_mask,
        dual,
        slope_fn,
    })
}

/// Brute-force check of [`constrained_envelope`]: monotone-chain lower hull of
/// the samples augmented with a ray of slope `s_lo` to the left and a ray of
/// slope `s_hi` to the right, read off at the grid nodes.
pub fn envelope_oracle(u: &GridFn, window: SlopeWindow) -> Result<GridFn> {
    let window = SlopeWindow::new(window.s_lo, window.s_hi)?;
    let g = u.grid;
    let xs = g.nodes();
    let reach = g.v_max() - g.v_min();

    // Far points on the supporting lines of slope s_lo and s_hi.
    let support = |s: f64| {
        (0..xs.len())
            .min_by(|&a, &b| {
                (u.values[a] - s * xs[a]).total_cmp(&(u.values[b] - s * xs[b]))
            })
            .expect("grid has nodes")
    };
    let jl = support(window.s_lo);
    let jr = support(window.s_hi);
    let left = (
        g.v_min() - reach,
        u.values[jl] + window.s_lo * (g.v_min() - reach - xs[jl]),
    );
    let right = (
        g.v_max() + reach,
        u.values[jr] + window.s_hi * (g.v_max() + reach - xs[jr]),
    );

    let mut pts = Vec::with_capacity(xs.len() + 2);
    pts.push(left);
    pts.extend(xs.iter().copied().zip(u.values.iter().copied()));
    pts.push(right);

    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    let mut lower: Vec<(f64, f64)> = Vec::new();
    for p in pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }

    let mut seg = 0;
    let values = xs
        .iter()
        .map(|&v| {
            while seg + 2 < lower.len() && lower[seg + 1].0 < v {
                seg += 1;
            }
            let (a, b) = (lower[seg], lower[seg + 1]);
            if v == a.0 {
                a.1
            } else if v == b.0 {
                b.1
            } else {
                a.1 + (b.1 - a.1) * (v - a.0) / (b.0 - a.0)
            }
        })
        .collect();
    Ok(GridFn { grid: g, values })
}

/// Nodes where `u - u_e <= tol`.
pub fn contact_set(u: &GridFn, u_e: &GridFn, tol: f64) -> Result<Mask> {
    if !u.grid.same_as(&u_e.grid) {
        return Err(LabError::GridMismatch(
            "obstacle and envelope live on different grids".into(),
        ));
    }
    if !(tol > 0.0) {
        return Err(LabError::InvalidGrid(format!("contact tolerance {tol} must be positive")));
    }
    Ok(u.values
        .iter()
        .zip(&u_e.values)
        .map(|(a, e)| a - e <= tol)
        .collect())
}

/// Transition of the contact mask between two adjacent nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeBoundary {
    /// Node on the left of the transition.
    pub left_node: usize,
    /// Whether the contact set lies to the left of the transition.
    pub contact_on_left: bool,
    /// Midpoint of the two nodes.
    pub v: f64,
}

impl FreeBoundary {
    /// Radius `|z| = e^{v/2}` of the corresponding circle.
    pub fn radius(&self) -> f64 {
        (self.v / 2.0).exp()
    }
}

pub fn free_boundaries(mask: &Mask, grid: &VGrid) -> Vec<FreeBoundary> {
    mask.windows(2)
        .enumerate()
        .filter(|(_, w)| w[0] != w[1])
        .map(|(i, w)| FreeBoundary {
            left_node: i,
            contact_on_left: w[0],
            v: 0.5 * (grid.node(i) + grid.node(i + 1)),
        })
        .collect()
}

/// Monge-Ampere measure of the envelope: a density on interior nodes plus the
/// slope mass beyond the grid, carried as atoms at the two ends.
#[derive(Debug, Clone)]
pub struct EquilibriumMeasure {
    pub density: GridFn,
    pub left_atom: f64,
    pub right_atom: f64,
}

impl EquilibriumMeasure {
    pub fn total_mass(&self) -> f64 {
        self.interior_mass(0, self.density.len() - 1) + self.left_atom + self.right_atom
    }

    /// Riemann sum of the density over nodes `from..=to`.
    pub fn interior_mass(&self, from: usize, to: usize) -> f64 {
        let h = self.density.grid.step();
        self.density.values[from..=to].iter().sum::<f64>() * h
    }
}

const CLAMP_TOL: f64 = 1e-6;

pub fn equilibrium_measure(res: &EnvelopeResult) -> Result<EquilibriumMeasure> {
    let g = *res.grid();
    let mut density = res.u_e.second_differences();
    for (i, d) in density.iter_mut().enumerate() {
        if *d < -CLAMP_TOL {
            return Err(LabError::ConvexityViolation {
                v: g.node(i),
                value: *d,
            });
        }
        if *d < 0.0 {
            *d = 0.0;
        }
    }
    let n = g.len();
    let h = g.step();
    let first = (res.u_e.values[1] - res.u_e.values[0]) / h;
    let last = (res.u_e.values[n - 1] - res.u_e.values[n - 2]) / h;
    Ok(EquilibriumMeasure {
        density: GridFn { grid: g, values: density },
        left_atom: (first - res.window.s_lo).max(0.0),
        right_atom: (res.window.s_hi - last).max(0.0),
    })
}

/// One refinement level of the C^{1,1} probe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct C11Row {
    pub n_points: usize,
    pub h: f64,
    /// `max |u_e(v+h) + u_e(v-h) - 2 u_e(v)| / h^2` over interior nodes.
    pub max_second_difference: f64,
    /// Largest change of the forward-difference slope across a free boundary.
    pub max_slope_jump: f64,
}

/// Recomputes the envelope of `weight` on each grid and reports second-difference
/// bounds and slope jumps at the free boundary.
pub fn c11_probe(weight: &Weight, window: SlopeWindow, refinements: &[VGrid]) -> Result<Vec<C11Row>> {
    refinements
        .iter()
        .map(|g| {
            let res = constrained_envelope(&weight.sample(g), window)?;
            let max_second_difference = res
                .u_e
                .second_differences()
                .iter()
                .map(|d| d.abs())
                .fold(0.0, f64::max);
            let d = &res.slope_fn.values;
            let n = d.len();
            let max_slope_jump = res
                .free_boundaries()
                .iter()
                .map(|b| {
                    // slope of the last cell on one side vs the first cell on the other
                    let l = b.left_node.saturating_sub(1);
                    let r = (b.left_node + 1).min(n - 2);
                    (d[r] - d[l]).abs()
                })
                .fold(0.0, f64::max);
            Ok(C11Row {
                n_points: g.len(),
                h: g.step(),
                max_second_difference,
                max_slope_jump,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weight::Bump;

    fn grid(n: usize) -> VGrid {
        VGrid::new(-12.0, 12.0, n).unwrap()
    }

    #[test]
    fn quadratic_is_self_dual() {
        let g = VGrid::new(-8.0, 8.0, 1601).unwrap();
        let f = g.sample(|v| 0.5 * v * v);
        let sg = VGrid::new(-8.0, 8.0, 801).unwrap();
        let fs = legendre_transform(&f, &sg);
        let tol = 2.0 * g.step() * 8.0;
        for (s, val) in sg.nodes().iter().zip(&fs.values) {
            assert!((val - 0.5 * s * s).abs() <= tol);
        }
    }

    #[test]
    fn affine_dual() {
        let g = VGrid::new(-4.0, 4.0, 81).unwrap();
        let f = g.sample(|v| v);
        let sg = VGrid::new(0.0, 2.0, 21).unwrap();
        let fs = legendre_transform(&f, &sg);
        // s = 1 is node 10
        assert!(fs.values[10].abs() < 1e-14);
        // max over [-4, 4] of (s - 1) v: slope 4 on the right, -4 on the left
        assert!((fs.values[20] - 4.0).abs() < 1e-13);
        assert!((fs.values[0] - 4.0).abs() < 1e-13);
    }

    #[test]
    fn softplus_dual_is_entropy() {
        let g = grid(4096);
        let f = Weight::fubini_study(1).sample(&g);
        let sg = VGrid::new(0.1, 0.9, 9).unwrap();
        let fs = legendre_transform(&f, &sg);
        let s: f64 = 0.3;
        let exact = s * s.ln() + (1.0 - s) * (1.0 - s).ln();
        assert!((fs.values[2] - exact).abs() < 1e-3);
    }

    #[test]
    fn convex_admissible_obstacle_is_its_own_envelope() {
        let g = grid(4096);
        let u = Weight::fubini_study(1).sample(&g);
        let res = constrained_envelope(&u, SlopeWindow::new(0.0, 1.0).unwrap()).unwrap();
        assert!(res.u_e.max_abs_diff(&u).unwrap() < 1e-13);
        assert!(res.contact_mask.iter().all(|&c| c));
        let oracle = envelope_oracle(&u, res.window).unwrap();
        assert!(oracle.max_abs_diff(&u).unwrap() < 1e-13);
    }

    #[test]
    fn divisor_at_infinity_envelope() {
        let g = grid(4096);
        let u = Weight::fubini_study(2).sample(&g);
        let res = constrained_envelope(&u, SlopeWindow::new(0.0, 1.0).unwrap()).unwrap();
        let h = g.step();
        let ln2 = 2f64.ln();
        for (i, v) in g.nodes().into_iter().enumerate() {
            let exact = if v <= 0.0 { u.values[i] } else { 2.0 * ln2 + v };
            // tangent point is off-grid by at most h/2
            assert!((res.u_e.values[i] - exact).abs() < h * h, "v = {v}");
        }
        let b = res.free_boundaries();
        assert_eq!(b.len(), 1);
        assert!(b[0].contact_on_left);
        assert!(b[0].v.abs() <= h);
        let oracle = envelope_oracle(&u, res.window).unwrap();
        assert!(oracle.max_abs_diff(&res.u_e).unwrap() <= 4.0 * h);
    }

    #[test]
    fn divisor_at_zero_envelope() {
        let g = grid(4097);
        let u = Weight::fubini_study(2).sample(&g);
        let res = constrained_envelope(&u, SlopeWindow::new(1.0, 2.0).unwrap()).unwrap();
        let ln2 = 2f64.ln();
        for (i, v) in g.nodes().into_iter().enumerate() {
            let exact = if v >= 0.0 { u.values[i] } else { 2.0 * ln2 + v };
            assert!((res.u_e.values[i] - exact).abs() < 1e-12, "v = {v}");
        }
        let b = res.free_boundaries();
        assert_eq!(b.len(), 1);
        assert!(!b[0].contact_on_left);
        assert!((b[0].radius() - 1.0).abs() <= g.step() / 2.0);
    }

    #[test]
    fn rejects_empty_window() {
        let g = grid(64);
        let u = Weight::fubini_study(1).sample(&g);
        let bad = SlopeWindow { s_lo: 0.5, s_hi: 0.5 };
        assert!(matches!(
            constrained_envelope(&u, bad),
            Err(LabError::InvalidWindow { .. })
        ));
        assert!(envelope_oracle(&u, bad).is_err());
    }

    #[test]
    fn contact_set_checks_grids() {
        let u = Weight::fubini_study(1).sample(&grid(64));
        assert!(contact_set(&u, &u, 1e-9).unwrap().iter().all(|&c| c));
        let other = Weight::fubini_study(1).sample(&grid(65));
        assert!(matches!(
            contact_set(&u, &other, 1e-9),
            Err(LabError::GridMismatch(_))
        ));
    }

    #[test]
    fn measure_masses() {
        let g = grid(4096);
        let u = Weight::fubini_study(1).sample(&g);
        let res = constrained_envelope(&u, SlopeWindow::new(0.0, 1.0).unwrap()).unwrap();
        let mu = equilibrium_measure(&res).unwrap();
        assert!((mu.total_mass() - 1.0).abs() < 1e-6);
        let h = g.step();
        for (i, v) in g.nodes().into_iter().enumerate().skip(1).take(g.len() - 2) {
            let exact = crate::weight::fs_density(v);
            assert!((mu.density.values[i] - exact).abs() < h * h);
        }

        let res = constrained_envelope(&u, SlopeWindow::new(0.4, 0.6).unwrap()).unwrap();
        let mu = equilibrium_measure(&res).unwrap();
        assert!((mu.total_mass() - 0.2).abs() < 1e-6);
        assert!(mu.left_atom < 1e-12 && mu.right_atom < 1e-12);
    }

    #[test]
    fn measure_rejects_concave_input() {
        let g = grid(101);
        let u = g.sample(|v| -v * v);
        let res = EnvelopeResult {
            window: SlopeWindow::new(0.0, 1.0).unwrap(),
            obstacle: u.clone(),
            u_e: u.clone(),
            contact_mask: vec![true; 101],
            dual: u.clone(),
            slope_fn: u,
        };
        assert!(matches!(
            equilibrium_measure(&res),
            Err(LabError::ConvexityViolation { .. })
        ));
    }

    #[test]
    fn c11_rows_for_divisor_preset() {
        let w = Weight::fubini_study(2);
        let grids: Vec<VGrid> = [1 << 12, 1 << 13, 1 << 14].iter().map(|&n| grid(n)).collect();
        let rows = c11_probe(&w, SlopeWindow::new(0.0, 1.0).unwrap(), &grids).unwrap();
        for r in &rows {
            assert!(r.max_second_difference <= 0.5 + 0.1);
            assert!(r.max_slope_jump <= 2.0 * r.h);
        }
    }

    #[test]
    fn bump_envelope_matches_oracle() {
        let w = Weight::new(
            1,
            Some(Bump {
                amplitude: -1.5,
                center: 0.0,
                halfwidth: 2.0,
            }),
        )
        .unwrap();
        let g = grid(1 << 14);
        let u = w.sample(&g);
        let window = SlopeWindow::new(0.0, 1.0).unwrap();
        let res = constrained_envelope(&u, window).unwrap();
        let oracle = envelope_oracle(&u, window).unwrap();
        assert!(res.u_e.max_abs_diff(&oracle).unwrap() <= 1e-6);
        assert!(res.contact_mask.iter().any(|&c| !c));
    }
}
