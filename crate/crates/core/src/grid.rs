//! Uniform grids on the log-modulus line `v = ln|z|^2` and functions sampled on them.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Uniform grid `v_min = v_0 < v_1 < ... < v_{n-1} = v_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VGrid {
    v_min: f64,
    v_max: f64,
    n_points: usize,
}

impl VGrid {
    pub fn new(v_min: f64, v_max: f64, n_points: usize) -> Result<Self> {
        if !(v_min.is_finite() && v_max.is_finite()) {
            return Err(LabError::InvalidGrid("endpoints must be finite".into()));
        }
        if v_min >= v_max {
            return Err(LabError::InvalidGrid(format!(
                "v_min = {v_min} must be below v_max = {v_max}"
            )));
        }
        if n_points < 3 {
            return Err(LabError::InvalidGrid(format!(
                "need at least 3 nodes, got {n_points}"
            )));
        }
        Ok(Self {
            v_min,
            v_max,
            n_points,
        })
    }

    /// `[-12, 12]` with 4096 nodes.
    pub fn default_analysis() -> Self {
        Self {
            v_min: -12.0,
            v_max: 12.0,
            n_points: 4096,
        }
    }

    pub fn v_min(&self) -> f64 {
        self.v_min
    }

    pub fn v_max(&self) -> f64 {
        self.v_max
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        (self.v_max - self.v_min) / (self.n_points - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.n_points {
            self.v_max
        } else {
            self.v_min + i as f64 * self.step()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.node(i)).collect()
    }

    /// Same interval with `2(n-1)+1` nodes, so every old node is kept.
    pub fn refined(&self) -> Self {
        Self {
            n_points: 2 * (self.n_points - 1) + 1,
            ..*self
        }
    }

    /// Index of the node closest to `v`, clamped to the grid.
    pub fn nearest(&self, v: f64) -> usize {
        let t = ((v - self.v_min) / self.step()).round();
        t.clamp(0.0, (self.n_points - 1) as f64) as usize
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> GridFn {
        GridFn {
            grid: *self,
            values: self.nodes().into_iter().map(f).collect(),
        }
    }

    pub fn same_as(&self, other: &VGrid) -> bool {
        self == other
    }
}

/// A real function sampled at every node of a [`VGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFn {
    pub grid: VGrid,
    pub values: Vec<f64>,
}

impl GridFn {
    pub fn new(grid: VGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(LabError::GridMismatch(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|x| !x.is_finite()) {
            return Err(LabError::InvalidGrid(format!(
                "non-finite value at node {i} (v = {})",
                grid.node(i)
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Piecewise-linear interpolation; zero outside the grid.
    pub fn interpolate_or_zero(&self, v: f64) -> f64 {
        let g = &self.grid;
        if v < g.v_min() || v > g.v_max() {
            return 0.0;
        }
        let t = (v - g.v_min()) / g.step();
        let i = (t.floor() as usize).min(g.len() - 2);
        let w = t - i as f64;
        (1.0 - w) * self.values[i] + w * self.values[i + 1]
    }

    /// Central second difference quotients; the two end nodes are set to zero.
    pub fn second_differences(&self) -> Vec<f64> {
        let h2 = self.grid.step().powi(2);
        let n = self.values.len();
        let mut out = vec![0.0; n];
        for i in 1..n - 1 {
            out[i] = (self.values[i + 1] - 2.0 * self.values[i] + self.values[i - 1]) / h2;
        }
        out
    }

    /// Forward differences; the last node repeats the final backward difference.
    pub fn forward_differences(&self) -> Vec<f64> {
        let h = self.grid.step();
        let n = self.values.len();
        let mut out: Vec<f64> = self
            .values
            .windows(2)
            .map(|w| (w[1] - w[0]) / h)
            .collect();
        out.push(out[n - 2]);
        out
    }

    pub fn max_abs_diff(&self, other: &GridFn) -> Result<f64> {
        if !self.grid.same_as(&other.grid) {
            return Err(LabError::GridMismatch("grids differ".into()));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

/// Boolean per-node mask (contact sets, positivity sets).
pub type Mask = Vec<bool>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(VGrid::new(1.0, 1.0, 10).is_err());
        assert!(VGrid::new(0.0, 1.0, 2).is_err());
        assert!(VGrid::new(f64::NEG_INFINITY, 1.0, 10).is_err());
    }

    #[test]
    fn refinement_keeps_nodes() {
        let g = VGrid::new(-1.0, 3.0, 5).unwrap();
        let r = g.refined();
        assert_eq!(r.len(), 9);
        for i in 0..g.len() {
            assert_eq!(g.node(i), r.node(2 * i));
        }
    }

    #[test]
    fn differences_of_a_quadratic() {
        let g = VGrid::new(-2.0, 2.0, 41).unwrap();
        let f = g.sample(|v| 1.5 * v * v);
        let d2 = f.second_differences();
        for x in &d2[1..40] {
            assert!((x - 3.0).abs() < 1e-10);
        }
        let d1 = f.forward_differences();
        assert!((d1[20] - 1.5 * 0.1).abs() < 1e-12);
    }

    #[test]
    fn gridfn_rejects_mismatch_and_nan() {
        let g = VGrid::new(0.0, 1.0, 3).unwrap();
        assert!(GridFn::new(g, vec![0.0; 4]).is_err());
        assert!(GridFn::new(g, vec![0.0, f64::NAN, 1.0]).is_err());
    }
}
