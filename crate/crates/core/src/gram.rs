//! Gram-matrix route to the Bergman function.
//!
//! Samples the weight on a polar grid, assembles the Hermitian Gram matrix of
//! the monomials under that quadrature, factors it, and evaluates
//! `B_k = e^{-k phi} z^H G^{-1} z`. Nothing here assumes the weight is radial,
//! so it cross-checks the diagonal-norm route in [`crate::bergman`]. Monomial
//! Gram matrices are exponentially ill-conditioned, hence the `k <= 40` cap.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::bergman::{KernelEval, SectionSpace};
use crate::error::{LabError, Result};
use crate::grid::{GridFn, VGrid};
use crate::quadrature::simpson_coeff;
use crate::weight::{ln_fs_density, Weight};

pub const GRAM_MAX_K: usize = 40;
/// Condition estimates above this are treated as numerically singular.
pub const CONDITION_LIMIT: f64 = 1e14;

/// A potential `phi(v, theta)` in polar coordinates `z = e^{v/2 + i theta}`.
pub trait PolarPotential: Sync {
    fn potential_at(&self, v: f64, theta: f64) -> f64;
}

impl PolarPotential for Weight {
    fn potential_at(&self, v: f64, _theta: f64) -> f64 {
        self.potential(v)
    }
}

/// Adapts a closure to [`PolarPotential`].
pub struct FnPotential<F>(pub F);

impl<F: Fn(f64, f64) -> f64 + Sync> PolarPotential for FnPotential<F> {
    fn potential_at(&self, v: f64, theta: f64) -> f64 {
        (self.0)(v, theta)
    }
}

/// Tensor grid: uniform `v` nodes times `n_theta` equispaced angles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarGrid {
    pub v: VGrid,
    pub n_theta: usize,
}

#[derive(Debug, Clone)]
pub struct GramResult {
    pub eval: KernelEval,
    /// `lambda_max / lambda_min` of the assembled Gram matrix.
    pub condition: f64,
}

/// Gram matrix of `z^{j_lo}, ..., z^{j_hi}` under `e^{-k phi} dref`.
pub fn assemble_gram(
    phi: &impl PolarPotential,
    space: &SectionSpace,
    polar: &PolarGrid,
) -> Result<DMatrix<Complex64>> {
    let dim = space.dimension();
    let span = dim - 1;
    if polar.n_theta <= span {
        return Err(LabError::InvalidSpace(format!(
            "{} angles cannot resolve index differences up to {span}",
            polar.n_theta
        )));
    }
    let k = space.k as f64;
    let vg = polar.v;
    let n_v = vg.len();
    let h = vg.step();
    let thetas: Vec<f64> = (0..polar.n_theta)
        .map(|b| 2.0 * std::f64::consts::PI * b as f64 / polar.n_theta as f64)
        .collect();

    // Per v node: the angular minimum of phi and the Fourier coefficients of
    // e^{-k (phi - min)} for index differences 0..=span.
    let per_node: Vec<(f64, Vec<Complex64>)> = vg
        .nodes()
        .into_par_iter()
        .map(|v| {
            let samples: Vec<f64> = thetas.iter().map(|&t| phi.potential_at(v, t)).collect();
            let floor = samples.iter().copied().fold(f64::INFINITY, f64::min);
            let mass: Vec<f64> = samples.iter().map(|s| (-k * (s - floor)).exp()).collect();
            let coeffs = (0..=span)
                .map(|d| {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (m, &t) in mass.iter().zip(&thetas) {
                        acc += Complex64::from_polar(*m, d as f64 * t);
                    }
                    acc / polar.n_theta as f64
                })
                .collect();
            (floor, coeffs)
        })
        .collect();

    // Radial exponent for p + q = s (offset by 2 j_lo), scaled by its maximum.
    let nodes = vg.nodes();
    let radial: Vec<(f64, Vec<f64>)> = (0..=2 * span)
        .into_par_iter()
        .map(|s| {
            let total = (2 * space.j_lo + s) as f64;
            let e: Vec<f64> = (0..n_v)
                .map(|a| {
                    0.5 * total * nodes[a] - k * per_node[a].0
                        + ln_fs_density(nodes[a])
                        + (simpson_coeff(a, n_v) * h / 3.0).ln()
                })
                .collect();
            let max = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (max, e.into_iter().map(|x| (x - max).exp()).collect())
        })
        .collect();

    let upper: Vec<Vec<Complex64>> = (0..dim)
        .into_par_iter()
        .map(|p| {
            (p..dim)
                .map(|q| {
                    let (max, scaled) = &radial[p + q];
                    let d = q - p;
                    let mut acc = Complex64::new(0.0, 0.0);
                    for a in 0..n_v {
                        // \int e^{i (p - q) theta} = conj of coefficient d
                        acc += per_node[a].1[d].conj() * scaled[a];
                    }
                    acc * max.exp()
                })
                .collect()
        })
        .collect();

    let mut g = DMatrix::<Complex64>::zeros(dim, dim);
    for p in 0..dim {
        for q in p..dim {
            let val = upper[p][q - p];
            g[(p, q)] = val;
            g[(q, p)] = val.conj();
        }
        g[(p, p)].im = 0.0;
    }
    Ok(g)
}

/// Condition estimate `lambda_max / lambda_min` (infinite if not positive definite).
pub fn condition_estimate(g: &DMatrix<Complex64>) -> f64 {
    let eig = g.clone().symmetric_eigen();
    let max = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Bergman function via the Gram matrix, evaluated along the ray `theta`.
pub fn gram_oracle(
    phi: &impl PolarPotential,
    space: &SectionSpace,
    polar: &PolarGrid,
    eval_grid: &VGrid,
    theta: f64,
) -> Result<GramResult> {
    if space.k > GRAM_MAX_K {
        return Err(LabError::GramOrderTooLarge(space.k));
    }
    let g = assemble_gram(phi, space, polar)?;
    let condition = condition_estimate(&g);
    if !(condition <= CONDITION_LIMIT) {
        return Err(LabError::Factorization { condition });
    }
    let chol = g.cholesky().ok_or(LabError::Factorization { condition })?;
    let l = chol.l();

    let k = space.k as f64;
    let (log_b, metric): (Vec<f64>, Vec<f64>) = eval_grid
        .nodes()
        .into_par_iter()
        .map(|v| {
            let p = phi.potential_at(v, theta);
            let z = DVector::from_iterator(
                space.dimension(),
                (space.j_lo..=space.j_hi).map(|j| {
                    let jf = j as f64;
                    Complex64::from_polar((0.5 * jf * v - 0.5 * k * p).exp(), jf * theta)
                }),
            );
            let y = l
                .solve_lower_triangular(&z)
                .expect("Cholesky factor has a positive diagonal");
            let lb = y.norm_squared().ln();
            let metric = if space.k == 0 { 0.0 } else { (lb + k * p) / k };
            (lb, metric)
        })
        .unzip();

    Ok(GramResult {
        eval: KernelEval {
            k: space.k,
            log_b: GridFn {
                grid: *eval_grid,
                values: log_b,
            },
            bergman_metric: GridFn {
                grid: *eval_grid,
                values: metric,
            },
        },
        condition,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bergman::{compute_kernel, default_quadrature_grid};
    use crate::weight::Bump;

    fn polar() -> PolarGrid {
        PolarGrid {
            v: VGrid::new(-110.0, 110.0, 22_001).unwrap(),
            n_theta: 64,
        }
    }

    #[test]
    fn fubini_study_closed_case() {
        let w = Weight::fubini_study(1);
        let space = SectionSpace::full(w, 5).unwrap();
        let g = VGrid::new(-6.0, 6.0, 121).unwrap();
        let res = gram_oracle(&w, &space, &polar(), &g, 0.0).unwrap();
        for lb in &res.eval.log_b.values {
            assert!((lb.exp() / 6.0 - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn radial_bump_matches_diagonal_route() {
        let w = Weight::new(
            1,
            Some(Bump {
                amplitude: -1.5,
                center: 0.0,
                halfwidth: 2.0,
            }),
        )
        .unwrap();
        let space = SectionSpace::full(w, 20).unwrap();
        let g = VGrid::new(-6.0, 6.0, 121).unwrap();
        let gram = gram_oracle(&w, &space, &polar(), &g, 0.7).unwrap();
        let (_, radial) = compute_kernel(&space, &default_quadrature_grid(), &g).unwrap();
        for (a, b) in gram.eval.log_b.values.iter().zip(&radial.log_b.values) {
            assert!(((a - b).exp() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn non_radial_weight_is_hermitian_and_reproduces_dimension() {
        // phi = ln(1 + e^v) + 0.3 cos(theta) e^{-v^2}: not radial
        let phi = FnPotential(|v: f64, t: f64| {
            crate::weight::softplus(v) + 0.3 * t.cos() * (-v * v).exp()
        });
        let space = SectionSpace::full(Weight::fubini_study(1), 6).unwrap();
        let pg = PolarGrid {
            v: VGrid::new(-60.0, 60.0, 12_001).unwrap(),
            n_theta: 64,
        };
        let g = assemble_gram(&phi, &space, &pg).unwrap();
        assert!(g[(0, 1)].norm() > 1e-6);
        for p in 0..7 {
            for q in 0..7 {
                assert_eq!(g[(p, q)], g[(q, p)].conj());
            }
        }
        assert!(gram_oracle(&phi, &space, &pg, &VGrid::new(-1.0, 1.0, 5).unwrap(), 0.0).is_ok());
    }

    #[test]
    fn order_cap_and_conditioning() {
        let w = Weight::fubini_study(1);
        let g = VGrid::new(-1.0, 1.0, 3).unwrap();
        let space = SectionSpace::full(w, 41).unwrap();
        assert!(matches!(
            gram_oracle(&w, &space, &polar(), &g, 0.0),
            Err(LabError::GramOrderTooLarge(41))
        ));
        let extreme = Weight::new(
            1,
            Some(Bump {
                amplitude: 3.0,
                center: 0.0,
                halfwidth: 1.5,
            }),
        )
        .unwrap();
        let space = SectionSpace::full(extreme, 40).unwrap();
        match gram_oracle(&extreme, &space, &polar(), &g, 0.0) {
            Err(LabError::Factorization { condition }) => assert!(condition > 1e14),
            other => panic!("expected a conditioning error, got {other:?}"),
        }
    }
}
