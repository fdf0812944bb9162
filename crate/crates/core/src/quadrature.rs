//! Log-domain sums and composite Simpson integration on uniform grids.

/// `ln sum_i exp(x_i)`, factoring out the largest exponent. Returns `-inf` for
/// an empty input.
pub fn log_sum_exp(xs: impl IntoIterator<Item = f64> + Clone) -> f64 {
    let max = xs.clone().into_iter().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let s: f64 = xs.into_iter().map(|x| (x - max).exp()).sum();
    max + s.ln()
}

/// Composite Simpson weight of node `i` out of `n` (odd), excluding the `h/3` factor.
/// For even `n` the last panel falls back to the trapezoid rule.
#[inline]
pub fn simpson_coeff(i: usize, n: usize) -> f64 {
    if n % 2 == 0 {
        // Simpson on the first n-1 nodes, trapezoid on the last panel.
        if i + 1 == n {
            return 1.5;
        }
        if i + 2 == n {
            return 1.0 + 1.5;
        }
        return simpson_coeff(i, n - 1);
    }
    if i == 0 || i + 1 == n {
        1.0
    } else if i % 2 == 1 {
        4.0
    } else {
        2.0
    }
}

/// Composite Simpson integral of samples with spacing `h`.
pub fn simpson(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    values
        .iter()
        .enumerate()
        .map(|(i, f)| simpson_coeff(i, n) * f)
        .sum::<f64>()
        * h
        / 3.0
}

/// `ln` of the Simpson integral of `exp(exponents)`, accumulated relative to
/// the largest exponent. Also returns the estimate on the every-other-node
/// subgrid (`None` unless `n = 1 mod 4`) so callers can check convergence.
pub fn log_simpson_exp(exponents: &[f64], h: f64) -> (f64, Option<f64>) {
    let n = exponents.len();
    let max = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut fine = 0.0;
    let mut coarse = 0.0;
    let has_coarse = n % 4 == 1;
    let nc = n.div_ceil(2);
    for (i, e) in exponents.iter().enumerate() {
        let t = (e - max).exp();
        fine += simpson_coeff(i, n) * t;
        if has_coarse && i % 2 == 0 {
            coarse += simpson_coeff(i / 2, nc) * t;
        }
    }
    let fine_log = max + (fine * h / 3.0).ln();
    let coarse_log = has_coarse.then(|| max + (coarse * 2.0 * h / 3.0).ln());
    (fine_log, coarse_log)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lse_is_stable() {
        let x = [1000.0, 1000.0];
        assert!((log_sum_exp(x) - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(log_sum_exp(std::iter::empty::<f64>()), f64::NEG_INFINITY);
        let y = [-1000.0, 0.0];
        assert!(log_sum_exp(y).abs() < 1e-15);
    }

    #[test]
    fn simpson_is_exact_on_cubics() {
        let n = 21;
        let h = 2.0 / (n - 1) as f64;
        let v: Vec<f64> = (0..n).map(|i| (-1.0 + i as f64 * h).powi(3) + 1.0).collect();
        assert!((simpson(&v, h) - 2.0).abs() < 1e-14);
        // even node count
        let n = 20;
        let h = 1.0 / (n - 1) as f64;
        let v: Vec<f64> = (0..n).map(|i| 2.0 * i as f64 * h).collect();
        assert!((simpson(&v, h) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn log_simpson_handles_huge_exponents() {
        // integral of exp(800 - v^2) over [-10, 10] = e^800 sqrt(pi)
        let n = 4001;
        let h = 20.0 / (n - 1) as f64;
        let e: Vec<f64> = (0..n)
            .map(|i| {
                let v = -10.0 + i as f64 * h;
                800.0 - v * v
            })
            .collect();
        let (fine, coarse) = log_simpson_exp(&e, h);
        let exact = 800.0 + std::f64::consts::PI.sqrt().ln();
        assert!((fine - exact).abs() < 1e-13);
        assert!((coarse.unwrap() - exact).abs() < 1e-12);
    }
}
