//! CSV renderings of envelopes, kernels and norms.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::bergman::{bergman_measure, KernelEval, LogNorms};
use crate::envelope::{equilibrium_measure, EnvelopeResult};
use crate::error::{LabError, Result};
use crate::verify::fmt_num;

fn push_row(out: &mut String, cells: &[f64]) {
    let row: Vec<String> = cells.iter().map(|&x| fmt_num(x)).collect();
    out.push_str(&row.join(","));
    out.push('\n');
}

/// `v,u,u_e,contact,slope,ma_density`.
pub fn envelope_csv(res: &EnvelopeResult) -> Result<String> {
    let mu = equilibrium_measure(res)?;
    let mut out = String::from("v,u,u_e,contact,slope,ma_density\n");
    for (i, v) in res.grid().nodes().into_iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt_num(v),
            fmt_num(res.obstacle.values[i]),
            fmt_num(res.u_e.values[i]),
            u8::from(res.contact_mask[i]),
            fmt_num(res.slope_fn.values[i]),
            fmt_num(mu.density.values[i]),
        );
    }
    Ok(out)
}

/// `v,log_B,bergman_metric,bergman_ma_density`.
pub fn kernel_csv(eval: &KernelEval) -> String {
    let ma = bergman_measure(eval);
    let mut out = String::from("v,log_B,bergman_metric,bergman_ma_density\n");
    for (i, v) in eval.grid().nodes().into_iter().enumerate() {
        push_row(
            &mut out,
            &[v, eval.log_b.values[i], eval.bergman_metric.values[i], ma.values[i]],
        );
    }
    out
}

/// `j,log_c2`.
pub fn norms_csv(norms: &LogNorms) -> String {
    let mut out = String::from("j,log_c2\n");
    for (j, c) in norms.iter() {
        let _ = writeln!(out, "{j},{}", fmt_num(c));
    }
    out
}

/// Two columns `v,<name>`.
pub fn profile_csv(name: &str, v: &[f64], values: &[f64]) -> String {
    let mut out = format!("v,{name}\n");
    for (a, b) in v.iter().zip(values) {
        push_row(&mut out, &[*a, *b]);
    }
    out
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| LabError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bergman::{compute_kernel, default_quadrature_grid, SectionSpace};
    use crate::envelope::{constrained_envelope, SlopeWindow};
    use crate::grid::VGrid;
    use crate::weight::Weight;

    #[test]
    fn envelope_columns_round_trip() {
        let g = VGrid::new(-4.0, 4.0, 9).unwrap();
        let w = Weight::fubini_study(2);
        let res = constrained_envelope(&w.sample(&g), SlopeWindow { s_lo: 0.0, s_hi: 1.0 }).unwrap();
        let csv = envelope_csv(&res).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("v,u,u_e,contact,slope,ma_density"));
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(first.len(), 6);
        assert_eq!(first[0].parse::<f64>().unwrap(), -4.0);
        assert_eq!(first[2].parse::<f64>().unwrap(), res.u_e.values[0]);
        assert_eq!(csv.lines().count(), 10);
    }

    #[test]
    fn kernel_columns() {
        let g = VGrid::new(-2.0, 2.0, 5).unwrap();
        let space = SectionSpace::full(Weight::fubini_study(1), 10).unwrap();
        let (norms, eval) = compute_kernel(&space, &default_quadrature_grid(), &g).unwrap();
        let csv = kernel_csv(&eval);
        for line in csv.lines().skip(1) {
            let log_b: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
            assert!((log_b - 11f64.ln()).abs() < 1e-8);
        }
        assert_eq!(norms_csv(&norms).lines().count(), 12);
    }
}
