//! Convergence reports for the large-`k` statements about Bergman kernels,
//! equilibrium metrics and their measures.
//!
//! Each report is a table of `(k, error, auxiliary columns)` plus a verdict
//! decided by a criterion string stored alongside it. Thresholds are
//! calibration choices for a desk-scale run; the criterion text is emitted
//! with every report so the distinction stays visible downstream.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::{Arc, Mutex};

use indexmap::IndexMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bergman::{
    bergman_function, default_quadrature_grid, lelong_slope, monomial_log_norms, End, KernelEval,
    LogNorms, SectionSpace,
};
use crate::envelope::{
    c11_probe, constrained_envelope, equilibrium_measure, EnvelopeResult, SlopeWindow,
};
use crate::error::{LabError, Result};
use crate::grid::{GridFn, Mask, VGrid};
use crate::quadrature::{log_sum_exp, simpson};
use crate::weight::{fs_density, ln_fs_density, logistic, Weight};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TheoremId {
    L1,
    Uniform,
    Decay,
    Morse,
    Offdiag,
    Expansion,
    Eqmeasure,
    Lelong,
    DivisorRadius,
    Regularity,
}

impl TheoremId {
    pub fn as_str(&self) -> &'static str {
        match self {
            TheoremId::L1 => "L1",
            TheoremId::Uniform => "UNIFORM",
            TheoremId::Decay => "DECAY",
            TheoremId::Morse => "MORSE",
            TheoremId::Offdiag => "OFFDIAG",
            TheoremId::Expansion => "EXPANSION",
            TheoremId::Eqmeasure => "EQMEASURE",
            TheoremId::Lelong => "LELONG",
            TheoremId::DivisorRadius => "DIVISOR_RADIUS",
            TheoremId::Regularity => "REGULARITY",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn passed(&self) -> bool {
        *self == Verdict::Pass
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub k: usize,
    pub error: f64,
    pub aux: IndexMap<String, f64>,
}

impl ReportRow {
    fn new(k: usize, error: f64, aux: &[(&str, f64)]) -> Self {
        Self {
            k,
            error,
            aux: aux.iter().map(|(n, v)| (n.to_string(), *v)).collect(),
        }
    }

    pub fn get(&self, name: &str) -> f64 {
        self.aux[name]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub theorem_id: TheoremId,
    pub criterion: String,
    pub rows: Vec<ReportRow>,
    pub verdict: Verdict,
}

impl ConvergenceReport {
    fn new(theorem_id: TheoremId, criterion: &str, mut rows: Vec<ReportRow>, ok: bool) -> Self {
        rows.sort_by_key(|r| r.k);
        let finite = rows.iter().all(|r| r.error.is_finite() && r.error >= 0.0);
        Self {
            theorem_id,
            criterion: criterion.into(),
            rows,
            verdict: Verdict::from_bool(ok && finite),
        }
    }

    pub fn errors(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.error).collect()
    }

    pub fn column(&self, name: &str) -> Vec<f64> {
        self.rows.iter().map(|r| r.get(name)).collect()
    }

    /// `k,error,<aux...>` with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,error");
        let names: Vec<&String> = self
            .rows
            .first()
            .map(|r| r.aux.keys().collect())
            .unwrap_or_default();
        for n in &names {
            out.push(',');
            out.push_str(n);
        }
        out.push('\n');
        for r in &self.rows {
            let _ = write!(out, "{},{}", r.k, fmt_num(r.error));
            for v in r.aux.values() {
                out.push(',');
                out.push_str(&fmt_num(*v));
            }
            out.push('\n');
        }
        out
    }

    /// `{schema, theorem_id, criterion, rows, verdict}`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "schema": 1,
            "theorem_id": self.theorem_id,
            "criterion": self.criterion,
            "rows": self.rows,
            "verdict": self.verdict,
        })
    }
}

/// Scientific notation with 17 significant digits.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

pub const DEFAULT_KS: [usize; 6] = [25, 50, 100, 200, 400, 800];

type KernelBundle = Arc<(SectionSpace, LogNorms, KernelEval)>;

/// A weight, its slope window, and the grids every report runs on. Kernels
/// are cached per `k`, so reports sharing a setting reuse them.
pub struct Setting {
    pub weight: Weight,
    pub window: SlopeWindow,
    /// Analysis grid for envelopes and kernels.
    pub grid: VGrid,
    /// Quadrature grid for monomial norms.
    pub quad_grid: VGrid,
    /// Extra vanishing order at a divisor beyond `k`.
    pub divisor_offset: usize,
    kernels: Mutex<HashMap<usize, KernelBundle>>,
    envelope: Mutex<Option<Arc<EnvelopeResult>>>,
}

impl Setting {
    pub fn new(weight: Weight, window: SlopeWindow, grid: VGrid) -> Result<Self> {
        weight.validate()?;
        window.check_for(&weight)?;
        Ok(Self {
            weight,
            window,
            grid,
            quad_grid: default_quadrature_grid(),
            divisor_offset: 0,
            kernels: Mutex::new(HashMap::new()),
            envelope: Mutex::new(None),
        })
    }

    pub fn with_quad_grid(mut self, quad_grid: VGrid) -> Self {
        self.quad_grid = quad_grid;
        self
    }

    pub fn with_divisor_offset(mut self, offset: usize) -> Self {
        self.divisor_offset = offset;
        self
    }

    pub fn space(&self, k: usize) -> Result<SectionSpace> {
        let mut s = SectionSpace::from_window(self.weight, k, self.window)?;
        if self.divisor_offset > 0 {
            if self.window.s_lo > 0.0 {
                s.j_lo += self.divisor_offset;
            }
            if self.window.s_hi < self.weight.m() {
                s.j_hi = s.j_hi.saturating_sub(self.divisor_offset);
            }
            s = SectionSpace::new(s.weight, s.k, s.j_lo, s.j_hi)?;
        }
        Ok(s)
    }

    pub fn envelope(&self) -> Result<Arc<EnvelopeResult>> {
        let mut slot = self.envelope.lock().expect("envelope cache poisoned");
        if let Some(e) = slot.as_ref() {
            return Ok(e.clone());
        }
        let e = Arc::new(constrained_envelope(&self.weight.sample(&self.grid), self.window)?);
        *slot = Some(e.clone());
        Ok(e)
    }

    pub fn kernel(&self, k: usize) -> Result<KernelBundle> {
        if let Some(b) = self.kernels.lock().expect("kernel cache poisoned").get(&k) {
            return Ok(b.clone());
        }
        let space = self.space(k)?;
        let norms = monomial_log_norms(&space, &self.quad_grid)?;
        let eval = bergman_function(&space, &norms, &self.grid);
        let bundle = Arc::new((space, norms, eval));
        self.kernels
            .lock()
            .expect("kernel cache poisoned")
            .insert(k, bundle.clone());
        Ok(bundle)
    }

    fn kernels(&self, ks: &[usize]) -> Result<Vec<KernelBundle>> {
        ks.par_iter().map(|&k| self.kernel(k)).collect()
    }

    /// `1_{D ∩ {u'' > 0}} u''` on the analysis grid.
    pub fn limit_density(&self) -> Result<Vec<f64>> {
        let env = self.envelope()?;
        Ok(self
            .grid
            .nodes()
            .iter()
            .zip(&env.contact_mask)
            .map(|(&v, &c)| {
                let c2 = self.weight.curvature(v);
                if c && c2 > 0.0 {
                    c2
                } else {
                    0.0
                }
            })
            .collect())
    }
}

fn strictly_decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0])
}

/// `ln B_k` at an arbitrary point.
pub fn log_bergman_at(space: &SectionSpace, norms: &LogNorms, v: f64) -> f64 {
    log_sum_exp(norms.iter().map(|(j, c)| j as f64 * v - c)) - space.k as f64 * space.weight.potential(v)
}

/// Gap `u - u_e` at `v`, with `u_e` interpolated linearly between nodes.
pub fn gap_at(setting: &Setting, v: f64) -> Result<f64> {
    let env = setting.envelope()?;
    Ok(setting.weight.potential(v) - env.u_e.interpolate_or_zero(v))
}

// ---------------------------------------------------------------------------

pub const L1_CRITERION: &str =
    "error = int |B_k g''/k - 1_{D and u''>0} u''| dv strictly decreasing over ks and error(k_max) <= 0.25 error(k_min)";

pub fn l1_report(setting: &Setting, ks: &[usize]) -> Result<ConvergenceReport> {
    let target = setting.limit_density()?;
    let env = setting.envelope()?;
    let g = setting.grid;
    let nodes = g.nodes();
    let rows = setting
        .kernels(ks)?
        .iter()
        .map(|b| {
            let (space, _, eval) = &**b;
            let k = space.k as f64;
            let density: Vec<f64> = nodes
                .iter()
                .zip(&eval.log_b.values)
                .map(|(&v, lb)| (lb + ln_fs_density(v)).exp() / k)
                .collect();
            let diff: Vec<f64> = density.iter().zip(&target).map(|(a, t)| (a - t).abs()).collect();
            let outside: Vec<f64> = density
                .iter()
                .zip(&env.contact_mask)
                .map(|(d, &c)| if c { 0.0 } else { *d })
                .collect();
            ReportRow::new(
                space.k,
                simpson(&diff, g.step()),
                &[("mass_off_contact", simpson(&outside, g.step()))],
            )
        })
        .collect::<Vec<_>>();
    let errs: Vec<f64> = rows.iter().map(|r| r.error).collect();
    let ok = errs.len() >= 2
        && strictly_decreasing(&errs)
        && errs[errs.len() - 1] <= 0.25 * errs[0];
    Ok(ConvergenceReport::new(TheoremId::L1, L1_CRITERION, rows, ok))
}

// ---------------------------------------------------------------------------

pub const UNIFORM_CRITERION: &str =
    "error = max_v |k^-1 ln K_k(v,v) - u_e(v)|; ratio = error/(ln k / k) stays within a factor-3 band over ks containing {50,100,200,400,800}";

const UNIFORM_REQUIRED_KS: [usize; 5] = [50, 100, 200, 400, 800];

/// Sup-distance between the Bergman metric and the equilibrium potential,
/// optionally restricted to `v >= v_floor`.
pub fn uniform_report(setting: &Setting, ks: &[usize], v_floor: Option<f64>) -> Result<ConvergenceReport> {
    let env = setting.envelope()?;
    let nodes = setting.grid.nodes();
    let floor = v_floor.unwrap_or(f64::NEG_INFINITY);
    let rows: Vec<ReportRow> = setting
        .kernels(ks)?
        .iter()
        .map(|b| {
            let (space, _, eval) = &**b;
            let err = eval
                .bergman_metric
                .values
                .iter()
                .zip(&env.u_e.values)
                .zip(&nodes)
                .filter(|(_, &v)| v >= floor)
                .map(|((m, e), _)| (m - e).abs())
                .fold(0.0, f64::max);
            let k = space.k as f64;
            let rate = k.ln() / k;
            ReportRow::new(space.k, err, &[("ratio", err / rate)])
        })
        .collect();
    let ratios: Vec<f64> = rows.iter().map(|r| r.get("ratio")).collect();
    let hi = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let covers = UNIFORM_REQUIRED_KS.iter().all(|k| ks.contains(k));
    let ok = covers && lo > 0.0 && hi / lo <= 3.0 && ks.iter().all(|&k| k >= 2);
    Ok(ConvergenceReport::new(TheoremId::Uniform, UNIFORM_CRITERION, rows, ok))
}

// ---------------------------------------------------------------------------

pub const DECAY_CRITERION: &str =
    "error = max over probes |-(1/k) ln(B_k/k) - (u - u_e)|; strictly decreasing and error(k_max) <= 0.5 min gap";

pub const MIN_PROBE_GAP: f64 = 0.05;

pub fn decay_report(setting: &Setting, probes: &[f64], ks: &[usize]) -> Result<ConvergenceReport> {
    let gaps = probes
        .iter()
        .map(|&v| {
            let gap = gap_at(setting, v)?;
            if gap < MIN_PROBE_GAP {
                Err(LabError::ProbeInContact { v, gap })
            } else {
                Ok(gap)
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    if probes.is_empty() {
        return Err(LabError::BadProbe {
            v: f64::NAN,
            reason: "no probes given".into(),
        });
    }
    let rows: Vec<ReportRow> = setting
        .kernels(ks)?
        .iter()
        .map(|b| {
            let (space, norms, _) = &**b;
            let k = space.k as f64;
            let mut worst = 0.0f64;
            let mut first_rate = 0.0;
            for (i, (&v, &gap)) in probes.iter().zip(&gaps).enumerate() {
                let rate = -(log_bergman_at(space, norms, v) - k.ln()) / k;
                if i == 0 {
                    first_rate = rate;
                }
                worst = worst.max((rate - gap).abs());
            }
            ReportRow::new(space.k, worst, &[("rate_first_probe", first_rate), ("gap_first_probe", gaps[0])])
        })
        .collect();
    let errs: Vec<f64> = rows.iter().map(|r| r.error).collect();
    let min_gap = gaps.iter().copied().fold(f64::INFINITY, f64::min);
    let ok = strictly_decreasing(&errs) && errs.last().is_some_and(|&e| e <= 0.5 * min_gap);
    Ok(ConvergenceReport::new(TheoremId::Decay, DECAY_CRITERION, rows, ok))
}

/// Node in `D^c` with the largest gap, searched within `|v| <= 2` first and
/// then the whole grid. `None` when the contact set is everything.
pub fn default_decay_probe(setting: &Setting) -> Result<Option<f64>> {
    let env = setting.envelope()?;
    let gap = env.gap();
    let nodes = setting.grid.nodes();
    for radius in [2.0, f64::INFINITY] {
        let best = nodes
            .iter()
            .zip(&gap)
            .filter(|(v, g)| v.abs() <= radius && **g >= MIN_PROBE_GAP)
            .max_by(|a, b| a.1.total_cmp(b.1));
        if let Some((&v, _)) = best {
            return Ok(Some(v));
        }
    }
    Ok(None)
}

// ---------------------------------------------------------------------------

pub const MORSE_CRITERION: &str =
    "C_k = max over {u'' > eps} of B_k g''/(k u''); C_k - 1 strictly decreasing over ks and C(k_max) < C(k_min)";

/// Local Morse constant on the full section space of the setting's weight.
pub fn morse_report(setting: &Setting, ks: &[usize], eps: f64) -> Result<ConvergenceReport> {
    let full = Setting::new(setting.weight, SlopeWindow::full(&setting.weight), setting.grid)?
        .with_quad_grid(setting.quad_grid);
    let full = if setting.window == full.window { setting } else { &full };
    let nodes = setting.grid.nodes();
    let curv: Vec<f64> = nodes.iter().map(|&v| setting.weight.curvature(v)).collect();
    let rows: Vec<ReportRow> = full
        .kernels(ks)?
        .iter()
        .map(|b| {
            let (space, _, eval) = &**b;
            let k = space.k as f64;
            let c = nodes
                .iter()
                .zip(&curv)
                .zip(&eval.log_b.values)
                .filter(|((_, &c2), _)| c2 > eps)
                .map(|((&v, &c2), lb)| (lb + ln_fs_density(v)).exp() / (k * c2))
                .fold(f64::NEG_INFINITY, f64::max);
            ReportRow::new(space.k, (c - 1.0).abs(), &[("c_k", c), ("c_k_minus_one", c - 1.0)])
        })
        .collect();
    let cm1: Vec<f64> = rows.iter().map(|r| r.get("c_k_minus_one")).collect();
    let ok = cm1.len() >= 2 && strictly_decreasing(&cm1) && cm1[cm1.len() - 1] < cm1[0];
    Ok(ConvergenceReport::new(TheoremId::Morse, MORSE_CRITERION, rows, ok))
}

// ---------------------------------------------------------------------------

pub const OFFDIAG_CRITERION: &str =
    "S_k = k^-1 int int |K_k(x,y)|^2 f(x) g(y), T = int f g 1_{D and u''>0} u'' dv; |S_k - T|/(|T|+1e-12) <= 0.05 with k >= 300";

/// Smeared off-diagonal kernel against the limit measure on the diagonal.
///
/// After integrating out both angles only the `j`-diagonal survives:
/// `S_k = k^-1 sum_j E_j[f] E_j[g]`, where `E_j` is the expectation under
/// the probability density `e^{j v - k u} g'' / c_j^2`.
pub fn offdiag_report(setting: &Setting, k: usize, f: &GridFn, g: &GridFn) -> Result<ConvergenceReport> {
    if !f.grid.same_as(&setting.grid) || !g.grid.same_as(&setting.grid) {
        return Err(LabError::GridMismatch("test functions must live on the analysis grid".into()));
    }
    let bundle = setting.kernel(k)?;
    let (space, norms, _) = &*bundle;
    let q = setting.quad_grid;
    let qn = q.nodes();
    let fq: Vec<f64> = qn.iter().map(|&v| f.interpolate_or_zero(v)).collect();
    let gq: Vec<f64> = qn.iter().map(|&v| g.interpolate_or_zero(v)).collect();
    let kf = k as f64;
    let base: Vec<f64> = qn
        .iter()
        .map(|&v| -kf * space.weight.potential(v) + ln_fs_density(v))
        .collect();
    let terms: Vec<f64> = norms
        .iter()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(j, c)| {
            let p: Vec<f64> = qn
                .iter()
                .zip(&base)
                .map(|(&v, b)| (j as f64 * v + b - c).exp())
                .collect();
            let ef: Vec<f64> = p.iter().zip(&fq).map(|(a, b)| a * b).collect();
            let eg: Vec<f64> = p.iter().zip(&gq).map(|(a, b)| a * b).collect();
            simpson(&ef, q.step()) * simpson(&eg, q.step())
        })
        .collect();
    let s = terms.iter().sum::<f64>() / kf;

    let limit = setting.limit_density()?;
    let tv: Vec<f64> = f
        .values
        .iter()
        .zip(&g.values)
        .zip(&limit)
        .map(|((a, b), l)| a * b * l)
        .collect();
    let t = simpson(&tv, setting.grid.step());
    let err = (s - t).abs() / (t.abs() + 1e-12);
    let ok = k >= 300 && err <= 0.05;
    Ok(ConvergenceReport::new(
        TheoremId::Offdiag,
        OFFDIAG_CRITERION,
        vec![ReportRow::new(k, err, &[("s_k", s), ("target", t)])],
        ok,
    ))
}

/// Gaussian `exp(-(v - center)^2 / (2 width^2))` on the analysis grid.
pub fn gaussian_profile(grid: &VGrid, center: f64, width: f64) -> GridFn {
    grid.sample(|v| (-(v - center).powi(2) / (2.0 * width * width)).exp())
}

// ---------------------------------------------------------------------------

pub const EXPANSION_CRITERION: &str =
    "a_k = B_k g''/k at v*; |a_k - u''| strictly decreasing and k (a_k - u'') stabilizes: last two within 20%";

/// Contact cells required on each side of an expansion probe.
const PROBE_CLEARANCE: usize = 3;

pub fn expansion_probe(setting: &Setting, v_star: f64, ks: &[usize]) -> Result<ConvergenceReport> {
    let env = setting.envelope()?;
    let g = setting.grid;
    let i = g.nearest(v_star);
    let clear = i >= PROBE_CLEARANCE
        && i + PROBE_CLEARANCE < g.len()
        && env.contact_mask[i - PROBE_CLEARANCE..=i + PROBE_CLEARANCE]
            .iter()
            .all(|&c| c);
    if !clear {
        return Err(LabError::BadProbe {
            v: v_star,
            reason: "not interior to the contact set".into(),
        });
    }
    let curv = setting.weight.curvature(v_star);
    if curv <= 0.0 {
        return Err(LabError::BadProbe {
            v: v_star,
            reason: format!("curvature {curv:e} is not positive"),
        });
    }
    let rows: Vec<ReportRow> = setting
        .kernels(ks)?
        .iter()
        .map(|b| {
            let (space, norms, _) = &**b;
            let k = space.k as f64;
            let a = (log_bergman_at(space, norms, v_star) + ln_fs_density(v_star)).exp() / k;
            let d = a - curv;
            ReportRow::new(space.k, d.abs(), &[("a_k", a), ("scaled", k * d)])
        })
        .collect();
    let errs: Vec<f64> = rows.iter().map(|r| r.error).collect();
    let scaled: Vec<f64> = rows.iter().map(|r| r.get("scaled")).collect();
    let n = scaled.len();
    let stable = n >= 2 && (scaled[n - 1] - scaled[n - 2]).abs() <= 0.2 * scaled[n - 1].abs();
    let ok = strictly_decreasing(&errs) && stable;
    Ok(ConvergenceReport::new(TheoremId::Expansion, EXPANSION_CRITERION, rows, ok))
}

/// Clearance from the free boundary preferred for interior probes.
const PREFERRED_CLEARANCE: f64 = 1.0;

/// Interior contact node within `|v| <= 4` with `u'' > 0.01`: the one with the
/// largest curvature among nodes at least [`PREFERRED_CLEARANCE`] from the
/// free boundary, else the one farthest from it. Ties go to the node closest
/// to zero.
pub fn default_interior_point(setting: &Setting) -> Result<Option<f64>> {
    let env = setting.envelope()?;
    let nodes = setting.grid.nodes();
    let non_contact: Vec<f64> = nodes
        .iter()
        .zip(&env.contact_mask)
        .filter(|(_, &c)| !c)
        .map(|(&v, _)| v)
        .collect();
    let clearance = |v: f64| {
        non_contact
            .iter()
            .map(|w| (w - v).abs())
            .fold(f64::INFINITY, f64::min)
    };
    let candidates: Vec<(f64, f64, f64)> = nodes
        .iter()
        .zip(&env.contact_mask)
        .filter(|(&v, &c)| c && v.abs() <= 4.0)
        .map(|(&v, _)| (clearance(v), setting.weight.curvature(v), v))
        .filter(|&(_, c2, _)| c2 > 0.01)
        .collect();
    let nearer_zero = |a: f64, b: f64| b.abs().total_cmp(&a.abs());
    let roomy = candidates
        .iter()
        .filter(|c| c.0 >= PREFERRED_CLEARANCE)
        .max_by(|a, b| a.1.total_cmp(&b.1).then(nearer_zero(a.2, b.2)));
    let best = roomy.or_else(|| {
        candidates
            .iter()
            .max_by(|a, b| a.0.total_cmp(&b.0).then(nearer_zero(a.2, b.2)))
    });
    Ok(best.map(|c| c.2))
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DivisorExample {
    Example5_2,
    Example5_3,
}

impl DivisorExample {
    pub fn window(&self) -> SlopeWindow {
        match self {
            DivisorExample::Example5_2 => SlopeWindow { s_lo: 0.0, s_hi: 1.0 },
            DivisorExample::Example5_3 => SlopeWindow { s_lo: 1.0, s_hi: 2.0 },
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            DivisorExample::Example5_2 => "example_5_2",
            DivisorExample::Example5_3 => "example_5_3",
        }
    }
}

pub const DIVISOR_CRITERION: &str =
    "single free boundary on the expected side with radius r = 1 +- 1e-3; equilibrium mass on the contact side = 1 +- 1e-4; int_contact 2 g'' dv = 1 +- 1e-4";

/// `[-12, 12]` with `2^17 + 1` nodes: the origin is a node and `h/4 < 1e-4`.
pub fn divisor_report_grid() -> VGrid {
    VGrid::new(-12.0, 12.0, (1 << 17) + 1).expect("static grid")
}

pub fn divisor_example_report(which: DivisorExample, grid: &VGrid) -> Result<ConvergenceReport> {
    let weight = Weight::fubini_study(2);
    let window = which.window();
    let res = constrained_envelope(&weight.sample(grid), window)?;
    let mu = equilibrium_measure(&res)?;
    let bounds = res.free_boundaries();
    let n = grid.len();
    let h = grid.step();
    let contact_left = which == DivisorExample::Example5_2;

    let (radius, v_b, mass, volume, side_ok) = match bounds.as_slice() {
        [b] => {
            let last = b.left_node;
            let (mass, volume) = if contact_left {
                let mass = mu.interior_mass(0, last) + mu.left_atom;
                let dens: Vec<f64> = (0..=last).map(|i| 2.0 * fs_density(grid.node(i))).collect();
                let cell = 0.25 * h * (2.0 * fs_density(grid.node(last)) + 2.0 * fs_density(b.v));
                // tail below v_min from the antiderivative g' = logistic
                (mass, simpson(&dens, h) + cell + 2.0 * logistic(grid.v_min()))
            } else {
                let first = last + 1;
                let mass = mu.interior_mass(first, n - 1) + mu.right_atom;
                let dens: Vec<f64> = (first..n).map(|i| 2.0 * fs_density(grid.node(i))).collect();
                let cell = 0.25 * h * (2.0 * fs_density(grid.node(first)) + 2.0 * fs_density(b.v));
                (mass, simpson(&dens, h) + cell + 2.0 * (1.0 - logistic(grid.v_max())))
            };
            (b.radius(), b.v, mass, volume, b.contact_on_left == contact_left)
        }
        _ => (f64::NAN, f64::NAN, f64::NAN, f64::NAN, false),
    };
    let err = (radius - 1.0).abs();
    let ok = side_ok
        && err <= 1e-3
        && (mass - 1.0).abs() <= 1e-4
        && (volume - 1.0).abs() <= 1e-4;
    let row = ReportRow::new(
        n,
        if err.is_finite() { err } else { f64::INFINITY },
        &[
            ("radius", radius),
            ("v_boundary", v_b),
            ("contact_mass", mass),
            ("volume", volume),
            ("contact_on_left", if contact_left { 1.0 } else { 0.0 }),
        ],
    );
    Ok(ConvergenceReport::new(TheoremId::DivisorRadius, DIVISOR_CRITERION, vec![row], ok))
}

// ---------------------------------------------------------------------------

pub const EQMEASURE_CRITERION: &str =
    "max |MA density of u_e - 1_{D and u''>0} u''| over nodes at least 3 cells from the free boundary <= 10 h";

const BOUNDARY_EXCLUSION: usize = 3;

pub fn eqmeasure_report(setting: &Setting) -> Result<ConvergenceReport> {
    let env = setting.envelope()?;
    let mu = equilibrium_measure(&env)?;
    let target = setting.limit_density()?;
    let g = setting.grid;
    let n = g.len();
    let mut excluded: Mask = vec![false; n];
    excluded[0] = true;
    excluded[n - 1] = true;
    for b in env.free_boundaries() {
        let lo = b.left_node.saturating_sub(BOUNDARY_EXCLUSION - 1);
        let hi = (b.left_node + BOUNDARY_EXCLUSION).min(n - 1);
        for e in &mut excluded[lo..=hi] {
            *e = true;
        }
    }
    let dev = (0..n)
        .filter(|&i| !excluded[i])
        .map(|i| (mu.density.values[i] - target[i]).abs())
        .fold(0.0, f64::max);
    let h = g.step();
    let ok = dev <= 10.0 * h;
    Ok(ConvergenceReport::new(
        TheoremId::Eqmeasure,
        EQMEASURE_CRITERION,
        vec![ReportRow::new(
            n,
            dev,
            &[("h", h), ("deviation_over_h", dev / h), ("total_mass", mu.total_mass())],
        )],
        ok,
    ))
}

// ---------------------------------------------------------------------------

pub const REGULARITY_CRITERION: &str =
    "max second difference quotient of u_e within a factor 1.5 across refinements; slope jump across the free boundary <= 2h (k column holds n_points)";

pub fn regularity_report(weight: &Weight, window: SlopeWindow, refinements: &[VGrid]) -> Result<ConvergenceReport> {
    let probe = c11_probe(weight, window, refinements)?;
    let rows: Vec<ReportRow> = probe
        .iter()
        .map(|r| {
            ReportRow::new(
                r.n_points,
                r.max_second_difference,
                &[("h", r.h), ("slope_jump", r.max_slope_jump)],
            )
        })
        .collect();
    let hi = probe.iter().map(|r| r.max_second_difference).fold(f64::NEG_INFINITY, f64::max);
    let lo = probe.iter().map(|r| r.max_second_difference).fold(f64::INFINITY, f64::min);
    let ok = !probe.is_empty()
        && lo > 0.0
        && hi / lo <= 1.5
        && probe.iter().all(|r| r.max_slope_jump <= 2.0 * r.h);
    Ok(ConvergenceReport::new(TheoremId::Regularity, REGULARITY_CRITERION, rows, ok))
}

/// `[-12, 12]` with `2^12`, `2^13` and `2^14` nodes.
pub fn default_refinements() -> Vec<VGrid> {
    [1 << 12, 1 << 13, 1 << 14]
        .iter()
        .map(|&n| VGrid::new(-12.0, 12.0, n).expect("static grid"))
        .collect()
}

// ---------------------------------------------------------------------------

pub const LELONG_CRITERION: &str =
    "divisor-at-0 space on O(2): left-end slope of the Bergman metric = 1 +- 1e-6 for every k, and the uniform report restricted to v >= -4 passes";

/// Grid reaching far enough left that the full-space slope is below 1e-6.
pub fn lelong_grid() -> VGrid {
    VGrid::new(-20.0, 20.0, 4096).expect("static grid")
}

pub fn lelong_report(ks: &[usize], grid: &VGrid, quad_grid: &VGrid) -> Result<ConvergenceReport> {
    let w = Weight::fubini_study(2);
    let at_zero = Setting::new(w, SlopeWindow { s_lo: 1.0, s_hi: 2.0 }, *grid)?.with_quad_grid(*quad_grid);
    let full = Setting::new(w, SlopeWindow::full(&w), *grid)?.with_quad_grid(*quad_grid);
    let uniform = uniform_report(&at_zero, ks, Some(-4.0))?;
    let rows: Vec<ReportRow> = ks
        .iter()
        .zip(&uniform.rows)
        .map(|(&k, u)| -> Result<ReportRow> {
            let s = lelong_slope(&at_zero.kernel(k)?.2, End::Left);
            let s_full = lelong_slope(&full.kernel(k)?.2, End::Left);
            Ok(ReportRow::new(
                k,
                (s - 1.0).abs(),
                &[("left_slope", s), ("full_space_left_slope", s_full), ("restricted_uniform_error", u.error)],
            ))
        })
        .collect::<Result<_>>()?;
    let ok = rows.iter().all(|r| r.error <= 1e-6) && uniform.verdict.passed();
    Ok(ConvergenceReport::new(TheoremId::Lelong, LELONG_CRITERION, rows, ok))
}

// ---------------------------------------------------------------------------

/// `k` used for the off-diagonal report.
pub const OFFDIAG_K: usize = 300;
/// Curvature floor of the Morse report.
pub const MORSE_EPS: f64 = 0.01;

/// Every report that applies to one setting. Reports whose preconditions
/// cannot be met (no decay probe when the contact set is everything) are
/// skipped.
pub fn verify_suite(setting: &Setting, ks: &[usize]) -> Result<Vec<ConvergenceReport>> {
    let mut out = vec![l1_report(setting, ks)?, uniform_report(setting, ks, None)?];
    if let Some(p) = default_decay_probe(setting)? {
        out.push(decay_report(setting, &[p], ks)?);
    }
    out.push(morse_report(setting, ks, MORSE_EPS)?);
    if let Some(center) = default_interior_point(setting)? {
        let f = gaussian_profile(&setting.grid, center, 0.5);
        out.push(offdiag_report(setting, OFFDIAG_K, &f, &f)?);
        out.push(expansion_probe(setting, center, ks)?);
    }
    out.push(eqmeasure_report(setting)?);
    out.push(regularity_report(&setting.weight, setting.window, &default_refinements())?);
    out.push(lelong_report(ks, &lelong_grid(), &setting.quad_grid)?);
    Ok(out)
}
