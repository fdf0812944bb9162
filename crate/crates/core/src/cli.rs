//! Configuration-driven runner behind the `bergman-lab` binary.

use std::path::{Path, PathBuf};

use clap::Parser;
use serde::{Deserialize, Serialize};

use crate::bergman::{kernel_offdiag_sq, PolarPoint, SectionSpace};
use crate::envelope::SlopeWindow;
use crate::error::{LabError, Result};
use crate::grid::VGrid;
use crate::output::{envelope_csv, kernel_csv, norms_csv, profile_csv, write_file};
use crate::presets::{find_preset, list_presets};
use crate::verify::{
    divisor_example_report, divisor_report_grid, verify_suite, ConvergenceReport, DivisorExample,
    Setting, DEFAULT_KS,
};
use crate::weight::Weight;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED_VERDICT: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Envelope,
    Bergman,
    Kernel,
    Verify,
    Examples,
}

impl std::str::FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        serde_json::from_value(serde_json::Value::String(s.into()))
            .map_err(|_| format!("unknown command `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightSpec {
    Preset(String),
    Inline(Weight),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WindowSpec {
    Range([f64; 2]),
    Keyword(String),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub preset: Option<WeightSpec>,
    pub window: Option<WindowSpec>,
    pub grid: Option<VGrid>,
    pub ks: Option<Vec<usize>>,
    pub outputs: Option<PathBuf>,
    #[serde(default)]
    pub commands: Vec<Command>,
    #[serde(default)]
    pub divisor_order_offset: usize,
}

/// A configuration that passed validation.
#[derive(Debug, Clone)]
pub struct ValidConfig {
    pub name: String,
    pub weight: Weight,
    pub window: SlopeWindow,
    pub grid: VGrid,
    pub ks: Vec<usize>,
    pub outputs: PathBuf,
    pub commands: Vec<Command>,
    pub divisor_order_offset: usize,
}

fn config_error(path: &str, message: impl Into<String>) -> LabError {
    LabError::Config {
        path: path.into(),
        message: message.into(),
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            config_error(&path, e.into_inner().to_string())
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| LabError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<ValidConfig> {
        let (name, weight, preset_window) = match &self.preset {
            None => return Err(config_error("preset", "a preset name or inline weight is required")),
            Some(WeightSpec::Preset(name)) => {
                let p = find_preset(name).ok_or_else(|| {
                    let known: Vec<String> = list_presets().into_iter().map(|p| p.name).collect();
                    config_error("preset", format!("unknown preset `{name}` (known: {})", known.join(", ")))
                })?;
                (p.name, p.weight, Some(p.window))
            }
            Some(WeightSpec::Inline(w)) => {
                w.validate().map_err(|e| config_error("preset", e.to_string()))?;
                ("custom".to_string(), *w, None)
            }
        };
        let m = weight.m();
        let window = match &self.window {
            None => preset_window.unwrap_or_else(|| SlopeWindow::full(&weight)),
            Some(WindowSpec::Range([lo, hi])) => {
                SlopeWindow::new(*lo, *hi).map_err(|e| config_error("window", e.to_string()))?
            }
            Some(WindowSpec::Keyword(k)) => match k.as_str() {
                "none" => SlopeWindow::full(&weight),
                "at_zero" => SlopeWindow { s_lo: 1.0, s_hi: m },
                "at_infinity" => SlopeWindow { s_lo: 0.0, s_hi: m - 1.0 },
                other => {
                    return Err(config_error(
                        "window",
                        format!("`{other}` is not one of at_zero, at_infinity, none"),
                    ))
                }
            },
        };
        if !(window.s_lo < window.s_hi) {
            return Err(config_error(
                "window",
                format!("empty slope window [{}, {}] for degree {}", window.s_lo, window.s_hi, weight.degree_m),
            ));
        }
        window
            .check_for(&weight)
            .map_err(|e| config_error("window", e.to_string()))?;

        let grid = match self.grid {
            None => VGrid::default_analysis(),
            Some(g) => VGrid::new(g.v_min(), g.v_max(), g.len())
                .map_err(|e| config_error("grid", e.to_string()))?,
        };

        let ks = self.ks.clone().unwrap_or_else(|| DEFAULT_KS.to_vec());
        if ks.is_empty() {
            return Err(config_error("ks", "at least one k is required"));
        }
        for (i, &k) in ks.iter().enumerate() {
            if k == 0 {
                return Err(config_error(&format!("ks[{i}]"), "k must be positive"));
            }
            if i > 0 && k <= ks[i - 1] {
                return Err(config_error(&format!("ks[{i}]"), "ks must be strictly increasing"));
            }
            SectionSpace::from_window(weight, k, window)
                .map_err(|e| config_error(&format!("ks[{i}]"), e.to_string()))?;
        }

        if self.commands.is_empty() {
            return Err(config_error("commands", "at least one command is required"));
        }
        let mut commands = self.commands.clone();
        commands.sort();
        commands.dedup();

        Ok(ValidConfig {
            name,
            weight,
            window,
            grid,
            ks,
            outputs: self.outputs.clone().unwrap_or_else(|| PathBuf::from("out")),
            commands,
            divisor_order_offset: self.divisor_order_offset,
        })
    }
}

/// Everything a run produces, held in memory until computation is done.
#[derive(Debug, Default)]
pub struct RunOutput {
    /// Relative file name and contents, in write order.
    pub files: Vec<(String, String)>,
    pub reports: Vec<ConvergenceReport>,
}

impl RunOutput {
    pub fn all_passed(&self) -> bool {
        self.reports.iter().all(|r| r.verdict.passed())
    }

    fn add_report(&mut self, stem: &str, report: ConvergenceReport) -> Result<()> {
        self.files.push((format!("{stem}.csv"), report.to_csv()));
        self.files.push((
            format!("{stem}.json"),
            serde_json::to_string_pretty(&report.to_json())? + "\n",
        ));
        self.reports.push(report);
        Ok(())
    }
}

pub fn execute(cfg: &ValidConfig) -> Result<RunOutput> {
    let setting = Setting::new(cfg.weight, cfg.window, cfg.grid)?.with_divisor_offset(cfg.divisor_order_offset);
    let mut out = RunOutput::default();
    for cmd in &cfg.commands {
        match cmd {
            Command::Envelope => {
                out.files.push(("envelope.csv".into(), envelope_csv(&*setting.envelope()?)?));
            }
            Command::Bergman => {
                for &k in &cfg.ks {
                    let bundle = setting.kernel(k)?;
                    out.files.push((format!("bergman_k{k}.csv"), kernel_csv(&bundle.2)));
                }
            }
            Command::Kernel => {
                let nodes = cfg.grid.nodes();
                for &k in &cfg.ks {
                    let bundle = setting.kernel(k)?;
                    let (space, norms, _) = &*bundle;
                    out.files.push((format!("norms_k{k}.csv"), norms_csv(norms)));
                    let origin = PolarPoint::new(0.0, 0.0);
                    let row: Vec<f64> = nodes
                        .iter()
                        .map(|&v| kernel_offdiag_sq(space, norms, origin, PolarPoint::new(v, 0.0)))
                        .collect();
                    out.files.push((format!("offdiag_k{k}.csv"), profile_csv("kernel_sq_from_v0", &nodes, &row)));
                }
            }
            Command::Verify => {
                for report in verify_suite(&setting, &cfg.ks)? {
                    let stem = format!("verify_{}", report.theorem_id.as_str());
                    out.add_report(&stem, report)?;
                }
            }
            Command::Examples => {
                let grid = divisor_report_grid();
                for which in [DivisorExample::Example5_2, DivisorExample::Example5_3] {
                    let report = divisor_example_report(which, &grid)?;
                    out.add_report(which.name(), report)?;
                }
            }
        }
    }
    if !out.reports.is_empty() {
        let summary: Vec<serde_json::Value> = out
            .reports
            .iter()
            .map(|r| serde_json::json!({"theorem_id": r.theorem_id, "verdict": r.verdict}))
            .collect();
        let doc = serde_json::json!({
            "schema": 1,
            "preset": cfg.name,
            "window": [cfg.window.s_lo, cfg.window.s_hi],
            "ks": cfg.ks,
            "reports": summary,
            "all_passed": out.all_passed(),
        });
        out.files.push(("summary.json".into(), serde_json::to_string_pretty(&doc)? + "\n"));
    }
    Ok(out)
}

pub fn write_outputs(dir: &Path, out: &RunOutput) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| LabError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    for (name, contents) in &out.files {
        write_file(&dir.join(name), contents)?;
    }
    Ok(())
}

/// Equilibrium envelopes and weighted Bergman kernels on the Riemann sphere.
#[derive(Debug, Parser)]
#[command(name = "bergman-lab", version)]
pub struct Cli {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub preset: Option<String>,
    /// Tensor power (repeatable).
    #[arg(long = "k")]
    pub ks: Vec<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// `vmin:vmax:n`.
    #[arg(long)]
    pub grid: Option<String>,
    /// `lo:hi`, `at_zero`, `at_infinity` or `none`.
    #[arg(long)]
    pub window: Option<String>,
    /// envelope, bergman, kernel, verify or examples (repeatable).
    #[arg(long = "cmd")]
    pub commands: Vec<Command>,
    /// Print the preset catalog as JSON and exit.
    #[arg(long)]
    pub list_presets: bool,
}

fn parse_grid(s: &str) -> Result<VGrid> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || config_error("grid", format!("`{s}` is not vmin:vmax:n"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].parse().map_err(|_| bad())?;
    let n: usize = parts[2].parse().map_err(|_| bad())?;
    VGrid::new(lo, hi, n).map_err(|e| config_error("grid", e.to_string()))
}

fn parse_window(s: &str) -> Result<WindowSpec> {
    match s.split_once(':') {
        None => Ok(WindowSpec::Keyword(s.into())),
        Some((a, b)) => {
            let bad = || config_error("window", format!("`{s}` is not lo:hi"));
            Ok(WindowSpec::Range([a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?]))
        }
    }
}

impl Cli {
    pub fn to_config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(p) = &self.preset {
            cfg.preset = Some(WeightSpec::Preset(p.clone()));
        }
        if !self.ks.is_empty() {
            cfg.ks = Some(self.ks.clone());
        }
        if let Some(o) = &self.out {
            cfg.outputs = Some(o.clone());
        }
        if let Some(g) = &self.grid {
            cfg.grid = Some(parse_grid(g)?);
        }
        if let Some(w) = &self.window {
            cfg.window = Some(parse_window(w)?);
        }
        if !self.commands.is_empty() {
            cfg.commands = self.commands.clone();
        }
        Ok(cfg)
    }
}

/// Parses, validates, computes, then writes. Returns the exit status.
pub fn run(cli: &Cli) -> i32 {
    if cli.list_presets {
        match serde_json::to_string_pretty(&list_presets()) {
            Ok(text) => {
                println!("{text}");
                return EXIT_OK;
            }
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_FAILED_VERDICT;
            }
        }
    }
    let cfg = match cli.to_config().and_then(|c| c.validate()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let result = execute(&cfg).and_then(|out| {
        write_outputs(&cfg.outputs, &out)?;
        Ok(out)
    });
    match result {
        Ok(out) => {
            for r in &out.reports {
                println!("{:<15} {:?}", r.theorem_id.as_str(), r.verdict);
            }
            if out.all_passed() {
                EXIT_OK
            } else {
                EXIT_FAILED_VERDICT
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_FAILED_VERDICT
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_paths_in_diagnostics() {
        let e = RunConfig::from_json(r#"{"preset": "fs", "grid": {"v_min": -1, "v_max": "x", "n_points": 3}}"#)
            .unwrap_err();
        assert!(e.to_string().contains("grid.v_max"), "{e}");
        let e = RunConfig::from_json(r#"{"preset": "fs", "commands": ["plot"]}"#).unwrap_err();
        assert!(e.to_string().contains("commands[0]"), "{e}");
        let cfg = RunConfig::from_json(r#"{"preset": "fs", "ks": [10, 5], "commands": ["bergman"]}"#).unwrap();
        assert!(cfg.validate().unwrap_err().to_string().contains("ks[1]"));
    }

    #[test]
    fn window_keywords() {
        let base = RunConfig {
            preset: Some(WeightSpec::Preset("example_5_2".into())),
            commands: vec![Command::Envelope],
            ..Default::default()
        };
        let at_zero = RunConfig {
            window: Some(WindowSpec::Keyword("at_zero".into())),
            ..base.clone()
        };
        assert_eq!(at_zero.validate().unwrap().window, SlopeWindow { s_lo: 1.0, s_hi: 2.0 });
        let fs_inf = RunConfig {
            preset: Some(WeightSpec::Preset("fs".into())),
            window: Some(WindowSpec::Keyword("at_infinity".into())),
            ..base.clone()
        };
        assert!(matches!(fs_inf.validate(), Err(LabError::Config { .. })));
        let wide = RunConfig {
            window: Some(WindowSpec::Range([0.0, 3.0])),
            ..base
        };
        assert!(wide.validate().is_err());
    }

    #[test]
    fn inline_weight() {
        let cfg = RunConfig::from_json(
            r#"{"preset": {"degree_m": 1, "bump": {"amplitude": -1.5, "center": 0.0, "halfwidth": 2.0}},
                "commands": ["envelope"]}"#,
        )
        .unwrap()
        .validate()
        .unwrap();
        assert_eq!(cfg.weight, find_preset("bump").unwrap().weight);
        assert_eq!(cfg.window, SlopeWindow { s_lo: 0.0, s_hi: 1.0 });
    }

    #[test]
    fn grid_and_window_flags() {
        assert_eq!(parse_grid("-3:3:7").unwrap(), VGrid::new(-3.0, 3.0, 7).unwrap());
        assert!(parse_grid("-3:3").is_err());
        assert_eq!(parse_window("0.5:1").unwrap(), WindowSpec::Range([0.5, 1.0]));
        assert!(parse_window("a:1").is_err());
    }
}
