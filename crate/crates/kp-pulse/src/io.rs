//! CSV and JSON serialization for pulse schedules, trajectories, and run
//! configs. All floats are written with 17 significant digits so a write →
//! read round trip is bit-faithful.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;

use crate::driftfree::{Frame, LevelSystem, PulseSchedule};
use crate::error::{Error, Result};
use crate::propagate::PropagationResult;

fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

fn frame_tag(frame: Frame) -> &'static str {
    match frame {
        Frame::Lab => "lab",
        Frame::DriftlessComplex => "driftless_complex",
        Frame::DriftlessReal => "driftless_real",
    }
}

fn parse_frame(tag: &str) -> Result<Frame> {
    match tag {
        "lab" => Ok(Frame::Lab),
        "driftless_complex" => Ok(Frame::DriftlessComplex),
        "driftless_real" => Ok(Frame::DriftlessReal),
        other => Err(Error::invalid(format!("unknown frame tag '{other}'"))),
    }
}

/// Pulse CSV: `# frame=...` comment, header, then one row per grid point
/// with t and re/im pairs per channel (u_j driftless, O_j lab).
pub fn pulse_csv_string(p: &PulseSchedule) -> String {
    let sym = if p.frame == Frame::Lab { "O" } else { "u" };
    let mut out = format!("# frame={}\n", frame_tag(p.frame));
    out.push('t');
    for ch in 1..=p.channels() {
        let _ = write!(out, ",re_{sym}{ch},im_{sym}{ch}");
    }
    out.push('\n');
    for (k, &t) in p.grid.iter().enumerate() {
        out.push_str(&fmt_f(t));
        for ch in 0..p.channels() {
            let z = p.controls[ch][k];
            let _ = write!(out, ",{},{}", fmt_f(z.re), fmt_f(z.im));
        }
        out.push('\n');
    }
    out
}

pub fn write_pulse_csv(path: &Path, p: &PulseSchedule) -> Result<()> {
    std::fs::write(path, pulse_csv_string(p))?;
    Ok(())
}

pub fn parse_pulse_csv(text: &str) -> Result<PulseSchedule> {
    let mut frame = None;
    let mut header_cols = 0usize;
    let mut grid = Vec::new();
    let mut controls: Vec<Vec<Complex64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim();
            if let Some(tag) = rest.strip_prefix("frame=") {
                frame = Some(parse_frame(tag.trim())?);
            }
            continue;
        }
        if line.starts_with('t') {
            header_cols = line.split(',').count();
            if header_cols < 3 || header_cols % 2 == 0 {
                return Err(Error::invalid(format!(
                    "pulse header needs t plus re/im pairs, got {header_cols} columns"
                )));
            }
            controls = vec![Vec::new(); (header_cols - 1) / 2];
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if header_cols == 0 {
            return Err(Error::invalid("pulse csv data before header row"));
        }
        if fields.len() != header_cols {
            return Err(Error::invalid(format!(
                "line {}: expected {header_cols} fields, got {}",
                lineno + 1,
                fields.len()
            )));
        }
        let nums: Vec<f64> = fields
            .iter()
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::invalid(format!("line {}: {e}", lineno + 1)))
            })
            .collect::<Result<_>>()?;
        if nums.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid(format!("line {}: non-finite value", lineno + 1)));
        }
        grid.push(nums[0]);
        for (ch, col) in controls.iter_mut().enumerate() {
            col.push(Complex64::new(nums[1 + 2 * ch], nums[2 + 2 * ch]));
        }
    }
    let frame = frame.ok_or_else(|| Error::invalid("pulse csv is missing the '# frame=' tag"))?;
    PulseSchedule::new(frame, grid, controls, None)
}

pub fn read_pulse_csv(path: &Path) -> Result<PulseSchedule> {
    parse_pulse_csv(&std::fs::read_to_string(path)?)
}

/// Trajectory CSV with columns t, re/im of each amplitude, populations, and
/// the running cost J_accum (trapezoid rule over the schedule's controls).
pub fn trajectory_csv_string(r: &PropagationResult, p: &PulseSchedule) -> Result<String> {
    let n = r.states.first().map(|s| s.len()).unwrap_or(0);
    let mut out = String::from("t");
    for j in 1..=n {
        let _ = write!(out, ",re_c{j},im_c{j}");
    }
    for j in 1..=n {
        let _ = write!(out, ",p{j}");
    }
    out.push_str(",J_accum\n");
    let mut j_accum = 0.0;
    let mut prev: Option<(f64, f64)> = None; // (t, Σ|u|²)
    for (k, &t) in r.grid.iter().enumerate() {
        let mut density = 0.0;
        for ch in 0..p.channels() {
            density += p.control_at(ch, t)?.norm_sqr();
        }
        if let Some((tp, dp)) = prev {
            j_accum += 0.5 * (t - tp) * (dp + density);
        }
        prev = Some((t, density));
        out.push_str(&fmt_f(t));
        for z in r.states[k].iter() {
            let _ = write!(out, ",{},{}", fmt_f(z.re), fmt_f(z.im));
        }
        for pj in &r.populations[k] {
            let _ = write!(out, ",{}", fmt_f(*pj));
        }
        let _ = write!(out, ",{}", fmt_f(j_accum));
        out.push('\n');
    }
    Ok(out)
}

pub fn write_trajectory_csv(path: &Path, r: &PropagationResult, p: &PulseSchedule) -> Result<()> {
    std::fs::write(path, trajectory_csv_string(r, p)?)?;
    Ok(())
}

/// JSON run configuration shared by the CLI subcommands.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub levels: Vec<f64>,
    /// "real" or "complex".
    pub problem: String,
    #[serde(default)]
    pub theta1: f64,
    #[serde(default)]
    pub theta3: f64,
    #[serde(default)]
    pub alpha1: f64,
    #[serde(default)]
    pub alpha2: f64,
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_step() -> f64 {
    1e-4
}

fn default_samples() -> usize {
    2001
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            levels: vec![0.0, 1.0, 2.5],
            problem: "complex".into(),
            theta1: 0.0,
            theta3: 0.0,
            alpha1: 0.0,
            alpha2: 0.0,
            step: default_step(),
            samples: default_samples(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.levels.len() < 2 {
            return Err(Error::Config("levels: need at least 2 energies".into()));
        }
        if self.levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("levels: must be strictly increasing".into()));
        }
        if self.problem != "real" && self.problem != "complex" {
            return Err(Error::Config(format!(
                "problem: expected \"real\" or \"complex\", got \"{}\"",
                self.problem
            )));
        }
        if !(self.step > 0.0) {
            return Err(Error::Config(format!("step: must be > 0, got {}", self.step)));
        }
        if self.samples < 2 {
            return Err(Error::Config(format!(
                "samples: must be >= 2, got {}",
                self.samples
            )));
        }
        Ok(())
    }

    pub fn level_system(&self) -> Result<LevelSystem> {
        LevelSystem::new(self.levels.clone())
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig =
        serde_json::from_str(text).map_err(|e| Error::Config(format!("config json: {e}")))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn read_config(path: &Path) -> Result<RunConfig> {
    parse_config(&std::fs::read_to_string(path)?)
}

pub fn write_config(path: &Path, cfg: &RunConfig) -> Result<()> {
    let text = serde_json::to_string_pretty(cfg).map_err(|e| Error::Config(e.to_string()))?;
    std::fs::write(path, text)?;
    Ok(())
}
