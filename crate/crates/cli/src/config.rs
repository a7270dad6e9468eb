//! Run configuration. One TOML file with a section per subcommand:
//!
//! ```toml
//! [simulate]
//! output = "run"
//! step = 0.01
//! samples = 512
//! snapshot_every = 0.5
//!
//! [simulate.initial]
//! kind = "circle"
//! r = 1.0
//!
//! [[simulate.schedule]]
//! label = "sink"
//! location = "infinity"
//! dT = 3.0
//!
//! [family]
//! p = 2.0
//! q = -3.0
//! mu = { start = 0.05, stop = 0.5, count = 10 }
//! T = [0.6, 0.9, 1.2]
//!
//! [trace]
//! p = 2.0
//! q = -3.0
//! mu = 0.1
//! T = 1.0
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilyConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<TraceConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    #[serde(default = "default_simulate_output")]
    pub output: PathBuf,
    /// Largest time step of the integrator.
    #[serde(default = "default_step")]
    pub step: f64,
    /// Boundary samples per snapshot contour (a power of two).
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Laurent truncation order used during the run.
    #[serde(default = "default_truncation")]
    pub truncation: usize,
    /// Total-time spacing of intermediate snapshots; by default only after each schedule entry.
    #[serde(default)]
    pub snapshot_every: Option<f64>,
    /// Number of harmonic moments logged per snapshot.
    #[serde(default = "default_moments")]
    pub moments: usize,
    pub initial: InitialShape,
    #[serde(default)]
    pub schedule: Vec<ScheduleEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialShape {
    Circle {
        r: f64,
    },
    Laurent {
        r: f64,
        #[serde(default)]
        a0: [f64; 2],
        #[serde(default)]
        u: Vec<[f64; 2]>,
    },
    Random {
        order: usize,
        spread: f64,
        seed: u64,
    },
    File {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleEntry {
    pub label: String,
    pub location: Location,
    #[serde(rename = "dT")]
    pub dt: f64,
}

/// `"infinity"` or a point `[x, y]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Location {
    Named(String),
    Point([f64; 2]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    #[serde(default = "default_family_output")]
    pub output: PathBuf,
    pub p: f64,
    pub q: f64,
    pub mu: Axis,
    #[serde(rename = "T")]
    pub t: Axis,
    /// Write the traced contour of every solved point.
    #[serde(default)]
    pub contours: bool,
    #[serde(default)]
    pub threads: Option<usize>,
}

/// Explicit values or an inclusive evenly spaced range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Axis {
    Values(Vec<f64>),
    Range { start: f64, stop: f64, count: usize },
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Axis::Values(v) => v.clone(),
            Axis::Range { start, count: 1, .. } => vec![*start],
            Axis::Range { start, stop, count } => {
                (0..*count).map(|k| start + (stop - start) * k as f64 / (*count - 1) as f64).collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceConfig {
    #[serde(default = "default_trace_output")]
    pub output: PathBuf,
    pub p: f64,
    pub q: f64,
    pub mu: f64,
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(default = "default_trace_samples")]
    pub samples: usize,
}

fn default_simulate_output() -> PathBuf {
    "simulate-out".into()
}

fn default_family_output() -> PathBuf {
    "family-out".into()
}

pub fn default_trace_output() -> PathBuf {
    "trace-out".into()
}

fn default_step() -> f64 {
    1e-2
}

fn default_samples() -> usize {
    512
}

pub fn default_trace_samples() -> usize {
    1024
}

fn default_truncation() -> usize {
    32
}

fn default_moments() -> usize {
    5
}

/// Reads a TOML config, or the `config` object embedded in a JSON manifest.
pub fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_owned(), source })?;
    let invalid = |message: String| CliError::Config { path: path.to_owned(), message };
    if path.extension().is_some_and(|e| e == "json") {
        #[derive(Deserialize)]
        struct Manifest {
            config: RunConfig,
        }
        let m: Manifest = serde_json::from_str(&text).map_err(|e| invalid(e.to_string()))?;
        return Ok(m.config);
    }
    toml::from_str(&text).map_err(|e| invalid(e.to_string()))
}

pub fn check(field: &str, ok: bool, detail: impl std::fmt::Display) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Invalid(format!("{field}: {detail}")))
    }
}

impl SimulateConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        check("simulate.step", self.step.is_finite() && self.step > 0.0, format!("must be positive, got {}", self.step))?;
        check(
            "simulate.samples",
            self.samples.is_power_of_two() && self.samples >= 4 * self.truncation.max(1),
            format!("must be a power of two and at least 4·truncation = {}, got {}", 4 * self.truncation, self.samples),
        )?;
        if let Some(every) = self.snapshot_every {
            check("simulate.snapshot_every", every.is_finite() && every > 0.0, format!("must be positive, got {every}"))?;
        }
        for (k, e) in self.schedule.iter().enumerate() {
            let field = format!("simulate.schedule[{k}]");
            check(&format!("{field}.dT"), e.dt.is_finite() && e.dt >= 0.0, format!("must be nonnegative, got {}", e.dt))?;
            check(&format!("{field}.label"), !e.label.is_empty(), "must not be empty")?;
            if let Location::Named(name) = &e.location {
                check(&format!("{field}.location"), name == "infinity", format!("expected \"infinity\" or [x, y], got {name:?}"))?;
            }
        }
        Ok(())
    }
}

impl FamilyConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        check("family.p", self.p.is_finite(), "must be finite")?;
        check("family.q", self.q.is_finite(), "must be finite")?;
        for (field, axis) in [("family.mu", &self.mu), ("family.T", &self.t)] {
            if let Axis::Range { count, .. } = axis {
                check(field, *count > 0, "range count must be positive")?;
            }
            let values = axis.values();
            check(field, !values.is_empty(), "grid axis is empty")?;
            check(field, values.iter().all(|v| v.is_finite()), "grid values must be finite")?;
        }
        if let Some(n) = self.threads {
            check("family.threads", n > 0, "must be positive")?;
        }
        Ok(())
    }
}

impl TraceConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        check("trace.samples", self.samples >= 16, format!("must be at least 16, got {}", self.samples))
    }
}
