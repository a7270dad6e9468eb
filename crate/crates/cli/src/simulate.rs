use std::collections::BTreeMap;

use laplacian_growth::conformal::{harmonic_moments, LaurentMap};
use laplacian_growth::dynamics::{evolve, validate_pump, EvolutionState, PumpSpec};
use num_complex::Complex64;
use serde::Serialize;

use crate::config::{InitialShape, Location, RunConfig, SimulateConfig};
use crate::error::CliError;
use crate::output::{ensure_dir, write_contour, write_json};

#[derive(Debug, Serialize)]
pub struct Snapshot {
    #[serde(rename = "T_total")]
    pub t_total: f64,
    pub times: BTreeMap<String, f64>,
    pub file: String,
    pub map_file: String,
    pub r: f64,
    pub area_over_pi: f64,
}

#[derive(Debug, Serialize)]
pub struct MomentRecord {
    #[serde(rename = "T_total")]
    pub t_total: f64,
    pub t0: f64,
    /// `t_k` for `k = 1..`, as `[re, im]`.
    pub tk: Vec<[f64; 2]>,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub config: RunConfig,
    pub status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
    pub snapshots: Vec<Snapshot>,
    pub moments: Vec<MomentRecord>,
}

fn initial_map(shape: &InitialShape) -> Result<LaurentMap, CliError> {
    let c = |v: [f64; 2]| Complex64::new(v[0], v[1]);
    Ok(match shape {
        InitialShape::Circle { r } => LaurentMap::circle(*r)?,
        InitialShape::Laurent { r, a0, u } => LaurentMap::new(*r, c(*a0), u.iter().copied().map(c).collect())?,
        InitialShape::Random { order, spread, seed } => LaurentMap::random(*order, *spread, *seed)?,
        InitialShape::File { path } => {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.clone(), source })?;
            LaurentMap::from_json(&text).map_err(|e| CliError::Config { path: path.clone(), message: e.to_string() })?
        }
    })
}

fn pumps(cfg: &SimulateConfig) -> Result<Vec<(PumpSpec, f64)>, CliError> {
    cfg.schedule
        .iter()
        .map(|e| {
            let pump = match e.location {
                Location::Named(_) => PumpSpec::infinity(e.label.clone()),
                Location::Point([x, y]) => PumpSpec::at(e.label.clone(), Complex64::new(x, y))?,
            };
            Ok((pump, e.dt))
        })
        .collect()
}

struct Recorder<'a> {
    cfg: &'a SimulateConfig,
    snapshots: Vec<Snapshot>,
    moments: Vec<MomentRecord>,
}

impl Recorder<'_> {
    fn record(&mut self, s: &EvolutionState) -> Result<(), CliError> {
        let index = self.snapshots.len();
        let file = format!("snapshot_{index:04}.csv");
        let map_file = format!("map_{index:04}.json");
        let contour = s.map.boundary_contour(self.cfg.samples)?;
        write_contour(&self.cfg.output.join(&file), &contour)?;
        write_json(&self.cfg.output.join(&map_file), &s.map)?;
        let t_total = s.total_time();
        let m = harmonic_moments(&s.map, self.cfg.moments)?;
        self.moments.push(MomentRecord { t_total, t0: m.t0, tk: m.tk.iter().map(|z| [z.re, z.im]).collect() });
        self.snapshots.push(Snapshot {
            t_total,
            times: s.times.iter().cloned().collect(),
            file,
            map_file,
            r: s.map.r(),
            area_over_pi: s.map.area() / std::f64::consts::PI,
        });
        Ok(())
    }
}

pub fn run(config: &RunConfig) -> Result<(), CliError> {
    let cfg = config
        .simulate
        .as_ref()
        .ok_or_else(|| CliError::Invalid("missing [simulate] section".into()))?;
    cfg.validate()?;
    let map = initial_map(&cfg.initial)?.with_order(cfg.truncation);
    let schedule = pumps(cfg)?;
    for (k, (pump, _)) in schedule.iter().enumerate() {
        validate_pump(&map, pump, cfg.samples)
            .map_err(|e| CliError::Invalid(format!("simulate.schedule[{k}].location: {e}")))?;
    }
    ensure_dir(&cfg.output)?;

    let mut rec = Recorder { cfg, snapshots: Vec::new(), moments: Vec::new() };
    let mut state = EvolutionState::new(map);
    rec.record(&state)?;
    let mut failure = None;
    'schedule: for (pump, dt) in &schedule {
        let chunks = match cfg.snapshot_every {
            Some(every) => ((dt / every) - 1e-9).ceil().max(1.0) as usize,
            None => 1,
        };
        for _ in 0..chunks {
            let advanced = evolve(&state, pump, dt / chunks as f64, cfg.step).map_err(CliError::from).and_then(|next| {
                state = next;
                rec.record(&state)
            });
            match advanced {
                Ok(()) => {}
                Err(CliError::Core(e)) if e.is_numerical() => {
                    failure = Some(e);
                    break 'schedule;
                }
                Err(e) => return Err(e),
            }
        }
    }

    let manifest = Manifest {
        config: config.clone(),
        status: if failure.is_some() { "failed" } else { "completed" },
        diagnostic: failure.as_ref().map(|e| e.to_string()),
        snapshots: rec.snapshots,
        moments: rec.moments,
    };
    write_json(&cfg.output.join("manifest.json"), &manifest)?;
    let last = manifest.snapshots.last().expect("initial snapshot is always recorded");
    eprintln!(
        "{} snapshots, T_total = {}, r = {}, written to {}",
        manifest.snapshots.len(),
        last.t_total,
        last.r,
        cfg.output.display()
    );
    match failure {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}
