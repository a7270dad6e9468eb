use std::collections::BTreeMap;

use laplacian_growth::curve::TraceOptions;
use laplacian_growth::hodograph::{family_row, FamilyRow, HodographParams, PointStatus};
use laplacian_growth::Contour;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{FamilyConfig, RunConfig};
use crate::error::CliError;
use crate::output::{ensure_dir, write_contour, write_json};

#[derive(Debug, Serialize)]
pub struct FamilyReport {
    pub config: RunConfig,
    pub rows: Vec<FamilyRow>,
    pub summary: BTreeMap<&'static str, usize>,
}

fn status_name(s: PointStatus) -> &'static str {
    match s {
        PointStatus::Solved => "solved",
        PointStatus::Bifurcation => "bifurcation",
        PointStatus::Infeasible => "infeasible",
        PointStatus::NotConverged => "not_converged",
    }
}

/// Solves one grid point; parameters outside the admissible family become infeasible rows.
fn solve_point(cfg: &FamilyConfig, mu: f64, t: f64) -> (FamilyRow, Option<Contour>) {
    match HodographParams::new(cfg.p, cfg.q, mu, t) {
        Ok(params) => family_row(&params, Some(&TraceOptions::with_scale((cfg.p - cfg.q).abs()))),
        Err(_) => (
            FamilyRow {
                mu,
                t,
                status: PointStatus::Infeasible,
                e1: None,
                e2: None,
                h: None,
                area_over_pi: None,
                residual: None,
            },
            None,
        ),
    }
}

pub fn run(config: &RunConfig) -> Result<(), CliError> {
    let cfg = config.family.as_ref().ok_or_else(|| CliError::Invalid("missing [family] section".into()))?;
    cfg.validate()?;
    let grid: Vec<(f64, f64)> = cfg
        .mu
        .values()
        .into_iter()
        .flat_map(|mu| cfg.t.values().into_iter().map(move |t| (mu, t)))
        .collect();

    let sweep = || grid.par_iter().map(|&(mu, t)| solve_point(cfg, mu, t)).collect::<Vec<_>>();
    let results = match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Invalid(format!("family.threads: {e}")))?
            .install(sweep),
        None => sweep(),
    };

    ensure_dir(&cfg.output)?;
    let mut summary: BTreeMap<&'static str, usize> =
        ["solved", "bifurcation", "infeasible", "not_converged"].into_iter().map(|k| (k, 0)).collect();
    let mut rows = Vec::with_capacity(results.len());
    for (index, (row, contour)) in results.into_iter().enumerate() {
        *summary.entry(status_name(row.status)).or_default() += 1;
        if let (true, Some(c)) = (cfg.contours, contour) {
            write_contour(&cfg.output.join(format!("contour_{index:04}.csv")), &c)?;
        }
        rows.push(row);
    }
    let report = FamilyReport { config: config.clone(), rows, summary };
    write_json(&cfg.output.join("family.json"), &report)?;
    let counts: Vec<String> = report.summary.iter().map(|(k, v)| format!("{k}={v}")).collect();
    eprintln!("{} grid points: {}", report.rows.len(), counts.join(" "));
    Ok(())
}
