use laplacian_growth::curve::{physical_contour, solve_double_point, TraceOptions};
use laplacian_growth::hodograph::HodographParams;

use crate::config::TraceConfig;
use crate::error::CliError;
use crate::output::{ensure_dir, write_contour};

pub fn run(cfg: &TraceConfig) -> Result<(), CliError> {
    cfg.validate()?;
    let params = HodographParams::new(cfg.p, cfg.q, cfg.mu, cfg.t)?;
    let curve = solve_double_point(&params.curve()?)?;
    let opts = TraceOptions { samples: cfg.samples, ..TraceOptions::with_scale(curve.scale()) };
    let contour = physical_contour(&curve, &opts)?;

    ensure_dir(&cfg.output)?;
    let curve_path = cfg.output.join("curve.json");
    std::fs::write(&curve_path, curve.to_json()? + "\n").map_err(|source| CliError::Io { path: curve_path.clone(), source })?;
    write_contour(&cfg.output.join("contour.csv"), &contour)?;
    let br = curve.branch_data()?;
    eprintln!(
        "h = {:?}, E1 = {}, E2 = {}, E3 = {}, area/pi = {}",
        curve.h,
        br.e1,
        br.e2,
        br.e3,
        contour.area() / std::f64::consts::PI
    );
    Ok(())
}
