//! Runnable checks of the structural identities, grouped into named suites.
//!
//! Every check reports the measured value next to its tolerance. Failures of
//! the underlying solvers are recorded in the report rather than propagated.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::conformal::{harmonic_moments, LaurentMap};
use crate::curve::{physical_contour, schwarz_two_sheeted, solve_double_point, CurveSchwarz, TraceOptions};
use crate::dynamics::{commutativity_test, evolve, EvolutionState, PumpSpec};
use crate::error::{Error, Result};
use crate::hodograph::{
    branch_point_rates_fd, newton_hodograph, pump_differential, schwarz_from_branch, sdz_decomposition_check,
    shift, solve_hodograph, string_rhs, whitham_velocity, Endpoint, GenusZeroDifferential, HodographParams, Pump,
};
use crate::schwarz::{extract_poles, residue_flow_check};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    /// Passes when the value is strictly below the tolerance.
    Below,
    /// Passes when the value is at least the tolerance.
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub bound: Bound,
    pub passed: bool,
}

impl Measurement {
    pub fn below(name: &str, value: f64, tolerance: f64) -> Self {
        Measurement { name: name.into(), value, tolerance, bound: Bound::Below, passed: value < tolerance }
    }

    pub fn at_least(name: &str, value: f64, tolerance: f64) -> Self {
        Measurement { name: name.into(), value, tolerance, bound: Bound::AtLeast, passed: value >= tolerance }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub id: u8,
    pub name: String,
    pub passed: bool,
    pub measurements: Vec<Measurement>,
    pub error: Option<String>,
}

impl CriterionReport {
    fn from_result(id: u8, name: &str, result: Result<Vec<Measurement>>) -> Self {
        match result {
            Ok(measurements) => CriterionReport {
                id,
                name: name.into(),
                passed: !measurements.is_empty() && measurements.iter().all(|m| m.passed),
                measurements,
                error: None,
            },
            Err(e) => CriterionReport { id, name: name.into(), passed: false, measurements: Vec::new(), error: Some(e.to_string()) },
        }
    }

    /// One line: `[PASS] 1 circle-law: r_error=1.2e-12 (< 1e-8) ...`.
    pub fn summary(&self) -> String {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        let mut line = format!("[{tag}] {} {}:", self.id, self.name);
        for m in &self.measurements {
            let op = match m.bound {
                Bound::Below => "<",
                Bound::AtLeast => ">=",
            };
            line.push_str(&format!(" {}={:.3e} ({op} {:.0e})", m.name, m.value, m.tolerance));
        }
        if let Some(e) = &self.error {
            line.push_str(&format!(" error: {e}"));
        }
        line
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub selector: String,
    pub passed: bool,
    pub criteria: Vec<CriterionReport>,
}

/// Suite names and the checks each runs.
pub const SELECTORS: &[(&str, &[u8])] = &[
    ("area-law", &[1, 2]),
    ("moments", &[3]),
    ("commutativity", &[4]),
    ("hodograph", &[5, 6]),
    ("string", &[7]),
    ("whitham", &[8]),
    ("residues", &[9]),
    ("differentials", &[10]),
    ("all", &[1, 2, 3, 4, 5, 6, 7, 8, 9, 10]),
];

pub fn selector_names() -> Vec<&'static str> {
    SELECTORS.iter().map(|(n, _)| *n).collect()
}

/// Runs every check of a named suite.
pub fn run_selector(selector: &str) -> Result<SuiteReport> {
    let ids = SELECTORS
        .iter()
        .find(|(n, _)| *n == selector)
        .map(|(_, ids)| *ids)
        .ok_or_else(|| {
            Error::InvalidInput(format!("unknown selector `{selector}`; expected one of: {}", selector_names().join(", ")))
        })?;
    let criteria: Vec<CriterionReport> = ids.iter().map(|&id| run_criterion(id)).collect();
    Ok(SuiteReport { selector: selector.into(), passed: criteria.iter().all(|c| c.passed), criteria })
}

pub fn run_criterion(id: u8) -> CriterionReport {
    match id {
        1 => CriterionReport::from_result(1, "circle-law", circle_law()),
        2 => CriterionReport::from_result(2, "ellipse-reduction", ellipse_reduction()),
        3 => CriterionReport::from_result(3, "moment-conservation", moment_conservation()),
        4 => CriterionReport::from_result(4, "flow-commutativity", flow_commutativity()),
        5 => CriterionReport::from_result(5, "hodograph-curve-agreement", hodograph_agreement()),
        6 => CriterionReport::from_result(6, "boundary-consistency", boundary_consistency()),
        7 => CriterionReport::from_result(7, "string-equation", string_equation()),
        8 => CriterionReport::from_result(8, "whitham-relations", whitham_relations()),
        9 => CriterionReport::from_result(9, "residue-dynamics", residue_dynamics()),
        10 => CriterionReport::from_result(10, "differential-identities", differential_identities()),
        _ => CriterionReport::from_result(id, "unknown", Err(Error::InvalidInput(format!("no check numbered {id}")))),
    }
}

fn circle_law() -> Result<Vec<Measurement>> {
    let start = Instant::now();
    let s = EvolutionState::new(LaurentMap::circle(1.0)?.with_order(32));
    let out = evolve(&s, &PumpSpec::infinity("infinity"), 3.0, 1e-2)?;
    // r² = r₀² + 2T
    let contour = out.map.boundary_contour(512)?;
    let radius_spread = contour
        .samples()
        .iter()
        .map(|z| (z.norm() - 2.0).abs())
        .fold(0.0, f64::max);
    Ok(vec![
        Measurement::below("r_error", (out.map.r() - 2.0).abs(), 1e-8),
        Measurement::below("boundary_radius_error", radius_spread, 1e-8),
        Measurement::below("runtime_s", start.elapsed().as_secs_f64(), 10.0),
    ])
}

fn ellipse_reduction() -> Result<Vec<Measurement>> {
    let m0 = LaurentMap::new(1.0, Complex64::new(0.0, 0.0), vec![Complex64::new(0.3, 0.0)])?.with_order(32);
    let ratio0 = m0.u()[0].re / m0.r();
    let area0 = m0.area() / PI;
    let pump = PumpSpec::infinity("infinity");
    let mut s = EvolutionState::new(m0);
    let (mut ratio_drift, mut area_drift, mut higher) = (0.0_f64, 0.0_f64, 0.0_f64);
    for k in 1..=10 {
        s = evolve(&s, &pump, 0.1, 1e-2)?;
        let t = 0.1 * k as f64;
        ratio_drift = ratio_drift.max((s.map.u()[0] / s.map.r() - ratio0).norm());
        area_drift = area_drift.max((s.map.area() / PI - area0 - t).abs());
        higher = higher.max(s.map.u()[1..].iter().map(|c| c.norm()).fold(0.0, f64::max));
    }
    Ok(vec![
        Measurement::below("u_over_r_drift", ratio_drift, 1e-7),
        Measurement::below("area_law_drift", area_drift, 1e-8),
        Measurement::below("higher_modes", higher, 1e-7),
    ])
}

fn moment_conservation() -> Result<Vec<Measurement>> {
    let start = Instant::now();
    let m0 = LaurentMap::random(8, 0.25, 42)?.with_order(32);
    let t0 = harmonic_moments(&m0, 5)?;
    let pump = PumpSpec::infinity("infinity");
    let mut s = EvolutionState::new(m0);
    let mut drift = 0.0_f64;
    for _ in 0..10 {
        s = evolve(&s, &pump, 0.1, 1e-2)?;
        let tk = harmonic_moments(&s.map, 5)?;
        drift = drift.max(tk.tk.iter().zip(&t0.tk).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max));
    }
    Ok(vec![
        Measurement::below("moment_drift", drift, 1e-6),
        Measurement::below("runtime_s", start.elapsed().as_secs_f64(), 30.0),
    ])
}

/// Defects of both pump orders at a step and at half that step.
pub fn commutativity_defects(h: f64) -> Result<(f64, f64)> {
    let s = EvolutionState::new(LaurentMap::circle(1.0)?.with_order(128));
    let a = PumpSpec::at("a", Complex64::new(2.5, 0.0))?;
    let inf = PumpSpec::infinity("infinity");
    let coarse = commutativity_test(&s, &a, &inf, 0.2, 0.2, h, 1024)?;
    let fine = commutativity_test(&s, &a, &inf, 0.2, 0.2, 0.5 * h, 1024)?;
    Ok((coarse.distance, fine.distance))
}

fn flow_commutativity() -> Result<Vec<Measurement>> {
    let (coarse, fine) = commutativity_defects(1e-3)?;
    Ok(vec![
        Measurement::below("hausdorff_distance", coarse, 1e-4),
        Measurement::at_least("halving_ratio", coarse / fine, 8.0),
    ])
}

/// The 50-point `(μ, T)` grid at `(p, q) = (2, −3)` used by the family checks.
pub fn family_grid() -> Vec<HodographParams> {
    let mut out = Vec::with_capacity(50);
    for i in 0..10 {
        for j in 0..5 {
            let mu = 0.05 * (i + 1) as f64;
            let t = 0.6 + 0.3 * j as f64;
            out.push(HodographParams::new(2.0, -3.0, mu, t).expect("grid parameters are valid"));
        }
    }
    out
}

/// Ten instances spread over the grid.
pub fn sample_instances() -> Vec<HodographParams> {
    family_grid().into_iter().step_by(5).collect()
}

fn hodograph_agreement() -> Result<Vec<Measurement>> {
    let start = Instant::now();
    let (mut residual, mut gap) = (0.0_f64, 0.0_f64);
    for params in family_grid() {
        let bp = solve_hodograph(&params, None)?;
        let r = crate::hodograph::hodograph_residual(&params, bp.e1, bp.e2)?;
        residual = residual.max(r[0].abs().max(r[1].abs()));
        let oracle = solve_double_point(&params.curve()?)?.branch_data()?;
        gap = gap.max((bp.e1 - oracle.e1.re).abs()).max((bp.e2 - oracle.e2.re).abs());
    }
    Ok(vec![
        Measurement::below("max_residual", residual, 1e-12),
        Measurement::below("max_oracle_gap", gap, 1e-8),
        Measurement::below("runtime_s", start.elapsed().as_secs_f64(), 5.0),
    ])
}

fn boundary_consistency() -> Result<Vec<Measurement>> {
    let (mut sup, mut area, mut extra) = (0.0_f64, 0.0_f64, 0.0_f64);
    for params in family_grid() {
        let c = solve_double_point(&params.curve()?)?;
        let comps = crate::curve::classify_section(&c, &TraceOptions::coarse(c.scale()))?;
        let physical = comps.iter().filter(|s| s.physical).count();
        extra = extra.max((physical as f64 - 1.0).abs());
        let contour = physical_contour(&c, &TraceOptions::with_scale(c.scale()))?;
        for z in contour.samples() {
            sup = sup.max((schwarz_two_sheeted(&c, *z, 1)? - z.conj()).norm());
        }
        area = area.max((contour.area() / PI - params.t).abs());
    }
    Ok(vec![
        Measurement::below("sup_schwarz_residual", sup, 1e-8),
        Measurement::below("area_over_pi_error", area, 1e-6),
        Measurement::below("physical_component_excess", extra, 0.5),
    ])
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn string_equation() -> Result<Vec<Measurement>> {
    let (mut t_err, mut p_err) = (0.0_f64, 0.0_f64);
    for params in sample_instances() {
        let bp = solve_hodograph(&params, None)?;
        for (pump, slot) in [(Pump::Infinity, &mut t_err), (Pump::P, &mut p_err)] {
            let rhs = string_rhs(&params, &bp, pump)?;
            let fd = branch_point_rates_fd(&params, &bp, pump, 1e-4)?;
            for k in 0..2 {
                *slot = slot.max(relative(rhs[k], fd[k]));
            }
        }
    }
    Ok(vec![
        Measurement::below("dE_dT_relative_error", t_err, 1e-5),
        Measurement::below("dE_dmu_relative_error", p_err, 1e-5),
    ])
}

/// Twenty points outside the droplet, away from the pole at `p`.
pub fn exterior_points(params: &HodographParams) -> Vec<Complex64> {
    let centre = Complex64::new(params.q + params.t / (params.p - params.q), 0.0);
    let radius = 2.5 * params.t.sqrt().max(0.5);
    (0..20)
        .map(|j| centre + Complex64::from_polar(radius, 2.0 * PI * (j as f64 + 0.25) / 20.0))
        .collect()
}

fn whitham_relations() -> Result<Vec<Measurement>> {
    let params = HodographParams::new(2.0, -3.0, 0.1, 1.0)?;
    let bp = solve_hodograph(&params, None)?;
    let q_sheet = solve_double_point(&params.curve()?)?.q_sheet;
    let v = whitham_velocity(&params, &bp, Pump::P, Pump::Infinity)?;
    let fd_p = branch_point_rates_fd(&params, &bp, Pump::P, 1e-4)?;
    let fd_t = branch_point_rates_fd(&params, &bp, Pump::Infinity, 1e-4)?;
    let velocity_err = (0..2).map(|k| relative(fd_p[k] / fd_t[k], v[k])).fold(0.0, f64::max);

    let delta = 1e-4;
    let mut flow_err = 0.0_f64;
    for pump in [Pump::Infinity, Pump::P] {
        let plus = shift(&params, pump, delta)?;
        let minus = shift(&params, pump, -delta)?;
        let bpp = newton_hodograph(&plus, (bp.e1, bp.e2))?;
        let bpm = newton_hodograph(&minus, (bp.e1, bp.e2))?;
        let w = pump_differential(pump, params.p.into(), params.q.into(), q_sheet, bp.e1.into(), bp.e2.into());
        for z in exterior_points(&params) {
            let ds = (schwarz_from_branch(&plus, bpp.e1, bpp.e2, z, 1)? - schwarz_from_branch(&minus, bpm.e1, bpm.e2, z, 1)?)
                / (2.0 * delta);
            let expected = -w.eval(z, 1)?;
            flow_err = flow_err.max((ds - expected).norm() / expected.norm());
        }
    }
    let cross = cross_derivative_defect(&params, 1e-3)?;
    Ok(vec![
        Measurement::below("velocity_ratio_relative_error", velocity_err, 1e-4),
        Measurement::below("schwarz_flow_relative_error", flow_err, 1e-4),
        Measurement::below("cross_derivative_relative_error", cross, 1e-3),
    ])
}

/// Relative mismatch of `∂_{T(p)} dW^(∞)` and `∂_{T(∞)} dW^(p)` by central differences over re-solved states.
pub fn cross_derivative_defect(params: &HodographParams, delta: f64) -> Result<f64> {
    let bp = solve_hodograph(params, None)?;
    let q_sheet = solve_double_point(&params.curve()?)?.q_sheet;
    let density = |pr: &HodographParams, pump: Pump, z: Complex64| -> Result<Complex64> {
        let b = newton_hodograph(pr, (bp.e1, bp.e2))?;
        pump_differential(pump, pr.p.into(), pr.q.into(), q_sheet, b.e1.into(), b.e2.into()).eval(z, 1)
    };
    let mut worst = 0.0_f64;
    for z in exterior_points(params) {
        let a = (density(&shift(params, Pump::P, delta)?, Pump::Infinity, z)?
            - density(&shift(params, Pump::P, -delta)?, Pump::Infinity, z)?)
            / (2.0 * delta);
        let b = (density(&shift(params, Pump::Infinity, delta)?, Pump::P, z)?
            - density(&shift(params, Pump::Infinity, -delta)?, Pump::P, z)?)
            / (2.0 * delta);
        worst = worst.max((a - b).norm() / a.norm().max(b.norm()));
    }
    Ok(worst)
}

/// Sheet-1 Schwarz function of a re-solved instance paired with its traced boundary.
pub fn curve_schwarz(params: &HodographParams) -> Result<CurveSchwarz> {
    let curve = solve_double_point(&params.curve()?)?;
    let boundary = physical_contour(&curve, &TraceOptions::with_scale(curve.scale()))?;
    Ok(CurveSchwarz { curve, boundary })
}

fn residue_dynamics() -> Result<Vec<Measurement>> {
    let delta = 1e-4;
    let (mut value, mut along_t, mut along_mu) = (0.0_f64, 0.0_f64, 0.0_f64);
    for params in sample_instances() {
        let hint = [Complex64::new(params.p + 1e-3, 1e-3)];
        let poles = |pr: &HodographParams| -> Result<_> { extract_poles(&curve_schwarz(pr)?, &hint) };
        let centre = poles(&params)?;
        value = value.max((centre.poles[0].residue + params.mu).norm());
        let t_drift = residue_flow_check(
            &poles(&params.with_mu_t(params.mu, params.t - delta)?)?,
            &centre,
            &poles(&params.with_mu_t(params.mu, params.t + delta)?)?,
            delta,
        )?;
        along_t = along_t.max(t_drift[0].residue_rate.norm());
        let mu_drift = residue_flow_check(
            &poles(&params.with_mu_t(params.mu - delta, params.t)?)?,
            &centre,
            &poles(&params.with_mu_t(params.mu + delta, params.t)?)?,
            delta,
        )?;
        along_mu = along_mu.max((mu_drift[0].residue_rate + 1.0).norm());
    }
    Ok(vec![
        Measurement::below("residue_error", value, 1e-8),
        Measurement::below("dres_dT", along_t, 1e-6),
        Measurement::below("dres_dmu_plus_one", along_mu, 1e-5),
    ])
}

fn differential_identities() -> Result<Vec<Measurement>> {
    let params = HodographParams::new(2.0, -3.0, 0.1, 1.0)?;
    let c = solve_double_point(&params.curve()?)?;
    let zs: Vec<Complex64> = (0..100)
        .map(|j| {
            let theta = 2.0 * PI * (j as f64 + 0.5) / 100.0;
            Complex64::new(-0.5, 0.0) + Complex64::from_polar(1.0 + 3.0 * (j % 7) as f64 / 7.0, theta)
        })
        .collect();
    let sdz = sdz_decomposition_check(&c, &zs)?;

    let br = c.branch_data()?;
    let (p, q) = (c.p, c.q);
    let mut residue_err = 0.0_f64;
    for (a, b) in [
        (Endpoint::finite(p, 1), Endpoint::infinity(2)),
        (Endpoint::infinity(1), Endpoint::finite(q, 1)),
        (Endpoint::finite(p, 2), Endpoint::finite(q, 1)),
    ] {
        let w = GenusZeroDifferential::dipole(br.e1, br.e2, a, b);
        residue_err = residue_err
            .max((small_circle_residue(&w, a)? - 1.0).norm())
            .max((small_circle_residue(&w, b)? + 1.0).norm());
    }

    let plus = GenusZeroDifferential::plus(br.e1, br.e2);
    let minus = GenusZeroDifferential::minus(br.e1, br.e2);
    let mut sum_err = 0.0_f64;
    for z in &zs {
        for sheet in [1, 2] {
            sum_err = sum_err.max((plus.eval(*z, sheet)? + minus.eval(*z, sheet)? - 1.0).norm());
        }
    }
    Ok(vec![
        Measurement::below("sdz_sup_residual", sdz.sup_residual, 1e-9),
        Measurement::below("dipole_residue_error", residue_err, 1e-10),
        Measurement::below("plus_minus_sum_ulps", sum_err / f64::EPSILON, 4.5),
    ])
}

/// Residue at an endpoint by trapezoid quadrature on a small circle, or a large one for infinity.
pub fn small_circle_residue(w: &GenusZeroDifferential, at: Endpoint) -> Result<Complex64> {
    let n = 512;
    let (centre, radius, orient) = match at.point {
        Some(a) => (a, 1e-3, 1.0),
        None => (Complex64::new(0.0, 0.0), 1e3, -1.0),
    };
    let mut total = Complex64::new(0.0, 0.0);
    for j in 0..n {
        let d = Complex64::from_polar(radius, 2.0 * PI * j as f64 / n as f64);
        total += w.eval(centre + d, at.sheet)? * d;
    }
    Ok(orient * total / n as f64)
}
