//! Growth of the droplet under point sinks of oil.
//!
//! A sink at `a` (finite or at infinity) moves the boundary with normal velocity
//! proportional to the harmonic measure of `a`, normalized so that the droplet
//! area grows by `π` per unit of that sink's time coordinate. On the Laurent
//! coefficients this is `∂_T f = w f'(w) V(w)` where `V` is analytic outside the
//! unit disk, real at infinity, and `Re V = P/(2|f'|²)` on the circle with `P` the
//! Poisson kernel of `w(a)` (`P ≡ 1` for the sink at infinity).

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::conformal::{harmonic_moments, ExteriorMap, LaurentMap, MomentVector};
use crate::error::{Error, Result};
use crate::geometry::{hausdorff_distance, Contour, PlanePoint};
use crate::spectral;

/// `min |f'|` on the unit circle (relative to `r`) below which a run ends.
pub const CUSP_THRESHOLD: f64 = 1e-6;

/// Coefficient rates below this fraction of the largest rate are dropped. Zero
/// surface tension amplifies high modes, so unfiltered roundoff in the rates
/// eventually swamps the map.
pub const FILTER_LEVEL: f64 = 1e-14;

const MAX_VELOCITY_SAMPLES: usize = 1 << 16;
const MAX_HALVINGS: u32 = 10;
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Where oil is withdrawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PumpLocation {
    Infinity,
    Finite(PlanePoint),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PumpSpec {
    pub label: String,
    pub location: PumpLocation,
}

impl PumpSpec {
    pub fn infinity(label: impl Into<String>) -> Self {
        PumpSpec { label: label.into(), location: PumpLocation::Infinity }
    }

    pub fn at(label: impl Into<String>, z: Complex64) -> Result<Self> {
        Ok(PumpSpec { label: label.into(), location: PumpLocation::Finite(PlanePoint::new(z)?) })
    }
}

/// Time derivatives of the Laurent coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct MapRates {
    pub dr: f64,
    pub da0: Complex64,
    pub du: Vec<Complex64>,
}

impl MapRates {
    /// Rate of change of `area/π` implied by the coefficient rates.
    pub fn area_rate(&self, m: &LaurentMap) -> f64 {
        2.0 * m.r() * self.dr
            - m.u()
                .iter()
                .zip(&self.du)
                .enumerate()
                .map(|(i, (u, du))| 2.0 * (i + 1) as f64 * (u.conj() * du).re)
                .sum::<f64>()
    }

    /// `∂_T f(w)` from the rates.
    pub fn value(&self, w: Complex64) -> Complex64 {
        let mut tail = ZERO;
        let inv = 1.0 / w;
        for c in self.du.iter().rev() {
            tail = (tail + c) * inv;
        }
        self.dr * w + self.da0 + tail
    }
}

/// Rates for the sink at infinity.
pub fn pg_velocity(m: &LaurentMap) -> Result<MapRates> {
    herglotz_rates(m, |_| 1.0)
}

/// Rates for any pump; finite pumps need the exterior preimage `w(a)`.
pub fn pump_rates(m: &LaurentMap, pump: &PumpSpec, hint: Option<Complex64>) -> Result<MapRates> {
    match pump.location {
        PumpLocation::Infinity => pg_velocity(m),
        PumpLocation::Finite(a) => {
            let wa = exterior_preimage(m, a.value(), hint)?;
            herglotz_rates(m, |w| poisson_kernel(wa, w))
        }
    }
}

fn poisson_kernel(wa: Complex64, w: Complex64) -> f64 {
    (wa.norm_sqr() - 1.0) / (w - wa).norm_sqr()
}

/// Boundary samples of `w f'(w)`; on the circle `|w f'| = |f'|`.
fn boundary_wfp(m: &LaurentMap, n: usize) -> Vec<Complex64> {
    let mut coeffs = vec![ZERO; n];
    coeffs[1] = Complex64::new(m.r(), 0.0);
    for (i, c) in m.u().iter().enumerate() {
        coeffs[n - i - 1] = -((i + 1) as f64) * c;
    }
    spectral::synthesize(&coeffs)
}

fn herglotz_rates(m: &LaurentMap, weight: impl Fn(Complex64) -> f64) -> Result<MapRates> {
    let order = m.order();
    let mut n = (8 * (order + 2)).next_power_of_two().max(256);
    let g = loop {
        let wfp = boundary_wfp(m, n);
        let min = wfp.iter().map(|d| d.norm()).fold(f64::INFINITY, f64::min);
        if min < CUSP_THRESHOLD * m.r() {
            return Err(Error::Cusp(format!("min |f'| on the unit circle is {min:.3e}")));
        }
        let data: Vec<Complex64> = spectral::grid(n)
            .zip(&wfp)
            .map(|(t, d)| Complex64::new(weight(Complex64::from_polar(1.0, t)) / (2.0 * d.norm_sqr()), 0.0))
            .collect();
        let g = spectral::fourier_coefficients(&data);
        let tail = g[n / 4..=n / 2].iter().map(|c| c.norm()).fold(0.0, f64::max);
        if tail <= 1e-16 * g[0].norm() || n >= MAX_VELOCITY_SAMPLES {
            break g;
        }
        n *= 2;
    };
    // V(w) = g₀ + 2 Σ_{j≥1} g_{-j} w^{-j}
    let v: Vec<Complex64> = (0..=order + 1)
        .map(|j| {
            if j == 0 {
                Complex64::new(g[0].re, 0.0)
            } else {
                2.0 * spectral::mode(&g, -(j as i64))
            }
        })
        .collect();
    let r = m.r();
    let u = m.u();
    let mut du: Vec<Complex64> = (1..=order)
        .map(|k| {
            let mut acc = r * v[k + 1];
            for j in 1..=k {
                acc -= j as f64 * u[j - 1] * v[k - j];
            }
            acc
        })
        .collect();
    let largest = du.iter().map(|c| c.norm()).fold((r * v[0].re).abs(), f64::max);
    for c in du.iter_mut().filter(|c| c.norm() < FILTER_LEVEL * largest) {
        *c = ZERO;
    }
    Ok(MapRates { dr: r * v[0].re, da0: r * v[1], du })
}

/// Preimage of `z` in `|w| ≥ 1`; points inside the droplet are a domain error.
pub fn exterior_preimage(m: &LaurentMap, z: Complex64, hint: Option<Complex64>) -> Result<Complex64> {
    let n = (16 * m.order()).next_power_of_two().max(512);
    let boundary = m.boundary_samples(n);
    let (dist, _) = nearest(&boundary, z);
    let scale = m.r().max(z.norm());
    if dist > 1e-9 * scale && winding(&boundary, z) != 0 {
        return Err(Error::Domain(format!("point {z} lies inside the droplet")));
    }
    let w = m.invert(z, hint)?;
    if w.norm() < 1.0 - 1e-9 {
        return Err(Error::Inversion { z, last: w });
    }
    Ok(w)
}

fn nearest(samples: &[Complex64], z: Complex64) -> (f64, usize) {
    let n = samples.len();
    (0..n)
        .map(|j| (crate::geometry::segment_distance(z, samples[j], samples[(j + 1) % n]), j))
        .fold((f64::INFINITY, 0), |a, b| if b.0 < a.0 { b } else { a })
}

fn winding(samples: &[Complex64], z: Complex64) -> i64 {
    let n = samples.len();
    let total: f64 = (0..n).map(|j| ((samples[(j + 1) % n] - z) / (samples[j] - z)).arg()).sum();
    (total / (2.0 * PI)).round() as i64
}

/// Dirichlet Green function of the oil domain with logarithmic pole at `a`.
pub fn green_function(m: &LaurentMap, a: PlanePoint, z: PlanePoint) -> Result<f64> {
    let wa = exterior_preimage(m, a.value(), None)?;
    let wz = exterior_preimage(m, z.value(), None)?;
    Ok(((wz - wa) / (wz * wa.conj() - 1.0)).norm().ln())
}

/// Normal velocity at `f(e^{2πij/n})`, positive outward from the droplet.
pub fn pump_velocity_field(m: &LaurentMap, pump: &PumpSpec, n: usize) -> Result<Vec<f64>> {
    let wa = match pump.location {
        PumpLocation::Infinity => None,
        PumpLocation::Finite(a) => Some(exterior_preimage(m, a.value(), None)?),
    };
    Ok(spectral::grid(n)
        .map(|t| {
            let w = Complex64::from_polar(1.0, t);
            let p = wa.map_or(1.0, |wa| poisson_kernel(wa, w));
            p / (2.0 * m.derivative(w).norm())
        })
        .collect())
}

/// Rejects finite pumps inside the droplet or within three sample spacings of it.
pub fn validate_pump(m: &LaurentMap, pump: &PumpSpec, n: usize) -> Result<()> {
    let PumpLocation::Finite(a) = pump.location else {
        return Ok(());
    };
    let a = a.value();
    let boundary = m.boundary_samples(n);
    let (dist, _) = nearest(&boundary, a);
    let perimeter: f64 = (0..n).map(|j| (boundary[(j + 1) % n] - boundary[j]).norm()).sum();
    let spacing = perimeter / n as f64;
    if winding(&boundary, a) != 0 {
        return Err(Error::InvalidInput(format!("pump `{}` at {a} lies inside the droplet", pump.label)));
    }
    if dist <= 3.0 * spacing {
        return Err(Error::InvalidInput(format!(
            "pump `{}` at {a} is {dist:.3e} from the contour (minimum {:.3e})",
            pump.label,
            3.0 * spacing
        )));
    }
    Ok(())
}

/// Per-step diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub label: String,
    pub dt: f64,
    /// `min |f'|` on the unit circle after the step.
    pub margin: f64,
    /// `|u_K|/r` after the step.
    pub tail: f64,
}

/// Map plus accumulated pump time coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionState {
    pub map: LaurentMap,
    pub times: Vec<(String, f64)>,
    pub step_log: Vec<StepRecord>,
}

impl EvolutionState {
    pub fn new(map: LaurentMap) -> Self {
        EvolutionState { map, times: Vec::new(), step_log: Vec::new() }
    }

    pub fn time(&self, label: &str) -> f64 {
        self.times.iter().find(|(l, _)| l == label).map_or(0.0, |(_, t)| *t)
    }

    /// Sum of all pump time coordinates.
    pub fn total_time(&self) -> f64 {
        self.times.iter().map(|(_, t)| t).sum()
    }

    fn advance_time(&mut self, label: &str, dt: f64) {
        match self.times.iter_mut().find(|(l, _)| l == label) {
            Some((_, t)) => *t += dt,
            None => self.times.push((label.to_string(), dt)),
        }
    }
}

fn apply(m: &LaurentMap, rates: &MapRates, dt: f64) -> Result<LaurentMap> {
    LaurentMap::new(
        m.r() + dt * rates.dr,
        m.a0() + dt * rates.da0,
        m.u().iter().zip(&rates.du).map(|(u, du)| u + dt * du).collect(),
    )
    .map_err(|_| Error::Cusp("conformal radius left the admissible range".into()))
}

fn rk4(m: &LaurentMap, pump: &PumpSpec, dt: f64, hint: &mut Option<Complex64>) -> Result<LaurentMap> {
    if let PumpLocation::Finite(a) = pump.location {
        *hint = Some(exterior_preimage(m, a.value(), *hint)?);
    }
    // stage maps stay close to `m`, so Newton from the previous preimage suffices
    let rates = |x: &LaurentMap, hint: &mut Option<Complex64>| -> Result<MapRates> {
        match pump.location {
            PumpLocation::Infinity => pg_velocity(x),
            PumpLocation::Finite(a) => {
                let wa = x.invert(a.value(), *hint)?;
                if wa.norm() <= 1.0 {
                    return Err(Error::Cusp(format!("pump at {} was swallowed by the droplet", a.value())));
                }
                *hint = Some(wa);
                herglotz_rates(x, |w| poisson_kernel(wa, w))
            }
        }
    };
    let k1 = rates(m, hint)?;
    let k2 = rates(&apply(m, &k1, dt / 2.0)?, hint)?;
    let k3 = rates(&apply(m, &k2, dt / 2.0)?, hint)?;
    let k4 = rates(&apply(m, &k3, dt)?, hint)?;
    let combine = |a: f64, b: f64, c: f64, d: f64| (a + 2.0 * b + 2.0 * c + d) / 6.0;
    let sum = MapRates {
        dr: combine(k1.dr, k2.dr, k3.dr, k4.dr),
        da0: (k1.da0 + 2.0 * k2.da0 + 2.0 * k3.da0 + k4.da0) / 6.0,
        du: (0..m.order())
            .map(|i| (k1.du[i] + 2.0 * k2.du[i] + 2.0 * k3.du[i] + k4.du[i]) / 6.0)
            .collect(),
    };
    apply(m, &sum, dt)
}

/// One RK4 step of size `dt` in the pump's time coordinate, halving adaptively
/// when the univalence margin would drop below [`CUSP_THRESHOLD`].
pub fn step(s: &EvolutionState, pump: &PumpSpec, dt: f64) -> Result<EvolutionState> {
    if !(dt.is_finite() && dt >= 0.0) {
        return Err(Error::InvalidInput(format!("time step must be nonnegative, got {dt}")));
    }
    if dt == 0.0 {
        return Ok(s.clone());
    }
    let mut hint = None;
    let map = advance(&s.map, pump, dt, 0, &mut hint)?;
    let mut next = s.clone();
    next.step_log.push(StepRecord {
        label: pump.label.clone(),
        dt,
        margin: map.univalence_margin(),
        tail: map.u().last().map_or(0.0, |c| c.norm() / map.r()),
    });
    next.map = map;
    next.advance_time(&pump.label, dt);
    Ok(next)
}

fn advance(m: &LaurentMap, pump: &PumpSpec, dt: f64, depth: u32, hint: &mut Option<Complex64>) -> Result<LaurentMap> {
    let attempt = rk4(m, pump, dt, hint).and_then(|next| {
        let margin = next.univalence_margin();
        let gained = (next.area() - m.area()) / PI;
        if margin < CUSP_THRESHOLD * next.r() {
            Err(Error::Cusp(format!("min |f'| on the unit circle is {margin:.3e}")))
        } else if (gained - dt).abs() > 1e-3 * dt + 1e-12 * m.area() {
            Err(Error::Cusp(format!("area gain {gained:.6e} departs from the step {dt:.6e}")))
        } else {
            Ok(next)
        }
    });
    match attempt {
        Ok(next) => Ok(next),
        Err(Error::Cusp(msg)) if depth >= MAX_HALVINGS => Err(Error::Cusp(format!(
            "{msg} after {depth} step halvings (step {dt:.3e})"
        ))),
        Err(Error::Cusp(_)) => {
            let mid = advance(m, pump, dt / 2.0, depth + 1, hint)?;
            advance(&mid, pump, dt / 2.0, depth + 1, hint)
        }
        Err(e) => Err(e),
    }
}

/// Integrates `total` units of the pump's time with steps no larger than `h`.
pub fn evolve(s: &EvolutionState, pump: &PumpSpec, total: f64, h: f64) -> Result<EvolutionState> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidInput(format!("step size must be positive, got {h}")));
    }
    if !(total.is_finite() && total >= 0.0) {
        return Err(Error::InvalidInput(format!("duration must be nonnegative, got {total}")));
    }
    let steps = (total / h - 1e-9).ceil().max(0.0) as usize;
    let mut state = s.clone();
    for _ in 0..steps {
        state = step(&state, pump, total / steps as f64)?;
    }
    Ok(state)
}

/// Outcome of running two pumps in both orders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommutativityReport {
    pub distance: f64,
    pub moment_difference: f64,
}

/// Runs A then B and B then A, and compares the final boundaries sampled at `n` points.
pub fn commutativity_test(
    s: &EvolutionState,
    pump_a: &PumpSpec,
    pump_b: &PumpSpec,
    dt_a: f64,
    dt_b: f64,
    h: f64,
    n: usize,
) -> Result<CommutativityReport> {
    let tag = |order: &str, e: Error| match e {
        Error::Cusp(m) => Error::Cusp(format!("{order}: {m}")),
        Error::NotConverged(m) => Error::NotConverged(format!("{order}: {m}")),
        other => other,
    };
    let ab = evolve(s, pump_a, dt_a, h)
        .and_then(|x| evolve(&x, pump_b, dt_b, h))
        .map_err(|e| tag("A then B", e))?;
    let ba = evolve(s, pump_b, dt_b, h)
        .and_then(|x| evolve(&x, pump_a, dt_a, h))
        .map_err(|e| tag("B then A", e))?;
    let c1 = ab.map.boundary_contour(n)?;
    let c2 = ba.map.boundary_contour(n)?;
    let m1 = moments_or_none(&ab.map);
    let m2 = moments_or_none(&ba.map);
    let moment_difference = match (m1, m2) {
        (Some(a), Some(b)) => a.distance(&b),
        _ => f64::NAN,
    };
    Ok(CommutativityReport { distance: hausdorff_distance(&c1, &c2), moment_difference })
}

fn moments_or_none(m: &LaurentMap) -> Option<MomentVector> {
    harmonic_moments(m, 5).ok()
}

/// Boundary of the state's map with the default resolution for its order.
pub fn state_contour(s: &EvolutionState, n: usize) -> Result<Contour> {
    s.map.boundary_contour(n)
}
