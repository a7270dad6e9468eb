//! Branch-point dynamics of the one-pole-per-sheet family.
//!
//! The Riemann invariants are the simple branch points `E1 < E2` of the Schwarz
//! function. They are fixed by the two hodograph relations `f2(E1) = f2(E2) = 0`
//! and move under the pumps at infinity and at `p` with rates read off the
//! genus-zero Abelian differentials of the branch curve `y² = (z−E1)(z−E2)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::curve::{
    build_curve, max_section_curvature, physical_component, physical_contour, schwarz_two_sheeted,
    solve_double_point, sqrt_p2, CurveN1, TraceOptions,
};
use crate::error::{Error, Result};

/// Newton stops when both residuals are below this.
pub const RESIDUAL_TOLERANCE: f64 = 1e-12;
pub const MAX_ITERATIONS: usize = 50;
/// Relative smallest singular value of the Jacobian below which a point counts as a bifurcation.
pub const SINGULAR_TOLERANCE: f64 = 1e-10;
/// Branch coefficients smaller than this make the rates ill defined.
pub const ALPHA_TOLERANCE: f64 = 1e-10;

/// Real-family parameters `(p, q, μ, T)` with `ν = μ − T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HodographParams {
    pub p: f64,
    pub q: f64,
    pub mu: f64,
    #[serde(rename = "T")]
    pub t: f64,
}

impl HodographParams {
    pub fn new(p: f64, q: f64, mu: f64, t: f64) -> Result<Self> {
        if ![p, q, mu, t].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput("p, q, mu and T must be finite".into()));
        }
        if p <= q {
            return Err(Error::InvalidInput(format!("need q < p, got p = {p}, q = {q}")));
        }
        if mu <= 0.0 {
            return Err(Error::InvalidInput(format!("mu must be positive, got {mu}")));
        }
        if t <= 0.0 {
            return Err(Error::InvalidInput(format!("T must be positive, got {t}")));
        }
        if mu == t {
            return Err(Error::InvalidInput("mu = T leaves no pole at q (nu = 0)".into()));
        }
        Ok(HodographParams { p, q, mu, t })
    }

    pub fn nu(&self) -> f64 {
        self.mu - self.t
    }

    pub fn with_mu_t(&self, mu: f64, t: f64) -> Result<Self> {
        HodographParams::new(self.p, self.q, mu, t)
    }

    /// The algebraic curve with the same pole data, `h` still undetermined.
    pub fn curve(&self) -> Result<CurveN1> {
        let r = |x: f64| Complex64::new(x, 0.0);
        build_curve(r(self.p), r(self.q), r(self.mu), r(self.nu()))
    }
}

/// Riemann invariants and their branch coefficients `S ≈ … + α_k (z−E_k)^{1/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchPoints {
    pub e1: f64,
    pub e2: f64,
    pub alpha: [f64; 2],
}

impl BranchPoints {
    pub fn get(&self, k: usize) -> f64 {
        if k == 0 {
            self.e1
        } else {
            self.e2
        }
    }
}

/// Endpoint of a dipole differential; `None` stands for infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Endpoint {
    pub point: Option<Complex64>,
    pub sheet: i8,
}

impl Endpoint {
    pub fn finite(point: Complex64, sheet: i8) -> Self {
        Endpoint { point: Some(point), sheet }
    }

    pub fn infinity(sheet: i8) -> Self {
        Endpoint { point: None, sheet }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DifferentialKind {
    /// Second-order pole at infinity on sheet 1.
    Plus,
    /// Second-order pole at infinity on sheet 2.
    Minus,
    /// Simple poles with residue `+1` at the first endpoint and `−1` at the second.
    Dipole(Endpoint, Endpoint),
}

/// A meromorphic differential on the genus-zero curve `y² = (z−E1)(z−E2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenusZeroDifferential {
    pub kind: DifferentialKind,
    pub e1: Complex64,
    pub e2: Complex64,
}

impl GenusZeroDifferential {
    pub fn plus(e1: Complex64, e2: Complex64) -> Self {
        GenusZeroDifferential { kind: DifferentialKind::Plus, e1, e2 }
    }

    pub fn minus(e1: Complex64, e2: Complex64) -> Self {
        GenusZeroDifferential { kind: DifferentialKind::Minus, e1, e2 }
    }

    pub fn dipole(e1: Complex64, e2: Complex64, a: Endpoint, b: Endpoint) -> Self {
        GenusZeroDifferential { kind: DifferentialKind::Dipole(a, b), e1, e2 }
    }

    fn midpoint(&self) -> Complex64 {
        0.5 * (self.e1 + self.e2)
    }

    /// `(y + y_a)/(z − a)` with its limit `−ε_s` for an endpoint at infinity on sheet `s`.
    fn endpoint_term(&self, end: &Endpoint, z: Complex64, y: Complex64) -> Result<Complex64> {
        match end.point {
            None => Ok(Complex64::new(-sign(end.sheet), 0.0)),
            Some(a) => {
                if z == a {
                    return Err(Error::Singular(format!("{z} is a pole of the differential")));
                }
                Ok((y + sqrt_p2(self.e1, self.e2, a, end.sheet)?) / (z - a))
            }
        }
    }

    /// Density with respect to `dz` at `z` on the given sheet.
    pub fn eval(&self, z: Complex64, sheet: i8) -> Result<Complex64> {
        if z == self.e1 || z == self.e2 {
            return Err(Error::Singular(format!("{z} is a branch point")));
        }
        let y = sqrt_p2(self.e1, self.e2, z, sheet)?;
        match self.kind {
            DifferentialKind::Plus => Ok(0.5 + (z - self.midpoint()) / (2.0 * y)),
            DifferentialKind::Minus => Ok(0.5 - (z - self.midpoint()) / (2.0 * y)),
            DifferentialKind::Dipole(a, b) => {
                Ok((self.endpoint_term(&a, z, y)? - self.endpoint_term(&b, z, y)?) / (2.0 * y))
            }
        }
    }

    /// Coefficient `c` of the `1/y` part of the density at the branch point `E_k`.
    pub fn singular_coefficient(&self, k: usize) -> Result<Complex64> {
        let ek = if k == 0 { self.e1 } else { self.e2 };
        let y = Complex64::new(0.0, 0.0);
        match self.kind {
            DifferentialKind::Plus => Ok(0.5 * (ek - self.midpoint())),
            DifferentialKind::Minus => Ok(-0.5 * (ek - self.midpoint())),
            DifferentialKind::Dipole(a, b) => {
                Ok(0.5 * (self.endpoint_term(&a, ek, y)? - self.endpoint_term(&b, ek, y)?))
            }
        }
    }
}

fn sign(sheet: i8) -> f64 {
    if sheet == 1 {
        1.0
    } else {
        -1.0
    }
}

/// The two independent pumps of the family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pump {
    /// Sink at infinity; its time is `T` at fixed `μ`.
    Infinity,
    /// Source at `p`; its time is `μ` at fixed `ν`.
    P,
}

/// `dW^(∞) = dW_{∞⁽¹⁾, q⁽ˢ⁾}` and `dW^(p) = dW_{p⁽¹⁾, ∞⁽²⁾}`, where `s` is the sheet holding the pole at `q`.
pub fn pump_differential(pump: Pump, p: Complex64, q: Complex64, q_sheet: i8, e1: Complex64, e2: Complex64) -> GenusZeroDifferential {
    match pump {
        Pump::Infinity => GenusZeroDifferential::dipole(e1, e2, Endpoint::infinity(1), Endpoint::finite(q, q_sheet)),
        Pump::P => GenusZeroDifferential::dipole(e1, e2, Endpoint::finite(p, 1), Endpoint::infinity(2)),
    }
}

/// `(f1, f2)` with `S = f1 + f2/√P2` on sheet 1, built from the pole data and the branch points only.
pub fn split_from_branch(
    p: Complex64,
    q: Complex64,
    mu: Complex64,
    nu: Complex64,
    q_sheet: i8,
    e1: Complex64,
    e2: Complex64,
    z: Complex64,
) -> Result<(Complex64, Complex64)> {
    if z == p || z == q {
        return Err(Error::Singular(format!("{z} is a pole of the Schwarz function")));
    }
    let m = 0.5 * (e1 + e2);
    let f1 = 0.5 * (p.conj() + q.conj() + mu / (p - z) + nu / (q - z));
    let yp = sqrt_p2(e1, e2, p, 1)?;
    let yq = sqrt_p2(e1, e2, q, q_sheet)?;
    let f2 = 0.5
        * ((q.conj() - p.conj()) * (z - m) + mu.conj() - nu.conj() - mu * yp / (z - p) - nu * yq / (z - q));
    Ok((f1, f2))
}

/// `f2'(z)` for the same splitting.
pub fn f2_derivative(
    p: Complex64,
    q: Complex64,
    mu: Complex64,
    nu: Complex64,
    q_sheet: i8,
    e1: Complex64,
    e2: Complex64,
    z: Complex64,
) -> Result<Complex64> {
    let yp = sqrt_p2(e1, e2, p, 1)?;
    let yq = sqrt_p2(e1, e2, q, q_sheet)?;
    Ok(0.5 * ((q.conj() - p.conj()) + mu * yp / (z - p).powi(2) + nu * yq / (z - q).powi(2)))
}

/// Splitting of a solved curve's Schwarz function.
pub fn f1_f2_split(c: &CurveN1, z: Complex64) -> Result<(Complex64, Complex64)> {
    let br = c.branch_data()?;
    split_from_branch(c.p, c.q, c.mu, c.nu, c.q_sheet, br.e1, br.e2, z)
}

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Sheet-1 (or sheet-2) Schwarz function assembled from hodograph data.
pub fn schwarz_from_branch(params: &HodographParams, e1: f64, e2: f64, z: Complex64, sheet: i8) -> Result<Complex64> {
    let (f1, f2) = split_from_branch(
        real(params.p),
        real(params.q),
        real(params.mu),
        real(params.nu()),
        1,
        real(e1),
        real(e2),
        z,
    )?;
    Ok(f1 + f2 / sqrt_p2(real(e1), real(e2), z, sheet)?)
}

fn check_order(params: &HodographParams, e1: f64, e2: f64) -> Result<()> {
    if params.q < e1 && e1 <= e2 && e2 < params.p {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "branch points must satisfy q < E1 <= E2 < p, got q = {}, E1 = {e1}, E2 = {e2}, p = {}",
            params.q, params.p
        )))
    }
}

/// Residuals `r_k = −2 f2(E_k)` of the two hodograph relations.
pub fn hodograph_residual(params: &HodographParams, e1: f64, e2: f64) -> Result<[f64; 2]> {
    check_order(params, e1, e2)?;
    let HodographParams { p, q, mu, t } = *params;
    let a = ((p - e2) / (p - e1)).sqrt();
    let b = ((e2 - q) / (e1 - q)).sqrt();
    let c = ((p - e1) / (p - e2)).sqrt();
    let d = ((e1 - q) / (e2 - q)).sqrt();
    let gap = 0.5 * (e2 - e1) * (p - q);
    Ok([-mu * (a + b) + t * (b - 1.0) - gap, -mu * (c + d) + t * (d - 1.0) + gap])
}

/// Analytic Jacobian `∂r_i/∂E_j`.
pub fn hodograph_jacobian(params: &HodographParams, e1: f64, e2: f64) -> Result<[[f64; 2]; 2]> {
    check_order(params, e1, e2)?;
    let HodographParams { p, q, mu, t } = *params;
    let a = ((p - e2) / (p - e1)).sqrt();
    let b = ((e2 - q) / (e1 - q)).sqrt();
    let c = ((p - e1) / (p - e2)).sqrt();
    let d = ((e1 - q) / (e2 - q)).sqrt();
    let (a1, a2) = (a / (2.0 * (p - e1)), -a / (2.0 * (p - e2)));
    let (b1, b2) = (-b / (2.0 * (e1 - q)), b / (2.0 * (e2 - q)));
    let (c1, c2) = (-c / (2.0 * (p - e1)), c / (2.0 * (p - e2)));
    let (d1, d2) = (d / (2.0 * (e1 - q)), -d / (2.0 * (e2 - q)));
    let half = 0.5 * (p - q);
    Ok([
        [-mu * (a1 + b1) + t * b1 + half, -mu * (a2 + b2) + t * b2 - half],
        [-mu * (c1 + d1) + t * d1 - half, -mu * (c2 + d2) + t * d2 + half],
    ])
}

/// Singular values of a 2×2 matrix, largest first.
pub fn singular_values(j: &[[f64; 2]; 2]) -> [f64; 2] {
    let m = nalgebra::Matrix2::new(j[0][0], j[0][1], j[1][0], j[1][1]);
    let sv = m.singular_values();
    [sv[0].max(sv[1]), sv[0].min(sv[1])]
}

/// Small-`μ` asymptotics: the cut collapses to `q + T/(p−q)` with half-width `2(T/(p−q))√(μ/T)`.
pub fn asymptotic_seed(params: &HodographParams) -> (f64, f64) {
    let x = params.t / (params.p - params.q);
    let delta = 2.0 * x * (params.mu / params.t).sqrt();
    let centre = params.q + x;
    let lo = params.q + 0.5 * (centre - params.q);
    let hi = 0.5 * (centre + params.p);
    ((centre - delta).max(lo), (centre + delta).min(hi))
}

/// Damped Newton from the given seed.
pub fn newton_hodograph(params: &HodographParams, seed: (f64, f64)) -> Result<BranchPoints> {
    let (mut e1, mut e2) = seed;
    let mut r = hodograph_residual(params, e1, e2)?;
    let mut trace = Vec::new();
    for _ in 0..MAX_ITERATIONS {
        let norm = r[0].abs().max(r[1].abs());
        trace.push(norm);
        if norm < RESIDUAL_TOLERANCE {
            let (e1, e2) = polish(params, e1, e2, norm);
            return finish(params, e1, e2);
        }
        let j = hodograph_jacobian(params, e1, e2)?;
        let [smax, smin] = singular_values(&j);
        if smin <= SINGULAR_TOLERANCE * smax {
            return Err(Error::Bifurcation { sigma_min: smin / smax });
        }
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        let d1 = (j[1][1] * r[0] - j[0][1] * r[1]) / det;
        let d2 = (j[0][0] * r[1] - j[1][0] * r[0]) / det;
        let mut lambda = 1.0;
        loop {
            let (n1, n2) = (e1 - lambda * d1, e2 - lambda * d2);
            if let Ok(rn) = hodograph_residual(params, n1, n2) {
                if rn[0].abs().max(rn[1].abs()) < norm || lambda < 1e-3 {
                    e1 = n1;
                    e2 = n2;
                    r = rn;
                    break;
                }
            }
            lambda *= 0.5;
            if lambda < 1e-6 {
                return Err(Error::NotConverged(format!(
                    "no admissible Newton step from E = ({e1}, {e2}); residual history {trace:?}"
                )));
            }
        }
    }
    if r[0].abs().max(r[1].abs()) < RESIDUAL_TOLERANCE {
        return finish(params, e1, e2);
    }
    Err(Error::NotConverged(format!(
        "hodograph Newton did not converge in {MAX_ITERATIONS} iterations from seed {seed:?}; residual history {trace:?}"
    )))
}

/// One extra full Newton step, kept only if it lowers the residual.
fn polish(params: &HodographParams, e1: f64, e2: f64, norm: f64) -> (f64, f64) {
    let step = || -> Result<(f64, f64, f64)> {
        let r = hodograph_residual(params, e1, e2)?;
        let j = hodograph_jacobian(params, e1, e2)?;
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        let n1 = e1 - (j[1][1] * r[0] - j[0][1] * r[1]) / det;
        let n2 = e2 - (j[0][0] * r[1] - j[1][0] * r[0]) / det;
        let rn = hodograph_residual(params, n1, n2)?;
        Ok((n1, n2, rn[0].abs().max(rn[1].abs())))
    };
    match step() {
        Ok((n1, n2, rn)) if rn < norm => (n1, n2),
        _ => (e1, e2),
    }
}

fn finish(params: &HodographParams, e1: f64, e2: f64) -> Result<BranchPoints> {
    let j = hodograph_jacobian(params, e1, e2)?;
    let [smax, smin] = singular_values(&j);
    if smin <= SINGULAR_TOLERANCE * smax {
        return Err(Error::Bifurcation { sigma_min: smin / smax });
    }
    let mut alpha = [0.0; 2];
    for (k, ek) in [e1, e2].into_iter().enumerate() {
        let other = if k == 0 { e2 } else { e1 };
        let f2p = f2_derivative(
            real(params.p),
            real(params.q),
            real(params.mu),
            real(params.nu()),
            1,
            real(e1),
            real(e2),
            real(ek),
        )?;
        alpha[k] = f2p.re / (ek - other).abs().sqrt();
    }
    Ok(BranchPoints { e1, e2, alpha })
}

/// Steps of the small-`μ` continuation used for the automatic seed.
const CONTINUATION_STEPS: usize = 12;

/// Solves the hodograph relations; without a seed, continues in `μ` from the disk limit at fixed `T`.
pub fn solve_hodograph(params: &HodographParams, seed: Option<(f64, f64)>) -> Result<BranchPoints> {
    if let Some(s) = seed {
        return newton_hodograph(params, s);
    }
    let mu_start = (params.mu * 1e-3).min(params.t * 1e-3);
    let start = params.with_mu_t(mu_start, params.t)?;
    let mut bp = newton_hodograph(&start, asymptotic_seed(&start))?;
    let ratio = (params.mu / mu_start).powf(1.0 / CONTINUATION_STEPS as f64);
    let mut mu = mu_start;
    for _ in 0..CONTINUATION_STEPS {
        mu *= ratio;
        let target = params.with_mu_t(mu, params.t)?;
        // the cut width scales like √μ, so the predictor rescales it
        let centre = 0.5 * (bp.e1 + bp.e2);
        let half = 0.5 * (bp.e2 - bp.e1) * ratio.sqrt();
        bp = newton_hodograph(&target, (centre - half, centre + half))
            .or_else(|_| newton_hodograph(&target, (bp.e1, bp.e2)))?;
    }
    newton_hodograph(params, (bp.e1, bp.e2))
}

/// Solutions along a path of `T` values at fixed `μ`, each seeded by the previous one.
pub fn continue_in_t(params: &HodographParams, ts: &[f64]) -> Result<Vec<BranchPoints>> {
    let mut out: Vec<BranchPoints> = Vec::with_capacity(ts.len());
    for &t in ts {
        let target = params.with_mu_t(params.mu, t)?;
        let bp = match out.last() {
            Some(prev) => newton_hodograph(&target, (prev.e1, prev.e2))?,
            None => solve_hodograph(&target, None)?,
        };
        out.push(bp);
    }
    Ok(out)
}

fn check_alpha(bp: &BranchPoints) -> Result<()> {
    let smallest = bp.alpha[0].abs().min(bp.alpha[1].abs());
    if smallest < ALPHA_TOLERANCE {
        return Err(Error::Bifurcation { sigma_min: smallest });
    }
    Ok(())
}

fn pump_of(params: &HodographParams, bp: &BranchPoints, pump: Pump) -> GenusZeroDifferential {
    pump_differential(pump, real(params.p), real(params.q), 1, real(bp.e1), real(bp.e2))
}

/// `dE_k/dT^(pump) = 2 c_k / f2'(E_k)`, with `c_k` the singular coefficient of the pump differential.
pub fn string_rhs(params: &HodographParams, bp: &BranchPoints, pump: Pump) -> Result<[f64; 2]> {
    check_alpha(bp)?;
    let w = pump_of(params, bp, pump);
    let mut out = [0.0; 2];
    for (k, slot) in out.iter_mut().enumerate() {
        let f2p = f2_derivative(
            real(params.p),
            real(params.q),
            real(params.mu),
            real(params.nu()),
            1,
            real(bp.e1),
            real(bp.e2),
            real(bp.get(k)),
        )?;
        *slot = (2.0 * w.singular_coefficient(k)? / f2p).re;
    }
    Ok(out)
}

/// Characteristic velocities `V_k = (dW^(a)/dW^(b))(E_k)`.
pub fn whitham_velocity(params: &HodographParams, bp: &BranchPoints, a: Pump, b: Pump) -> Result<[f64; 2]> {
    check_alpha(bp)?;
    let wa = pump_of(params, bp, a);
    let wb = pump_of(params, bp, b);
    let mut out = [0.0; 2];
    for (k, slot) in out.iter_mut().enumerate() {
        let cb = wb.singular_coefficient(k)?;
        if cb.norm() < ALPHA_TOLERANCE {
            return Err(Error::Bifurcation { sigma_min: cb.norm() });
        }
        *slot = (wa.singular_coefficient(k)? / cb).re;
    }
    Ok(out)
}

/// Moves the parameters along one pump time: `T` at fixed `μ`, or `μ` at fixed `ν`.
pub fn shift(params: &HodographParams, pump: Pump, delta: f64) -> Result<HodographParams> {
    match pump {
        Pump::Infinity => params.with_mu_t(params.mu, params.t + delta),
        Pump::P => params.with_mu_t(params.mu + delta, params.t + delta),
    }
}

/// Central difference of the branch points along a pump time, re-solving at each side.
pub fn branch_point_rates_fd(params: &HodographParams, bp: &BranchPoints, pump: Pump, delta: f64) -> Result<[f64; 2]> {
    let plus = newton_hodograph(&shift(params, pump, delta)?, (bp.e1, bp.e2))?;
    let minus = newton_hodograph(&shift(params, pump, -delta)?, (bp.e1, bp.e2))?;
    Ok([(plus.e1 - minus.e1) / (2.0 * delta), (plus.e2 - minus.e2) / (2.0 * delta)])
}

/// Sup-norm report of the decomposition of `S dz` into the differentials of the curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdzReport {
    pub sup_residual: f64,
    pub samples: usize,
    /// Total residue of the bracket; zero exactly when `μ + ν` is real.
    pub residue_sum: Complex64,
}

/// `q̄ dW₊ + p̄ dW₋ − μ dW_{p⁽¹⁾,∞⁽²⁾} − ν dW_{q⁽ˢ⁾,∞⁽¹⁾} + (μ̄−μ) dW_{∞⁽²⁾,∞⁽¹⁾}` at `z` on a sheet.
pub fn sdz_bracket(c: &CurveN1, z: Complex64, sheet: i8) -> Result<Complex64> {
    let br = c.branch_data()?;
    let (e1, e2) = (br.e1, br.e2);
    let plus = GenusZeroDifferential::plus(e1, e2).eval(z, sheet)?;
    let minus = GenusZeroDifferential::minus(e1, e2).eval(z, sheet)?;
    let at_p = GenusZeroDifferential::dipole(e1, e2, Endpoint::finite(c.p, 1), Endpoint::infinity(2)).eval(z, sheet)?;
    let at_q =
        GenusZeroDifferential::dipole(e1, e2, Endpoint::finite(c.q, c.q_sheet), Endpoint::infinity(1)).eval(z, sheet)?;
    let at_inf = GenusZeroDifferential::dipole(e1, e2, Endpoint::infinity(2), Endpoint::infinity(1)).eval(z, sheet)?;
    Ok(c.q.conj() * plus + c.p.conj() * minus - c.mu * at_p - c.nu * at_q + (c.mu.conj() - c.mu) * at_inf)
}

/// Compares `S dz` with its decomposition at every sample on both sheets.
pub fn sdz_decomposition_check(c: &CurveN1, zs: &[Complex64]) -> Result<SdzReport> {
    let mut sup = 0.0_f64;
    let mut count = 0;
    for &z in zs {
        for sheet in [1, 2] {
            let s = schwarz_two_sheeted(c, z, sheet)?;
            let d = sdz_bracket(c, z, sheet)?;
            sup = sup.max((s - d).norm() / (1.0 + s.norm()));
            count += 1;
        }
    }
    // residues: −μ at p⁽¹⁾, −ν at q, ν̄ at ∞⁽¹⁾, μ̄ at ∞⁽²⁾
    let residue_sum = -c.mu - c.nu + c.nu.conj() + c.mu.conj();
    Ok(SdzReport { sup_residual: sup, samples: count, residue_sum })
}

/// Outcome of a single parameter point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointStatus {
    Solved,
    Bifurcation,
    Infeasible,
    NotConverged,
}

impl PointStatus {
    pub fn of(e: &Error) -> PointStatus {
        match e {
            Error::Bifurcation { .. } => PointStatus::Bifurcation,
            Error::NotConverged(_) => PointStatus::NotConverged,
            _ => PointStatus::Infeasible,
        }
    }
}

/// One row of a family sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyRow {
    pub mu: f64,
    #[serde(rename = "T")]
    pub t: f64,
    pub status: PointStatus,
    #[serde(rename = "E1")]
    pub e1: Option<f64>,
    #[serde(rename = "E2")]
    pub e2: Option<f64>,
    pub h: Option<f64>,
    pub area_over_pi: Option<f64>,
    pub residual: Option<f64>,
}

/// A solved instance with both the hodograph and the curve-side data.
#[derive(Debug, Clone)]
pub struct SolvedInstance {
    pub params: HodographParams,
    pub branch: BranchPoints,
    pub curve: CurveN1,
    pub residual: f64,
}

/// Hodograph solve plus the double-point oracle; the curve keeps the oracle's branch points.
pub fn solve_instance(params: &HodographParams) -> Result<SolvedInstance> {
    let branch = solve_hodograph(params, None)?;
    let r = hodograph_residual(params, branch.e1, branch.e2)?;
    let curve = solve_double_point(&params.curve()?)?;
    Ok(SolvedInstance { params: *params, branch, curve, residual: r[0].abs().max(r[1].abs()) })
}

/// Solves one grid point and optionally traces its boundary.
pub fn family_row(params: &HodographParams, trace: Option<&TraceOptions>) -> (FamilyRow, Option<crate::Contour>) {
    let mut row = FamilyRow {
        mu: params.mu,
        t: params.t,
        status: PointStatus::Solved,
        e1: None,
        e2: None,
        h: None,
        area_over_pi: None,
        residual: None,
    };
    let inst = match solve_instance(params) {
        Ok(i) => i,
        Err(e) => {
            row.status = PointStatus::of(&e);
            return (row, None);
        }
    };
    row.e1 = Some(inst.branch.e1);
    row.e2 = Some(inst.branch.e2);
    row.h = inst.curve.h;
    row.residual = Some(inst.residual);
    let contour = match trace {
        Some(opts) => match physical_contour(&inst.curve, opts) {
            Ok(c) => {
                row.area_over_pi = Some(c.area() / std::f64::consts::PI);
                Some(c)
            }
            Err(e) => {
                row.status = PointStatus::of(&e);
                None
            }
        },
        None => None,
    };
    (row, contour)
}

/// One grid point of a bifurcation scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub mu: f64,
    #[serde(rename = "T")]
    pub t: f64,
    pub status: PointStatus,
    /// Smallest singular value of the Jacobian relative to the largest.
    pub sigma_min: Option<f64>,
    pub determinant: Option<f64>,
    /// Largest curvature of the traced boundary.
    pub max_curvature: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BracketKind {
    /// The Jacobian determinant changes sign between two solved points.
    SignChange,
    /// A solved point neighbours a point where the solution is lost.
    Edge,
}

/// Two neighbouring grid points on either side of the cusp locus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CuspBracket {
    pub kind: BracketKind,
    pub from: (f64, f64),
    pub to: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub points: Vec<ScanPoint>,
    pub brackets: Vec<CuspBracket>,
}

/// Largest curvature of the traced physical boundary, from the implicit curve.
pub fn boundary_curvature(params: &HodographParams, opts: &TraceOptions) -> Result<f64> {
    let c = solve_double_point(&params.curve()?)?;
    let comp = physical_component(&c, opts)?;
    Ok(max_section_curvature(&c.hermitian(c.h.expect("solved curve")), &comp.polyline))
}

/// Scans a rectangular `(μ, T)` grid, continuing along each `T` row from the previous point.
pub fn bifurcation_scan(p: f64, q: f64, mus: &[f64], ts: &[f64], trace: Option<&TraceOptions>) -> ScanReport {
    let mut points = Vec::with_capacity(mus.len() * ts.len());
    for &mu in mus {
        let mut prev: Option<BranchPoints> = None;
        for &t in ts {
            let mut pt = ScanPoint { mu, t, status: PointStatus::Solved, sigma_min: None, determinant: None, max_curvature: None };
            let solved = HodographParams::new(p, q, mu, t).and_then(|params| {
                let bp = match prev {
                    Some(b) => newton_hodograph(&params, (b.e1, b.e2)).or_else(|_| solve_hodograph(&params, None)),
                    None => solve_hodograph(&params, None),
                }?;
                Ok((params, bp))
            });
            match solved {
                Ok((params, bp)) => {
                    let j = hodograph_jacobian(&params, bp.e1, bp.e2).expect("ordered solution");
                    let [smax, smin] = singular_values(&j);
                    pt.sigma_min = Some(smin / smax);
                    pt.determinant = Some(j[0][0] * j[1][1] - j[0][1] * j[1][0]);
                    if let Some(opts) = trace {
                        pt.max_curvature = boundary_curvature(&params, opts).ok();
                    }
                    prev = Some(bp);
                }
                Err(e) => {
                    pt.status = PointStatus::of(&e);
                    prev = None;
                }
            }
            points.push(pt);
        }
    }
    let brackets = cusp_brackets(&points, mus.len(), ts.len());
    ScanReport { points, brackets }
}

fn cusp_brackets(points: &[ScanPoint], rows: usize, cols: usize) -> Vec<CuspBracket> {
    let mut out = Vec::new();
    for a in 0..rows {
        for b in 0..cols {
            let i = a * cols + b;
            let mut neighbours = Vec::new();
            if b + 1 < cols {
                neighbours.push(i + 1);
            }
            if a + 1 < rows {
                neighbours.push(i + cols);
            }
            for j in neighbours {
                let kind = match (points[i].determinant, points[j].determinant) {
                    (Some(x), Some(y)) if x * y < 0.0 => Some(BracketKind::SignChange),
                    (Some(_), None) | (None, Some(_)) => Some(BracketKind::Edge),
                    _ => None,
                };
                if let Some(kind) = kind {
                    out.push(CuspBracket { kind, from: (points[i].mu, points[i].t), to: (points[j].mu, points[j].t) });
                }
            }
        }
    }
    out
}

/// Bisects along `T` at fixed `μ` for the last solvable point before the fold.
///
/// `t_lo` must be solvable; continuation from it is used for every trial.
pub fn locate_fold(base: &HodographParams, t_lo: f64, t_hi: f64, tolerance: f64) -> Result<(f64, BranchPoints)> {
    let mut lo = t_lo;
    let mut bp = solve_hodograph(&base.with_mu_t(base.mu, lo)?, None)?;
    let mut hi = t_hi;
    if newton_hodograph(&base.with_mu_t(base.mu, hi)?, (bp.e1, bp.e2)).is_ok() {
        return Err(Error::InvalidInput(format!("T = {hi} is still solvable; the bracket holds no fold")));
    }
    while hi - lo > tolerance {
        let mid = 0.5 * (lo + hi);
        match newton_hodograph(&base.with_mu_t(base.mu, mid)?, (bp.e1, bp.e2)) {
            Ok(b) => {
                lo = mid;
                bp = b;
            }
            Err(_) => hi = mid,
        }
    }
    Ok((lo, bp))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn reference() -> HodographParams {
        HodographParams::new(2.0, -3.0, 0.1, 1.0).unwrap()
    }

    fn c64(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn reference_solution_matches_double_point() {
        let params = reference();
        let bp = solve_hodograph(&params, None).unwrap();
        let r = hodograph_residual(&params, bp.e1, bp.e2).unwrap();
        assert!(r[0].abs().max(r[1].abs()) < 1e-12);
        assert!((bp.e1 + 2.9061032432209757).abs() < 1e-8);
        assert!((bp.e2 + 2.6520328003252622).abs() < 1e-8);
        assert!(bp.alpha.iter().all(|a| a.abs() > 1e-3));
    }

    #[test]
    fn residual_is_minus_twice_f2() {
        let params = reference();
        let (e1, e2) = (-2.95, -2.6);
        let r = hodograph_residual(&params, e1, e2).unwrap();
        for (k, ek) in [e1, e2].into_iter().enumerate() {
            let (_, f2) = split_from_branch(
                real(2.0),
                real(-3.0),
                real(0.1),
                real(-0.9),
                1,
                real(e1),
                real(e2),
                real(ek),
            )
            .unwrap();
            assert!((r[k] + 2.0 * f2.re).abs() < 1e-13);
            assert!(f2.im.abs() < 1e-15);
        }
    }

    #[test]
    fn residual_swap_and_coincidence() {
        let params = reference();
        let (e1, e2) = (-2.9, -2.7);
        let r = hodograph_residual(&params, e1, e2).unwrap();
        // with the roles of E1 and E2 exchanged the two relations exchange
        let swapped = {
            let HodographParams { p, q, mu, t } = params;
            let (e1, e2) = (e2, e1);
            let a = ((p - e2) / (p - e1)).sqrt();
            let b = ((e2 - q) / (e1 - q)).sqrt();
            -mu * (a + b) + t * (b - 1.0) - 0.5 * (e2 - e1) * (p - q)
        };
        assert!((swapped - r[1]).abs() < 1e-14);
        // coincident branch points leave only the pole terms
        let r = hodograph_residual(&params, -2.8, -2.8).unwrap();
        assert!((r[0] + 2.0 * params.mu).abs() < 1e-15 && (r[1] + 2.0 * params.mu).abs() < 1e-15);
        assert!(hodograph_residual(&params, -3.5, -2.0).is_err());
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let params = reference();
        let (e1, e2) = (-2.93, -2.61);
        let j = hodograph_jacobian(&params, e1, e2).unwrap();
        let h = 1e-6;
        for col in 0..2 {
            let (dp, dm) = if col == 0 { ((e1 + h, e2), (e1 - h, e2)) } else { ((e1, e2 + h), (e1, e2 - h)) };
            let rp = hodograph_residual(&params, dp.0, dp.1).unwrap();
            let rm = hodograph_residual(&params, dm.0, dm.1).unwrap();
            for row in 0..2 {
                assert!(((rp[row] - rm[row]) / (2.0 * h) - j[row][col]).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn continuation_in_t_is_smooth() {
        let params = reference();
        let ts: Vec<f64> = (0..=100).map(|i| 0.5 + i as f64 / 100.0).collect();
        let path = continue_in_t(&params, &ts).unwrap();
        for (bp, &t) in path.iter().zip(&ts) {
            let r = hodograph_residual(&params.with_mu_t(0.1, t).unwrap(), bp.e1, bp.e2).unwrap();
            assert!(r[0].abs().max(r[1].abs()) < 1e-12);
        }
        for w in path.windows(3) {
            let second = w[0].e1 - 2.0 * w[1].e1 + w[2].e1;
            assert!(second.abs() < 1e-3);
        }
    }

    #[test]
    fn small_mu_collapses_cut() {
        let widths: Vec<f64> = [1e-2, 1e-4, 1e-6]
            .iter()
            .map(|&mu| {
                let bp = solve_hodograph(&HodographParams::new(2.0, -3.0, mu, 1.0).unwrap(), None).unwrap();
                bp.e2 - bp.e1
            })
            .collect();
        assert!(widths[1] < widths[0] / 5.0 && widths[2] < widths[1] / 5.0);
        assert!(widths[2] < 1e-3);
    }

    #[test]
    fn differential_examples() {
        let (e1, e2) = (c64(-2.9, 0.0), c64(-2.6, 0.0));
        let plus = GenusZeroDifferential::plus(e1, e2);
        let minus = GenusZeroDifferential::minus(e1, e2);
        let far = c64(3e5, -1e5);
        assert!((plus.eval(far, 1).unwrap() - 1.0).norm() < 1e-10);
        assert!(plus.eval(far, 2).unwrap().norm() < 1e-10);
        for z in [c64(0.3, 0.7), c64(-2.75, 0.2), c64(5.0, -1.0)] {
            for sheet in [1, 2] {
                let s = plus.eval(z, sheet).unwrap() + minus.eval(z, sheet).unwrap();
                assert!((s - 1.0).norm() <= 4.0 * f64::EPSILON);
            }
        }
        assert!(plus.eval(e1, 1).is_err());
    }

    fn residue(w: &GenusZeroDifferential, at: Option<Complex64>, sheet: i8) -> Complex64 {
        let n = 512;
        let (centre, radius, orient) = match at {
            Some(a) => (a, 1e-3, 1.0),
            None => (c64(0.0, 0.0), 1e3, -1.0),
        };
        orient
            * (0..n)
                .map(|j| {
                    let d = Complex64::from_polar(radius, 2.0 * PI * j as f64 / n as f64);
                    w.eval(centre + d, sheet).unwrap() * d
                })
                .sum::<Complex64>()
            / n as f64
    }

    #[test]
    fn dipole_residues() {
        let (e1, e2) = (c64(-2.9, 0.0), c64(-2.6, 0.0));
        let (p, q) = (c64(2.0, 0.0), c64(-3.0, 0.0));
        for (a, b) in [
            (Endpoint::finite(p, 1), Endpoint::infinity(2)),
            (Endpoint::infinity(1), Endpoint::finite(q, 1)),
            (Endpoint::finite(p, 2), Endpoint::finite(q, 1)),
            (Endpoint::infinity(2), Endpoint::infinity(1)),
        ] {
            let w = GenusZeroDifferential::dipole(e1, e2, a, b);
            assert!((residue(&w, a.point, a.sheet) - 1.0).norm() < 1e-10);
            assert!((residue(&w, b.point, b.sheet) + 1.0).norm() < 1e-10);
            // the image of the first endpoint on the other sheet is regular unless it is the second endpoint
            if a.point != b.point {
                assert!(residue(&w, a.point, 3 - a.sheet).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn split_reconstructs_schwarz() {
        let c = solve_double_point(&reference().curve().unwrap()).unwrap();
        let y = |z| sqrt_p2(c.branch_data().unwrap().e1, c.branch_data().unwrap().e2, z, 1).unwrap();
        for z in [c64(0.5, 1.0), c64(-1.0, -2.0), c64(3.0, 0.5), c64(-2.8, 0.3)] {
            let (f1, f2) = f1_f2_split(&c, z).unwrap();
            let s = schwarz_two_sheeted(&c, z, 1).unwrap();
            assert!((f1 + f2 / y(z) - s).norm() < 1e-10);
        }
        let br = c.branch_data().unwrap();
        for e in [br.e1, br.e2] {
            assert!(f1_f2_split(&c, e).unwrap().1.norm() < 1e-10);
        }
        let (f1, f2) = f1_f2_split(&c, c64(0.5, 0.0)).unwrap();
        assert!(f1.im.abs() < 1e-15 && f2.im.abs() < 1e-15);
    }

    #[test]
    fn sdz_decomposition_holds() {
        let c = solve_double_point(&reference().curve().unwrap()).unwrap();
        let zs: Vec<Complex64> = (0..100)
            .map(|j| {
                let t = 2.0 * PI * (j as f64 + 0.5) / 100.0;
                c64(-0.5, 0.0) + Complex64::from_polar(1.0 + 3.0 * (j % 7) as f64 / 7.0, t)
            })
            .collect();
        let report = sdz_decomposition_check(&c, &zs).unwrap();
        assert_eq!(report.samples, 200);
        assert!(report.sup_residual < 1e-9, "{}", report.sup_residual);
        assert!(report.residue_sum.norm() < 1e-15);
        let far = sdz_bracket(&c, c64(1e6, 1e6), 1).unwrap();
        assert!((far - c.q.conj()).norm() < 1e-5);
    }

    #[test]
    fn velocities_are_reciprocal() {
        let params = reference();
        let bp = solve_hodograph(&params, None).unwrap();
        let same = whitham_velocity(&params, &bp, Pump::P, Pump::P).unwrap();
        assert_eq!(same, [1.0, 1.0]);
        let ab = whitham_velocity(&params, &bp, Pump::P, Pump::Infinity).unwrap();
        let ba = whitham_velocity(&params, &bp, Pump::Infinity, Pump::P).unwrap();
        for k in 0..2 {
            assert!((ab[k] * ba[k] - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn string_rates_match_finite_differences() {
        let params = reference();
        let bp = solve_hodograph(&params, None).unwrap();
        for pump in [Pump::Infinity, Pump::P] {
            let rhs = string_rhs(&params, &bp, pump).unwrap();
            let fd = branch_point_rates_fd(&params, &bp, pump, 1e-4).unwrap();
            for k in 0..2 {
                assert!((rhs[k] - fd[k]).abs() < 1e-5 * fd[k].abs(), "{pump:?} {k}: {} vs {}", rhs[k], fd[k]);
            }
        }
    }

    #[test]
    fn schwarz_flow_matches_pump_differentials() {
        let params = reference();
        let bp = solve_hodograph(&params, None).unwrap();
        let delta = 1e-4;
        for pump in [Pump::Infinity, Pump::P] {
            let plus = shift(&params, pump, delta).unwrap();
            let minus = shift(&params, pump, -delta).unwrap();
            let bpp = newton_hodograph(&plus, (bp.e1, bp.e2)).unwrap();
            let bpm = newton_hodograph(&minus, (bp.e1, bp.e2)).unwrap();
            let w = pump_of(&params, &bp, pump);
            for z in [c64(0.5, 1.5), c64(-1.0, -1.8), c64(3.0, 0.3)] {
                let ds = (schwarz_from_branch(&plus, bpp.e1, bpp.e2, z, 1).unwrap()
                    - schwarz_from_branch(&minus, bpm.e1, bpm.e2, z, 1).unwrap())
                    / (2.0 * delta);
                let expected = -w.eval(z, 1).unwrap();
                assert!((ds - expected).norm() < 1e-4 * expected.norm(), "{pump:?} {z}: {ds} vs {expected}");
            }
        }
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(HodographParams::new(2.0, -3.0, 0.0, 1.0).is_err());
        assert!(HodographParams::new(-3.0, 2.0, 0.1, 1.0).is_err());
        assert!(HodographParams::new(2.0, -3.0, 0.1, f64::NAN).is_err());
    }

    #[test]
    fn fold_sharpens_boundary() {
        let base = HodographParams::new(2.0, -3.0, 1.25, 8.0).unwrap();
        let (t_star, bp) = locate_fold(&base, 8.0, 9.5, 1e-10).unwrap();
        assert!(bp.alpha[1].abs() < 1e-3);
        let opts = TraceOptions::with_scale(base.p - base.q);
        let far = boundary_curvature(&base.with_mu_t(1.25, t_star - 1e-1).unwrap(), &opts).unwrap();
        let near = boundary_curvature(&base.with_mu_t(1.25, t_star - 3e-3).unwrap(), &opts).unwrap();
        assert!(near > 10.0 * far, "{near} vs {far}");
    }

    #[test]
    fn scan_interior_point_is_regular() {
        let report = bifurcation_scan(2.0, -3.0, &[0.1], &[0.5, 1.0], None);
        assert!(report.points.iter().all(|p| p.status == PointStatus::Solved));
        assert!(report.points.iter().all(|p| p.sigma_min.unwrap() > 1e-3));
    }
}
