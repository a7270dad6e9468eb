//! Algebraic droplets whose Schwarz function is a two-sheeted algebraic function.
//!
//! A droplet boundary is the real section `R(z̄, z) = 0` of a curve
//! `R(S, z) = Σ A_nm Sⁿ zᵐ` with a Hermitian coefficient matrix. The family
//! handled here has one simple pole of `S` at `p` (residue `−μ`, physical sheet)
//! and one at `q` (residue `−ν`), which fixes every coefficient except the free
//! term `h`. Requiring the quartic discriminant in `S` to have a double root
//! makes the curve rational and pins `h`.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::conformal::complex_pair;
use crate::error::{Error, Result};
use crate::geometry::{signed_area, Contour};
use crate::poly;
use crate::schwarz::SchwarzFunction;
use crate::spectral;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// `R(S, z) = Σ_{n,m ≤ d} A_nm Sⁿ zᵐ` with `A_nm = conj(A_mn)`.
///
/// Only the lower triangle `n ≥ m` is stored and the diagonal is real, so
/// Hermiticity holds by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianCurve {
    degree: usize,
    lower: Vec<Complex64>,
}

impl HermitianCurve {
    /// Builds the curve from `A_nm` for `n ≥ m`; imaginary parts on the diagonal are dropped.
    pub fn from_lower(degree: usize, entry: impl Fn(usize, usize) -> Complex64) -> Result<Self> {
        let mut lower = Vec::with_capacity((degree + 1) * (degree + 2) / 2);
        for n in 0..=degree {
            for m in 0..=n {
                let a = entry(n, m);
                if !a.is_finite() {
                    return Err(Error::InvalidInput(format!("coefficient A[{n}][{m}] is not finite")));
                }
                lower.push(if n == m { Complex64::new(a.re, 0.0) } else { a });
            }
        }
        Ok(HermitianCurve { degree, lower })
    }

    /// `S·z − R² = 0`, whose real section is the circle `|z| = R`.
    pub fn disk(radius: f64) -> Result<Self> {
        HermitianCurve::from_lower(1, |n, m| match (n, m) {
            (1, 1) => ONE,
            (0, 0) => Complex64::new(-radius * radius, 0.0),
            _ => ZERO,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coefficient(&self, n: usize, m: usize) -> Complex64 {
        if n >= m {
            self.lower[n * (n + 1) / 2 + m]
        } else {
            self.lower[m * (m + 1) / 2 + n].conj()
        }
    }

    pub fn eval(&self, s: Complex64, z: Complex64) -> Complex64 {
        let mut total = ZERO;
        let mut sn = ONE;
        for n in 0..=self.degree {
            let mut zm = ONE;
            for m in 0..=self.degree {
                total += self.coefficient(n, m) * sn * zm;
                zm *= z;
            }
            sn *= s;
        }
        total
    }

    /// `R(z̄, z)`, real for a Hermitian matrix.
    pub fn real_value(&self, z: Complex64) -> f64 {
        self.eval(z.conj(), z).re
    }

    /// `(R, ∂_x R + i ∂_y R)` at `z`; the gradient equals `2·conj(∂_z R)`.
    pub fn value_and_gradient(&self, z: Complex64) -> (f64, Complex64) {
        let zb = z.conj();
        let mut value = ZERO;
        let mut dz = ZERO;
        let mut sn = ONE;
        for n in 0..=self.degree {
            let mut zm = ONE;
            let mut zm1 = ZERO;
            for m in 0..=self.degree {
                let a = self.coefficient(n, m) * sn;
                value += a * zm;
                dz += a * m as f64 * zm1;
                zm1 = zm;
                zm *= z;
            }
            sn *= zb;
        }
        (value.re, 2.0 * dz.conj())
    }

    /// Curvature of the level set `R(z̄, z) = 0` through `z`.
    pub fn curvature(&self, z: Complex64) -> f64 {
        let zb = z.conj();
        let (mut dz, mut dzz, mut dzzb) = (ZERO, ZERO, ZERO);
        for n in 0..=self.degree {
            for m in 0..=self.degree {
                let a = self.coefficient(n, m);
                let (nf, mf) = (n as f64, m as f64);
                if m >= 1 {
                    dz += a * mf * zb.powu(n as u32) * z.powu(m as u32 - 1);
                }
                if m >= 2 {
                    dzz += a * mf * (mf - 1.0) * zb.powu(n as u32) * z.powu(m as u32 - 2);
                }
                if m >= 1 && n >= 1 {
                    dzzb += a * nf * mf * zb.powu(n as u32 - 1) * z.powu(m as u32 - 1);
                }
            }
        }
        let (rx, ry) = (2.0 * dz.re, -2.0 * dz.im);
        let rxx = 2.0 * dzz.re + 2.0 * dzzb.re;
        let ryy = -2.0 * dzz.re + 2.0 * dzzb.re;
        let rxy = -2.0 * dzz.im;
        let g2 = rx * rx + ry * ry;
        (rxx * ry * ry - 2.0 * rxy * rx * ry + ryy * rx * rx).abs() / g2.powf(1.5)
    }

    /// Sum of moduli of the terms of `R(z̄, z)`, the roundoff scale of an evaluation.
    pub fn magnitude(&self, z: Complex64) -> f64 {
        let r = z.norm();
        let mut total = 0.0;
        for n in 0..=self.degree {
            for m in 0..=self.degree {
                total += self.coefficient(n, m).norm() * r.powi((n + m) as i32);
            }
        }
        total
    }

    /// `R(z̄, z)` restricted to the line `z = a + t·(b − a)` as a real polynomial in `t`.
    pub fn on_line(&self, a: Complex64, b: Complex64) -> Vec<f64> {
        let z = [a, b - a];
        let zb = [a.conj(), (b - a).conj()];
        let mut total = vec![ZERO];
        let mut sn = vec![ONE];
        for n in 0..=self.degree {
            let mut zm = vec![ONE];
            for m in 0..=self.degree {
                total = poly::add(&total, &poly::scale(&poly::mul(&sn, &zm), self.coefficient(n, m)));
                zm = poly::mul(&zm, &z);
            }
            sn = poly::mul(&sn, &zb);
        }
        total.iter().map(|c| c.re).collect()
    }
}

/// Steps that turn the tangent by more than about 5 degrees are halved, so the
/// step length follows the local radius of curvature.
const MIN_STEP_COSINE: f64 = 0.996;

/// Tracing controls for [`trace_real_section`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceOptions {
    /// Predictor step as a fraction of `scale`.
    pub step: f64,
    /// Length unit of the curve.
    pub scale: f64,
    /// Samples in each returned contour.
    pub samples: usize,
    /// Corrector stops when `|R|` is below this multiple of the term magnitude.
    pub tolerance: f64,
    pub max_steps: usize,
    /// Reparametrize at equal arc length on the trigonometric interpolant.
    pub refine: bool,
}

impl TraceOptions {
    pub fn with_scale(scale: f64) -> Self {
        TraceOptions { step: 1e-3, scale, samples: 1024, tolerance: 1e-15, max_steps: 200_000, refine: true }
    }

    /// Coarse settings for classifying components.
    pub fn coarse(scale: f64) -> Self {
        TraceOptions { step: 4e-3, samples: 256, refine: false, ..TraceOptions::with_scale(scale) }
    }
}

fn correct(curve: &HermitianCurve, mut z: Complex64, tol: f64) -> Result<Complex64> {
    for _ in 0..50 {
        let (r, g) = curve.value_and_gradient(z);
        let g2 = g.norm_sqr();
        if g2 == 0.0 || !g2.is_finite() {
            return Err(Error::Trace(format!("gradient of the real section vanishes at {z}")));
        }
        let dz = g * (r / g2);
        z -= dz;
        if r.abs() <= tol * curve.magnitude(z) || dz.norm() < 1e-16 * z.norm().max(1.0) {
            return Ok(z);
        }
    }
    let (r, _) = curve.value_and_gradient(z);
    if r.abs() <= 1e3 * tol * curve.magnitude(z) {
        Ok(z)
    } else {
        Err(Error::Trace(format!("corrector stalled at {z} with |R| = {:.3e}", r.abs())))
    }
}

/// Predictor–corrector tracing of the closed real-section component through `seed`.
///
/// The result is resampled at equal arc length, projected back onto the curve,
/// and oriented counterclockwise.
pub fn trace_real_section(curve: &HermitianCurve, seed: Complex64, opts: &TraceOptions) -> Result<Contour> {
    let points = trace_polyline(curve, seed, opts)?;
    finish_component(curve, &points, opts)
}

/// The raw closed polyline of adaptive predictor–corrector steps, without the closing point.
pub fn trace_polyline(curve: &HermitianCurve, seed: Complex64, opts: &TraceOptions) -> Result<Vec<Complex64>> {
    let h_max = opts.step * opts.scale;
    let h_min = 1e-6 * h_max;
    let start = correct(curve, seed, opts.tolerance)?;
    let (_, g0) = curve.value_and_gradient(start);
    if g0.norm() < 1e-10 * curve.magnitude(start) / opts.scale {
        return Err(Error::Trace(format!("seed {start} is a singular point of the real section")));
    }
    let mut points = vec![start];
    let mut z = start;
    let mut direction = Complex64::i() * g0 / g0.norm();
    let mut travelled = 0.0;
    let mut h = h_max;
    for _ in 0..opts.max_steps {
        let (_, g) = curve.value_and_gradient(z);
        let mut tangent = Complex64::i() * g / g.norm();
        if (tangent * direction.conj()).re < 0.0 {
            tangent = -tangent;
        }
        // halve the step until the corrector lands a step-length away without turning sharply
        let next = loop {
            let accepted = correct(curve, z + h * tangent, opts.tolerance).ok().filter(|next| {
                let moved = (next - z).norm();
                let chord = (next - z) / moved;
                moved < 2.0 * h && moved > 0.5 * h && (chord * tangent.conj()).re > MIN_STEP_COSINE
            });
            match accepted {
                Some(next) => break next,
                None if h > h_min => h *= 0.5,
                None => return Err(Error::Trace(format!("step underflow near {z}"))),
            }
        };
        direction = tangent;
        let moved = (next - z).norm();
        travelled += moved;
        if travelled > 4.0 * moved && (next - start).norm() < 1.5 * moved {
            return Ok(points);
        }
        points.push(next);
        z = next;
        h = (1.5 * h).min(h_max);
    }
    Err(Error::Trace(format!(
        "component through {seed} did not close after {} steps",
        opts.max_steps
    )))
}

fn finish_component(curve: &HermitianCurve, points: &[Complex64], opts: &TraceOptions) -> Result<Contour> {
    let mut samples = resample_polyline(points, opts.samples);
    for z in samples.iter_mut() {
        *z = correct(curve, *z, opts.tolerance)?;
    }
    // equal-arc-length reparametrization on the trigonometric interpolant
    for _ in 0..if opts.refine { 4 } else { 0 } {
        samples = equalize_arc_length(&samples);
        for z in samples.iter_mut() {
            *z = correct(curve, *z, opts.tolerance)?;
        }
    }
    if signed_area(&samples)? < 0.0 {
        samples.reverse();
        samples.rotate_right(1);
    }
    Contour::new(samples)
}

fn resample_polyline(points: &[Complex64], n: usize) -> Vec<Complex64> {
    let m = points.len();
    let mut cumulative = Vec::with_capacity(m + 1);
    cumulative.push(0.0);
    for j in 0..m {
        let d = (points[(j + 1) % m] - points[j]).norm();
        cumulative.push(cumulative[j] + d);
    }
    let total = cumulative[m];
    let mut out = Vec::with_capacity(n);
    let mut seg = 0;
    for k in 0..n {
        let s = total * k as f64 / n as f64;
        while cumulative[seg + 1] < s {
            seg += 1;
        }
        let t = (s - cumulative[seg]) / (cumulative[seg + 1] - cumulative[seg]);
        out.push(points[seg] + (points[(seg + 1) % m] - points[seg]) * t);
    }
    out
}

fn equalize_arc_length(samples: &[Complex64]) -> Vec<Complex64> {
    let n = samples.len();
    let coeffs = spectral::fourier_coefficients(samples);
    let speed: Vec<f64> = spectral::derivative(samples).iter().map(|d| d.norm()).collect();
    let sc = spectral::fourier_coefficients(&speed.iter().map(|v| Complex64::new(*v, 0.0)).collect::<Vec<_>>());
    let mean = sc[0].re;
    let dtheta = 2.0 * PI / n as f64;
    // s(θ_j) = mean·θ_j + Σ_{k≠0} c_k e^{ikθ_j}/(ik)
    let periodic = spectral::synthesize(&integrate_coefficients(&sc));
    let mut arc: Vec<f64> = (0..n).map(|j| mean * dtheta * j as f64 + periodic[j].re).collect();
    let s0 = arc[0];
    arc.iter_mut().for_each(|v| *v -= s0);
    arc.push(2.0 * PI * mean);
    let total = arc[n];
    let mut out = Vec::with_capacity(n);
    let mut seg = 0;
    for j in 0..n {
        let target = total * j as f64 / n as f64;
        while seg + 1 < n && arc[seg + 1] <= target {
            seg += 1;
        }
        // cubic Hermite inversion of s on [θ_seg, θ_seg+1]
        let (s_a, s_b) = (arc[seg], arc[seg + 1]);
        let (d_a, d_b) = (speed[seg] * dtheta, speed[(seg + 1) % n] * dtheta);
        let hermite = |t: f64| -> (f64, f64) {
            let (t2, t3) = (t * t, t * t * t);
            let v = (2.0 * t3 - 3.0 * t2 + 1.0) * s_a
                + (t3 - 2.0 * t2 + t) * d_a
                + (-2.0 * t3 + 3.0 * t2) * s_b
                + (t3 - t2) * d_b;
            let dv = (6.0 * t2 - 6.0 * t) * s_a + (3.0 * t2 - 4.0 * t + 1.0) * d_a + (-6.0 * t2 + 6.0 * t) * s_b + (3.0 * t2 - 2.0 * t) * d_b;
            (v, dv)
        };
        let mut t = ((target - s_a) / (s_b - s_a)).clamp(0.0, 1.0);
        for _ in 0..8 {
            let (v, dv) = hermite(t);
            let step = (v - target) / dv;
            t -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        out.push(spectral::interpolate(&coeffs, dtheta * (seg as f64 + t))[0]);
    }
    out
}

fn integrate_coefficients(c: &[Complex64]) -> Vec<Complex64> {
    let n = c.len();
    c.iter()
        .enumerate()
        .map(|(k, ck)| {
            let m = spectral::wavenumber(k, n);
            if m == 0 || (n.is_multiple_of(2) && k == n / 2) {
                ZERO
            } else {
                ck / Complex64::new(0.0, m as f64)
            }
        })
        .collect()
}

/// Traces every component through the given seeds as raw polylines, skipping seeds
/// that lie on a component already found and seeds at singular points.
pub fn trace_polylines(curve: &HermitianCurve, seeds: &[Complex64], opts: &TraceOptions) -> Result<Vec<Vec<Complex64>>> {
    let mut out: Vec<Vec<Complex64>> = Vec::new();
    let near = |line: &[Complex64], z: Complex64| polyline_distance(line, z) < 10.0 * opts.step * opts.scale;
    for &seed in seeds {
        if out.iter().any(|l| near(l, seed)) {
            continue;
        }
        match trace_polyline(curve, seed, opts) {
            Ok(line) => {
                if !out.iter().any(|l| near(l, line[0])) {
                    out.push(line);
                }
            }
            Err(Error::Trace(msg)) if msg.contains("singular point") || msg.contains("gradient") => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Like [`trace_polylines`], finishing each component into a contour.
pub fn trace_components(curve: &HermitianCurve, seeds: &[Complex64], opts: &TraceOptions) -> Result<Vec<Contour>> {
    trace_polylines(curve, seeds, opts)?
        .iter()
        .map(|line| finish_component(curve, line, opts))
        .collect()
}

fn polyline_distance(line: &[Complex64], z: Complex64) -> f64 {
    let n = line.len();
    (0..n)
        .map(|j| crate::geometry::segment_distance(z, line[j], line[(j + 1) % n]))
        .fold(f64::INFINITY, f64::min)
}

/// Winding number of a closed polyline around `z`.
pub fn polyline_winding(line: &[Complex64], z: Complex64) -> i64 {
    let n = line.len();
    let total: f64 = (0..n)
        .map(|j| ((line[(j + 1) % n] - z) / (line[j] - z)).arg())
        .sum();
    (total / (2.0 * PI)).round() as i64
}

/// Largest curvature of the real section over the points of a traced polyline.
pub fn max_section_curvature(curve: &HermitianCurve, line: &[Complex64]) -> f64 {
    line.iter().map(|z| curve.curvature(*z)).fold(0.0, f64::max)
}

/// Branch data of a degenerate quartic: simple roots `E1, E2` and double root `E3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchData {
    pub e1: Complex64,
    pub e2: Complex64,
    pub e3: Complex64,
}

/// The one-pole-per-sheet curve with parameters `(p, q, μ, ν)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveN1 {
    pub p: Complex64,
    pub q: Complex64,
    pub mu: Complex64,
    pub nu: Complex64,
    pub b: Complex64,
    pub c: f64,
    pub d: Complex64,
    pub e: Complex64,
    /// Free term, fixed by the degeneracy condition.
    pub h: Option<f64>,
    pub branch: Option<BranchData>,
    /// Sheet (1 or 2) carrying the pole at `q`.
    pub q_sheet: i8,
}

/// Fills the coefficients `b, c, d, e` from the pole data; `h` stays undetermined.
pub fn build_curve(p: Complex64, q: Complex64, mu: Complex64, nu: Complex64) -> Result<CurveN1> {
    for (name, v) in [("p", p), ("q", q), ("mu", mu), ("nu", nu)] {
        if !v.is_finite() {
            return Err(Error::InvalidInput(format!("{name} must be finite")));
        }
    }
    if mu.norm() == 0.0 || nu.norm() == 0.0 {
        return Err(Error::InvalidInput("residues mu and nu must both be nonzero".into()));
    }
    let sum = mu + nu;
    if sum.im.abs() > 1e-12 * sum.norm().max(1.0) {
        return Err(Error::InvalidInput(format!("mu + nu = {sum} must be real (residues sum to zero)")));
    }
    if (p - q).norm() == 0.0 {
        return Err(Error::InvalidInput("poles p and q coincide".into()));
    }
    let b = -p - q;
    let c = (p + q).norm_sqr() + sum.re;
    let d = p * q;
    let e = -p * q * (p.conj() + q.conj()) - p * nu - q * mu;
    Ok(CurveN1 { p, q, mu, nu, b, c, d, e, h: None, branch: None, q_sheet: 1 })
}

/// Monic quartic `[(b̄z²+cz+e)² − 4(z−p)(z−q)(d̄z²+ēz+h)] / (q̄−p̄)²`, low order first.
pub fn quartic_from_curve(c: &CurveN1, h: f64) -> Result<Vec<Complex64>> {
    let (a, b) = quartic_parts(c)?;
    let p4 = poly::add(&a, &poly::scale(&b, Complex64::new(-h, 0.0)));
    let lead = p4[4];
    if (lead - ONE).norm() > 1e-12 {
        return Err(Error::Domain(format!("quartic leading coefficient is {lead}, expected 1")));
    }
    Ok(p4)
}

/// `(A, B)` with `P4 = A − h·B`.
fn quartic_parts(c: &CurveN1) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let denom = (c.q.conj() - c.p.conj()).powi(2);
    if denom.norm() == 0.0 {
        return Err(Error::Domain("degenerate configuration p = q".into()));
    }
    let lin = [c.e, Complex64::new(c.c, 0.0), c.b.conj()];
    let pq = poly::mul(&[-c.p, ONE], &[-c.q, ONE]);
    let a = poly::add(
        &poly::mul(&lin, &lin),
        &poly::scale(&poly::mul(&pq, &[ZERO, c.e.conj(), c.d.conj()]), Complex64::new(-4.0, 0.0)),
    );
    let a = poly::scale(&a, 1.0 / denom);
    let b = poly::scale(&pq, 4.0 / denom);
    Ok((a, b))
}

impl CurveN1 {
    /// The Hermitian coefficient matrix for a given free term.
    pub fn hermitian(&self, h: f64) -> HermitianCurve {
        HermitianCurve::from_lower(2, |n, m| match (n, m) {
            (2, 2) => ONE,
            (2, 1) => self.b,
            (1, 1) => Complex64::new(self.c, 0.0),
            (2, 0) => self.d,
            (1, 0) => self.e,
            (0, 0) => Complex64::new(h, 0.0),
            _ => unreachable!(),
        })
        .expect("finite coefficients")
    }

    /// True when `p, q, μ, ν` are all real.
    pub fn is_real(&self) -> bool {
        [self.p, self.q, self.mu, self.nu].iter().all(|v| v.im == 0.0)
    }

    fn require_solved(&self) -> Result<(f64, BranchData)> {
        match (self.h, self.branch) {
            (Some(h), Some(b)) => Ok((h, b)),
            _ => Err(Error::InvalidInput("curve has no double point yet; call solve_double_point".into())),
        }
    }

    pub fn branch_data(&self) -> Result<BranchData> {
        Ok(self.require_solved()?.1)
    }

    /// Monic quartic for the solved `h`.
    pub fn quartic(&self) -> Result<Vec<Complex64>> {
        quartic_from_curve(self, self.require_solved()?.0)
    }

    /// `√P2(z)` on the given sheet with the cut on the segment `[E1, E2]`.
    pub fn sqrt_p2(&self, z: Complex64, sheet: i8) -> Result<Complex64> {
        let br = self.branch_data()?;
        sqrt_p2(br.e1, br.e2, z, sheet)
    }

    /// Pole locations and residues implied by the sheet conventions.
    pub fn residue_at(&self, point: Complex64, sheet: i8) -> Result<Complex64> {
        let br = self.branch_data()?;
        let y = sqrt_p2(br.e1, br.e2, point, sheet)?;
        let sqrt_p4 = (point - br.e3) * y;
        let (other, num) = if point == self.p {
            (self.q, self.mu * (self.q - self.p))
        } else if point == self.q {
            (self.p, self.nu * (self.p - self.q))
        } else {
            return Err(Error::InvalidInput("residues exist only at p and q".into()));
        };
        Ok((num + (self.q.conj() - self.p.conj()) * sqrt_p4) / (2.0 * (point - other)))
    }

    /// Candidate real-section seeds: real roots of `R` along the line through `q` and `p`.
    pub fn section_seeds(&self, h: f64) -> Result<Vec<Complex64>> {
        let curve = self.hermitian(h);
        let coeffs = curve.on_line(self.q, self.p);
        let ts = poly::real_roots(&coeffs, 1e-7)?;
        // clustered roots mark a singular point of the section, not a smooth branch
        let isolated = |k: usize| {
            let near = |j: usize| j != k && (ts[j] - ts[k]).abs() < 1e-5;
            !(0..ts.len()).any(near)
        };
        Ok((0..ts.len())
            .filter(|&k| isolated(k))
            .map(|k| self.q + (self.p - self.q) * ts[k])
            .collect())
    }

    /// Length unit for tracing.
    pub fn scale(&self) -> f64 {
        (self.p - self.q).norm()
    }

    pub fn to_json(&self) -> Result<String> {
        let (h, br) = self.require_solved()?;
        let data = CurveJson {
            p: self.p,
            q: self.q,
            mu: self.mu,
            nu: self.nu,
            h,
            e: vec![br.e1, br.e2, br.e3].into_iter().map(|c| [c.re, c.im]).collect(),
        };
        Ok(serde_json::to_string_pretty(&data)?)
    }

    /// Reads a solved curve; the coefficients are rebuilt from `(p, q, μ, ν)`.
    pub fn from_json(text: &str) -> Result<CurveN1> {
        let data: CurveJson = serde_json::from_str(text)?;
        if data.e.len() != 3 {
            return Err(Error::Parse(format!("`E` must hold 3 points, found {}", data.e.len())));
        }
        let mut c = build_curve(data.p, data.q, data.mu, data.nu)?;
        let e: Vec<Complex64> = data.e.iter().map(|v| Complex64::new(v[0], v[1])).collect();
        c.h = Some(data.h);
        c.branch = Some(BranchData { e1: e[0], e2: e[1], e3: e[2] });
        c.q_sheet = q_sheet_of(&c)?;
        Ok(c)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn read_json(path: &Path) -> Result<CurveN1> {
        CurveN1::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Serialize, Deserialize)]
struct CurveJson {
    #[serde(with = "complex_pair")]
    p: Complex64,
    #[serde(with = "complex_pair")]
    q: Complex64,
    #[serde(with = "complex_pair")]
    mu: Complex64,
    #[serde(with = "complex_pair")]
    nu: Complex64,
    h: f64,
    #[serde(rename = "E")]
    e: Vec<[f64; 2]>,
}

/// `√((z−E1)(z−E2))` with sign `+` on sheet 1 (`→ z` at infinity) and the cut on `[E1, E2]`.
pub fn sqrt_p2(e1: Complex64, e2: Complex64, z: Complex64, sheet: i8) -> Result<Complex64> {
    let m = 0.5 * (e1 + e2);
    let delta = 0.5 * (e2 - e1);
    let x = z - m;
    if x.norm() == 0.0 {
        return Err(Error::OnCut(z));
    }
    let ratio = delta * delta / (x * x);
    if ratio.re >= 1.0 && ratio.im.abs() <= 1e-14 * ratio.re {
        return Err(Error::OnCut(z));
    }
    let y = x * (ONE - ratio).sqrt();
    Ok(if sheet == 1 { y } else { -y })
}

fn q_sheet_of(c: &CurveN1) -> Result<i8> {
    let r1 = c.residue_at(c.q, 1)?;
    let r2 = c.residue_at(c.q, 2)?;
    Ok(if (r1 + c.nu).norm() <= (r2 + c.nu).norm() { 1 } else { 2 })
}

/// `S(z)` on the given sheet.
pub fn schwarz_two_sheeted(c: &CurveN1, z: Complex64, sheet: i8) -> Result<Complex64> {
    let br = c.branch_data()?;
    if z == c.p || z == c.q {
        return Err(Error::Singular(format!("{z} is a pole of the Schwarz function")));
    }
    let y = sqrt_p2(br.e1, br.e2, z, sheet)?;
    let num = c.p * c.nu + c.q * c.mu - (c.mu + c.nu) * z + (c.q.conj() - c.p.conj()) * (z - br.e3) * y;
    Ok(0.5 * (c.p.conj() + c.q.conj()) + num / (2.0 * (z - c.p) * (z - c.q)))
}

/// `S'(z)` on the given sheet.
pub fn schwarz_derivative_two_sheeted(c: &CurveN1, z: Complex64, sheet: i8) -> Result<Complex64> {
    let br = c.branch_data()?;
    if z == c.p || z == c.q {
        return Err(Error::Singular(format!("{z} is a pole of the Schwarz function")));
    }
    let y = sqrt_p2(br.e1, br.e2, z, sheet)?;
    let dy = (z - 0.5 * (br.e1 + br.e2)) / y;
    let k = c.q.conj() - c.p.conj();
    let num = c.p * c.nu + c.q * c.mu - (c.mu + c.nu) * z + k * (z - br.e3) * y;
    let dnum = -(c.mu + c.nu) + k * (y + (z - br.e3) * dy);
    let den = (z - c.p) * (z - c.q);
    let dden = 2.0 * z - c.p - c.q;
    Ok((dnum * den - num * dden) / (2.0 * den * den))
}

/// A traced real-section component and its physical-sheet diagnostic.
#[derive(Debug, Clone)]
pub struct SectionComponent {
    /// Adaptive predictor–corrector points on the component.
    pub polyline: Vec<Complex64>,
    /// `sup |S₁(z) − z̄|` over the polyline points.
    pub sheet_residual: f64,
    pub physical: bool,
}

impl SectionComponent {
    /// True when `z` lies inside the component.
    pub fn encloses(&self, z: Complex64) -> bool {
        polyline_winding(&self.polyline, z) != 0
    }
}

/// Components with `sup |S₁ − z̄|` below this (relative to the scale) count as physical.
pub const PHYSICAL_TOLERANCE: f64 = 1e-6;

/// Traces all real-section components reachable from the seeds on the `q`–`p` line
/// and classifies them by the sheet-1 test.
pub fn classify_section(c: &CurveN1, opts: &TraceOptions) -> Result<Vec<SectionComponent>> {
    let (h, _) = c.require_solved()?;
    let curve = c.hermitian(h);
    let seeds = c.section_seeds(h)?;
    let lines = trace_polylines(&curve, &seeds, opts)?;
    Ok(lines
        .into_iter()
        .map(|polyline| {
            let sheet_residual = polyline
                .iter()
                .map(|z| schwarz_two_sheeted(c, *z, 1).map_or(f64::INFINITY, |s| (s - z.conj()).norm()))
                .fold(0.0, f64::max);
            let physical = sheet_residual < PHYSICAL_TOLERANCE * c.scale().max(1.0);
            SectionComponent { polyline, sheet_residual, physical }
        })
        .collect())
}

/// The unique physical component of a solved curve.
pub fn physical_component(c: &CurveN1, opts: &TraceOptions) -> Result<SectionComponent> {
    let mut phys: Vec<SectionComponent> = classify_section(c, opts)?.into_iter().filter(|s| s.physical).collect();
    match phys.len() {
        1 => Ok(phys.remove(0)),
        k => Err(Error::Infeasible(format!("real section has {k} physical components, expected 1"))),
    }
}

/// The unique physical boundary of a solved curve as a contour.
pub fn physical_contour(c: &CurveN1, opts: &TraceOptions) -> Result<Contour> {
    let comp = physical_component(c, opts)?;
    finish_component(&c.hermitian(c.require_solved()?.0), &comp.polyline, opts)
}

/// A double-point candidate before the physical filters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoublePointCandidate {
    pub h: Complex64,
    pub branch: BranchData,
}

/// Every `h` for which the quartic acquires a double root: roots `z₀` of
/// `A B' − A' B` give `h = A(z₀)/B(z₀)`.
pub fn double_point_candidates(c: &CurveN1) -> Result<Vec<DoublePointCandidate>> {
    let (a, b) = quartic_parts(c)?;
    let w = poly::add(
        &poly::mul(&a, &poly::derivative(&b)),
        &poly::scale(&poly::mul(&poly::derivative(&a), &b), -ONE),
    );
    let scale = c.scale();
    let mut out = Vec::new();
    for z0 in poly::roots(&w)? {
        let bz = poly::eval(&b, z0);
        if bz.norm() < 1e-12 * poly::eval(&b, Complex64::new(scale + z0.norm(), 0.0)).norm() {
            continue;
        }
        let h = poly::eval(&a, z0) / bz;
        let p4 = poly::add(&a, &poly::scale(&b, -h));
        let quad = poly::deflate(&poly::deflate(&p4, z0), z0);
        // quad = z² + β z + γ
        let (beta, gamma) = (quad[1] / quad[2], quad[0] / quad[2]);
        let disc = (beta * beta - 4.0 * gamma).sqrt();
        let (r1, r2) = ((-beta - disc) / 2.0, (-beta + disc) / 2.0);
        let (e1, e2) = if (r1.re, r1.im) <= (r2.re, r2.im) { (r1, r2) } else { (r2, r1) };
        out.push(DoublePointCandidate { h, branch: BranchData { e1, e2, e3: z0 } });
    }
    Ok(out)
}

/// Picks the physical double point: real `h`, ordering `q < E1 < E2 < p` in the real
/// family, residue `−μ` at `p` on sheet 1, and exactly one physical real-section
/// component that encloses both branch points.
pub fn solve_double_point(c: &CurveN1) -> Result<CurveN1> {
    solve_double_point_with(c, &TraceOptions::coarse(c.scale()))
}

pub fn solve_double_point_with(c: &CurveN1, opts: &TraceOptions) -> Result<CurveN1> {
    let scale = c.scale();
    let real = c.is_real();
    let mut survivors: Vec<CurveN1> = Vec::new();
    let mut rejected = Vec::new();
    for cand in double_point_candidates(c)? {
        let br = cand.branch;
        if cand.h.im.abs() > 1e-9 * cand.h.norm().max(1.0) {
            continue;
        }
        if (br.e1 - br.e2).norm() < 1e-9 * scale {
            rejected.push(format!("h = {:.6}: E1 = E2", cand.h.re));
            continue;
        }
        let mut trial = c.clone();
        trial.h = Some(cand.h.re);
        let mut br = br;
        if real {
            let tol = 1e-9 * scale;
            if [br.e1, br.e2, br.e3].iter().any(|e| e.im.abs() > tol) {
                rejected.push(format!("h = {:.6}: complex roots", cand.h.re));
                continue;
            }
            br = BranchData {
                e1: Complex64::new(br.e1.re, 0.0),
                e2: Complex64::new(br.e2.re, 0.0),
                e3: Complex64::new(br.e3.re, 0.0),
            };
            if !(c.q.re < br.e1.re && br.e1.re < br.e2.re && br.e2.re < c.p.re) {
                rejected.push(format!("h = {:.6}: ordering q < E1 < E2 < p fails", cand.h.re));
                continue;
            }
        }
        trial.branch = Some(br);
        let res_p = trial.residue_at(c.p, 1)?;
        if (res_p + c.mu).norm() > 1e-8 * c.mu.norm().max(1.0) {
            rejected.push(format!("h = {:.6}: sheet-1 residue at p is {res_p}", cand.h.re));
            continue;
        }
        trial.q_sheet = q_sheet_of(&trial)?;
        match classify_section(&trial, opts) {
            Ok(comps) => {
                let phys: Vec<_> = comps.iter().filter(|s| s.physical).collect();
                let encloses = phys.len() == 1 && phys[0].encloses(br.e1) && phys[0].encloses(br.e2);
                if encloses {
                    survivors.push(trial);
                } else {
                    rejected.push(format!(
                        "h = {:.6}: {} physical components, branch points enclosed: {}",
                        cand.h.re,
                        phys.len(),
                        encloses
                    ));
                }
            }
            Err(e) => rejected.push(format!("h = {:.6}: {e}", cand.h.re)),
        }
    }
    match survivors.len() {
        1 => Ok(survivors.remove(0)),
        0 => Err(Error::Infeasible(format!(
            "no admissible double point for p = {}, q = {}, mu = {}, nu = {} ({})",
            c.p,
            c.q,
            c.mu,
            c.nu,
            rejected.join("; ")
        ))),
        k => Err(Error::Infeasible(format!("{k} admissible double points; the physical one is ambiguous"))),
    }
}

/// Sheet-1 Schwarz function of a solved curve paired with its traced boundary.
#[derive(Debug, Clone)]
pub struct CurveSchwarz {
    pub curve: CurveN1,
    pub boundary: Contour,
}

impl SchwarzFunction for CurveSchwarz {
    fn eval(&self, z: Complex64) -> Result<Complex64> {
        schwarz_two_sheeted(&self.curve, z, 1)
    }

    fn derivative(&self, z: Complex64) -> Result<Complex64> {
        schwarz_derivative_two_sheeted(&self.curve, z, 1)
    }

    fn contour(&self) -> &Contour {
        &self.boundary
    }
}
