//! Schwarz function of a map-defined droplet: continuation, poles and residues.
//!
//! On the boundary `S(z) = z̄`; off it, `S(z) = f̄(1/w(z))` where `f̄` has conjugated
//! coefficients and `w(z)` is the (continued) inverse map.

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::conformal::{complex_pair, ExteriorMap};
use crate::error::{Error, Result};
use crate::geometry::{cauchy_transform, Contour};
use crate::poly;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Anything that continues `z̄` off a sampled boundary.
pub trait SchwarzFunction {
    fn eval(&self, z: Complex64) -> Result<Complex64>;

    /// The boundary on which `S = z̄`.
    fn contour(&self) -> &Contour;

    /// `S'(z)` by a fourth-order central difference.
    fn derivative(&self, z: Complex64) -> Result<Complex64> {
        let h = 1e-4 * self.contour().diameter();
        let f = |d: f64| self.eval(z + d * h);
        Ok((f(-2.0)? - 8.0 * f(-1.0)? + 8.0 * f(1.0)? - f(2.0)?) / (12.0 * h))
    }
}

/// `S(z) = f̄(1/w(z))` for an exterior map.
#[derive(Debug, Clone)]
pub struct SchwarzEvaluator<M> {
    map: M,
    boundary: Contour,
    /// Continuation of `w(z)` is trusted for `|w|` above this radius.
    inner_radius: f64,
}

impl<M: ExteriorMap + MapCriticalPoints> SchwarzEvaluator<M> {
    pub fn new(map: M, samples: usize) -> Result<Self> {
        let boundary = Contour::new(map.boundary_samples(samples))?;
        let inner_radius = map
            .critical_points()?
            .iter()
            .map(|w| w.norm())
            .filter(|r| *r < 1.0)
            .fold(0.0, f64::max);
        Ok(SchwarzEvaluator { map, boundary, inner_radius })
    }

    pub fn map(&self) -> &M {
        &self.map
    }

    /// Radii `(ρ, 1/ρ)` of the annulus in `w` mapped onto itself by the reflection
    /// `w ↦ 1/w̄`; `S` itself is single-valued wherever `|w| > ρ`.
    pub fn validity_annulus(&self) -> (f64, f64) {
        let rho = self.inner_radius;
        (rho, if rho > 0.0 { 1.0 / rho } else { f64::INFINITY })
    }

    /// Continued preimage of `z`, seeded from the nearest boundary parameter.
    pub fn preimage(&self, z: Complex64, hint: Option<Complex64>) -> Result<Complex64> {
        let hint = hint.or_else(|| {
            let (_, j) = self.boundary.distance_to(z);
            let theta = 2.0 * PI * j as f64 / self.boundary.len() as f64;
            let d = (z - self.boundary.samples()[j]).norm() / self.map.radius();
            let inside = self.boundary.contains(z);
            Some(Complex64::from_polar(if inside { 1.0 / (1.0 + d) } else { 1.0 + d }, theta))
        });
        let w = self.map.invert(z, hint)?;
        if w.norm() <= self.inner_radius {
            return Err(Error::Domain(format!(
                "continuation of the inverse map at {z} reached |w| = {:.3}, inside the branch radius {:.3}",
                w.norm(),
                self.inner_radius
            )));
        }
        Ok(w)
    }

    /// `S` at the point with preimage `w`.
    pub fn at_preimage(&self, w: Complex64) -> Complex64 {
        self.map.conj_value(1.0 / w)
    }

    /// `S'(z) = −f̄'(1/w) / (w² f'(w))`.
    pub fn derivative_at_preimage(&self, w: Complex64) -> Complex64 {
        -self.map.conj_derivative(1.0 / w) / (w * w * self.map.derivative(w))
    }

    /// `|S(conj S(z)) − z̄|`, reusing the reflected preimage `1/w̄` as the Newton seed.
    pub fn unitarity_residual(&self, z: Complex64) -> Result<f64> {
        let w = self.preimage(z, None)?;
        let s = self.at_preimage(w);
        let w2 = self.preimage(s.conj(), Some(1.0 / w.conj()))?;
        Ok((self.at_preimage(w2) - z.conj()).norm())
    }

    /// `|S'(conj S(z))·conj(S'(z)) − 1|`.
    pub fn derivative_identity_residual(&self, z: Complex64) -> Result<f64> {
        let w = self.preimage(z, None)?;
        let s = self.at_preimage(w);
        let w2 = self.preimage(s.conj(), Some(1.0 / w.conj()))?;
        let lhs = self.derivative_at_preimage(w2) * self.derivative_at_preimage(w).conj();
        Ok((lhs - 1.0).norm())
    }

    /// `sup |S(z_j) − z̄_j|` over the boundary samples.
    pub fn boundary_residual(&self) -> f64 {
        let n = self.boundary.len();
        self.boundary
            .samples()
            .iter()
            .enumerate()
            .map(|(j, z)| {
                let w = Complex64::from_polar(1.0, 2.0 * PI * j as f64 / n as f64);
                (self.at_preimage(w) - z.conj()).norm()
            })
            .fold(0.0, f64::max)
    }
}

impl<M: ExteriorMap + MapCriticalPoints> SchwarzFunction for SchwarzEvaluator<M> {
    fn eval(&self, z: Complex64) -> Result<Complex64> {
        Ok(self.at_preimage(self.preimage(z, None)?))
    }

    fn contour(&self) -> &Contour {
        &self.boundary
    }

    fn derivative(&self, z: Complex64) -> Result<Complex64> {
        Ok(self.derivative_at_preimage(self.preimage(z, None)?))
    }
}

/// Zeros of `f'` (where the continued inverse map branches).
pub trait MapCriticalPoints {
    fn critical_points(&self) -> Result<Vec<Complex64>>;
    /// Preimages in `|w| > 1` of the poles of `S` in the oil domain.
    fn pole_preimages(&self) -> Vec<Complex64>;
}

impl MapCriticalPoints for crate::conformal::LaurentMap {
    fn critical_points(&self) -> Result<Vec<Complex64>> {
        // w^{K+1} f'(w) = r w^{K+1} − Σ k u_k w^{K−k}
        let k = self.order();
        let mut c = vec![Complex64::new(0.0, 0.0); k + 2];
        c[k + 1] = Complex64::new(self.r(), 0.0);
        for (i, u) in self.u().iter().enumerate() {
            c[k - i - 1] = -((i + 1) as f64) * u;
        }
        poly::roots(&c)
    }

    fn pole_preimages(&self) -> Vec<Complex64> {
        Vec::new()
    }
}

impl MapCriticalPoints for crate::conformal::RationalMap {
    fn critical_points(&self) -> Result<Vec<Complex64>> {
        // r Π (w − w_j)² − Σ_j c_j Π_{i≠j} (w − w_i)²
        let one = Complex64::new(1.0, 0.0);
        let square = |w0: Complex64| vec![w0 * w0, -2.0 * w0, one];
        let mut num = vec![Complex64::new(self.radius(), 0.0)];
        for (_, w0) in self.terms() {
            num = poly::mul(&num, &square(*w0));
        }
        for (j, (c, _)) in self.terms().iter().enumerate() {
            let mut term = vec![*c];
            for (i, (_, wi)) in self.terms().iter().enumerate() {
                if i != j {
                    term = poly::mul(&term, &square(*wi));
                }
            }
            num = poly::add(&num, &poly::scale(&term, -one));
        }
        poly::roots(&num)
    }

    fn pole_preimages(&self) -> Vec<Complex64> {
        self.terms().iter().map(|(_, w0)| 1.0 / w0.conj()).collect()
    }
}

/// A pole of the Schwarz function in the oil domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pole {
    #[serde(with = "complex_pair")]
    pub z: Complex64,
    pub order: u32,
    #[serde(with = "complex_pair")]
    pub residue: Complex64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PoleData {
    pub poles: Vec<Pole>,
}

impl PoleData {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<PoleData> {
        let data: PoleData = serde_json::from_str(text)?;
        if let Some(p) = data.poles.iter().find(|p| p.order == 0) {
            return Err(Error::Parse(format!("pole at {} has order 0", p.z)));
        }
        Ok(data)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn read_json(path: &Path) -> Result<PoleData> {
        PoleData::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Residue-circle radius relative to the distance from the pole to the boundary.
pub const RESIDUE_RADIUS: f64 = 1e-2;

/// Locates poles of `s` by Newton on `1/S` from each hint, then measures order
/// and residue by small-circle quadrature at two radii.
pub fn extract_poles<S: SchwarzFunction + ?Sized>(s: &S, hints: &[Complex64]) -> Result<PoleData> {
    let mut poles: Vec<Pole> = Vec::new();
    let scale = s.contour().diameter();
    for &hint in hints {
        let z = locate_pole(s, hint)?;
        if let Some(other) = poles.iter().find(|p| (p.z - z).norm() < 1e-6 * scale) {
            if (other.z - z).norm() > 1e-10 * scale {
                return Err(Error::Domain(format!("poles at {} and {z} collide", other.z)));
            }
            continue;
        }
        let (dist, _) = s.contour().distance_to(z);
        let radius = RESIDUE_RADIUS * dist;
        let order = pole_order(s, z, radius)?;
        let residue = circle_integral(s, z, radius, 0, 256)?;
        let check = circle_integral(s, z, radius * 0.1, 0, 256)?;
        if (residue - check).norm() > 1e-8 * residue.norm().max(1.0) {
            return Err(Error::Domain(format!(
                "residue at {z} depends on the integration radius ({residue} vs {check})"
            )));
        }
        poles.push(Pole { z, order, residue });
    }
    Ok(PoleData { poles })
}

/// Newton on `1/S`: the update is `z ← z + S/S'`.
pub fn locate_pole<S: SchwarzFunction + ?Sized>(s: &S, hint: Complex64) -> Result<Complex64> {
    let scale = s.contour().diameter();
    let mut z = hint;
    for _ in 0..60 {
        let v = s.eval(z)?;
        let d = s.derivative(z)?;
        if d.norm() == 0.0 {
            break;
        }
        let mut dz = v / d;
        let (dist, _) = s.contour().distance_to(z);
        if dz.norm() > 0.5 * dist {
            dz *= 0.5 * dist / dz.norm();
        }
        z += dz;
        if dz.norm() < 1e-14 * scale {
            return Ok(z);
        }
    }
    // Newton on 1/S converges linearly for higher-order poles; accept a stalled but
    // consistent iterate
    let v = s.eval(z)?;
    if v.norm() > 1e8 * scale {
        Ok(z)
    } else {
        Err(Error::NotConverged(format!("pole search from {hint} stalled at {z} (|S| = {:.3e})", v.norm())))
    }
}

/// `(1/2πi) ∮ S(ξ)(ξ − z₀)^power dξ` on the circle `|ξ − z₀| = radius`.
pub fn circle_integral<S: SchwarzFunction + ?Sized>(
    s: &S,
    z0: Complex64,
    radius: f64,
    power: i32,
    n: usize,
) -> Result<Complex64> {
    let (dist, _) = s.contour().distance_to(z0);
    if radius >= dist {
        return Err(Error::Geometry(format!(
            "residue circle of radius {radius:.3e} around {z0} meets the contour"
        )));
    }
    let mut sum = Complex64::new(0.0, 0.0);
    for j in 0..n {
        let e = Complex64::from_polar(1.0, 2.0 * PI * j as f64 / n as f64);
        let d = radius * e;
        sum += s.eval(z0 + d)? * d.powi(power) * d;
    }
    Ok(sum / n as f64)
}

fn pole_order<S: SchwarzFunction + ?Sized>(s: &S, z0: Complex64, radius: f64) -> Result<u32> {
    // Laurent coefficient a_{-(k+1)} = (1/2πi) ∮ S (ξ−z₀)^k dξ
    let coeffs: Vec<f64> = (0..6)
        .map(|k| circle_integral(s, z0, radius, k, 256).map(|c| c.norm() / radius.powi(k)))
        .collect::<Result<_>>()?;
    let lead = coeffs.iter().cloned().fold(0.0, f64::max);
    let order = coeffs.iter().rposition(|c| *c > 1e-8 * lead.max(1e-300)).map_or(0, |k| k + 1);
    Ok(order as u32)
}

/// Pole location and residue recovered from the Cauchy transform inside the droplet.
///
/// For a single simple pole `p` in the oil domain and bounded `S` at infinity,
/// interior values satisfy `C(z) = A + B/(z − p)` with residue `iB/(2π)`. The
/// unknowns are fitted linearly through `C·z = A·z + p·C + K`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CauchyPole {
    pub z: Complex64,
    pub residue: Complex64,
    pub fit_residual: f64,
}

pub fn cauchy_pole(c: &Contour, interior: &[Complex64]) -> Result<CauchyPole> {
    if interior.len() < 3 {
        return Err(Error::InvalidInput("at least three interior points are needed".into()));
    }
    let values: Vec<Complex64> = interior.iter().map(|&z| cauchy_transform(c, z)).collect::<Result<_>>()?;
    let m = interior.len();
    let a = DMatrix::from_fn(m, 3, |i, j| match j {
        0 => interior[i],
        1 => values[i],
        _ => Complex64::new(1.0, 0.0),
    });
    let b = DVector::from_fn(m, |i, _| values[i] * interior[i]);
    let svd = a.clone().svd(true, true);
    let x = svd
        .solve(&b, 1e-14)
        .map_err(|e| Error::NotConverged(format!("Cauchy pole fit: {e}")))?;
    let fit_residual = (a * &x - b).norm();
    let (big_a, p, k) = (x[0], x[1], x[2]);
    let big_b = k + big_a * p;
    Ok(CauchyPole { z: p, residue: I * big_b / (2.0 * PI), fit_residual })
}

/// Finite-difference drift of one pole along a one-parameter family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoleDrift {
    #[serde(with = "complex_pair")]
    pub z: Complex64,
    #[serde(with = "complex_pair")]
    pub residue: Complex64,
    #[serde(with = "complex_pair")]
    pub location_rate: Complex64,
    #[serde(with = "complex_pair")]
    pub residue_rate: Complex64,
}

/// Central differences of pole data at parameters `t − δ, t, t + δ`; poles are
/// matched to the centre sample by nearest location.
pub fn residue_flow_check(minus: &PoleData, centre: &PoleData, plus: &PoleData, delta: f64) -> Result<Vec<PoleDrift>> {
    let nearest = |set: &PoleData, z: Complex64| -> Result<Pole> {
        set.poles
            .iter()
            .min_by(|a, b| (a.z - z).norm().partial_cmp(&(b.z - z).norm()).unwrap())
            .copied()
            .ok_or_else(|| Error::Domain("pole missing from a family member".into()))
    };
    centre
        .poles
        .iter()
        .map(|p| {
            let lo = nearest(minus, p.z)?;
            let hi = nearest(plus, p.z)?;
            Ok(PoleDrift {
                z: p.z,
                residue: p.residue,
                location_rate: (hi.z - lo.z) / (2.0 * delta),
                residue_rate: (hi.residue - lo.residue) / (2.0 * delta),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conformal::{LaurentMap, RationalMap};

    fn c64(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn circle_schwarz_function() {
        let s = SchwarzEvaluator::new(LaurentMap::circle(1.0).unwrap(), 256).unwrap();
        assert!((s.eval(c64(2.0, 0.0)).unwrap() - 0.5).norm() < 1e-14);
        let shifted = LaurentMap::new(1.5, c64(0.3, -0.2), Vec::new()).unwrap();
        let s = SchwarzEvaluator::new(shifted, 256).unwrap();
        let z = c64(1.0, 1.0);
        let expected = c64(0.3, 0.2) + 2.25 / (z - c64(0.3, -0.2));
        assert!((s.eval(z).unwrap() - expected).norm() < 1e-13);
    }

    #[test]
    fn boundary_identity_and_unitarity() {
        let m = LaurentMap::random(6, 0.3, 3).unwrap();
        let s = SchwarzEvaluator::new(m, 512).unwrap();
        assert!(s.boundary_residual() < 1e-13);
        // tube of total width 0.1·diameter around the boundary
        let width = 0.05 * s.contour().diameter();
        for (j, z) in s.contour().samples().iter().enumerate().step_by(37) {
            let normal = (s.contour().samples()[(j + 1) % 512] - s.contour().samples()[j]) * Complex64::new(0.0, -1.0);
            let n = normal / normal.norm();
            for t in [-0.9, -0.3, 0.4, 1.0] {
                let p = z + n * (t * width);
                assert!(s.unitarity_residual(p).unwrap() < 1e-10);
                assert!(s.derivative_identity_residual(p).unwrap() < 1e-9);
            }
        }
    }

    #[test]
    fn circle_pole_and_residue() {
        let c = c64(0.4, -0.1);
        let s = SchwarzEvaluator::new(LaurentMap::new(0.8, c, Vec::new()).unwrap(), 256).unwrap();
        let poles = extract_poles(&s, &[c + 0.1]).unwrap();
        assert_eq!(poles.poles.len(), 1);
        let p = poles.poles[0];
        assert!((p.z - c).norm() < 1e-12);
        assert_eq!(p.order, 1);
        assert!((p.residue - 0.64).norm() < 1e-12);
        let a = circle_integral(&s, c, 1e-2, 0, 128).unwrap();
        let b = circle_integral(&s, c, 1e-3, 0, 128).unwrap();
        assert!((a - b).norm() < 1e-10);
    }

    #[test]
    fn rational_map_pole_matches_cauchy_transform() {
        let w0 = c64(0.3, 0.2);
        let m = RationalMap::new(1.0, c64(0.1, 0.0), vec![(c64(0.05, 0.02), w0)]).unwrap();
        let s = SchwarzEvaluator::new(m.clone(), 1024).unwrap();
        let hint = m.value(m.pole_preimages()[0]) + 0.05;
        let poles = extract_poles(&s, &[hint]).unwrap();
        assert_eq!(poles.poles.len(), 1);
        let p = poles.poles[0];
        assert!((p.z - m.value(1.0 / w0.conj())).norm() < 1e-12);

        let interior = [c64(0.0, 0.0), c64(0.3, 0.1), c64(-0.2, 0.3), c64(0.1, -0.4), c64(-0.4, -0.1)];
        let oracle = cauchy_pole(s.contour(), &interior).unwrap();
        assert!((oracle.z - p.z).norm() < 1e-8, "{} vs {}", oracle.z, p.z);
        assert!((oracle.residue - p.residue).norm() < 1e-8);
    }

    #[test]
    fn residue_circle_must_avoid_contour() {
        let s = SchwarzEvaluator::new(LaurentMap::circle(1.0).unwrap(), 128).unwrap();
        assert!(matches!(circle_integral(&s, c64(0.0, 0.0), 1.5, 0, 64), Err(Error::Geometry(_))));
    }

    #[test]
    fn pole_json_round_trip() {
        let data = PoleData { poles: vec![Pole { z: c64(2.0, 0.1), order: 1, residue: c64(-0.1, 0.0) }] };
        assert_eq!(PoleData::from_json(&data.to_json().unwrap()).unwrap(), data);
        assert!(PoleData::from_json(r#"{"poles":[{"z":[0,0],"order":0,"residue":[1,0]}]}"#).is_err());
    }
}
