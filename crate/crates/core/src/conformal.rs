//! Exterior conformal maps from `{|w| > 1}` onto the oil domain.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, Contour};
use crate::spectral;

/// Tail size (relative to `r`) below which a truncated map counts as converged.
pub const TAIL_TOLERANCE: f64 = 1e-10;

/// Default truncation order for evolving maps.
pub const DEFAULT_ORDER: usize = 32;

/// Default bound on the sup-norm fit residual, relative to the conformal radius.
pub const DEFAULT_FIT_TOLERANCE: f64 = 1e-8;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// A map `w ↦ z` analytic in `|w| > 1` with a simple pole at infinity.
///
/// `value` and `derivative` are unchecked so that continuations into `|w| < 1`
/// (used for the Schwarz function) can share the implementation.
pub trait ExteriorMap {
    fn value(&self, w: Complex64) -> Complex64;
    fn derivative(&self, w: Complex64) -> Complex64;
    /// Coefficient of `w` at infinity.
    fn radius(&self) -> f64;
    /// Constant term of the expansion at infinity.
    fn center(&self) -> Complex64;

    /// The map with conjugated coefficients, `conj(f(conj w))`.
    fn conj_value(&self, w: Complex64) -> Complex64 {
        self.value(w.conj()).conj()
    }

    fn conj_derivative(&self, w: Complex64) -> Complex64 {
        self.derivative(w.conj()).conj()
    }

    /// Samples `f(e^{2πij/n})`.
    fn boundary_samples(&self, n: usize) -> Vec<Complex64> {
        spectral::grid(n)
            .map(|t| self.value(Complex64::from_polar(1.0, t)))
            .collect()
    }

    /// Newton inversion `w(z)`, seeded at `hint` or from the far field and the
    /// nearest boundary point. Converged iterates may lie on either side of the
    /// unit circle; callers decide which side is admissible.
    fn invert(&self, z: Complex64, hint: Option<Complex64>) -> Result<Complex64> {
        let scale = self.radius() + z.norm();
        let newton = |seed: Complex64| -> Complex64 {
            let mut w = seed;
            for _ in 0..100 {
                let d = self.derivative(w);
                if d.norm() == 0.0 || !w.is_finite() {
                    break;
                }
                let mut dw = (self.value(w) - z) / d;
                // keep steps modest so the iterate does not jump across poles
                let cap = 0.5 * w.norm().max(0.5);
                if dw.norm() > cap {
                    dw *= cap / dw.norm();
                }
                w -= dw;
                if dw.norm() <= 1e-15 * w.norm().max(1.0) {
                    break;
                }
            }
            w
        };
        let converged = |w: Complex64| w.is_finite() && (self.value(w) - z).norm() <= 1e-13 * scale;
        let far = (z - self.center()) / self.radius();
        let far = if far.norm() > 1.0 { far } else { far / far.norm().max(1e-3) * 1.5 };
        let boundary = || {
            let n = 256;
            let (j, _) = self
                .boundary_samples(n)
                .iter()
                .enumerate()
                .map(|(j, s)| (j, (s - z).norm()))
                .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
            Complex64::from_polar(1.0, 2.0 * PI * j as f64 / n as f64)
        };
        let mut last = far;
        if let Some(h) = hint {
            last = newton(h);
            if converged(last) {
                return Ok(last);
            }
        }
        for seed in [Some(far), None] {
            last = newton(seed.unwrap_or_else(boundary));
            if converged(last) {
                return Ok(last);
            }
        }
        Err(Error::Inversion { z, last })
    }
}

/// `f(w) = r·w + a₀ + Σ_{k=1..K} u_k w^{-k}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MapJson", into = "MapJson")]
pub struct LaurentMap {
    r: f64,
    a0: Complex64,
    u: Vec<Complex64>,
}

#[derive(Serialize, Deserialize)]
struct MapJson {
    r: f64,
    a0: [f64; 2],
    u: Vec<[f64; 2]>,
}

impl TryFrom<MapJson> for LaurentMap {
    type Error = Error;
    fn try_from(j: MapJson) -> Result<Self> {
        LaurentMap::new(
            j.r,
            Complex64::new(j.a0[0], j.a0[1]),
            j.u.iter().map(|c| Complex64::new(c[0], c[1])).collect(),
        )
    }
}

impl From<LaurentMap> for MapJson {
    fn from(m: LaurentMap) -> Self {
        MapJson {
            r: m.r,
            a0: [m.a0.re, m.a0.im],
            u: m.u.iter().map(|c| [c.re, c.im]).collect(),
        }
    }
}

/// Whether the truncated tail is negligible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailStatus {
    Converged,
    TruncationLimited,
}

impl LaurentMap {
    pub fn new(r: f64, a0: Complex64, u: Vec<Complex64>) -> Result<Self> {
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::InvalidInput(format!("conformal radius must be positive, got {r}")));
        }
        if !a0.is_finite() || u.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("map coefficients must be finite".into()));
        }
        Ok(LaurentMap { r, a0, u })
    }

    /// `f(w) = r·w`.
    pub fn circle(r: f64) -> Result<Self> {
        LaurentMap::new(r, ZERO, Vec::new())
    }

    /// Random map with `Σ k|u_k| ≤ spread·r`, which guarantees univalence when `spread < 1`.
    pub fn random(order: usize, spread: f64, seed: u64) -> Result<Self> {
        if !(0.0..1.0).contains(&spread) {
            return Err(Error::InvalidInput(format!("spread must lie in [0, 1), got {spread}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = 1.0;
        let weights: Vec<f64> = (1..=order).map(|k| rng.random::<f64>() / (k * k) as f64).collect();
        let total: f64 = weights.iter().enumerate().map(|(i, w)| (i + 1) as f64 * w).sum();
        let u = weights
            .iter()
            .map(|w| {
                let phase = rng.random::<f64>() * 2.0 * PI;
                Complex64::from_polar(spread * r * w / total.max(f64::MIN_POSITIVE), phase)
            })
            .collect();
        let a0 = Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5) * 0.1;
        LaurentMap::new(r, a0, u)
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn a0(&self) -> Complex64 {
        self.a0
    }

    pub fn u(&self) -> &[Complex64] {
        &self.u
    }

    /// Truncation order `K`.
    pub fn order(&self) -> usize {
        self.u.len()
    }

    /// The same map padded with zeros (or truncated) to order `k`.
    pub fn with_order(&self, k: usize) -> LaurentMap {
        let mut u = self.u.clone();
        u.resize(k, ZERO);
        LaurentMap { r: self.r, a0: self.a0, u }
    }

    /// `f(w)`, defined for `|w| ≥ 1`.
    pub fn evaluate(&self, w: Complex64) -> Result<Complex64> {
        self.check_domain(w)?;
        Ok(self.value(w))
    }

    /// `f'(w)`, defined for `|w| ≥ 1`.
    pub fn evaluate_derivative(&self, w: Complex64) -> Result<Complex64> {
        self.check_domain(w)?;
        Ok(self.derivative(w))
    }

    fn check_domain(&self, w: Complex64) -> Result<()> {
        if !w.is_finite() || w.norm() < 1.0 - 1e-14 {
            return Err(Error::Domain(format!("|w| = {} is inside the unit disk", w.norm())));
        }
        Ok(())
    }

    /// Area enclosed by the boundary, `π(r² − Σ k|u_k|²)`.
    pub fn area(&self) -> f64 {
        PI * (self.r * self.r
            - self
                .u
                .iter()
                .enumerate()
                .map(|(i, c)| (i + 1) as f64 * c.norm_sqr())
                .sum::<f64>())
    }

    pub fn tail_status(&self) -> TailStatus {
        match self.u.last() {
            Some(c) if c.norm() >= TAIL_TOLERANCE * self.r => TailStatus::TruncationLimited,
            _ => TailStatus::Converged,
        }
    }

    /// Boundary samples of `f'` on a grid fine enough for the univalence check.
    fn check_samples(&self) -> usize {
        (64 * self.order().max(4)).next_power_of_two()
    }

    /// `min |f'(e^{iφ})|` over `64·K` boundary samples.
    pub fn univalence_margin(&self) -> f64 {
        let n = self.check_samples();
        let mut coeffs = vec![ZERO; n];
        // w f'(w) = r w − Σ k u_k w^{-k}; |f'| = |w f'| on the circle
        coeffs[1] = Complex64::new(self.r, 0.0);
        for (i, c) in self.u.iter().enumerate() {
            let k = i + 1;
            if k < n / 2 {
                coeffs[n - k] = -(k as f64) * c;
            }
        }
        spectral::synthesize(&coeffs)
            .iter()
            .map(|d| d.norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// Samples `f(e^{2πij/n})`; `n` must be a power of two with `n ≥ 4K`.
    pub fn boundary_contour(&self, n: usize) -> Result<Contour> {
        if !n.is_power_of_two() || n < 4 || n < 4 * self.order() {
            return Err(Error::InvalidInput(format!(
                "sample count {n} must be a power of two and at least max(4, 4K) = {}",
                (4 * self.order()).max(4)
            )));
        }
        let margin = self.univalence_margin();
        if margin < crate::dynamics::CUSP_THRESHOLD * self.r {
            return Err(Error::Cusp(format!("min |f'| on the unit circle is {margin:.3e}")));
        }
        Contour::new(self.boundary_samples(n)).map_err(|e| match e {
            Error::Geometry(msg) => Error::Cusp(format!("boundary image is not a simple curve: {msg}")),
            other => other,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<LaurentMap> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn read_json(path: &Path) -> Result<LaurentMap> {
        LaurentMap::from_json(&std::fs::read_to_string(path)?)
    }
}

impl ExteriorMap for LaurentMap {
    fn value(&self, w: Complex64) -> Complex64 {
        let inv = 1.0 / w;
        // Horner in 1/w for the tail
        let mut tail = ZERO;
        for c in self.u.iter().rev() {
            tail = (tail + c) * inv;
        }
        self.r * w + self.a0 + tail
    }

    fn derivative(&self, w: Complex64) -> Complex64 {
        let inv = 1.0 / w;
        let mut tail = ZERO;
        for (i, c) in self.u.iter().enumerate().rev() {
            tail = (tail + (i + 1) as f64 * c) * inv;
        }
        self.r - tail * inv
    }

    fn radius(&self) -> f64 {
        self.r
    }

    fn center(&self) -> Complex64 {
        self.a0
    }
}

/// `f(w) = r·w + a₀ + Σ_j c_j / (w − w_j)` with every `|w_j| < 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalMap {
    r: f64,
    a0: Complex64,
    terms: Vec<(Complex64, Complex64)>,
}

impl RationalMap {
    /// `terms` holds `(c_j, w_j)` pairs.
    pub fn new(r: f64, a0: Complex64, terms: Vec<(Complex64, Complex64)>) -> Result<Self> {
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::InvalidInput(format!("conformal radius must be positive, got {r}")));
        }
        if let Some((_, w0)) = terms.iter().find(|(_, w0)| !(w0.norm() < 1.0)) {
            return Err(Error::InvalidInput(format!("pole {w0} of the map must lie inside the unit disk")));
        }
        Ok(RationalMap { r, a0, terms })
    }

    pub fn terms(&self) -> &[(Complex64, Complex64)] {
        &self.terms
    }
}

impl ExteriorMap for RationalMap {
    fn value(&self, w: Complex64) -> Complex64 {
        self.r * w + self.a0 + self.terms.iter().map(|(c, w0)| c / (w - w0)).sum::<Complex64>()
    }

    fn derivative(&self, w: Complex64) -> Complex64 {
        self.r - self
            .terms
            .iter()
            .map(|(c, w0)| c / ((w - w0) * (w - w0)))
            .sum::<Complex64>()
    }

    fn radius(&self) -> f64 {
        self.r
    }

    fn center(&self) -> Complex64 {
        self.a0
    }
}

/// Least-squares Laurent fit of a contour sampled uniformly in the circle parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct MapFit {
    pub map: LaurentMap,
    /// Bound on the sup-norm mismatch: sum of the moduli of discarded modes.
    pub residual: f64,
}

/// Fits a Laurent map of order `order`, failing when the residual exceeds
/// [`DEFAULT_FIT_TOLERANCE`] times the conformal radius.
pub fn fit_map(c: &Contour, order: usize) -> Result<MapFit> {
    fit_map_with_tolerance(c, order, DEFAULT_FIT_TOLERANCE)
}

pub fn fit_map_with_tolerance(c: &Contour, order: usize, tolerance: f64) -> Result<MapFit> {
    let n = c.len();
    if order > (n - 1) / 2 {
        return Err(Error::InvalidInput(format!("order {order} is not resolved by {n} samples")));
    }
    let coeffs = spectral::fourier_coefficients(c.samples());
    let lead = spectral::mode(&coeffs, 1);
    let r = lead.norm();
    if r == 0.0 {
        return Err(Error::FitFailure { residual: f64::INFINITY, threshold: tolerance });
    }
    // gauge: parameter shift θ → θ − α makes the w-coefficient real positive
    let rot = lead / r;
    let u: Vec<Complex64> = (1..=order)
        .map(|k| spectral::mode(&coeffs, -(k as i64)) * rot.powi(k as i32))
        .collect();
    let kept = |k: usize| -> bool {
        let m = spectral::wavenumber(k, n);
        (-(order as i64)..=1).contains(&m)
    };
    let residual: f64 = coeffs
        .iter()
        .enumerate()
        .filter(|(k, _)| !kept(*k))
        .map(|(_, c)| c.norm())
        .sum();
    let map = LaurentMap::new(r, spectral::mode(&coeffs, 0), u)?;
    let threshold = tolerance * r;
    if residual > threshold {
        return Err(Error::FitFailure { residual, threshold });
    }
    Ok(MapFit { map, residual })
}

/// Exterior harmonic moments: `t₀ = area/π` and `t_k`, `k = 1..m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentVector {
    pub t0: f64,
    #[serde(with = "complex_list")]
    pub tk: Vec<Complex64>,
}

impl MomentVector {
    /// Max-norm distance between two moment vectors of equal length.
    pub fn distance(&self, other: &MomentVector) -> f64 {
        self.tk
            .iter()
            .zip(&other.tk)
            .map(|(a, b)| (a - b).norm())
            .fold((self.t0 - other.t0).abs(), f64::max)
    }
}

/// `t_k = (1/(2πik)) ∮ z^{-k} z̄ dz` by trapezoid quadrature on boundary samples.
pub fn harmonic_moments(m: &LaurentMap, count: usize) -> Result<MomentVector> {
    let n = (64 * (m.order() + count + 1)).next_power_of_two().max(1024);
    harmonic_moments_sampled(m, count, n)
}

/// [`harmonic_moments`] with an explicit sample count.
pub fn harmonic_moments_sampled(m: &LaurentMap, count: usize, n: usize) -> Result<MomentVector> {
    let z = m.boundary_samples(n);
    let dz: Vec<Complex64> = spectral::grid(n)
        .map(|t| {
            let w = Complex64::from_polar(1.0, t);
            Complex64::i() * w * m.derivative(w)
        })
        .collect();
    let spacing = geometry::Contour::new(z.clone())
        .map(|c| c.mean_spacing())
        .map_err(|e| Error::Domain(format!("boundary is not a valid contour: {e}")))?;
    let closest = z.iter().map(|s| s.norm()).fold(f64::INFINITY, f64::min);
    if closest < 3.0 * spacing {
        return Err(Error::Domain(format!(
            "contour passes within {closest:.3e} of the origin; moments are undefined (translate first)"
        )));
    }
    let h = 2.0 * PI / n as f64;
    let tk = (1..=count)
        .map(|k| {
            let sum: Complex64 = z
                .iter()
                .zip(&dz)
                .map(|(zj, dj)| zj.powi(-(k as i32)) * zj.conj() * dj)
                .sum();
            sum * h / (Complex64::new(0.0, 2.0 * PI * k as f64))
        })
        .collect();
    Ok(MomentVector { t0: m.area() / PI, tk })
}

pub(crate) mod complex_list {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|c| [c.re, c.im]).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Complex64>, D::Error> {
        let raw = Vec::<[f64; 2]>::deserialize(d)?;
        Ok(raw.into_iter().map(|c| Complex64::new(c[0], c[1])).collect())
    }
}

pub(crate) mod complex_pair {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(c: &Complex64, s: S) -> Result<S::Ok, S::Error> {
        [c.re, c.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
        let raw = <[f64; 2]>::deserialize(d)?;
        Ok(Complex64::new(raw[0], raw[1]))
    }
}
