//! Sampled closed contours and the quadratures built on them.
//!
//! A [`Contour`] is a positively oriented, non-self-intersecting closed curve
//! stored as samples taken uniformly in a periodic parameter. All integrals are
//! trapezoid sums in that parameter with the tangent obtained spectrally, which
//! converges geometrically for analytic curves.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral;

/// Largest sample count for which the pairwise self-intersection test runs at construction.
pub const MAX_CHECKED_SAMPLES: usize = 1 << 14;

/// Ratio bound between an adjacent-sample gap and the mean gap.
pub const SPACING_RATIO: f64 = 10.0;

/// A finite point of the complex plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct PlanePoint(Complex64);

impl PlanePoint {
    pub fn new(z: Complex64) -> Result<Self> {
        if z.is_finite() {
            Ok(PlanePoint(z))
        } else {
            Err(Error::InvalidInput(format!("non-finite point {z}")))
        }
    }

    pub fn value(self) -> Complex64 {
        self.0
    }
}

impl TryFrom<[f64; 2]> for PlanePoint {
    type Error = Error;
    fn try_from(v: [f64; 2]) -> Result<Self> {
        PlanePoint::new(Complex64::new(v[0], v[1]))
    }
}

impl From<PlanePoint> for [f64; 2] {
    fn from(p: PlanePoint) -> Self {
        [p.0.re, p.0.im]
    }
}

impl From<PlanePoint> for Complex64 {
    fn from(p: PlanePoint) -> Self {
        p.0
    }
}

/// Closed, positively oriented boundary curve; the last sample connects to the first.
#[derive(Debug, Clone, PartialEq)]
pub struct Contour {
    samples: Vec<Complex64>,
}

impl Contour {
    /// Validates and wraps a sample list.
    pub fn new(samples: Vec<Complex64>) -> Result<Self> {
        validate_samples(&samples)?;
        let area = signed_area(&samples)?;
        if area <= 0.0 {
            return Err(Error::Geometry(format!(
                "contour must be positively oriented (signed area {area:.3e})"
            )));
        }
        check_spacing(&samples)?;
        if samples.len() <= MAX_CHECKED_SAMPLES && self_intersects(&samples) {
            return Err(Error::Geometry("contour intersects itself".into()));
        }
        Ok(Contour { samples })
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Enclosed area, `(1/2)∮ Im(z̄ dz)`.
    pub fn area(&self) -> f64 {
        area_of(&self.samples)
    }

    /// Samples in reverse order (negatively oriented, so not a `Contour`).
    pub fn reversed_samples(&self) -> Vec<Complex64> {
        self.samples.iter().rev().copied().collect()
    }

    /// `dz/dθ` at each sample.
    pub fn tangent(&self) -> Vec<Complex64> {
        spectral::derivative(&self.samples)
    }

    pub fn mean_spacing(&self) -> f64 {
        perimeter(&self.samples) / self.samples.len() as f64
    }

    pub fn perimeter(&self) -> f64 {
        perimeter(&self.samples)
    }

    pub fn diameter(&self) -> f64 {
        let (mut lo, mut hi) = (
            Complex64::new(f64::INFINITY, f64::INFINITY),
            Complex64::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
        );
        for z in &self.samples {
            lo = Complex64::new(lo.re.min(z.re), lo.im.min(z.im));
            hi = Complex64::new(hi.re.max(z.re), hi.im.max(z.im));
        }
        (hi - lo).norm()
    }

    /// Distance from `z` to the polyline through the samples, and the index of the
    /// nearest segment start.
    pub fn distance_to(&self, z: Complex64) -> (f64, usize) {
        let n = self.samples.len();
        let mut best = (f64::INFINITY, 0);
        for j in 0..n {
            let d = segment_distance(z, self.samples[j], self.samples[(j + 1) % n]);
            if d < best.0 {
                best = (d, j);
            }
        }
        best
    }

    /// Larger of the two gaps adjacent to sample `j`.
    pub fn local_spacing(&self, j: usize) -> f64 {
        let n = self.samples.len();
        let a = (self.samples[(j + 1) % n] - self.samples[j]).norm();
        let b = (self.samples[j] - self.samples[(j + n - 1) % n]).norm();
        a.max(b)
    }

    /// Winding number of the contour around `z` (1 inside, 0 outside).
    pub fn winding_number(&self, z: Complex64) -> i64 {
        let n = self.samples.len();
        let mut total = 0.0;
        for j in 0..n {
            let a = self.samples[j] - z;
            let b = self.samples[(j + 1) % n] - z;
            total += (b / a).arg();
        }
        (total / (2.0 * PI)).round() as i64
    }

    pub fn contains(&self, z: Complex64) -> bool {
        self.winding_number(z) != 0
    }

    /// Trigonometric re-interpolation onto `n` uniformly spaced parameter values.
    pub fn resample(&self, n: usize) -> Result<Contour> {
        let coeffs = spectral::fourier_coefficients(&self.samples);
        let samples = spectral::grid(n)
            .map(|t| spectral::interpolate(&coeffs, t)[0])
            .collect();
        Contour::new(samples)
    }

    /// Maximum of `|z' × z''| / |z'|³` over the samples.
    pub fn max_curvature(&self) -> f64 {
        let d1 = spectral::derivative(&self.samples);
        let d2 = spectral::second_derivative(&self.samples);
        d1.iter()
            .zip(&d2)
            .map(|(a, b)| (a.conj() * b).im.abs() / a.norm().powi(3))
            .fold(0.0, f64::max)
    }

    /// CSV text with header `x,y`, 17 significant digits, no closing duplicate row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y\n");
        for z in &self.samples {
            let _ = writeln!(out, "{:.16e},{:.16e}", z.re, z.im);
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Contour> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        match lines.next().map(str::trim) {
            Some("x,y") => {}
            other => {
                return Err(Error::Parse(format!(
                    "contour CSV must start with header `x,y`, found {other:?}"
                )))
            }
        }
        let mut samples = Vec::new();
        for (row, line) in lines.enumerate() {
            let mut parts = line.split(',');
            let mut field = |name: &str| -> Result<f64> {
                parts
                    .next()
                    .ok_or_else(|| Error::Parse(format!("row {}: missing {name}", row + 1)))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("row {}: {name}: {e}", row + 1)))
            };
            let x = field("x")?;
            let y = field("y")?;
            samples.push(Complex64::new(x, y));
        }
        Contour::new(samples)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Contour> {
        Contour::from_csv(&std::fs::read_to_string(path)?)
    }
}

fn validate_samples(samples: &[Complex64]) -> Result<()> {
    if samples.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "a contour needs at least 3 samples, got {}",
            samples.len()
        )));
    }
    if let Some(z) = samples.iter().find(|z| !z.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite sample {z}")));
    }
    Ok(())
}

fn check_spacing(samples: &[Complex64]) -> Result<()> {
    let n = samples.len();
    let mean = perimeter(samples) / n as f64;
    for j in 0..n {
        let gap = (samples[(j + 1) % n] - samples[j]).norm();
        if gap > SPACING_RATIO * mean || gap * SPACING_RATIO < mean {
            return Err(Error::Geometry(format!(
                "sample gap {gap:.3e} at index {j} is outside a factor {SPACING_RATIO} of the mean {mean:.3e}"
            )));
        }
    }
    Ok(())
}

fn perimeter(samples: &[Complex64]) -> f64 {
    let n = samples.len();
    (0..n).map(|j| (samples[(j + 1) % n] - samples[j]).norm()).sum()
}

fn area_of(samples: &[Complex64]) -> f64 {
    let dz = spectral::derivative(samples);
    let h = 2.0 * PI / samples.len() as f64;
    0.5 * h * samples.iter().zip(&dz).map(|(z, d)| (z.conj() * d).im).sum::<f64>()
}

/// Signed area of a closed sample sequence in either orientation.
pub fn signed_area(samples: &[Complex64]) -> Result<f64> {
    validate_samples(samples)?;
    Ok(area_of(samples))
}

/// Cauchy transform `∮ ξ̄ dξ / (z − ξ)`.
///
/// Fails with [`Error::TooClose`] when `z` is within three local sample spacings of
/// the contour; up-sample the contour to evaluate closer.
pub fn cauchy_transform(c: &Contour, z: Complex64) -> Result<Complex64> {
    PlanePoint::new(z)?;
    let (dist, j) = c.distance_to(z);
    let min_distance = 3.0 * c.local_spacing(j);
    if dist <= min_distance {
        return Err(Error::TooClose {
            point: z,
            distance: dist,
            min_distance,
        });
    }
    let dz = c.tangent();
    let h = 2.0 * PI / c.len() as f64;
    Ok(c
        .samples()
        .iter()
        .zip(&dz)
        .map(|(xi, d)| xi.conj() * d / (z - xi))
        .sum::<Complex64>()
        * h)
}

/// Symmetric Hausdorff distance between two sampled contours.
///
/// Each sample is projected onto the other contour's polyline and the projection is
/// then refined on its trigonometric interpolant.
pub fn hausdorff_distance(c1: &Contour, c2: &Contour) -> f64 {
    directed_distance(c1, c2).max(directed_distance(c2, c1))
}

fn directed_distance(from: &Contour, to: &Contour) -> f64 {
    let coeffs = spectral::fourier_coefficients(to.samples());
    let n = to.len();
    let h = 2.0 * PI / n as f64;
    let mut worst: f64 = 0.0;
    for &a in from.samples() {
        let (poly_d, j) = to.distance_to(a);
        // parameter of the polyline projection
        let (p0, p1) = (to.samples()[j], to.samples()[(j + 1) % n]);
        let seg = p1 - p0;
        let t = if seg.norm_sqr() > 0.0 {
            ((a - p0) * seg.conj()).re / seg.norm_sqr()
        } else {
            0.0
        }
        .clamp(0.0, 1.0);
        let mut theta = (j as f64 + t) * h;
        let mut best = poly_d;
        for _ in 0..20 {
            let [z, d1, d2] = spectral::interpolate(&coeffs, theta);
            let diff = z - a;
            best = best.min(diff.norm());
            let g1 = (diff.conj() * d1).re;
            let g2 = d1.norm_sqr() + (diff.conj() * d2).re;
            if g2 <= 0.0 {
                break;
            }
            let dt = (g1 / g2).clamp(-h, h);
            theta -= dt;
            if dt.abs() < 1e-15 {
                break;
            }
        }
        let [z, _, _] = spectral::interpolate(&coeffs, theta);
        best = best.min((z - a).norm());
        worst = worst.max(best);
    }
    worst
}

pub(crate) fn segment_distance(z: Complex64, a: Complex64, b: Complex64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (z - a).norm();
    }
    let t = (((z - a) * ab.conj()).re / len2).clamp(0.0, 1.0);
    (z - (a + ab * t)).norm()
}

fn orient(a: Complex64, b: Complex64, c: Complex64) -> f64 {
    ((b - a).conj() * (c - a)).im
}

fn segments_cross(p1: Complex64, p2: Complex64, q1: Complex64, q2: Complex64) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    (d1 > 0.0) != (d2 > 0.0) && (d3 > 0.0) != (d4 > 0.0) && d1 != 0.0 && d3 != 0.0
}

/// Sweep-and-prune test for crossings between non-adjacent polygon edges.
pub fn self_intersects(samples: &[Complex64]) -> bool {
    let n = samples.len();
    let mut order: Vec<usize> = (0..n).collect();
    let xmin = |j: usize| samples[j].re.min(samples[(j + 1) % n].re);
    let xmax = |j: usize| samples[j].re.max(samples[(j + 1) % n].re);
    order.sort_by(|&a, &b| xmin(a).partial_cmp(&xmin(b)).unwrap());
    for (idx, &i) in order.iter().enumerate() {
        let hi = xmax(i);
        for &j in &order[idx + 1..] {
            if xmin(j) > hi {
                break;
            }
            let adjacent = (i + 1) % n == j || (j + 1) % n == i || i == j;
            if adjacent {
                continue;
            }
            if segments_cross(samples[i], samples[(i + 1) % n], samples[j], samples[(j + 1) % n]) {
                return true;
            }
        }
    }
    false
}

/// Samples of the circle `center + radius·e^{iθ}`.
pub fn circle(center: Complex64, radius: f64, n: usize) -> Result<Contour> {
    Contour::new(
        spectral::grid(n)
            .map(|t| center + Complex64::from_polar(radius, t))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c64(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn unit_circle_area() {
        let c = circle(c64(0.0, 0.0), 1.0, 256).unwrap();
        assert!((c.area() - PI).abs() < 1e-12);
    }

    #[test]
    fn ellipse_area_matches_closed_form() {
        // image of the unit circle under w + 0.3/w
        let samples: Vec<_> = spectral::grid(256)
            .map(|t| {
                let w = Complex64::from_polar(1.0, t);
                w + 0.3 / w
            })
            .collect();
        let c = Contour::new(samples).unwrap();
        assert!((c.area() - PI * (1.0 - 0.09)).abs() < 1e-12);
    }

    #[test]
    fn reversed_contour_has_negative_area() {
        let c = circle(c64(0.3, -0.2), 1.7, 128).unwrap();
        let rev = signed_area(&c.reversed_samples()).unwrap();
        assert!((rev + c.area()).abs() < 1e-12);
        assert!(Contour::new(c.reversed_samples()).is_err());
    }

    #[test]
    fn non_finite_samples_rejected() {
        let mut s: Vec<_> = circle(c64(0.0, 0.0), 1.0, 16).unwrap().samples().to_vec();
        s[3] = c64(f64::NAN, 0.0);
        assert!(matches!(signed_area(&s), Err(Error::InvalidInput(_))));
        assert!(Contour::new(s).is_err());
    }

    #[test]
    fn figure_eight_rejected() {
        // lemniscate-like curve crossing itself at the origin
        let lem: Vec<_> = spectral::grid(64).map(|t| c64(t.cos(), (2.0 * t).sin() / 2.0)).collect();
        assert!(self_intersects(&lem));
        assert!(!self_intersects(circle(c64(0.0, 0.0), 1.0, 64).unwrap().samples()));
    }

    #[test]
    fn uneven_spacing_rejected() {
        let mut s: Vec<_> = spectral::grid(100)
            .map(|t| Complex64::from_polar(1.0, t * t / (2.0 * PI)))
            .collect();
        s.dedup();
        assert!(matches!(Contour::new(s), Err(Error::Geometry(_))));
    }

    #[test]
    fn cauchy_transform_of_circle() {
        let r = 1.5;
        let c = circle(c64(0.0, 0.0), r, 256).unwrap();
        let z = c64(2.0, 1.0);
        let expected = Complex64::new(0.0, 2.0 * PI) * r * r / z;
        assert!((cauchy_transform(&c, z).unwrap() - expected).norm() < 1e-12);
        let inside = cauchy_transform(&c, c64(0.2, -0.3)).unwrap();
        assert!(inside.norm() < 1e-12);
    }

    #[test]
    fn cauchy_transform_under_translation() {
        let shift = c64(0.7, -1.1);
        let base = circle(c64(0.0, 0.0), 1.0, 256).unwrap();
        let moved = circle(shift, 1.0, 256).unwrap();
        let outside = c64(2.5, 0.4);
        let d = cauchy_transform(&moved, outside + shift).unwrap() - cauchy_transform(&base, outside).unwrap();
        assert!(d.norm() < 1e-12);
        let inside = c64(0.1, 0.2);
        let d = cauchy_transform(&moved, inside + shift).unwrap() - cauchy_transform(&base, inside).unwrap();
        let expected = -Complex64::new(0.0, 2.0 * PI) * shift.conj();
        assert!((d - expected).norm() < 1e-12);
    }

    #[test]
    fn cauchy_transform_proximity_error() {
        let c = circle(c64(0.0, 0.0), 1.0, 64).unwrap();
        match cauchy_transform(&c, c64(1.01, 0.0)) {
            Err(Error::TooClose { distance, .. }) => assert!(distance < 0.02),
            other => panic!("expected proximity error, got {other:?}"),
        }
    }

    #[test]
    fn cauchy_transform_is_analytic_off_contour() {
        let samples: Vec<_> = spectral::grid(256)
            .map(|t| {
                let w = Complex64::from_polar(1.0, t);
                w + 0.2 / w + c64(0.0, 0.05) / (w * w)
            })
            .collect();
        let c = Contour::new(samples).unwrap();
        let h = 1e-5;
        for z in [c64(2.0, 0.3), c64(0.1, 0.1), c64(-1.6, -0.9)] {
            let fx = (cauchy_transform(&c, z + h).unwrap() - cauchy_transform(&c, z - h).unwrap()) / (2.0 * h);
            let fy = (cauchy_transform(&c, z + c64(0.0, h)).unwrap()
                - cauchy_transform(&c, z - c64(0.0, h)).unwrap())
                / (2.0 * h);
            // Cauchy–Riemann: ∂f/∂y = i ∂f/∂x
            let scale = cauchy_transform(&c, z).unwrap().norm().max(1.0);
            assert!((fy - Complex64::i() * fx).norm() / scale < 1e-8);
        }
    }

    #[test]
    fn hausdorff_basic_cases() {
        let a = circle(c64(0.0, 0.0), 1.0, 128).unwrap();
        assert_eq!(hausdorff_distance(&a, &a), 0.0);
        let b = circle(c64(0.0, 0.0), 1.25, 128).unwrap();
        assert!((hausdorff_distance(&a, &b) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn hausdorff_phase_offset_is_interpolation_limited() {
        let a = circle(c64(0.0, 0.0), 1.0, 512).unwrap();
        let b = Contour::new(
            spectral::grid(512)
                .map(|t| Complex64::from_polar(1.0, t + 0.37 * 2.0 * PI / 512.0))
                .collect(),
        )
        .unwrap();
        assert!(hausdorff_distance(&a, &b) < 1e-8);
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let samples: Vec<_> = spectral::grid(64)
            .map(|t| {
                let w = Complex64::from_polar(1.0, t);
                c64(0.1, 1.0 / 3.0) + w * 1.234_567_890_123 + c64(0.01, 0.02) / w
            })
            .collect();
        let c = Contour::new(samples).unwrap();
        let back = Contour::from_csv(&c.to_csv()).unwrap();
        for (a, b) in c.samples().iter().zip(back.samples()) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
        assert!(Contour::from_csv("a,b\n1,2\n").is_err());
    }

    fn ellipse(center: (f64, f64), r: f64, u: f64, phase: f64) -> Contour {
        Contour::new(
            spectral::grid(96)
                .map(|t| {
                    let w = Complex64::from_polar(1.0, t + phase);
                    c64(center.0, center.1) + w * r + u / w
                })
                .collect(),
        )
        .unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn area_antisymmetric_under_reversal(r in 0.5f64..2.0, u in -0.3f64..0.3, cx in -1.0f64..1.0) {
            let c = ellipse((cx, 0.0), r, u * r, 0.0);
            let rev = signed_area(&c.reversed_samples()).unwrap();
            prop_assert!((rev + c.area()).abs() < 1e-12 * c.area().max(1.0));
        }

        #[test]
        fn hausdorff_is_a_metric(
            a in (-0.5f64..0.5, 0.8f64..1.5, -0.2f64..0.2),
            b in (-0.5f64..0.5, 0.8f64..1.5, -0.2f64..0.2),
            c in (-0.5f64..0.5, 0.8f64..1.5, -0.2f64..0.2),
        ) {
            let ca = ellipse((a.0, 0.0), a.1, a.2, 0.0);
            let cb = ellipse((b.0, 0.1), b.1, b.2, 0.3);
            let cc = ellipse((c.0, -0.1), c.1, c.2, 1.1);
            let ab = hausdorff_distance(&ca, &cb);
            prop_assert_eq!(ab, hausdorff_distance(&cb, &ca));
            let ac = hausdorff_distance(&ca, &cc);
            let cb_ = hausdorff_distance(&cc, &cb);
            prop_assert!(ab <= ac + cb_ + 1e-9);
        }
    }
}
