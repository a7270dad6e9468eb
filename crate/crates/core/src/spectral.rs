//! FFT helpers for uniformly sampled periodic data on `[0, 2π)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

/// Signed wavenumber of FFT bin `k` for an `n`-point transform.
pub fn wavenumber(k: usize, n: usize) -> i64 {
    if k <= n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// Fourier coefficients `c_k = (1/n) Σ_j z_j e^{-ikθ_j}`, indexed by FFT bin.
pub fn fourier_coefficients(samples: &[Complex64]) -> Vec<Complex64> {
    let n = samples.len();
    let mut buf = samples.to_vec();
    if n == 0 {
        return buf;
    }
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let inv = 1.0 / n as f64;
    buf.iter_mut().for_each(|c| *c *= inv);
    buf
}

/// Inverse of [`fourier_coefficients`].
pub fn synthesize(coeffs: &[Complex64]) -> Vec<Complex64> {
    let n = coeffs.len();
    let mut buf = coeffs.to_vec();
    if n == 0 {
        return buf;
    }
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    buf
}

/// Coefficient of `e^{imθ}` for signed `m`, zero when `|m|` exceeds the resolved band.
pub fn mode(coeffs: &[Complex64], m: i64) -> Complex64 {
    let n = coeffs.len() as i64;
    if n == 0 || m.abs() > (n - 1) / 2 {
        return Complex64::new(0.0, 0.0);
    }
    coeffs[m.rem_euclid(n) as usize]
}

/// Spectral derivative with respect to the periodic parameter; the Nyquist mode is dropped.
pub fn derivative(samples: &[Complex64]) -> Vec<Complex64> {
    let n = samples.len();
    let mut c = fourier_coefficients(samples);
    for (k, ck) in c.iter_mut().enumerate() {
        let m = wavenumber(k, n);
        if n.is_multiple_of(2) && k == n / 2 {
            *ck = Complex64::new(0.0, 0.0);
        } else {
            *ck *= Complex64::new(0.0, m as f64);
        }
    }
    synthesize(&c)
}

pub fn second_derivative(samples: &[Complex64]) -> Vec<Complex64> {
    let n = samples.len();
    let mut c = fourier_coefficients(samples);
    for (k, ck) in c.iter_mut().enumerate() {
        let m = wavenumber(k, n) as f64;
        if n.is_multiple_of(2) && k == n / 2 {
            *ck = Complex64::new(0.0, 0.0);
        } else {
            *ck *= -m * m;
        }
    }
    synthesize(&c)
}

/// Uniform parameter grid `θ_j = 2πj/n`.
pub fn grid(n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |j| 2.0 * PI * j as f64 / n as f64)
}

/// Evaluates the trigonometric interpolant and its first two θ-derivatives at `theta`.
pub fn interpolate(coeffs: &[Complex64], theta: f64) -> [Complex64; 3] {
    let n = coeffs.len();
    let mut out = [Complex64::new(0.0, 0.0); 3];
    let step = Complex64::from_polar(1.0, theta);
    let mut pos = Complex64::new(1.0, 0.0);
    let mut neg = Complex64::new(1.0, 0.0);
    let half = n / 2;
    out[0] += coeffs[0];
    for m in 1..=half {
        pos *= step;
        neg *= step.conj();
        let mf = m as f64;
        let (cp, cn) = if n.is_multiple_of(2) && m == half {
            // split the Nyquist mode symmetrically
            (coeffs[m] * pos * 0.5, coeffs[m] * neg * 0.5)
        } else {
            (coeffs[m] * pos, coeffs[n - m] * neg)
        };
        out[0] += cp + cn;
        out[1] += Complex64::i() * mf * (cp - cn);
        out[2] += -mf * mf * (cp + cn);
    }
    out
}
