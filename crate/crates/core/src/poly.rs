//! Dense complex polynomials, coefficients stored lowest degree first.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub fn eval(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

pub fn derivative(coeffs: &[Complex64]) -> Vec<Complex64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| c * k as f64)
        .collect()
}

pub fn mul(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Complex64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub fn add(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|k| {
            a.get(k).copied().unwrap_or_default() + b.get(k).copied().unwrap_or_default()
        })
        .collect()
}

pub fn scale(a: &[Complex64], s: Complex64) -> Vec<Complex64> {
    a.iter().map(|&c| c * s).collect()
}

/// Drops trailing coefficients whose magnitude is below `tol` times the largest one.
pub fn trim(coeffs: &[Complex64], tol: f64) -> Vec<Complex64> {
    let max = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut out = coeffs.to_vec();
    while out.len() > 1 && out.last().is_some_and(|c| c.norm() <= tol * max) {
        out.pop();
    }
    out
}

/// Divides by the monic linear factor `(z - root)`, discarding the remainder.
pub fn deflate(coeffs: &[Complex64], root: Complex64) -> Vec<Complex64> {
    let n = coeffs.len();
    if n <= 1 {
        return Vec::new();
    }
    let mut out = vec![Complex64::new(0.0, 0.0); n - 1];
    let mut carry = coeffs[n - 1];
    out[n - 2] = carry;
    for k in (1..n - 1).rev() {
        carry = coeffs[k] + carry * root;
        out[k - 1] = carry;
    }
    out
}

/// All complex roots, from the eigenvalues of the companion matrix followed by
/// a few Newton corrections on the undeflated polynomial.
pub fn roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let c = trim(coeffs, 0.0);
    let deg = c.len().saturating_sub(1);
    if deg == 0 {
        return Ok(Vec::new());
    }
    let lead = c[deg];
    if lead.norm() == 0.0 || !lead.is_finite() {
        return Err(Error::InvalidInput("polynomial has no finite leading coefficient".into()));
    }
    let mut companion = DMatrix::<Complex64>::zeros(deg, deg);
    for i in 1..deg {
        companion[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    for i in 0..deg {
        companion[(i, deg - 1)] = -c[i] / lead;
    }
    let schur = nalgebra::linalg::Schur::new(companion);
    let eig = schur
        .eigenvalues()
        .ok_or_else(|| Error::NotConverged("companion Schur decomposition".into()))?;
    let dc = derivative(&c);
    Ok(eig
        .iter()
        .map(|&z0| polish(&c, &dc, z0))
        .collect())
}

fn polish(c: &[Complex64], dc: &[Complex64], z0: Complex64) -> Complex64 {
    let mut z = z0;
    let mut best = (eval(c, z).norm(), z);
    for _ in 0..8 {
        let d = eval(dc, z);
        if d.norm() == 0.0 {
            break;
        }
        let next = z - eval(c, z) / d;
        let r = eval(c, next).norm();
        if !next.is_finite() || r >= best.0 {
            break;
        }
        best = (r, next);
        z = next;
    }
    best.1
}

/// Real roots of a polynomial with real coefficients, sorted ascending.
pub fn real_roots(coeffs: &[f64], imag_tol: f64) -> Result<Vec<f64>> {
    let c: Vec<Complex64> = coeffs.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let mut out: Vec<f64> = roots(&c)?
        .into_iter()
        .filter(|z| z.im.abs() <= imag_tol * z.norm().max(1.0))
        .map(|z| z.re)
        .collect();
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(out)
}
