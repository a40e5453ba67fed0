//! Generalized eigenvalue extremes of SPD pencils by power iteration.
//!
//! `smallest` drives the coercivity constants (inverse iteration, one inner
//! CG solve per step); `largest_diag` drives the discrete trace-operator norm
//! where the left matrix is diagonal and positive semidefinite.

use crate::error::{Error, Result};
use crate::sparse::{cg_masked, SymCsr};

const DEFAULT_CAP: usize = 20_000;

/// Smallest eigenvalue of K x = λ B x with K, B symmetric positive definite,
/// by inverse power iteration to relative tolerance `tol`.
pub fn smallest_generalized_eigenvalue(k: &SymCsr, b: &SymCsr, tol: f64) -> Result<f64> {
    let n = k.n();
    assert_eq!(b.n(), n);
    let mut x = vec![1.0; n];
    normalize_b(b, &mut x)?;
    let mut rho_old = rayleigh(k, b, &x);
    for it in 0..DEFAULT_CAP {
        let bx = b.apply(&x);
        let (y, _) = cg_masked(k, &bx, None, Some(&x), 1e-12, None)?;
        x = y;
        normalize_b(b, &mut x)?;
        let rho = rayleigh(k, b, &x);
        if it >= 2 && (rho - rho_old).abs() <= tol * rho.abs().max(f64::MIN_POSITIVE) {
            return Ok(rho);
        }
        rho_old = rho;
    }
    Err(Error::Numerical(format!(
        "inverse power iteration did not converge in {DEFAULT_CAP} steps (last value {rho_old})"
    )))
}

/// Largest eigenvalue of diag(c) x = λ B x, by power iteration on B⁻¹ diag(c).
pub fn largest_generalized_eigenvalue_diag(c: &[f64], b: &SymCsr, tol: f64) -> Result<f64> {
    let n = b.n();
    assert_eq!(c.len(), n);
    if c.iter().all(|&v| v == 0.0) {
        return Ok(0.0);
    }
    let mut x = vec![1.0; n];
    normalize_b(b, &mut x)?;
    let mut rho_old = diag_rayleigh(c, b, &x);
    for it in 0..DEFAULT_CAP {
        let cx: Vec<f64> = c.iter().zip(&x).map(|(ci, xi)| ci * xi).collect();
        let (y, _) = cg_masked(b, &cx, None, None, 1e-12, None)?;
        x = y;
        normalize_b(b, &mut x)?;
        let rho = diag_rayleigh(c, b, &x);
        if it >= 2 && (rho - rho_old).abs() <= tol * rho.abs().max(f64::MIN_POSITIVE) {
            return Ok(rho);
        }
        rho_old = rho;
    }
    Err(Error::Numerical(format!(
        "power iteration did not converge in {DEFAULT_CAP} steps (last value {rho_old})"
    )))
}

fn rayleigh(k: &SymCsr, b: &SymCsr, x: &[f64]) -> f64 {
    k.bilinear(x, x) / b.bilinear(x, x)
}

fn diag_rayleigh(c: &[f64], b: &SymCsr, x: &[f64]) -> f64 {
    let num: f64 = c.iter().zip(x).map(|(ci, xi)| ci * xi * xi).sum();
    num / b.bilinear(x, x)
}

fn normalize_b(b: &SymCsr, x: &mut [f64]) -> Result<()> {
    let nb = b.bilinear(x, x).sqrt();
    if !nb.is_finite() || nb == 0.0 {
        return Err(Error::Numerical("eigen iterate degenerated to zero".into()));
    }
    for xi in x.iter_mut() {
        *xi /= nb;
    }
    Ok(())
}
