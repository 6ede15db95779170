//! T_s* = U_s T_{B⁻¹} U_s* on H²(ℂ^m), where (U_s f)(z) = f(sz) carries
//! H²(sD) onto H²(D). On the unit circle B⁻¹(sζ) equals the conjugate of
//! B(ζ/s), so T_s* is the co-analytic Toeplitz operator with entries
//! conj(b_k)s^{−k} on the k-th superdiagonal.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::blaschke::BlaschkeProduct;
use crate::error::{Error, Result};
use crate::hardy::{HardySpec, OperatorMatrix};
use crate::numerics::{spectral_norm, CMatrix, ZERO};

/// Aliasing level accepted when sampling 1/B on the circle of radius s.
const ALIAS_TOL: f64 = 1e-18;

fn check_radius(b: &BlaschkeProduct, s: f64) -> Result<()> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::Domain(format!("radius s = {s} must lie in (0, 1)")));
    }
    let rho = b.max_zero_modulus();
    if rho >= s {
        return Err(Error::Domain(format!("a zero of modulus {rho} lies outside sD for s = {s}")));
    }
    Ok(())
}

fn block_toeplitz(spec: HardySpec, diag: impl Fn(usize) -> Complex64) -> CMatrix {
    let m = spec.m;
    CMatrix::from_fn(spec.dim(), spec.dim(), |i, j| {
        let (n, a) = (i / m, i % m);
        let (k, b) = (j / m, j % m);
        if a == b && k >= n {
            diag(k - n)
        } else {
            ZERO
        }
    })
}

/// U_s as the diagonal matrix sⁿ on Taylor coefficients.
pub fn us_matrix(s: f64, spec: HardySpec) -> Result<OperatorMatrix> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::Domain(format!("radius s = {s} must lie in (0, 1]")));
    }
    let m = spec.m;
    let matrix = CMatrix::from_fn(spec.dim(), spec.dim(), |i, j| {
        if i == j {
            Complex64::new(s.powi((i / m) as i32), 0.0)
        } else {
            ZERO
        }
    });
    OperatorMatrix::new(matrix, spec, spec)
}

/// T_s* from the Taylor coefficients of B.
pub fn ts_star_matrix(b: &BlaschkeProduct, s: f64, spec: HardySpec) -> Result<OperatorMatrix> {
    check_radius(b, s)?;
    let coeffs = b.taylor_coeffs(spec.degree + 1);
    let matrix = block_toeplitz(spec, |k| coeffs[k].conj() * s.powi(-(k as i32)));
    let mut op = OperatorMatrix::new(matrix, spec, spec)?;
    op.norm_bound = coeffs.iter().enumerate().map(|(k, c)| c.norm() * s.powi(-(k as i32))).sum();
    Ok(op)
}

/// T_{B⁻¹} on H²(sD) in raw Taylor coefficients, from an FFT of 1/B(sζ).
/// Entry [n, n+k] is the Laurent coefficient of z^{−k} of 1/B on |z| = s.
pub fn inverse_toeplitz_on_circle(b: &BlaschkeProduct, s: f64, spec: HardySpec) -> Result<CMatrix> {
    check_radius(b, s)?;
    let ratio = b.max_zero_modulus() / s;
    let needed = if ratio == 0.0 { 1.0 } else { ALIAS_TOL.ln() / ratio.ln() };
    let size = (spec.degree + 1 + needed.ceil() as usize).next_power_of_two().max(64);
    let mut samples: Vec<Complex64> = (0..size)
        .map(|l| {
            let zeta = Complex64::from_polar(s, std::f64::consts::TAU * l as f64 / size as f64);
            b.eval(zeta).inv()
        })
        .collect();
    FftPlanner::new().plan_fft_forward(size).process(&mut samples);
    // samples[(size − k) % size]/size is the coefficient of ζ^{−k} of 1/B(sζ),
    // which is s^{−k} times the Laurent coefficient of z^{−k}
    let laurent: Vec<Complex64> =
        (0..=spec.degree).map(|k| samples[(size - k) % size] / size as f64 * s.powi(k as i32)).collect();
    Ok(block_toeplitz(spec, |k| laurent[k]))
}

/// ‖U_s T_{B⁻¹} − T_s* U_s‖ relative to ‖U_s T_{B⁻¹}‖.
pub fn ts_star_intertwining(b: &BlaschkeProduct, s: f64, spec: HardySpec) -> Result<f64> {
    let us = us_matrix(s, spec)?.matrix;
    let lhs = &us * inverse_toeplitz_on_circle(b, s, spec)?;
    let rhs = ts_star_matrix(b, s, spec)?.matrix * us;
    Ok(spectral_norm(&(&lhs - rhs)) / spectral_norm(&lhs).max(f64::MIN_POSITIVE))
}
