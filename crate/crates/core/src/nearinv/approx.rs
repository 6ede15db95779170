//! The operators R, Q, S of the approximation identity
//! h = Σ T^k Q R^k h + T^{m+1} R^{m+1} h + Σ T^k S R^k h, the expansion
//! itself, and the coefficient series of the factorization.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::nearinv::detect::range_intersection;
use crate::nearinv::shift::ShiftModel;
use crate::numerics::{complement, spectral_norm, CMatrix, CVector, SubspaceBasis};

/// R = (T*T)⁻¹T*P_{M∩TH}, Q = P_{M⊖(M∩TH)}, S = P_F as matrices on the
/// full coordinate space, with the bases they were built from.
#[derive(Clone, Debug)]
pub struct ApproxOperators {
    pub r: CMatrix,
    pub q: CMatrix,
    pub s: CMatrix,
    pub m: SubspaceBasis,
    pub g0: SubspaceBasis,
    pub f1: SubspaceBasis,
    pub r_norm: f64,
}

pub fn rqs_operators(m: &SubspaceBasis, f: &SubspaceBasis, shift: &ShiftModel) -> Result<ApproxOperators> {
    let tol = shift.tol();
    let lower = shift.lower_bound();
    if lower < 1.0 - tol.identity {
        return Err(Error::NotBoundedBelow { lower });
    }
    let cap = range_intersection(m, shift)?;
    let g0 = complement(m, &cap, tol.rank)?.canonical();
    let f1 = f.canonical();
    let n = shift.dim();
    let mut lifted = CMatrix::zeros(n, cap.dim());
    for j in 0..cap.dim() {
        lifted.set_column(j, &shift.pinv(&cap.column(j)));
    }
    let r = lifted * cap.basis().adjoint();
    let r_norm = spectral_norm(&r);
    if r_norm > 1.0 + tol.identity {
        return Err(Error::NumericalFailure(format!("‖R‖ = {r_norm} exceeds one")));
    }
    Ok(ApproxOperators { r, q: g0.projector(), s: f1.projector(), m: m.clone(), g0, f1, r_norm })
}

fn check_member(h: &CVector, ops: &ApproxOperators, shift: &ShiftModel) -> Result<f64> {
    if h.len() != shift.dim() {
        return Err(Error::Shape(format!("vector of length {} for dimension {}", h.len(), shift.dim())));
    }
    let norm = h.norm();
    let dist = (h - ops.m.project(h)).norm();
    if dist > shift.tol().check * norm.max(f64::MIN_POSITIVE) {
        return Err(Error::InvalidInput(format!("vector is at distance {dist:.3e} from M")));
    }
    Ok(norm)
}

#[derive(Clone, Debug)]
pub struct ExpansionRecord {
    /// Q R^k h for k = 0..=steps.
    pub q_terms: Vec<CVector>,
    /// S R^k h for k = 1..=steps.
    pub s_terms: Vec<CVector>,
    /// ‖T^{m+1} R^{m+1} h‖ for m = 0..=steps.
    pub residual_norms: Vec<f64>,
    /// ‖h − (right-hand side at m)‖ for m = 0..=steps.
    pub identity_residuals: Vec<f64>,
    pub bessel_sum: f64,
    pub h_norm: f64,
}

impl ExpansionRecord {
    pub fn max_identity_residual(&self) -> f64 {
        self.identity_residuals.iter().copied().fold(0.0, f64::max)
    }
}

/// The approximation identity replayed as vectors for every step count up to `steps`.
pub fn approx_expand(h: &CVector, ops: &ApproxOperators, shift: &ShiftModel, steps: usize) -> Result<ExpansionRecord> {
    let h_norm = check_member(h, ops, shift)?;
    let mut powers = Vec::with_capacity(steps + 2);
    powers.push(h.clone());
    for k in 0..=steps {
        let next = &ops.r * &powers[k];
        powers.push(next);
    }
    let q_terms: Vec<CVector> = powers[..=steps].iter().map(|u| &ops.q * u).collect();
    let s_terms: Vec<CVector> = powers[1..=steps].iter().map(|u| &ops.s * u).collect();
    let mut partial = CVector::zeros(h.len());
    let mut residual_norms = Vec::with_capacity(steps + 1);
    let mut identity_residuals = Vec::with_capacity(steps + 1);
    for m in 0..=steps {
        let mut term = q_terms[m].clone();
        if m >= 1 {
            term += &s_terms[m - 1];
        }
        partial += shift.apply_power(&term, m);
        let tail = shift.apply_power(&powers[m + 1], m + 1);
        residual_norms.push(tail.norm());
        identity_residuals.push((h - &partial - tail).norm());
    }
    let bessel_sum = q_terms.iter().map(|v| v.norm_squared()).sum::<f64>()
        + s_terms.iter().map(|v| v.norm_squared()).sum::<f64>();
    let record = ExpansionRecord { q_terms, s_terms, residual_norms, identity_residuals, bessel_sum, h_norm };
    let worst = record.max_identity_residual();
    if worst > shift.tol().identity * h_norm.max(f64::MIN_POSITIVE) {
        return Err(Error::NumericalFailure(format!("approximation identity residual {worst:.3e}")));
    }
    Ok(record)
}

/// Coefficients c_{ki} = ⟨QR^k h, g_i⟩ (k ≥ 0) and b_{kj} = ⟨SR^k h, e_j⟩ (k ≥ 1).
#[derive(Clone, Debug)]
pub struct FactorizationRecord {
    /// Row k holds c_{k·}.
    pub c: CMatrix,
    /// Row k − 1 holds b_{k·}.
    pub b: CMatrix,
    pub gamma: f64,
    pub depth: usize,
    pub bessel_sum: f64,
    /// ‖R^{depth+1} h‖.
    pub remainder: f64,
    /// ‖h − Σ_{k≤depth} T^k(QR^k h + SR^k h) − T^{depth+1}R^{depth+1}h‖.
    pub identity_residual: f64,
    pub h_norm: f64,
}

impl FactorizationRecord {
    pub fn r(&self) -> usize {
        self.c.ncols()
    }

    pub fn p(&self) -> usize {
        self.b.ncols()
    }

    /// q_i = Σ_k c_{ki} t^k at t = u(w)/γ.
    pub fn q_values(&self, t: Complex64) -> CVector {
        horner_rows(&self.c, t)
    }

    /// h_j = Σ_{k≥1} b_{kj} t^{k−1} at t = u(w)/γ.
    pub fn h_values(&self, t: Complex64) -> CVector {
        horner_rows(&self.b, t)
    }
}

fn horner_rows(a: &CMatrix, t: Complex64) -> CVector {
    let mut out = CVector::zeros(a.ncols());
    for k in (0..a.nrows()).rev() {
        for i in 0..a.ncols() {
            out[i] = out[i] * t + a[(k, i)];
        }
    }
    out
}

/// Relative size of R^k h at which the automatic depth stops.
const NEGLIGIBLE: f64 = 1e-15;

/// Series coefficients through `depth`; `None` runs until R^k h is negligible.
pub fn factorization(
    h: &CVector,
    ops: &ApproxOperators,
    shift: &ShiftModel,
    depth: Option<usize>,
) -> Result<FactorizationRecord> {
    let h_norm = check_member(h, ops, shift)?;
    let cap = depth.unwrap_or(2 * shift.dim() + 10);
    let mut powers = vec![h.clone()];
    loop {
        let k = powers.len() - 1;
        let next = &ops.r * &powers[k];
        let negligible = next.norm() <= NEGLIGIBLE * h_norm;
        powers.push(next);
        let reached = k + 1 > cap || (depth.is_none() && negligible);
        if reached {
            break;
        }
    }
    let depth = powers.len() - 2;
    let (r, p) = (ops.g0.dim(), ops.f1.dim());
    let mut c = CMatrix::zeros(depth + 1, r);
    let mut b = CMatrix::zeros(depth, p);
    let mut v = Vec::with_capacity(depth + 1);
    for (k, u) in powers[..=depth].iter().enumerate() {
        let qk = &ops.q * u;
        let mut term = qk.clone();
        c.row_mut(k).copy_from(&(ops.g0.basis().adjoint() * &qk).transpose());
        if k >= 1 {
            let sk = &ops.s * u;
            b.row_mut(k - 1).copy_from(&(ops.f1.basis().adjoint() * &sk).transpose());
            term += sk;
        }
        v.push(term);
    }
    let mut acc = powers[depth + 1].clone();
    for k in (0..=depth).rev() {
        acc = &v[k] + shift.apply(&acc);
    }
    let identity_residual = (h - acc).norm();
    let bessel_sum = c.norm_squared() + b.norm_squared();
    Ok(FactorizationRecord {
        c,
        b,
        gamma: shift.scale(),
        depth,
        bessel_sum,
        remainder: powers[depth + 1].norm(),
        identity_residual,
        h_norm,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointCheck {
    pub w: Complex64,
    /// |u(w)|/γ.
    pub ratio: f64,
    pub error: f64,
    pub bound: f64,
}

/// Compare h(w) with Σ g_i(w)q_i(w) + γ⁻¹u(w)Σ e_j(w)h_j(w) at each point.
/// The bound is ‖h‖‖ev_w‖ t^{D+1}/(1 − t) for the series tail, plus the
/// identity residual seen through ev_w, plus rounding.
pub fn pointwise_check(
    record: &FactorizationRecord,
    h: &CVector,
    ops: &ApproxOperators,
    shift: &ShiftModel,
    points: &[Complex64],
) -> Result<Vec<PointCheck>> {
    let frame = shift.frame();
    points
        .iter()
        .map(|&w| {
            let u = shift
                .multiplier()
                .eval(w)
                .ok_or_else(|| Error::Domain("the operator has no multiplier to evaluate".into()))?;
            let t = u / record.gamma;
            let ratio = t.norm();
            if ratio >= 1.0 {
                return Err(Error::Domain(format!("|u(w)|/γ = {ratio} at w = {w} is not below one")));
            }
            let q = record.q_values(t);
            let hv = record.h_values(t);
            let mut recon = CVector::zeros(frame.values());
            let mut magnitude = 0.0;
            for i in 0..ops.g0.dim() {
                let gi = frame.eval(&ops.g0.column(i), w);
                magnitude += gi.norm() * q[i].norm();
                recon += gi * q[i];
            }
            for j in 0..ops.f1.dim() {
                let ej = frame.eval(&ops.f1.column(j), w) * (t * hv[j]);
                magnitude += ej.norm();
                recon += ej;
            }
            let value = frame.eval(h, w);
            magnitude += value.norm();
            let ev = frame.eval_norm(w);
            let tail = record.h_norm * ev * ratio.powi(record.depth as i32 + 1) / (1.0 - ratio);
            let bound = tail + ev * record.identity_residual + 256.0 * f64::EPSILON * magnitude;
            Ok(PointCheck { w, ratio, error: (value - recon).norm(), bound })
        })
        .collect()
}
