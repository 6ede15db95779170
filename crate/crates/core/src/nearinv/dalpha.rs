//! Nearly T_B⁻¹ invariant subspaces of D_α. For α < 0 the ambient norm is
//! ‖·‖₁ and T = γ₁⁻¹T_B; for α ≥ 0 it is ‖·‖₂ and T = T_B. In both cases
//! f = F₀q + γ⁻¹T_B E₀h with q = Σ C_k(B/γ)^k and h = Σ B_k(B/γ)^{k−1}.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::blaschke::BlaschkeProduct;
use crate::dirichlet::{choose_params, norm1_weight, norm2_weight, ParamCertificate};
use crate::error::{Error, Result};
use crate::hardy::{convolve, CoeffFn};
use crate::nearinv::approx::{factorization, pointwise_check, rqs_operators, ApproxOperators, FactorizationRecord};
use crate::nearinv::shift::{ShiftModel, Tolerances};
use crate::numerics::{CMatrix, CVector, SubspaceBasis, ZERO};

/// Points on |z| = 0.9s used for the pointwise check.
const POINTS: usize = 16;

#[derive(Clone, Debug)]
pub struct DAlphaModel {
    pub alpha: f64,
    pub blaschke: BlaschkeProduct,
    pub weights: Vec<f64>,
    /// γ₁ for α < 0, 1 otherwise.
    pub gamma: f64,
    /// Radius of the disc the representation lives on.
    pub radius: f64,
    /// ‖B‖_{H∞(sD)}/γ; 1 for α ≥ 0.
    pub ratio: f64,
    pub certificate: Option<ParamCertificate>,
    pub shift: ShiftModel,
}

impl DAlphaModel {
    /// `layers` Wold layers of D_α under the norm matching the sign of α.
    pub fn new(alpha: f64, blaschke: &BlaschkeProduct, layers: usize, tol: Tolerances) -> Result<Self> {
        if !(-1.0..=1.0).contains(&alpha) {
            return Err(Error::Domain(format!("alpha = {alpha} outside [-1, 1]")));
        }
        if layers < 2 {
            return Err(Error::InvalidInput("need at least two layers".into()));
        }
        let (weights, gamma, radius, ratio, certificate) = if alpha < 0.0 {
            let cert = choose_params(blaschke, alpha)?;
            let weights = (0..layers).map(|n| norm1_weight(cert.g, alpha, n)).collect();
            (weights, cert.gamma1, cert.s, cert.ratio, Some(cert))
        } else {
            ((0..layers).map(|n| norm2_weight(alpha, n)).collect(), 1.0, 1.0, 1.0, None)
        };
        let shift = ShiftModel::wold(blaschke, weights, gamma, tol)?;
        let weights = shift.frame().weights().to_vec();
        Ok(Self { alpha, blaschke: blaschke.clone(), weights, gamma, radius, ratio, certificate, shift })
    }

    pub fn coordinates(&self, f: &CoeffFn) -> Result<CVector> {
        self.shift.frame().coordinates(f, self.shift.tol().check)
    }

    /// Orthonormal basis (in the ambient norm) of the span of `fs`.
    pub fn span(&self, fs: &[CoeffFn]) -> Result<SubspaceBasis> {
        let mut a = CMatrix::zeros(self.shift.dim(), fs.len());
        for (j, f) in fs.iter().enumerate() {
            a.set_column(j, &self.coordinates(f)?);
        }
        SubspaceBasis::span(&a, self.shift.tol().rank)
    }
}

#[derive(Clone, Debug)]
pub struct DAlphaEntry {
    pub factorization: FactorizationRecord,
    pub f_norm: f64,
    /// ‖q‖ in H²(sD) (α < 0) or H²(D) (α ≥ 0).
    pub q_norm: f64,
    pub h_norm: f64,
    /// (1 − ratio²)^{1/2}(‖q‖² + ‖h‖²)^{1/2} for α < 0, (‖q‖² + ‖h‖²)^{1/2} otherwise.
    pub lhs: f64,
    /// ‖f‖ − lhs.
    pub slack: f64,
    /// ‖f‖² − Σ|c|² − Σ|b|².
    pub coefficient_slack: f64,
    pub pointwise_error: f64,
    pub pointwise_bound: f64,
}

impl DAlphaEntry {
    /// Taylor coefficients through `degree` of q (component i) or, with
    /// `defect`, of h (component j).
    pub fn series_taylor(&self, model: &DAlphaModel, defect: bool, index: usize, degree: usize) -> CoeffFn {
        let len = degree + 1;
        let scaled: Vec<Complex64> = model.blaschke.taylor_coeffs(len).iter().map(|c| c / model.gamma).collect();
        let table = if defect { &self.factorization.b } else { &self.factorization.c };
        let mut acc = vec![ZERO; len];
        for k in (0..table.nrows()).rev() {
            acc = convolve(&acc, &scaled, len);
            acc[0] += table[(k, index)];
        }
        CoeffFn::scalar(&acc)
    }
}

#[derive(Clone, Debug)]
pub struct DAlphaDecomposition {
    pub r: usize,
    pub p: usize,
    pub gamma: f64,
    pub ratio: f64,
    pub radius: f64,
    pub ops: ApproxOperators,
    pub entries: Vec<DAlphaEntry>,
}

impl DAlphaDecomposition {
    pub fn min_slack(&self) -> f64 {
        self.entries.iter().map(|e| e.slack).fold(f64::INFINITY, f64::min)
    }
}

/// Mean of |Σ_k a_k t(z)^k|² over |z| = s for each column, with t = B/γ;
/// the grid doubles until the value settles.
fn circle_norms(table: &CMatrix, b: &BlaschkeProduct, gamma: f64, s: f64) -> f64 {
    if table.ncols() == 0 || table.nrows() == 0 {
        return 0.0;
    }
    let at = |grid: usize| -> f64 {
        let mut total = 0.0;
        for l in 0..grid {
            let t = b.eval(Complex64::from_polar(s, TAU * l as f64 / grid as f64)) / gamma;
            for i in 0..table.ncols() {
                let mut v = ZERO;
                for k in (0..table.nrows()).rev() {
                    v = v * t + table[(k, i)];
                }
                total += v.norm_sqr();
            }
        }
        total / grid as f64
    };
    let mut grid = 256;
    let mut prev = at(grid);
    while grid < 1 << 16 {
        grid *= 2;
        let next = at(grid);
        let settled = (next - prev).abs() <= 1e-14 * next.max(f64::MIN_POSITIVE);
        prev = next;
        if settled {
            break;
        }
    }
    prev
}

/// Σ_i ‖Σ_k a_{ki}B^k‖²_{H²} with the Gram matrix ⟨B^k, B^j⟩ = B(0)^{k−j} (k ≥ j).
fn hardy_norms(table: &CMatrix, b0: Complex64) -> f64 {
    let d = table.nrows();
    let gram = CMatrix::from_fn(d, d, |j, k| if k >= j { b0.powu((k - j) as u32) } else { b0.conj().powu((j - k) as u32) });
    (table.adjoint() * gram * table).trace().re.max(0.0)
}

/// Factorization of every basis vector of M with the norm inequality and the
/// pointwise identity on |z| = 0.9s checked.
pub fn dalpha_decompose(model: &DAlphaModel, m: &SubspaceBasis, f: &SubspaceBasis) -> Result<DAlphaDecomposition> {
    let shift = &model.shift;
    let tol = shift.tol();
    let ops = rqs_operators(m, f, shift)?;
    let points: Vec<Complex64> =
        (0..POINTS).map(|l| Complex64::from_polar(0.9 * model.radius, TAU * (l as f64 + 0.5) / POINTS as f64)).collect();
    let b0 = model.blaschke.eval(ZERO);
    let inner_at_zero = b0.norm() < 1e-14;
    let mut entries = Vec::with_capacity(m.dim());
    for i in 0..m.dim() {
        let h = m.column(i);
        let record = factorization(&h, &ops, shift, None)?;
        let f_norm = record.h_norm;
        let coefficient_slack = f_norm * f_norm - record.bessel_sum;
        if coefficient_slack < -tol.identity * f_norm * f_norm {
            return Err(Error::NumericalFailure(format!("coefficient Bessel bound fails by {:.3e}", -coefficient_slack)));
        }
        let (q2, h2) = if model.alpha < 0.0 {
            (
                circle_norms(&record.c, &model.blaschke, model.gamma, model.radius),
                circle_norms(&record.b, &model.blaschke, model.gamma, model.radius),
            )
        } else {
            (hardy_norms(&record.c, b0), hardy_norms(&record.b, b0))
        };
        let lhs = if model.alpha < 0.0 {
            (1.0 - model.ratio * model.ratio).sqrt() * (q2 + h2).sqrt()
        } else {
            (q2 + h2).sqrt()
        };
        let slack = f_norm - lhs;
        let enforced = model.alpha < 0.0 || inner_at_zero;
        if enforced && slack < -tol.check * f_norm.max(1.0) {
            return Err(Error::NumericalFailure(format!("norm inequality fails by {:.3e}", -slack)));
        }
        let checks = pointwise_check(&record, &h, &ops, shift, &points)?;
        let pointwise_error = checks.iter().map(|c| c.error).fold(0.0, f64::max);
        let pointwise_bound = checks.iter().map(|c| c.bound).fold(0.0, f64::max);
        if checks.iter().any(|c| c.error > c.bound) {
            return Err(Error::NumericalFailure(format!("pointwise identity error {pointwise_error:.3e} exceeds its bound")));
        }
        entries.push(DAlphaEntry {
            factorization: record,
            f_norm,
            q_norm: q2.sqrt(),
            h_norm: h2.sqrt(),
            lhs,
            slack,
            coefficient_slack,
            pointwise_error,
            pointwise_bound,
        });
    }
    Ok(DAlphaDecomposition {
        r: ops.g0.dim(),
        p: ops.f1.dim(),
        gamma: model.gamma,
        ratio: model.ratio,
        radius: model.radius,
        ops,
        entries,
    })
}
