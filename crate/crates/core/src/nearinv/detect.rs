//! Detection of near invariance: the wandering part M ⊖ (M ∩ TH), the minimal
//! defect space, verification against a given defect, and transport along a
//! similarity.

use crate::error::{Error, Result};
use crate::nearinv::shift::ShiftModel;
use crate::numerics::{complement, intersect, nullspace, spectral_norm, CMatrix, SubspaceBasis};

#[derive(Clone, Debug, PartialEq)]
pub struct DetectionResiduals {
    /// Mass of M outside the operator's domain.
    pub leakage: f64,
    /// Worst distance of a preimage direction from M ⊕ F.
    pub invariance: f64,
    /// ‖P_M P_F‖.
    pub defect_orthogonality: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NearInvReport {
    pub r: usize,
    pub p: usize,
    /// Canonical orthonormal basis of M ⊖ (M ∩ TH).
    pub g0: SubspaceBasis,
    /// Canonical orthonormal basis of the minimal defect space.
    pub f1: SubspaceBasis,
    pub contained_in_th: bool,
    pub residuals: DetectionResiduals,
    /// Lower bound of T minus one; nonnegative when T is expansive.
    pub norm_slack: f64,
}

fn check_ambient(m: &SubspaceBasis, shift: &ShiftModel) -> Result<()> {
    if m.ambient() != shift.dim() {
        return Err(Error::Shape(format!("subspace lives in dimension {} but T acts on {}", m.ambient(), shift.dim())));
    }
    Ok(())
}

/// Mass of M outside the domain of the truncated operator.
pub fn leakage(m: &SubspaceBasis, shift: &ShiftModel) -> f64 {
    let (n, nd) = (shift.dim(), shift.domain_dim());
    if m.dim() == 0 || nd == n {
        return 0.0;
    }
    spectral_norm(&m.basis().rows(nd, n - nd).into_owned())
}

fn check_leakage(m: &SubspaceBasis, shift: &ShiftModel) -> Result<f64> {
    let leak = leakage(m, shift);
    let tol = shift.tol().leakage;
    if leak > tol {
        return Err(Error::InconclusiveAtBudget { leakage: leak, tol });
    }
    Ok(leak)
}

/// M ∩ TH.
pub fn range_intersection(m: &SubspaceBasis, shift: &ShiftModel) -> Result<SubspaceBasis> {
    check_ambient(m, shift)?;
    intersect(m, &shift.range(), shift.tol().rank)
}

/// Canonical basis of M ⊖ (M ∩ TH) and its dimension r; r = 0 marks M ⊆ TH.
pub fn wandering(m: &SubspaceBasis, shift: &ShiftModel) -> Result<(SubspaceBasis, usize)> {
    let cap = range_intersection(m, shift)?;
    let g0 = complement(m, &cap, shift.tol().rank)?.canonical();
    let r = g0.dim();
    Ok((g0, r))
}

/// {g : Tg ∈ M}, as vectors of the full space supported on the domain.
pub fn preimage(m: &SubspaceBasis, shift: &ShiftModel) -> Result<SubspaceBasis> {
    check_ambient(m, shift)?;
    let escaped = m.reject_columns(shift.matrix());
    let null = nullspace(&escaped, shift.tol().rank, Some(1.0))?;
    let mut embedded = CMatrix::zeros(shift.dim(), null.ncols());
    embedded.rows_mut(0, shift.domain_dim()).copy_from(&null);
    Ok(SubspaceBasis::from_orthonormal(embedded, shift.tol().rank))
}

/// Smallest defect space: the part of the preimage outside M.
pub fn minimal_defect(m: &SubspaceBasis, shift: &ShiftModel) -> Result<(SubspaceBasis, usize)> {
    check_leakage(m, shift)?;
    let pre = preimage(m, shift)?;
    let outside = m.reject_columns(pre.basis());
    let f = SubspaceBasis::span_scaled(&outside, shift.tol().rank, 1.0)?.canonical();
    let p = f.dim();
    Ok((f, p))
}

/// Whether every g with Tg ∈ M lies in M ⊕ F, with the worst relative distance.
pub fn check_nearly_invariant(m: &SubspaceBasis, f: &SubspaceBasis, shift: &ShiftModel) -> Result<(bool, f64)> {
    check_ambient(m, shift)?;
    check_ambient(f, shift)?;
    let pre = preimage(m, shift)?;
    let sum = m.direct_sum(f)?;
    let residual = sum.containment_residual(&pre);
    Ok((residual <= shift.tol().check, residual))
}

/// Wandering part, minimal defect and verification in one pass.
pub fn detect(m: &SubspaceBasis, shift: &ShiftModel) -> Result<NearInvReport> {
    check_ambient(m, shift)?;
    if m.dim() == 0 {
        return Err(Error::InvalidInput("the subspace is trivial".into()));
    }
    let leak = check_leakage(m, shift)?;
    let (g0, r) = wandering(m, shift)?;
    if r > shift.multiplicity() {
        return Err(Error::NumericalFailure(format!(
            "wandering dimension {r} exceeds the multiplicity {}",
            shift.multiplicity()
        )));
    }
    let (f1, p) = minimal_defect(m, shift)?;
    let (_, invariance) = check_nearly_invariant(m, &f1, shift)?;
    let defect_orthogonality = if p == 0 { 0.0 } else { spectral_norm(&(m.basis().adjoint() * f1.basis())) };
    Ok(NearInvReport {
        r,
        p,
        g0,
        f1,
        contained_in_th: r == 0,
        residuals: DetectionResiduals { leakage: leak, invariance, defect_orthogonality },
        norm_slack: shift.lower_bound() - 1.0,
    })
}

#[derive(Clone, Debug)]
pub struct Transport {
    pub vm: SubspaceBasis,
    /// Span of V(F).
    pub vf: SubspaceBasis,
    /// V(F) with its V(M) component removed; a defect of the same dimension.
    pub defect: SubspaceBasis,
    pub shift: ShiftModel,
    pub report: NearInvReport,
    pub similarity_residual: f64,
    pub transported_check: f64,
}

/// Push (M, F) through V and re-verify against T₂ = V T₁ V⁻¹ (built from T₁
/// when `t2` is absent).
pub fn similarity_transport(
    m: &SubspaceBasis,
    f: &SubspaceBasis,
    v: &CMatrix,
    t1: &ShiftModel,
    t2: Option<ShiftModel>,
) -> Result<Transport> {
    check_ambient(m, t1)?;
    check_ambient(f, t1)?;
    let (built, mut similarity_residual) = t1.similar(v)?;
    let shift = match t2 {
        Some(given) => {
            if given.matrix().shape() != built.matrix().shape() {
                return Err(Error::NotSimilar { residual: f64::INFINITY });
            }
            let diff = spectral_norm(&(given.matrix() - built.matrix()));
            similarity_residual = similarity_residual.max(diff / spectral_norm(built.matrix()).max(f64::MIN_POSITIVE));
            if similarity_residual > t1.tol().identity {
                return Err(Error::NotSimilar { residual: similarity_residual });
            }
            given
        }
        None => built,
    };
    let tol = shift.tol().rank;
    let vm = SubspaceBasis::span(&(v * m.basis()), tol)?;
    let vf = SubspaceBasis::span(&(v * f.basis()), tol)?;
    let defect = SubspaceBasis::span_scaled(&vm.reject_columns(vf.basis()), tol, 1.0)?;
    let (_, transported_check) = check_nearly_invariant(&vm, &defect, &shift)?;
    let report = detect(&vm, &shift)?;
    Ok(Transport { vm, vf, defect, shift, report, similarity_residual, transported_check })
}
