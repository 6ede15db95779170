//! The unitary U(T^i e_j) = z^i δ_j onto H²(ℂ^m), the functional calculus
//! h(T)g = U*[(Ug)h], and the pairs (K₀, K₁) representing M as a backward
//! shift invariant subspace of H²(ℂ^{r+p}).

use num_complex::Complex64;

use crate::blaschke::BlaschkeProduct;
use crate::error::{Error, Result};
use crate::hardy::{backward_shift_matrix, convolve, shift_matrix, CoeffFn, HardySpec};
use crate::nearinv::approx::{factorization, rqs_operators, ApproxOperators, FactorizationRecord};
use crate::nearinv::detect::check_nearly_invariant;
use crate::nearinv::shift::ShiftModel;
use crate::numerics::{eigenpairs, singular_values, spectral_norm, CMatrix, CVector, SubspaceBasis, ZERO};

/// A layer T^i e_j is kept while its mass outside the domain stays below this.
const LAYER_OVERFLOW: f64 = 1e-13;

#[derive(Clone, Debug)]
pub struct TransferUnitary {
    /// Columns T^i e_j in order i·m + j; U acts as V^H on its range.
    pub v: CMatrix,
    /// H²(ℂ^m) truncation covered by the layers.
    pub model: HardySpec,
    pub unitarity_defect: f64,
    /// ‖U T V' − S‖ on all but the last layer.
    pub intertwining_residual: f64,
    pub tol: f64,
}

impl TransferUnitary {
    pub fn layers(&self) -> usize {
        self.model.degree + 1
    }

    /// Ux as model coefficients.
    pub fn forward(&self, x: &CVector) -> CVector {
        self.v.adjoint() * x
    }

    /// U*y for model coefficients y.
    pub fn backward(&self, y: &CVector) -> CVector {
        &self.v * y
    }

    /// Part of x outside the covered layers.
    pub fn coverage_residual(&self, x: &CVector) -> f64 {
        (x - self.backward(&self.forward(x))).norm()
    }

    /// Ux, refusing x with mass outside the covered layers.
    fn forward_checked(&self, x: &CVector) -> Result<CVector> {
        let missed = self.coverage_residual(x);
        if missed > self.tol * x.norm().max(1.0) {
            return Err(Error::Budget(format!("{missed:.3e} of a vector lies outside the covered layers")));
        }
        Ok(self.forward(x))
    }

    /// Pull back model coefficients of arbitrary degree, refusing mass past
    /// the covered layers.
    fn pull_back(&self, y: &[Complex64], scale: f64) -> Result<CVector> {
        let covered = self.model.dim();
        let beyond = y[covered.min(y.len())..].iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if beyond > self.tol * scale.max(1.0) {
            return Err(Error::Budget(format!("{beyond:.3e} of the product lies past layer {}", self.model.degree)));
        }
        let mut head = CVector::zeros(covered);
        for (dst, &src) in head.iter_mut().zip(y) {
            *dst = src;
        }
        Ok(self.backward(&head))
    }
}

/// Matrix of U from the orthonormal layers T^i e_j, extended while they fit
/// inside the domain or until `max_layers`.
pub fn build_unitary_u(shift: &ShiftModel, max_layers: Option<usize>) -> Result<TransferUnitary> {
    let m = shift.multiplicity();
    let e = shift.kernel().basis().clone();
    let cap = max_layers.unwrap_or(usize::MAX).max(1);
    let mut layers = vec![e];
    while layers.len() < cap {
        let last = layers.last().expect("at least one layer");
        let fits = (0..m).all(|j| shift.overflow(&last.column(j).into_owned()) <= LAYER_OVERFLOW);
        if !fits {
            break;
        }
        let next = shift.matrix() * last.rows(0, shift.domain_dim());
        layers.push(next);
    }
    let count = layers.len();
    let mut v = CMatrix::zeros(shift.dim(), count * m);
    for (i, layer) in layers.iter().enumerate() {
        v.columns_mut(i * m, m).copy_from(layer);
    }
    let sv = singular_values(&v);
    let sigma_min = sv.last().copied().unwrap_or(0.0);
    if sigma_min < 0.5 {
        return Err(Error::InvalidShift(format!("the layers T^i e_j are degenerate (sigma_min = {sigma_min:.3e})")));
    }
    let unitarity_defect = spectral_norm(&(v.adjoint() * &v - CMatrix::identity(count * m, count * m)));
    let model = HardySpec::new(m, count - 1)?;
    let intertwining_residual = if count > 1 {
        let inner = v.columns(0, (count - 1) * m);
        let moved = shift.matrix() * inner.rows(0, shift.domain_dim());
        let s_model = shift_matrix(HardySpec::new(m, count - 2)?).matrix;
        spectral_norm(&(v.adjoint() * moved - s_model))
    } else {
        0.0
    };
    Ok(TransferUnitary { v, model, unitarity_defect, intertwining_residual, tol: shift.tol().identity })
}

fn model_product(ug: &CVector, m: usize, h: &[Complex64]) -> Vec<Complex64> {
    let layers = ug.len() / m;
    let len = layers + h.len().max(1) - 1;
    let mut out = vec![ZERO; len * m];
    for j in 0..m {
        let comp: Vec<Complex64> = (0..layers).map(|n| ug[n * m + j]).collect();
        for (n, c) in convolve(&comp, h, len).into_iter().enumerate() {
            out[n * m + j] = c;
        }
    }
    out
}

/// h(T)g computed as U*[(Ug)h].
pub fn calc_h_t_g(h: &CoeffFn, g: &CVector, unitary: &TransferUnitary) -> Result<CVector> {
    if h.spec().m != 1 {
        return Err(Error::InvalidInput("the calculus needs a scalar h".into()));
    }
    if g.len() != unitary.v.nrows() {
        return Err(Error::Shape(format!("vector of length {} for dimension {}", g.len(), unitary.v.nrows())));
    }
    let product = model_product(&unitary.forward_checked(g)?, unitary.model.m, h.coeffs().as_slice());
    unitary.pull_back(&product, g.norm() * h.norm())
}

/// K₀ and K₁ for one basis vector f; row k holds the coefficient of z^k.
#[derive(Clone, Debug)]
pub struct TransferPair {
    pub k0: CMatrix,
    pub k1: CMatrix,
    pub record: FactorizationRecord,
    /// |‖f‖² − ‖K₀‖² − ‖K₁‖²|.
    pub isometry_defect: f64,
    /// ‖f − K₀(T)G₀ − TK₁(T)F₁‖ with the calculus done through U.
    pub round_trip: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TransferCase {
    /// M ⊄ TH.
    Wandering,
    /// M ⊆ TH; K₀ is empty.
    InsideRange,
}

#[derive(Clone, Debug)]
pub struct TransferDecomposition {
    pub unitary: TransferUnitary,
    pub ops: ApproxOperators,
    pub pairs: Vec<TransferPair>,
    /// Span of the (K₀, K₁) in H²(ℂ^{r+p}), index k(r+p) + i.
    pub k: SubspaceBasis,
    pub k_spec: HardySpec,
    pub case: TransferCase,
    /// ‖P_{K⊥}(S* ⊕ … ⊕ S*)P_K‖.
    pub invariance_residual: f64,
}

impl TransferDecomposition {
    pub fn r(&self) -> usize {
        self.ops.g0.dim()
    }

    pub fn p(&self) -> usize {
        self.ops.f1.dim()
    }

    pub fn max_isometry_defect(&self) -> f64 {
        self.pairs.iter().map(|p| p.isometry_defect).fold(0.0, f64::max)
    }

    pub fn max_round_trip(&self) -> f64 {
        self.pairs.iter().map(|p| p.round_trip).fold(0.0, f64::max)
    }
}

fn column_fn(a: &CMatrix, i: usize) -> CoeffFn {
    let coeffs: Vec<Complex64> = a.column(i).iter().copied().collect();
    CoeffFn::scalar(&coeffs)
}

/// Sum of U-products Σ (Ug_i)k_i in model coordinates, pulled back once.
fn reconstruct(pair: &TransferPair, ops: &ApproxOperators, shift: &ShiftModel, unitary: &TransferUnitary) -> Result<CVector> {
    let m = unitary.model.m;
    let mut total: Vec<Complex64> = Vec::new();
    let mut add = |terms: Vec<Complex64>| {
        if terms.len() > total.len() {
            total.resize(terms.len(), ZERO);
        }
        for (dst, src) in total.iter_mut().zip(terms) {
            *dst += src;
        }
    };
    let mut scale = 0.0;
    for i in 0..ops.g0.dim() {
        let k = column_fn(&pair.k0, i);
        add(model_product(&unitary.forward_checked(&ops.g0.column(i))?, m, k.coeffs().as_slice()));
        scale += k.norm();
    }
    for j in 0..ops.f1.dim() {
        let tf = shift.apply(&ops.f1.column(j));
        let k = column_fn(&pair.k1, j);
        add(model_product(&unitary.forward_checked(&tf)?, m, k.coeffs().as_slice()));
        scale += k.norm();
    }
    if total.is_empty() {
        return Ok(CVector::zeros(shift.dim()));
    }
    unitary.pull_back(&total, scale)
}

/// (K₀, K₁) for every basis vector of M, with the isometry, the round trip
/// and the backward shift invariance of their span checked. `depth` fixes the
/// series length; `None` runs each series until R^k f is negligible.
pub fn transfer_decompose(
    m: &SubspaceBasis,
    f: &SubspaceBasis,
    shift: &ShiftModel,
    depth: Option<usize>,
) -> Result<TransferDecomposition> {
    let tol = shift.tol();
    if shift.isometry_defect() > tol.identity {
        return Err(Error::InvalidShift(format!("T is not an isometry (‖T*T − I‖ = {:.3e})", shift.isometry_defect())));
    }
    let (ok, residual) = check_nearly_invariant(m, f, shift)?;
    if !ok {
        return Err(Error::InvalidInput(format!("M is not nearly invariant with this defect (residual {residual:.3e})")));
    }
    let ops = rqs_operators(m, f, shift)?;
    let unitary = build_unitary_u(shift, None)?;
    let records = (0..m.dim())
        .map(|i| factorization(&m.column(i), &ops, shift, depth))
        .collect::<Result<Vec<_>>>()?;
    let d = records.iter().map(|r| r.depth).max().unwrap_or(0);
    let (r, p) = (ops.g0.dim(), ops.f1.dim());
    let mut pairs = Vec::with_capacity(records.len());
    for record in records {
        let mut k0 = CMatrix::zeros(d + 1, r);
        k0.rows_mut(0, record.c.nrows()).copy_from(&record.c);
        let mut k1 = CMatrix::zeros(d + 1, p);
        k1.rows_mut(0, record.b.nrows()).copy_from(&record.b);
        let norm2 = record.h_norm * record.h_norm;
        let isometry_defect = (norm2 - k0.norm_squared() - k1.norm_squared()).abs();
        if isometry_defect > tol.identity * norm2.max(1.0) {
            return Err(Error::NumericalFailure(format!("transfer isometry defect {isometry_defect:.3e}")));
        }
        pairs.push(TransferPair { k0, k1, record, isometry_defect, round_trip: 0.0 });
    }
    for (i, pair) in pairs.iter_mut().enumerate() {
        let rebuilt = reconstruct(pair, &ops, shift, &unitary)?;
        pair.round_trip = (m.column(i) - rebuilt).norm();
    }
    let width = r + p;
    let k_spec = HardySpec::new(width.max(1), d)?;
    let k = if width == 0 {
        SubspaceBasis::empty(0, tol.rank)
    } else {
        let mut cols = CMatrix::zeros(k_spec.dim(), pairs.len());
        for (c, pair) in pairs.iter().enumerate() {
            for n in 0..=d {
                for i in 0..r {
                    cols[(n * width + i, c)] = pair.k0[(n, i)];
                }
                for j in 0..p {
                    cols[(n * width + r + j, c)] = pair.k1[(n, j)];
                }
            }
        }
        SubspaceBasis::span(&cols, tol.rank)?
    };
    let invariance_residual = if width == 0 || k.dim() == 0 {
        0.0
    } else {
        let moved = backward_shift_matrix(k_spec).matrix * k.basis();
        spectral_norm(&k.reject_columns(&moved))
    };
    let case = if r == 0 { TransferCase::InsideRange } else { TransferCase::Wandering };
    Ok(TransferDecomposition { unitary, ops, pairs, k, k_spec, case, invariance_residual })
}

#[derive(Clone, Debug)]
pub struct InnerRecovery {
    pub blaschke: BlaschkeProduct,
    /// ‖P_{K⊥}S*P_K‖.
    pub invariance_residual: f64,
    /// ‖T_B* P_K‖, zero exactly when K ⟂ BH².
    pub orthogonality_residual: f64,
}

/// The finite Blaschke product B with K = K_B, read off the compression of
/// S* to a backward shift invariant K ⊂ H² (coefficient vectors of degree
/// ≤ dim − 1). The zeros are the conjugated eigenvalues.
pub fn recover_scalar_inner(k: &SubspaceBasis, tol: f64) -> Result<InnerRecovery> {
    if k.dim() == 0 {
        return Err(Error::InvalidInput("K is trivial".into()));
    }
    let n = k.ambient();
    let spec = HardySpec::scalar(n - 1);
    let moved = backward_shift_matrix(spec).matrix * k.basis();
    let invariance_residual = spectral_norm(&k.reject_columns(&moved));
    if invariance_residual > tol {
        return Err(Error::NotModelSpace(format!("K is not S*-invariant (residual {invariance_residual:.3e})")));
    }
    let compression = k.basis().adjoint() * moved;
    let zeros = eigenpairs(&compression)?
        .into_iter()
        .map(|e| {
            let z = e.value.conj();
            if z.norm() > 1.0 - tol {
                Err(Error::NotModelSpace(format!("eigenvalue of modulus {} is not inside the disc", z.norm())))
            } else {
                Ok(z)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let blaschke = BlaschkeProduct::from_zeros(zeros)?;
    let b = blaschke.taylor_coeffs(n);
    let toeplitz = CMatrix::from_fn(n, n, |i, j| if i >= j { b[i - j] } else { ZERO });
    let orthogonality_residual = spectral_norm(&(toeplitz.adjoint() * k.basis()));
    if orthogonality_residual > tol {
        return Err(Error::NotModelSpace(format!("K is not orthogonal to BH² (residual {orthogonality_residual:.3e})")));
    }
    Ok(InnerRecovery { blaschke, invariance_residual, orthogonality_residual })
}
