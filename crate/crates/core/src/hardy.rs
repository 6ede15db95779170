//! Truncated vector-valued Hardy space H²(ℂ^m).
//!
//! A function is stored by its Taylor coefficients A_0..A_N, each in ℂ^m,
//! interleaved by degree: coefficient j of A_n sits at index `n * m + j`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{pinv_apply, CMatrix, CVector, RankTolerance, ONE, ZERO};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct HardySpec {
    pub m: usize,
    pub degree: usize,
}

impl HardySpec {
    pub fn new(m: usize, degree: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidInput("component count m must be at least 1".into()));
        }
        Ok(Self { m, degree })
    }

    pub fn scalar(degree: usize) -> Self {
        Self { m: 1, degree }
    }

    pub fn dim(&self) -> usize {
        self.m * (self.degree + 1)
    }

    pub fn index(&self, n: usize, j: usize) -> usize {
        n * self.m + j
    }

    pub fn with_degree(&self, degree: usize) -> Self {
        Self { m: self.m, degree }
    }
}

/// Truncated ℂ^m-valued analytic function with a certificate on the norm of the
/// discarded Taylor tail.
#[derive(Clone, Debug, PartialEq)]
pub struct CoeffFn {
    spec: HardySpec,
    coeffs: CVector,
    tail_bound: f64,
}

/// Value of a truncated series together with a bound on the truncation error.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub value: CVector,
    pub error_bound: f64,
}

impl CoeffFn {
    pub fn new(spec: HardySpec, coeffs: CVector, tail_bound: f64) -> Result<Self> {
        if coeffs.len() != spec.dim() {
            return Err(Error::Shape(format!(
                "expected {} coefficients for m = {}, N = {}, got {}",
                spec.dim(),
                spec.m,
                spec.degree,
                coeffs.len()
            )));
        }
        if !(tail_bound >= 0.0) || coeffs.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("coefficients and tail bound must be finite".into()));
        }
        Ok(Self { spec, coeffs, tail_bound })
    }

    /// Exact polynomial from a coefficient vector (tail bound 0).
    pub fn polynomial(spec: HardySpec, coeffs: CVector) -> Result<Self> {
        Self::new(spec, coeffs, 0.0)
    }

    /// Scalar polynomial from its coefficients a_0..a_N.
    pub fn scalar(coeffs: &[Complex64]) -> Self {
        let degree = coeffs.len().saturating_sub(1);
        let mut v = CVector::zeros(degree + 1);
        for (slot, c) in v.iter_mut().zip(coeffs) {
            *slot = *c;
        }
        Self { spec: HardySpec::scalar(degree), coeffs: v, tail_bound: 0.0 }
    }

    pub fn zeros(spec: HardySpec) -> Self {
        Self { spec, coeffs: CVector::zeros(spec.dim()), tail_bound: 0.0 }
    }

    /// z^n δ_j.
    pub fn monomial(spec: HardySpec, n: usize, j: usize) -> Result<Self> {
        if n > spec.degree || j >= spec.m {
            return Err(Error::Shape(format!("monomial z^{n} in component {j} outside {spec:?}")));
        }
        let mut f = Self::zeros(spec);
        f.coeffs[spec.index(n, j)] = ONE;
        Ok(f)
    }

    pub fn spec(&self) -> HardySpec {
        self.spec
    }

    pub fn degree(&self) -> usize {
        self.spec.degree
    }

    pub fn coeffs(&self) -> &CVector {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> CVector {
        self.coeffs
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    /// The ℂ^m coefficient A_n (zero beyond the budget).
    pub fn coefficient(&self, n: usize) -> CVector {
        let m = self.spec.m;
        if n > self.spec.degree {
            return CVector::zeros(m);
        }
        self.coeffs.rows(n * m, m).into_owned()
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.norm()
    }

    pub fn norm_squared(&self) -> f64 {
        self.coeffs.norm_squared()
    }

    pub fn inner_product(&self, other: &CoeffFn) -> Result<Complex64> {
        if self.spec != other.spec {
            return Err(Error::Shape(format!("inner product of {:?} with {:?}", self.spec, other.spec)));
        }
        Ok(other.coeffs.dotc(&self.coeffs))
    }

    /// Re-truncate or zero-pad to a new degree budget.
    pub fn with_degree(&self, degree: usize) -> CoeffFn {
        let spec = self.spec.with_degree(degree);
        let mut coeffs = CVector::zeros(spec.dim());
        let keep = spec.dim().min(self.coeffs.len());
        coeffs.rows_mut(0, keep).copy_from(&self.coeffs.rows(0, keep));
        let dropped = if keep < self.coeffs.len() { self.coeffs.rows(keep, self.coeffs.len() - keep).norm() } else { 0.0 };
        CoeffFn { spec, coeffs, tail_bound: self.tail_bound + dropped }
    }

    /// Multiplication by z; the budget grows by one so nothing is lost.
    pub fn shift(&self) -> CoeffFn {
        let m = self.spec.m;
        let spec = self.spec.with_degree(self.spec.degree + 1);
        let mut coeffs = CVector::zeros(spec.dim());
        coeffs.rows_mut(m, self.coeffs.len()).copy_from(&self.coeffs);
        CoeffFn { spec, coeffs, tail_bound: self.tail_bound }
    }

    /// (F(z) - F(0)) / z at the same budget.
    pub fn backward_shift(&self) -> CoeffFn {
        let m = self.spec.m;
        let mut coeffs = CVector::zeros(self.spec.dim());
        let len = self.coeffs.len() - m;
        coeffs.rows_mut(0, len).copy_from(&self.coeffs.rows(m, len));
        CoeffFn { spec: self.spec, coeffs, tail_bound: self.tail_bound }
    }

    /// Horner evaluation for |z| < 1; the error bound covers the discarded tail.
    pub fn evaluate(&self, z: Complex64) -> Result<Evaluation> {
        let r = z.norm();
        if !(r < 1.0) {
            return Err(Error::Domain(format!("evaluation point |z| = {r} is not inside the unit disc")));
        }
        let m = self.spec.m;
        let mut value = CVector::zeros(m);
        for n in (0..=self.spec.degree).rev() {
            for j in 0..m {
                value[j] = value[j] * z + self.coeffs[n * m + j];
            }
        }
        // |tail(z)| <= ‖tail‖ · (Σ_{n>N} |z|^{2n})^{1/2} <= ‖tail‖ |z|^{N+1} / (1 - |z|)
        let error_bound = self.tail_bound * r.powi(self.spec.degree as i32 + 1) / (1.0 - r);
        Ok(Evaluation { value, error_bound })
    }

    pub(crate) fn from_parts(spec: HardySpec, coeffs: CVector, tail_bound: f64) -> Self {
        Self { spec, coeffs, tail_bound }
    }
}

/// Laurent symbol Φ(z) = Σ_{k=lowest}^{lowest+len-1} Φ_k z^k with blocks
/// Φ_k : ℂ^cols → ℂ^rows.
#[derive(Clone, Debug, PartialEq)]
pub struct LaurentSymbol {
    rows: usize,
    cols: usize,
    lowest: i64,
    blocks: Vec<CMatrix>,
}

impl LaurentSymbol {
    pub fn new(rows: usize, cols: usize, lowest: i64, blocks: Vec<CMatrix>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidInput("symbol blocks must be nonempty".into()));
        }
        for b in &blocks {
            if b.shape() != (rows, cols) {
                return Err(Error::Shape(format!("symbol block {:?} is not {rows}x{cols}", b.shape())));
            }
            if b.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::InvalidInput("symbol has non-finite entries".into()));
            }
        }
        Ok(Self { rows, cols, lowest, blocks })
    }

    /// Scalar symbol from (power, coefficient) pairs.
    pub fn scalar(terms: &[(i64, Complex64)]) -> Self {
        if terms.is_empty() {
            return Self { rows: 1, cols: 1, lowest: 0, blocks: vec![CMatrix::zeros(1, 1)] };
        }
        let lowest = terms.iter().map(|t| t.0).min().unwrap();
        let highest = terms.iter().map(|t| t.0).max().unwrap();
        let mut blocks = vec![CMatrix::zeros(1, 1); (highest - lowest + 1) as usize];
        for &(k, c) in terms {
            blocks[(k - lowest) as usize][(0, 0)] += c;
        }
        Self { rows: 1, cols: 1, lowest, blocks }
    }

    /// Scalar analytic symbol Σ_{k>=0} c_k z^k.
    pub fn analytic(coeffs: &[Complex64]) -> Self {
        let terms: Vec<(i64, Complex64)> = coeffs.iter().enumerate().map(|(k, &c)| (k as i64, c)).collect();
        Self::scalar(&terms)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn block(&self, k: i64) -> Option<&CMatrix> {
        let idx = k - self.lowest;
        if idx < 0 {
            return None;
        }
        self.blocks.get(idx as usize)
    }

    pub fn support(&self) -> (i64, i64) {
        (self.lowest, self.lowest + self.blocks.len() as i64 - 1)
    }

    /// Σ_k ‖Φ_k‖ (Frobenius), an upper bound for the multiplier norm.
    pub fn norm_bound(&self) -> f64 {
        self.blocks.iter().map(|b| b.norm()).sum()
    }
}

/// Dense matrix of an operator between truncated coefficient spaces, with the
/// per-degree norm weights of each side (all ones for H²).
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    pub matrix: CMatrix,
    pub domain: HardySpec,
    pub codomain: HardySpec,
    pub domain_weights: Vec<f64>,
    pub codomain_weights: Vec<f64>,
    /// Bound on the operator norm, used to propagate input tail bounds.
    pub norm_bound: f64,
    /// Extra output tail per unit input norm caused by truncating the operator.
    pub truncation_bound: f64,
}

impl OperatorMatrix {
    pub fn new(matrix: CMatrix, domain: HardySpec, codomain: HardySpec) -> Result<Self> {
        if matrix.shape() != (codomain.dim(), domain.dim()) {
            return Err(Error::Shape(format!(
                "matrix is {:?} but spaces need {}x{}",
                matrix.shape(),
                codomain.dim(),
                domain.dim()
            )));
        }
        let norm_bound = matrix.norm();
        Ok(Self {
            matrix,
            domain,
            codomain,
            domain_weights: vec![1.0; domain.degree + 1],
            codomain_weights: vec![1.0; codomain.degree + 1],
            norm_bound,
            truncation_bound: 0.0,
        })
    }

    pub fn with_weights(mut self, domain_weights: Vec<f64>, codomain_weights: Vec<f64>) -> Result<Self> {
        if domain_weights.len() != self.domain.degree + 1 || codomain_weights.len() != self.codomain.degree + 1 {
            return Err(Error::Shape("weight sequences must have one entry per degree".into()));
        }
        if domain_weights.iter().chain(&codomain_weights).any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidInput("weights must be positive and finite".into()));
        }
        self.domain_weights = domain_weights;
        self.codomain_weights = codomain_weights;
        Ok(self)
    }

    /// The matrix in coordinates that are orthonormal for the weighted norms:
    /// W_codomain^{1/2} A W_domain^{-1/2}.
    pub fn whitened(&self) -> CMatrix {
        let (dm, cm) = (self.domain.m, self.codomain.m);
        CMatrix::from_fn(self.matrix.nrows(), self.matrix.ncols(), |i, j| {
            let scale = (self.codomain_weights[i / cm] / self.domain_weights[j / dm]).sqrt();
            self.matrix[(i, j)] * scale
        })
    }

    pub fn apply(&self, f: &CoeffFn) -> Result<CoeffFn> {
        if f.spec() != self.domain {
            return Err(Error::Shape(format!("operator domain {:?} vs function {:?}", self.domain, f.spec())));
        }
        let coeffs = &self.matrix * f.coeffs();
        let tail = self.norm_bound * f.tail_bound() + self.truncation_bound * f.norm();
        Ok(CoeffFn::from_parts(self.codomain, coeffs, tail))
    }

    /// Least-squares preimage of `y` (the operator must be injective).
    pub fn pinv_apply(&self, y: &CoeffFn, tol: RankTolerance) -> Result<CoeffFn> {
        if y.spec() != self.codomain {
            return Err(Error::Shape(format!("operator codomain {:?} vs function {:?}", self.codomain, y.spec())));
        }
        let x = pinv_apply(&self.matrix, y.coeffs(), tol)?;
        Ok(CoeffFn::from_parts(self.domain, x, 0.0))
    }
}

/// Matrix of F ↦ P_+(ΦF) from `domain` into `codomain`.
pub fn toeplitz_matrix(sym: &LaurentSymbol, domain: HardySpec, codomain: HardySpec) -> Result<OperatorMatrix> {
    if sym.cols() != domain.m || sym.rows() != codomain.m {
        return Err(Error::Shape(format!(
            "symbol blocks are {}x{} but spaces have m = {} -> {}",
            sym.rows(),
            sym.cols(),
            domain.m,
            codomain.m
        )));
    }
    let (r, c) = (codomain.m, domain.m);
    let mut matrix = CMatrix::zeros(codomain.dim(), domain.dim());
    for out_deg in 0..=codomain.degree {
        for in_deg in 0..=domain.degree {
            if let Some(block) = sym.block(out_deg as i64 - in_deg as i64) {
                matrix.view_mut((out_deg * r, in_deg * c), (r, c)).copy_from(block);
            }
        }
    }
    let mut op = OperatorMatrix::new(matrix, domain, codomain)?;
    op.norm_bound = sym.norm_bound();
    Ok(op)
}

/// The shift S from budget N into budget N + 1.
pub fn shift_matrix(spec: HardySpec) -> OperatorMatrix {
    shift_power_matrix(spec, 1)
}

/// S^k from budget N into budget N + k.
pub fn shift_power_matrix(spec: HardySpec, k: usize) -> OperatorMatrix {
    let codomain = spec.with_degree(spec.degree + k);
    let matrix = CMatrix::from_fn(codomain.dim(), spec.dim(), |i, j| if i == j + k * spec.m { ONE } else { ZERO });
    let mut op = OperatorMatrix::new(matrix, spec, codomain).expect("shapes agree by construction");
    op.norm_bound = 1.0;
    op
}

/// The backward shift S* on budget N.
pub fn backward_shift_matrix(spec: HardySpec) -> OperatorMatrix {
    let matrix = CMatrix::from_fn(spec.dim(), spec.dim(), |i, j| if j == i + spec.m { ONE } else { ZERO });
    let mut op = OperatorMatrix::new(matrix, spec, spec).expect("shapes agree by construction");
    op.norm_bound = 1.0;
    op
}

/// Convolution of two scalar coefficient sequences, truncated to `len` terms.
pub(crate) fn convolve(a: &[Complex64], b: &[Complex64], len: usize) -> Vec<Complex64> {
    let mut out = vec![ZERO; len];
    for (i, &x) in a.iter().enumerate().take(len) {
        if x == ZERO {
            continue;
        }
        for (j, &y) in b.iter().enumerate().take(len - i) {
            out[i + j] += x * y;
        }
    }
    out
}
