//! Dense complex linear algebra used throughout the crate: rank decisions,
//! orthonormal bases, subspace intersection and complement, least squares,
//! eigenpairs and principal angles.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Threshold for numerical rank: a singular value counts when it exceeds
/// `max(absolute, relative * sigma_max)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RankTolerance {
    pub absolute: f64,
    pub relative: f64,
}

impl RankTolerance {
    pub fn new(absolute: f64, relative: f64) -> Result<Self> {
        let ok = absolute.is_finite()
            && relative.is_finite()
            && absolute >= 0.0
            && relative >= 0.0
            && (absolute > 0.0 || relative > 0.0);
        if !ok {
            return Err(Error::InvalidInput(format!(
                "rank tolerance needs nonnegative finite parts, one positive (got {absolute}, {relative})"
            )));
        }
        Ok(Self { absolute, relative })
    }

    pub fn threshold(&self, sigma_max: f64) -> f64 {
        self.absolute.max(self.relative * sigma_max)
    }
}

impl Default for RankTolerance {
    fn default() -> Self {
        Self { absolute: 1e-12, relative: 1e-10 }
    }
}

/// Thin SVD with singular values sorted in decreasing order.
#[derive(Clone, Debug)]
pub(crate) struct Svd {
    pub u: CMatrix,
    pub s: Vec<f64>,
    pub v: CMatrix,
}

pub(crate) fn svd(a: &CMatrix) -> Svd {
    let (r, c) = a.shape();
    if r == 0 || c == 0 {
        return Svd { u: CMatrix::zeros(r, 0), s: Vec::new(), v: CMatrix::zeros(c, 0) };
    }
    let decomposition = a.clone().svd_unordered(true, true);
    let u = decomposition.u.expect("left singular vectors requested");
    let v = decomposition.v_t.expect("right singular vectors requested").adjoint();
    let s: Vec<f64> = decomposition.singular_values.iter().copied().collect();
    let fast = sorted(u, s, v);
    if svd_is_accurate(a, &fast) {
        fast
    } else {
        jacobi_svd(a)
    }
}

fn sorted(u: CMatrix, s: Vec<f64>, v: CMatrix) -> Svd {
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&i, &j| s[j].total_cmp(&s[i]));
    Svd {
        u: u.select_columns(&order),
        s: order.iter().map(|&i| s[i]).collect(),
        v: v.select_columns(&order),
    }
}

/// nalgebra's complex bidiagonal SVD occasionally returns factors that do not
/// reproduce the input (seen on tall rank-one matrices), so every result is
/// checked before it is trusted.
fn svd_is_accurate(a: &CMatrix, d: &Svd) -> bool {
    let scale = a.norm().max(f64::MIN_POSITIVE);
    let tol = 1e-12 * (a.nrows().max(a.ncols()) as f64).sqrt();
    if d.s.iter().any(|s| !s.is_finite() || *s < 0.0) {
        return false;
    }
    let k = d.s.len();
    let sigma = CMatrix::from_diagonal(&CVector::from_iterator(k, d.s.iter().map(|&s| Complex64::new(s, 0.0))));
    let recon = &d.u * sigma * d.v.adjoint() - a;
    let u_defect = (d.u.adjoint() * &d.u - CMatrix::identity(k, k)).norm();
    let v_defect = (d.v.adjoint() * &d.v - CMatrix::identity(k, k)).norm();
    recon.norm() <= tol * scale && u_defect <= tol && v_defect <= tol
}

/// One-sided Jacobi SVD, used when the bidiagonal route fails its check.
fn jacobi_svd(a: &CMatrix) -> Svd {
    let (r, c) = a.shape();
    if r < c {
        let d = jacobi_svd(&a.adjoint());
        return Svd { u: d.v, s: d.s, v: d.u };
    }
    let mut w = a.clone();
    let mut v = CMatrix::identity(c, c);
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..c {
            for q in p + 1..c {
                let alpha = w.column(p).norm_squared();
                let beta = w.column(q).norm_squared();
                let gamma = w.column(p).dotc(&w.column(q));
                let g = gamma.norm();
                if g <= f64::EPSILON * (alpha * beta).sqrt() || g == 0.0 {
                    continue;
                }
                rotated = true;
                let phase = gamma.conj() / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for m in [&mut w, &mut v] {
                    for i in 0..m.nrows() {
                        let x = m[(i, p)];
                        let y = m[(i, q)] * phase;
                        m[(i, p)] = x * cs - y * sn;
                        m[(i, q)] = x * sn + y * cs;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let s: Vec<f64> = (0..c).map(|j| w.column(j).norm()).collect();
    let d = sorted(w, s, v);
    let mut u = d.u;
    // normalize, completing columns with zero singular value to an orthonormal set
    let floor = d.s.first().copied().unwrap_or(0.0) * f64::EPSILON * r as f64;
    for j in 0..c {
        if d.s[j] > floor && d.s[j] > 0.0 {
            let col = u.column(j) / Complex64::new(d.s[j], 0.0);
            u.set_column(j, &col);
            continue;
        }
        let prev = u.columns(0, j).into_owned();
        let best = (0..r)
            .map(|i| {
                let mut e = CVector::zeros(r);
                e[i] = ONE;
                for _ in 0..2 {
                    let coeffs = prev.adjoint() * &e;
                    e -= &prev * coeffs;
                }
                e
            })
            .max_by(|x, y| x.norm().total_cmp(&y.norm()))
            .expect("at least one row");
        let n = best.norm();
        u.set_column(j, &(best / Complex64::new(n, 0.0)));
    }
    Svd { u, s: d.s, v: d.v }
}

/// Right singular vectors of `a` for all `ncols` directions, with the matching
/// singular values (zero for directions beyond the row count).
fn full_right_singular(a: &CMatrix) -> (Vec<f64>, CMatrix) {
    let (r, c) = a.shape();
    if c == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    if r >= c {
        let d = svd(a);
        return (d.s, d.v);
    }
    let mut padded = CMatrix::zeros(c, c);
    padded.view_mut((0, 0), (r, c)).copy_from(a);
    let d = svd(&padded);
    (d.s, d.v)
}

pub fn spectral_norm(a: &CMatrix) -> f64 {
    svd(a).s.first().copied().unwrap_or(0.0)
}

pub fn singular_values(a: &CMatrix) -> Vec<f64> {
    svd(a).s
}

fn check_finite(a: &CMatrix) -> Result<()> {
    if a.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidInput("matrix has non-finite entries".into()))
    }
}

/// Orthonormalize the columns of `a` in order (classical Gram-Schmidt with one
/// reorthogonalization pass). Assumes the columns are numerically independent.
fn ordered_gram_schmidt(a: &CMatrix) -> CMatrix {
    let (n, k) = a.shape();
    let mut q = CMatrix::zeros(n, k);
    for j in 0..k {
        let mut v = a.column(j).into_owned();
        for _ in 0..2 {
            if j > 0 {
                let prev = q.columns(0, j);
                let coeffs = prev.adjoint() * &v;
                v -= prev * coeffs;
            }
        }
        let norm = v.norm();
        q.set_column(j, &(v / Complex64::from(norm)));
    }
    q
}

/// Orthonormal basis of the numerical column space of `a` and its rank.
///
/// When `a` has full numerical rank the basis is Gram-Schmidt in column order,
/// so the k-th basis vector depends only on the first k columns.
pub fn orthonormalize(a: &CMatrix, tol: RankTolerance) -> Result<(CMatrix, usize)> {
    if a.ncols() == 0 {
        return Err(Error::InvalidInput("orthonormalize needs at least one column".into()));
    }
    orthonormalize_allow_empty(a, tol, None)
}

/// Like [`orthonormalize`], but accepts zero columns and an optional reference
/// scale replacing `sigma_max` in the relative threshold.
pub(crate) fn orthonormalize_allow_empty(
    a: &CMatrix,
    tol: RankTolerance,
    scale: Option<f64>,
) -> Result<(CMatrix, usize)> {
    check_finite(a)?;
    let n = a.nrows();
    if a.ncols() == 0 {
        return Ok((CMatrix::zeros(n, 0), 0));
    }
    let d = svd(a);
    let sigma_max = d.s.first().copied().unwrap_or(0.0);
    let threshold = tol.threshold(scale.unwrap_or(sigma_max));
    let rank = d.s.iter().filter(|&&s| s > threshold).count();
    if rank == a.ncols() {
        return Ok((ordered_gram_schmidt(a), rank));
    }
    Ok((d.u.columns(0, rank).into_owned(), rank))
}

/// Orthonormal basis of a subspace together with the tolerance that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct SubspaceBasis {
    basis: CMatrix,
    tol: RankTolerance,
}

impl SubspaceBasis {
    /// Wrap columns that are already orthonormal.
    pub fn from_orthonormal(basis: CMatrix, tol: RankTolerance) -> Self {
        Self { basis, tol }
    }

    /// Orthonormal basis for the span of the columns of `a` (which may be empty).
    pub fn span(a: &CMatrix, tol: RankTolerance) -> Result<Self> {
        let (basis, _) = orthonormalize_allow_empty(a, tol, None)?;
        Ok(Self { basis, tol })
    }

    pub(crate) fn span_scaled(a: &CMatrix, tol: RankTolerance, scale: f64) -> Result<Self> {
        let (basis, _) = orthonormalize_allow_empty(a, tol, Some(scale))?;
        Ok(Self { basis, tol })
    }

    pub fn empty(ambient: usize, tol: RankTolerance) -> Self {
        Self { basis: CMatrix::zeros(ambient, 0), tol }
    }

    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    pub fn into_basis(self) -> CMatrix {
        self.basis
    }

    pub fn tol(&self) -> RankTolerance {
        self.tol
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn ambient(&self) -> usize {
        self.basis.nrows()
    }

    pub fn column(&self, i: usize) -> CVector {
        self.basis.column(i).into_owned()
    }

    pub fn project(&self, v: &CVector) -> CVector {
        &self.basis * (self.basis.adjoint() * v)
    }

    pub fn project_columns(&self, a: &CMatrix) -> CMatrix {
        &self.basis * (self.basis.adjoint() * a)
    }

    /// `(I - P) a` for the orthogonal projection `P` onto this subspace.
    pub fn reject_columns(&self, a: &CMatrix) -> CMatrix {
        a - self.project_columns(a)
    }

    pub fn projector(&self) -> CMatrix {
        &self.basis * self.basis.adjoint()
    }

    /// Largest distance from a unit vector of `other` to this subspace.
    pub fn containment_residual(&self, other: &SubspaceBasis) -> f64 {
        if other.dim() == 0 {
            return 0.0;
        }
        spectral_norm(&self.reject_columns(&other.basis))
    }

    /// Orthogonal direct sum; the two subspaces are assumed orthogonal up to tolerance.
    pub fn direct_sum(&self, other: &SubspaceBasis) -> Result<SubspaceBasis> {
        if self.ambient() != other.ambient() {
            return Err(Error::Shape(format!(
                "ambient dimensions {} and {} differ",
                self.ambient(),
                other.ambient()
            )));
        }
        let mut joined = CMatrix::zeros(self.ambient(), self.dim() + other.dim());
        joined.columns_mut(0, self.dim()).copy_from(&self.basis);
        joined.columns_mut(self.dim(), other.dim()).copy_from(&other.basis);
        SubspaceBasis::span_scaled(&joined, self.tol, 1.0)
    }

    /// Basis obtained by Gram-Schmidt on the projections of the coordinate
    /// vectors e_0, e_1, ... in order, each normalized so that its pivot
    /// coordinate is real and positive. It depends only on the subspace.
    pub fn canonical(&self) -> SubspaceBasis {
        let k = self.dim();
        if k == 0 {
            return self.clone();
        }
        let mut accepted: Vec<CVector> = Vec::with_capacity(k);
        let mut pivots = Vec::with_capacity(k);
        for idx in 0..self.ambient() {
            if accepted.len() == k {
                break;
            }
            // coefficients of P e_idx in terms of the current basis
            let mut y: CVector = self.basis.row(idx).adjoint();
            for _ in 0..2 {
                for prev in &accepted {
                    let c = prev.dotc(&y);
                    y -= prev * c;
                }
            }
            let norm = y.norm();
            if norm >= 1e-4 {
                accepted.push(y / Complex64::from(norm));
                pivots.push(idx);
            }
        }
        if accepted.len() < k {
            return self.clone();
        }
        let mut coeffs = CMatrix::zeros(k, k);
        for (j, y) in accepted.iter().enumerate() {
            coeffs.set_column(j, y);
        }
        let mut basis = &self.basis * coeffs;
        for (j, &idx) in pivots.iter().enumerate() {
            let pivot = basis[(idx, j)];
            if pivot.norm() > 0.0 {
                let phase = pivot.conj() / pivot.norm();
                for i in 0..basis.nrows() {
                    basis[(i, j)] *= phase;
                }
            }
        }
        SubspaceBasis { basis, tol: self.tol }
    }
}

fn check_same_ambient(a: &SubspaceBasis, b: &SubspaceBasis) -> Result<()> {
    if a.ambient() != b.ambient() {
        return Err(Error::Shape(format!(
            "ambient dimensions {} and {} differ",
            a.ambient(),
            b.ambient()
        )));
    }
    Ok(())
}

/// Principal angles between two subspaces, ascending, `min(dim A, dim B)` of them.
///
/// Small angles come from the sines (singular values of the part of the smaller
/// subspace orthogonal to the larger one), large ones from the cosines.
pub fn principal_angles(a: &SubspaceBasis, b: &SubspaceBasis) -> Result<Vec<f64>> {
    check_same_ambient(a, b)?;
    let (big, small) = if a.dim() >= b.dim() { (a, b) } else { (b, a) };
    let k = small.dim();
    if k == 0 {
        return Ok(Vec::new());
    }
    let cosines = svd(&(big.basis().adjoint() * small.basis())).s;
    let (mut sines, _) = full_right_singular(&big.reject_columns(small.basis()));
    sines.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let angles = (0..k)
        .map(|i| {
            let c = cosines.get(i).copied().unwrap_or(0.0).min(1.0);
            let s = sines[i].min(1.0);
            if c * c > 0.5 {
                s.asin()
            } else {
                c.acos()
            }
        })
        .collect();
    Ok(angles)
}

/// Largest principal angle; subspaces of different dimension are a right angle apart.
pub fn max_principal_angle(a: &SubspaceBasis, b: &SubspaceBasis) -> Result<f64> {
    check_same_ambient(a, b)?;
    if a.dim() != b.dim() {
        return Ok(std::f64::consts::FRAC_PI_2);
    }
    Ok(principal_angles(a, b)?.last().copied().unwrap_or(0.0))
}

/// Orthonormal basis of `A ∩ B`: the directions of `B` whose principal angle to
/// `A` has sine below the tolerance threshold (relative to unit scale).
pub fn intersect(a: &SubspaceBasis, b: &SubspaceBasis, tol: RankTolerance) -> Result<SubspaceBasis> {
    check_same_ambient(a, b)?;
    let n = a.ambient();
    if a.dim() == 0 || b.dim() == 0 {
        return Ok(SubspaceBasis::empty(n, tol));
    }
    let residual = a.reject_columns(b.basis());
    let (sines, v) = full_right_singular(&residual);
    let threshold = tol.threshold(1.0);
    let picked: Vec<usize> = (0..sines.len()).filter(|&i| sines[i] <= threshold).collect();
    let mut dirs = CMatrix::zeros(b.dim(), picked.len());
    for (j, &i) in picked.iter().enumerate() {
        dirs.set_column(j, &v.column(i));
    }
    SubspaceBasis::span_scaled(&(b.basis() * dirs), tol, 1.0)
}

/// Orthonormal basis of `outer ⊖ inner`, after verifying `inner ⊆ outer`.
pub fn complement(outer: &SubspaceBasis, inner: &SubspaceBasis, tol: RankTolerance) -> Result<SubspaceBasis> {
    check_same_ambient(outer, inner)?;
    let n = outer.ambient();
    let residual = outer.containment_residual(inner);
    if residual > tol.threshold(1.0).max(1e-9) {
        return Err(Error::NotContained { residual });
    }
    let want = outer.dim().saturating_sub(inner.dim());
    if want == 0 {
        return Ok(SubspaceBasis::empty(n, tol));
    }
    let d = svd(&inner.reject_columns(outer.basis()));
    let mut basis = d.u.columns(0, want).into_owned();
    // one more orthogonalization against inner to clean up rounding
    basis = inner.reject_columns(&basis);
    let (q, _) = orthonormalize_allow_empty(&basis, tol, Some(1.0))?;
    Ok(SubspaceBasis::from_orthonormal(q, tol))
}

/// Least-squares solver for an injective matrix, caching its SVD.
#[derive(Clone, Debug)]
pub struct LeastSquares {
    u: CMatrix,
    inv_s: Vec<f64>,
    v: CMatrix,
    sigma_min: f64,
    sigma_max: f64,
}

impl LeastSquares {
    pub fn new(t: &CMatrix, tol: RankTolerance) -> Result<Self> {
        check_finite(t)?;
        if t.ncols() > t.nrows() {
            return Err(Error::SingularOperator { sigma_min: 0.0 });
        }
        let d = svd(t);
        let sigma_max = d.s.first().copied().unwrap_or(0.0);
        let sigma_min = d.s.last().copied().unwrap_or(0.0);
        if t.ncols() == 0 || sigma_min <= tol.threshold(sigma_max) {
            return Err(Error::SingularOperator { sigma_min });
        }
        Ok(Self { inv_s: d.s.iter().map(|s| 1.0 / s).collect(), u: d.u, v: d.v, sigma_min, sigma_max })
    }

    pub fn solve(&self, y: &CVector) -> CVector {
        let mut coeffs = self.u.adjoint() * y;
        for (c, s) in coeffs.iter_mut().zip(&self.inv_s) {
            *c *= *s;
        }
        &self.v * coeffs
    }

    /// The pseudo-inverse as an explicit matrix.
    pub fn matrix(&self) -> CMatrix {
        let mut scaled = self.v.clone();
        for (j, s) in self.inv_s.iter().enumerate() {
            scaled.column_mut(j).scale_mut(*s);
        }
        scaled * self.u.adjoint()
    }

    pub fn sigma_min(&self) -> f64 {
        self.sigma_min
    }

    /// Orthonormal basis of the range.
    pub fn range_basis(&self) -> &CMatrix {
        &self.u
    }

    pub fn sigma_max(&self) -> f64 {
        self.sigma_max
    }
}

/// The least-squares solution `x` of `t x ≈ y`.
pub fn pinv_apply(t: &CMatrix, y: &CVector, tol: RankTolerance) -> Result<CVector> {
    if y.len() != t.nrows() {
        return Err(Error::Shape(format!("vector length {} vs {} rows", y.len(), t.nrows())));
    }
    Ok(LeastSquares::new(t, tol)?.solve(y))
}

/// Basis of the numerical null space of `a`.
pub fn nullspace(a: &CMatrix, tol: RankTolerance, scale: Option<f64>) -> Result<CMatrix> {
    check_finite(a)?;
    let c = a.ncols();
    let (s, v) = full_right_singular(a);
    let sigma_max = s.first().copied().unwrap_or(0.0);
    let threshold = tol.threshold(scale.unwrap_or(sigma_max));
    let picked: Vec<usize> = (0..s.len()).filter(|&i| s[i] <= threshold).collect();
    let mut out = CMatrix::zeros(c, picked.len());
    for (j, &i) in picked.iter().enumerate() {
        out.set_column(j, &v.column(i));
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct EigenPair {
    pub value: Complex64,
    pub vector: CVector,
    pub residual: f64,
}

/// Eigenvalues from a complex Schur form; each vector is the smallest right
/// singular vector of `A - λI`.
pub fn eigenpairs(a: &CMatrix) -> Result<Vec<EigenPair>> {
    if a.nrows() != a.ncols() {
        return Err(Error::Shape(format!("eigenpairs needs a square matrix, got {}x{}", a.nrows(), a.ncols())));
    }
    check_finite(a)?;
    let n = a.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let values = nalgebra::linalg::Schur::new(a.clone())
        .eigenvalues()
        .ok_or_else(|| Error::NumericalFailure("Schur iteration did not converge".into()))?;
    let pairs = values
        .iter()
        .map(|&value| {
            let shifted = a - CMatrix::identity(n, n) * value;
            let (_, v) = full_right_singular(&shifted);
            let vector: CVector = v.column(n - 1).into_owned();
            let residual = (&shifted * &vector).norm();
            EigenPair { value, vector, residual }
        })
        .collect();
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_matrix(rng: &mut ChaCha8Rng, r: usize, k: usize) -> CMatrix {
        CMatrix::from_fn(r, k, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    fn tol() -> RankTolerance {
        RankTolerance::default()
    }

    #[test]
    fn svd_reconstructs_low_rank_and_wide() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (r, k, rank) in [(74, 9, 1), (40, 6, 2), (5, 12, 3), (9, 9, 0)] {
            let a = random_matrix(&mut rng, r, rank) * random_matrix(&mut rng, rank, k);
            for d in [svd(&a), jacobi_svd(&a)] {
                assert!(svd_is_accurate(&a, &d), "{r}x{k} rank {rank}");
                assert!(d.s.windows(2).all(|w| w[0] >= w[1]));
            }
        }
    }

    #[test]
    fn rank_tolerance_validation() {
        assert!(RankTolerance::new(0.0, 0.0).is_err());
        assert!(RankTolerance::new(-1.0, 1.0).is_err());
        assert!(RankTolerance::new(0.0, 1e-10).is_ok());
    }

    #[test]
    fn orthonormalize_trivial_cases() {
        let a = CMatrix::from_row_slice(2, 1, &[ONE, ZERO]);
        let (q, rank) = orthonormalize(&a, tol()).unwrap();
        assert_eq!(rank, 1);
        assert!((q[(0, 0)] - ONE).norm() < 1e-15 && q[(1, 0)].norm() < 1e-15);

        let a = CMatrix::from_row_slice(2, 2, &[ONE, c(2.0, 0.0), ZERO, ZERO]);
        let (q, rank) = orthonormalize(&a, tol()).unwrap();
        assert_eq!(rank, 1);
        assert!((q[(0, 0)].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn orthonormalize_rejects_bad_input() {
        let a = CMatrix::from_row_slice(1, 1, &[c(f64::NAN, 0.0)]);
        assert!(matches!(orthonormalize(&a, tol()), Err(Error::InvalidInput(_))));
        assert!(orthonormalize(&CMatrix::zeros(3, 0), tol()).is_err());
    }

    #[test]
    fn orthonormalize_dependent_column_matches_singular_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut a = random_matrix(&mut rng, 3, 3);
        let sum = a.column(0) + a.column(1);
        a.set_column(2, &sum);
        let oracle = a.clone().svd(false, false).singular_values;
        let oracle_rank = oracle.iter().filter(|&&s| s > 1e-10 * oracle[0]).count();
        let (q, rank) = orthonormalize(&a, tol()).unwrap();
        assert_eq!(rank, 2);
        assert_eq!(rank, oracle_rank);
        let gram = q.adjoint() * &q;
        assert!((gram - CMatrix::identity(2, 2)).norm() < 1e-12);
        let span = SubspaceBasis::from_orthonormal(q, tol());
        assert!(span.reject_columns(&a).norm() < 1e-12);
    }

    #[test]
    fn intersect_trivial_cases() {
        let x = SubspaceBasis::span(&CMatrix::from_row_slice(2, 1, &[ONE, ZERO]), tol()).unwrap();
        let d = SubspaceBasis::span(&CMatrix::from_row_slice(2, 1, &[ONE, ONE]), tol()).unwrap();
        assert_eq!(intersect(&x, &d, tol()).unwrap().dim(), 0);
        let plane = SubspaceBasis::from_orthonormal(CMatrix::identity(2, 2), tol());
        let cap = intersect(&plane, &d, tol()).unwrap();
        assert_eq!(cap.dim(), 1);
        assert!(max_principal_angle(&cap, &d).unwrap() < 1e-14);
        let three = SubspaceBasis::empty(3, tol());
        assert!(matches!(intersect(&plane, &three, tol()), Err(Error::Shape(_))));
    }

    #[test]
    fn intersect_recovers_planted_common_part() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let common = random_matrix(&mut rng, 8, 2);
        let mut a = random_matrix(&mut rng, 8, 4);
        let mut b = random_matrix(&mut rng, 8, 4);
        a.columns_mut(0, 2).copy_from(&common);
        b.columns_mut(2, 2).copy_from(&common);
        // mix so that the planted part is not a subset of the columns
        let mix = random_matrix(&mut rng, 4, 4);
        let a = SubspaceBasis::span(&(a * &mix), tol()).unwrap();
        let b = SubspaceBasis::span(&(b * mix), tol()).unwrap();
        let cap = intersect(&a, &b, tol()).unwrap();
        assert_eq!(cap.dim(), 2);
        let planted = SubspaceBasis::span(&common, tol()).unwrap();
        assert!(max_principal_angle(&cap, &planted).unwrap() < 1e-8);
        // projector ordering P_cap <= P_a, P_b
        for s in [&a, &b] {
            let diff = s.projector() - cap.projector();
            let worst = eigenpairs(&diff).unwrap().iter().map(|p| p.value.re).fold(f64::INFINITY, f64::min);
            assert!(worst > -1e-10);
        }
    }

    #[test]
    fn complement_trivial_cases() {
        let plane = SubspaceBasis::from_orthonormal(CMatrix::identity(2, 2), tol());
        let x = SubspaceBasis::span(&CMatrix::from_row_slice(2, 1, &[ONE, ZERO]), tol()).unwrap();
        let rest = complement(&plane, &x, tol()).unwrap();
        assert_eq!(rest.dim(), 1);
        assert!((rest.basis()[(1, 0)].norm() - 1.0).abs() < 1e-14);
        assert_eq!(complement(&plane, &plane, tol()).unwrap().dim(), 0);
        let d = SubspaceBasis::span(&CMatrix::from_row_slice(2, 1, &[ONE, ONE]), tol()).unwrap();
        assert!(matches!(complement(&x, &d, tol()), Err(Error::NotContained { .. })));
    }

    #[test]
    fn complement_projector_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let outer = SubspaceBasis::span(&random_matrix(&mut rng, 10, 5), tol()).unwrap();
        let inner = SubspaceBasis::span(&(outer.basis() * random_matrix(&mut rng, 5, 2)), tol()).unwrap();
        let rest = complement(&outer, &inner, tol()).unwrap();
        assert_eq!(rest.dim(), 3);
        assert!((inner.basis().adjoint() * rest.basis()).norm() < 1e-12);
        let identity = outer.projector() - inner.projector() - rest.projector();
        assert!(spectral_norm(&identity) < 1e-10);
    }

    #[test]
    fn pinv_trivial_and_shift() {
        let y = CVector::from_vec(vec![c(1.0, 2.0), c(-3.0, 0.5)]);
        let x = pinv_apply(&CMatrix::identity(2, 2), &y, tol()).unwrap();
        assert!((x - &y).norm() < 1e-15);
        let two = CMatrix::identity(2, 2) * c(2.0, 0.0);
        let x = pinv_apply(&two, &y, tol()).unwrap();
        assert!((x - &y * c(0.5, 0.0)).norm() < 1e-15);

        let n = 6;
        let shift = CMatrix::from_fn(n + 1, n, |i, j| if i == j + 1 { ONE } else { ZERO });
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = random_matrix(&mut rng, n, 1).column(0).into_owned();
        let x = pinv_apply(&shift, &(&shift * &f), tol()).unwrap();
        assert!((x - f).norm() < 1e-12);

        let singular = CMatrix::from_row_slice(2, 2, &[ONE, ONE, ONE, ONE]);
        assert!(matches!(pinv_apply(&singular, &y, tol()), Err(Error::SingularOperator { .. })));
    }

    #[test]
    fn eigenpairs_small_cases() {
        let d = CMatrix::from_diagonal(&CVector::from_vec(vec![c(0.3, 0.0), c(0.7, 0.0)]));
        let mut values: Vec<f64> = eigenpairs(&d).unwrap().iter().map(|p| p.value.re).collect();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((values[0] - 0.3).abs() < 1e-14 && (values[1] - 0.7).abs() < 1e-14);

        let jordan = CMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), ONE, ZERO, c(0.5, 0.0)]);
        for p in eigenpairs(&jordan).unwrap() {
            assert!((p.value - c(0.5, 0.0)).norm() < 1e-7);
            assert!(p.residual < 1e-7);
        }
        assert!(matches!(eigenpairs(&CMatrix::zeros(2, 3)), Err(Error::Shape(_))));
    }

    #[test]
    fn canonical_basis_is_subspace_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = SubspaceBasis::span(&random_matrix(&mut rng, 7, 3), tol()).unwrap();
        let rotated = SubspaceBasis::span(&(a.basis() * random_matrix(&mut rng, 3, 3)), tol()).unwrap();
        let ca = a.canonical();
        let cr = rotated.canonical();
        assert!((ca.basis() - cr.basis()).norm() < 1e-12);
        assert!((ca.basis().adjoint() * ca.basis() - CMatrix::identity(3, 3)).norm() < 1e-12);
    }

    #[test]
    fn principal_angles_of_lines() {
        let x = SubspaceBasis::span(&CMatrix::from_row_slice(2, 1, &[ONE, ZERO]), tol()).unwrap();
        let d = SubspaceBasis::span(&CMatrix::from_row_slice(2, 1, &[ONE, ONE]), tol()).unwrap();
        let angles = principal_angles(&x, &d).unwrap();
        assert!((angles[0] - std::f64::consts::FRAC_PI_4).abs() < 1e-14);
        let tiny = SubspaceBasis::span(&CMatrix::from_row_slice(2, 1, &[ONE, c(1e-12, 0.0)]), tol()).unwrap();
        let angle = principal_angles(&x, &tiny).unwrap()[0];
        assert!((angle - 1e-12).abs() < 1e-20);
    }
}
