//! Planted nearly invariant subspaces with known (r, p), built in the model
//! space H²(ℂ^m) from monomial index sets and carried to the ambient space
//! through U* (or used directly when the coordinates already are layers).
//!
//! For component j with index set A_j, M is spanned by z^i δ_j (i ∈ A_j). Then
//! r counts the components with 0 ∈ A_j and the defect is spanned by z^{i−1}δ_j
//! for i ∈ A_j, i ≥ 1, i − 1 ∉ A_j. A constant unitary mix of the components
//! and a scalar inner factor θ with θ(0) ≠ 0 both preserve (r, p).

use num_complex::Complex64;
use rand::Rng;

use crate::blaschke::{BlaschkeProduct, TAYLOR_TAIL_TOL};
use crate::error::{Error, Result};
use crate::hardy::{convolve, HardySpec};
use crate::nearinv::shift::{ShiftModel, Tolerances};
use crate::nearinv::transfer::TransferUnitary;
use crate::numerics::{CMatrix, CVector, RankTolerance, SubspaceBasis, ONE, ZERO};

/// Largest coefficient mass of θ·z^i allowed past the model truncation.
const INNER_TAIL_TOL: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq)]
pub struct MonomialPlan {
    pub sets: Vec<Vec<usize>>,
    pub mix: Option<CMatrix>,
    pub inner: Option<BlaschkeProduct>,
}

impl MonomialPlan {
    pub fn new(mut sets: Vec<Vec<usize>>) -> Result<Self> {
        if sets.is_empty() {
            return Err(Error::InvalidInput("need at least one component".into()));
        }
        for s in &mut sets {
            s.sort_unstable();
            s.dedup();
        }
        if sets.iter().all(Vec::is_empty) {
            return Err(Error::InvalidInput("every index set is empty".into()));
        }
        Ok(Self { sets, mix: None, inner: None })
    }

    /// Each index in 0..=max_index joins each component with probability `density`.
    pub fn random(rng: &mut impl Rng, multiplicity: usize, max_index: usize, density: f64) -> Self {
        loop {
            let sets: Vec<Vec<usize>> =
                (0..multiplicity).map(|_| (0..=max_index).filter(|_| rng.random_bool(density)).collect()).collect();
            if let Ok(plan) = Self::new(sets) {
                return plan;
            }
        }
    }

    pub fn with_mix(mut self, w: CMatrix) -> Result<Self> {
        let m = self.multiplicity();
        if w.shape() != (m, m) {
            return Err(Error::Shape(format!("mix must be {m}x{m}")));
        }
        let defect = (w.adjoint() * &w - CMatrix::identity(m, m)).norm();
        if defect > 1e-12 {
            return Err(Error::InvalidInput(format!("mix is not unitary (defect {defect:.3e})")));
        }
        self.mix = Some(w);
        Ok(self)
    }

    pub fn with_inner(mut self, theta: BlaschkeProduct) -> Result<Self> {
        if theta.eval(ZERO).norm() < 1e-12 {
            return Err(Error::InvalidInput("θ(0) must be nonzero".into()));
        }
        self.inner = Some(theta);
        Ok(self)
    }

    pub fn multiplicity(&self) -> usize {
        self.sets.len()
    }

    pub fn dim(&self) -> usize {
        self.sets.iter().map(Vec::len).sum()
    }

    pub fn max_index(&self) -> usize {
        self.sets.iter().flatten().copied().max().unwrap_or(0)
    }

    pub fn expected_r(&self) -> usize {
        self.sets.iter().filter(|s| s.first() == Some(&0)).count()
    }

    fn defect_indices(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (j, s) in self.sets.iter().enumerate() {
            for &i in s {
                if i >= 1 && s.binary_search(&(i - 1)).is_err() {
                    out.push((i - 1, j));
                }
            }
        }
        out
    }

    pub fn expected_p(&self) -> usize {
        self.defect_indices().len()
    }

    /// Coefficient columns (index n·m + j, `layers` degrees) of the spanning
    /// vectors of M and of the defect.
    pub fn model_vectors(&self, layers: usize) -> Result<(CMatrix, CMatrix)> {
        let m = self.multiplicity();
        if self.max_index() >= layers {
            return Err(Error::Budget(format!("index {} needs more than {layers} layers", self.max_index())));
        }
        let theta = match &self.inner {
            Some(b) => {
                let full = b.taylor_coeffs(layers + 64);
                let reach = layers - self.max_index();
                let tail = full[reach..].iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
                if tail > INNER_TAIL_TOL {
                    return Err(Error::Budget(format!("θ leaves {tail:.3e} past the model truncation")));
                }
                full[..layers].to_vec()
            }
            None => vec![ONE],
        };
        let column = |i: usize, j: usize| {
            let mut mono = vec![ZERO; i + 1];
            mono[i] = ONE;
            let series = convolve(&mono, &theta, layers);
            let mut col = vec![ZERO; layers * m];
            for (n, c) in series.into_iter().enumerate() {
                match &self.mix {
                    Some(w) => {
                        for a in 0..m {
                            col[n * m + a] += w[(a, j)] * c;
                        }
                    }
                    None => col[n * m + j] = c,
                }
            }
            col
        };
        let members: Vec<(usize, usize)> =
            self.sets.iter().enumerate().flat_map(|(j, s)| s.iter().map(move |&i| (i, j))).collect();
        let build = |idx: &[(usize, usize)]| {
            let mut a = CMatrix::zeros(layers * m, idx.len());
            for (c, &(i, j)) in idx.iter().enumerate() {
                a.set_column(c, &nalgebra::DVector::from_vec(column(i, j)));
            }
            a
        };
        Ok((build(&members), build(&self.defect_indices())))
    }
}

#[derive(Clone, Debug)]
pub struct Planted {
    pub m: SubspaceBasis,
    pub f: SubspaceBasis,
    pub r: usize,
    pub p: usize,
}

fn finish(plan: &MonomialPlan, m: CMatrix, f: CMatrix, tol: RankTolerance) -> Result<Planted> {
    let m = SubspaceBasis::span(&m, tol)?;
    let f = SubspaceBasis::span(&f, tol)?;
    Ok(Planted { m, f, r: plan.expected_r(), p: plan.expected_p() })
}

/// M = U*(model span) through the layers of a transfer unitary.
pub fn plant_with_transfer(plan: &MonomialPlan, unitary: &TransferUnitary, tol: RankTolerance) -> Result<Planted> {
    if plan.multiplicity() != unitary.model.m {
        return Err(Error::Shape(format!("plan has {} components but T has multiplicity {}", plan.multiplicity(), unitary.model.m)));
    }
    let (m, f) = plan.model_vectors(unitary.layers())?;
    finish(plan, &unitary.v * m, &unitary.v * f, tol)
}

/// Planting for operators whose coordinates already are the layers T^i e_j up
/// to positive per-layer factors, such as the weighted Wold shifts.
pub fn plant_in_layers(plan: &MonomialPlan, shift: &ShiftModel) -> Result<Planted> {
    let block = shift.multiplicity();
    if plan.multiplicity() != block || shift.dim() % block != 0 {
        return Err(Error::Shape(format!("plan has {} components but T has multiplicity {block}", plan.multiplicity())));
    }
    if plan.inner.is_some() {
        // θ does not commute with a weighted layer shift
        return Err(Error::InvalidInput("an inner factor needs plant_with_transfer".into()));
    }
    let (m, f) = plan.model_vectors(shift.dim() / block)?;
    finish(plan, m, f, shift.tol().rank)
}

/// Unitary Q factor of a matrix with independent uniform entries.
pub fn random_unitary(rng: &mut impl Rng, n: usize) -> CMatrix {
    let a = CMatrix::from_fn(n, n, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    a.qr().q()
}

/// Upper-triangular V = D + εN with unit-modulus-scaled diagonal, invertible
/// and with condition number bounded by a small constant.
pub fn random_well_conditioned(rng: &mut impl Rng, n: usize, keep: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |i, j| {
        if i == j {
            Complex64::from_polar(rng.random_range(0.8..1.25), rng.random_range(0.0..std::f64::consts::TAU))
        } else if j > i && j < keep {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * (0.3 / n as f64)
        } else {
            ZERO
        }
    })
}

/// M = B_a·(span{1, z², z⁶, z⁸, …} ⊕ span{z, z³, …, z^{2m+1}}) under T_{z²},
/// with even exponents truncated at N. Here r = 2 with G₀ = B_a·span{1, z},
/// the defect is F = span{z⁴B_a}, and K = K_{z²} ⊕ K_{z^{m+1}} ⊕ H² read with
/// Φ = diag(z², z^{m+1}, 0).
#[derive(Clone, Debug)]
pub struct EvenOddExample {
    pub a: Complex64,
    pub odd: usize,
    pub budget: usize,
    pub blaschke: BlaschkeProduct,
    pub spec: HardySpec,
    pub shift: ShiftModel,
    pub subspace: SubspaceBasis,
}

impl EvenOddExample {
    pub fn new(a: Complex64, odd: usize, budget: usize, tol: Tolerances) -> Result<Self> {
        if a == ZERO {
            return Err(Error::InvalidInput("a must be a nonzero point of the disc".into()));
        }
        if 2 * odd + 1 > budget || budget < 6 {
            return Err(Error::Budget(format!("budget {budget} is too small for m = {odd}")));
        }
        let blaschke = BlaschkeProduct::automorphism(a)?;
        let spec = HardySpec::scalar(budget + blaschke.effective_degree(TAYLOR_TAIL_TOL) + 2);
        let shift = ShiftModel::monomial(spec, 2, tol)?;
        let exps = Self::exponents(odd, budget);
        let mut gens = CMatrix::zeros(spec.dim(), exps.len());
        for (c, &k) in exps.iter().enumerate() {
            gens.set_column(c, &times_monomial(&blaschke, k, spec));
        }
        let subspace = SubspaceBasis::span(&gens, tol.rank)?;
        Ok(Self { a, odd, budget, blaschke, spec, shift, subspace })
    }

    /// Exponents k of the generators B_a·z^k.
    pub fn exponents(odd: usize, budget: usize) -> Vec<usize> {
        let even = [0, 2].into_iter().chain((6..=budget).step_by(2));
        let odds = (0..=odd).map(|i| 2 * i + 1).filter(|&k| k <= budget);
        even.chain(odds).collect()
    }

    fn span_of(&self, exps: &[usize]) -> Result<SubspaceBasis> {
        let mut a = CMatrix::zeros(self.spec.dim(), exps.len());
        for (c, &k) in exps.iter().enumerate() {
            a.set_column(c, &times_monomial(&self.blaschke, k, self.spec));
        }
        SubspaceBasis::span(&a, RankTolerance::default())
    }

    pub fn g0_reference(&self) -> Result<SubspaceBasis> {
        self.span_of(&[0, 1])
    }

    pub fn defect_reference(&self) -> Result<SubspaceBasis> {
        self.span_of(&[4])
    }

    /// Reference K in H²(ℂ³) (index n·3 + i, degrees ≤ `degree`) expressed in
    /// the bases g0, f1 actually used: B_a, zB_a and z⁴B_a are rotated into
    /// them before the coordinates are written.
    pub fn k_reference(&self, g0: &SubspaceBasis, f1: &SubspaceBasis, degree: usize) -> Result<SubspaceBasis> {
        if g0.dim() != 2 || f1.dim() != 1 {
            return Err(Error::Shape(format!("expected r = 2 and p = 1, got {} and {}", g0.dim(), f1.dim())));
        }
        let hat_g = CMatrix::from_columns(&[
            times_monomial(&self.blaschke, 0, self.spec),
            times_monomial(&self.blaschke, 1, self.spec),
        ]);
        let hat_f = times_monomial(&self.blaschke, 4, self.spec);
        let wg = g0.basis().adjoint() * hat_g;
        let wf = (f1.basis().adjoint() * hat_f)[0];
        let tail = (self.budget.saturating_sub(6)) / 2;
        let mut cols: Vec<CVector> = Vec::new();
        let mut push = |slot: usize, n: usize| {
            let mut v = CVector::zeros(3 * (degree + 1));
            if slot < 2 {
                for i in 0..2 {
                    v[n * 3 + i] = wg[(i, slot)];
                }
            } else {
                v[n * 3 + 2] = wf;
            }
            cols.push(v);
        };
        for n in 0..=1.min(degree) {
            push(0, n);
        }
        for n in 0..=self.odd.min(degree) {
            push(1, n);
        }
        for n in 0..=tail.min(degree) {
            push(2, n);
        }
        SubspaceBasis::span(&CMatrix::from_columns(&cols), RankTolerance::default())
    }
}

/// Coefficients of B·z^k through the truncation degree.
fn times_monomial(b: &BlaschkeProduct, k: usize, spec: HardySpec) -> CVector {
    let len = spec.dim();
    let mut v = CVector::zeros(len);
    if k < len {
        for (n, c) in b.taylor_coeffs(len - k).into_iter().enumerate() {
            v[n + k] = c;
        }
    }
    v
}
