//! Finite Blaschke products, their Taylor expansions and multiplication
//! operators, model spaces K_B = H² ⊖ B·H², Wold layers f = Σ Bⁿ hₙ and
//! sup-norms on sub-discs.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hardy::{convolve, CoeffFn, HardySpec, OperatorMatrix};
use crate::numerics::{svd, CMatrix, CVector, ONE, ZERO};

/// Tail level at which a Taylor expansion is considered exhausted.
pub const TAYLOR_TAIL_TOL: f64 = 1e-16;

/// e^{iθ} ∏ (z − z_k)/(1 − z̄_k z).
#[derive(Clone, Debug, PartialEq)]
pub struct BlaschkeProduct {
    phase: Complex64,
    zeros: Vec<Complex64>,
}

impl BlaschkeProduct {
    pub fn new(phase: Complex64, zeros: Vec<Complex64>) -> Result<Self> {
        if !((phase.norm() - 1.0).abs() <= 1e-14) {
            return Err(Error::InvalidInput(format!("phase must be unimodular, |phase| = {}", phase.norm())));
        }
        if zeros.is_empty() {
            return Err(Error::InvalidInput("a Blaschke product needs at least one zero".into()));
        }
        if let Some(z) = zeros.iter().find(|z| !(z.norm() < 1.0)) {
            return Err(Error::InvalidInput(format!("zero {z} is not inside the unit disc")));
        }
        Ok(Self { phase, zeros })
    }

    pub fn from_zeros(zeros: Vec<Complex64>) -> Result<Self> {
        Self::new(ONE, zeros)
    }

    /// The disc automorphism (a − z)/(1 − ā z).
    pub fn automorphism(a: Complex64) -> Result<Self> {
        Self::new(-ONE, vec![a])
    }

    /// z^k.
    pub fn monomial(k: usize) -> Result<Self> {
        Self::from_zeros(vec![ZERO; k])
    }

    pub fn phase(&self) -> Complex64 {
        self.phase
    }

    pub fn zeros(&self) -> &[Complex64] {
        &self.zeros
    }

    pub fn degree(&self) -> usize {
        self.zeros.len()
    }

    pub fn max_zero_modulus(&self) -> f64 {
        self.zeros.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// True when every zero is at the origin, i.e. B = e^{iθ} z^d.
    pub fn is_monomial(&self) -> bool {
        self.zeros.iter().all(|z| *z == ZERO)
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.zeros.iter().fold(self.phase, |acc, a| acc * factor(*a, z))
    }

    /// Taylor coefficients b_0..b_{len-1}.
    pub fn taylor_coeffs(&self, len: usize) -> Vec<Complex64> {
        let mut out = vec![ZERO; len];
        if len == 0 {
            return out;
        }
        out[0] = self.phase;
        for a in &self.zeros {
            out = convolve(&out, &factor_series(*a, len), len);
        }
        out
    }

    /// Taylor polynomial through degree N with a certified tail bound.
    pub fn taylor(&self, n: usize) -> Result<CoeffFn> {
        if n < self.degree() {
            return Err(Error::Budget(format!("Taylor budget {n} below degree {}", self.degree())));
        }
        let coeffs = CVector::from_vec(self.taylor_coeffs(n + 1));
        CoeffFn::new(HardySpec::scalar(n), coeffs, self.tail_bound(n))
    }

    /// Bound on Σ_{n>N} |b_n| (hence on the H² and H^∞ norms of the tail).
    pub fn tail_bound(&self, n: usize) -> f64 {
        majorant_tail(self.max_zero_modulus(), self.degree(), self.degree(), n)
    }

    /// Smallest Taylor budget N >= degree with tail bound at most `tol`.
    pub fn effective_degree(&self, tol: f64) -> usize {
        smallest_budget(self.max_zero_modulus(), self.degree(), self.degree(), self.degree(), tol)
    }

    /// Takenaka–Malmquist function φ_k(z) = √(1−|z_k|²)/(1 − z̄_k z) ∏_{j<k} (z − z_j)/(1 − z̄_j z).
    pub fn tm_eval(&self, k: usize, z: Complex64) -> Complex64 {
        let a = self.zeros[k];
        let head = (1.0 - a.norm_sqr()).sqrt() / (ONE - a.conj() * z);
        self.zeros[..k].iter().fold(head, |acc, b| acc * factor(*b, z))
    }

    pub fn tm_taylor_coeffs(&self, k: usize, len: usize) -> Vec<Complex64> {
        let a = self.zeros[k];
        let scale = (1.0 - a.norm_sqr()).sqrt();
        let mut out: Vec<Complex64> = geometric(a.conj(), len).into_iter().map(|c| c * scale).collect();
        for b in &self.zeros[..k] {
            out = convolve(&out, &factor_series(*b, len), len);
        }
        out
    }

    pub fn tm_tail_bound(&self, k: usize, n: usize) -> f64 {
        majorant_tail(self.max_zero_modulus(), k, k + 1, n)
    }

    /// Smallest Taylor budget at which every TM function has tail at most `tol`.
    pub fn tm_effective_degree(&self, tol: f64) -> usize {
        smallest_budget(self.max_zero_modulus(), self.degree() - 1, self.degree(), 0, tol)
    }
}

fn factor(a: Complex64, z: Complex64) -> Complex64 {
    (z - a) / (ONE - a.conj() * z)
}

fn geometric(ratio: Complex64, len: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(len);
    let mut p = ONE;
    for _ in 0..len {
        out.push(p);
        p *= ratio;
    }
    out
}

/// Taylor coefficients of (z − a)/(1 − ā z): −a, then (1 − |a|²) ā^{n−1}.
fn factor_series(a: Complex64, len: usize) -> Vec<Complex64> {
    let mut out = vec![ZERO; len];
    if len == 0 {
        return out;
    }
    out[0] = -a;
    let mut p = ONE * (1.0 - a.norm_sqr());
    for slot in out.iter_mut().skip(1) {
        *slot = p;
        p *= a.conj();
    }
    out
}

/// Coefficients of (1 + (1−ρ)z)^a (1 − ρz)^{−b}, which dominate those of a
/// product of a Blaschke factors and b Cauchy-type factors with zeros in |z| <= ρ.
fn majorant_coeffs(rho: f64, a: usize, b: usize, len: usize) -> Vec<f64> {
    let mut cauchy = vec![0.0; len];
    if len > 0 {
        cauchy[0] = 1.0;
    }
    for n in 1..len {
        cauchy[n] = if b == 0 { 0.0 } else { cauchy[n - 1] * rho * (n + b - 1) as f64 / n as f64 };
    }
    let mut binom = vec![1.0; a + 1];
    for j in 1..=a {
        binom[j] = binom[j - 1] * (a + 1 - j) as f64 / j as f64 * (1.0 - rho);
    }
    (0..len).map(|n| (0..=a.min(n)).map(|j| binom[j] * cauchy[n - j]).sum()).collect()
}

/// Length at which the majorant coefficients are negligible for any tail query.
fn majorant_length(rho: f64, a: usize, b: usize) -> usize {
    if rho == 0.0 {
        return a + 2;
    }
    // past the peak the coefficients decay like n^{b-1} ρ^n
    let mut n = a + b + 2;
    loop {
        let log_term = (b as f64) * ((n + b) as f64).ln() + (n as f64) * rho.ln() + (a as f64) * 2f64.ln();
        if log_term < -80.0 || n > 2_000_000 {
            return n;
        }
        n += n / 4 + 16;
    }
}

fn majorant_tail(rho: f64, a: usize, b: usize, n: usize) -> f64 {
    let len = majorant_length(rho, a, b).max(n + 2);
    majorant_coeffs(rho, a, b, len)[n + 1..].iter().sum()
}

fn smallest_budget(rho: f64, a: usize, b: usize, floor: usize, tol: f64) -> usize {
    let len = majorant_length(rho, a, b).max(floor + 2);
    let coeffs = majorant_coeffs(rho, a, b, len);
    let mut tail = 0.0;
    let mut best = len - 1;
    for n in (floor..len - 1).rev() {
        tail += coeffs[n + 1];
        if tail > tol {
            break;
        }
        best = n;
    }
    best.max(floor)
}

/// Matrix of f ↦ B·f (componentwise on ℂ^m) from budget N into budget N + K,
/// where K is the effective Taylor degree of B.
pub fn mult_operator(b: &BlaschkeProduct, domain: HardySpec) -> OperatorMatrix {
    mult_operator_with_budget(b, domain, b.effective_degree(TAYLOR_TAIL_TOL))
}

pub fn mult_operator_with_budget(b: &BlaschkeProduct, domain: HardySpec, taylor_degree: usize) -> OperatorMatrix {
    let coeffs = b.taylor_coeffs(taylor_degree + 1);
    let m = domain.m;
    let codomain = domain.with_degree(domain.degree + taylor_degree);
    let mut matrix = CMatrix::zeros(codomain.dim(), domain.dim());
    for in_deg in 0..=domain.degree {
        for (k, &c) in coeffs.iter().enumerate() {
            for j in 0..m {
                matrix[((in_deg + k) * m + j, in_deg * m + j)] = c;
            }
        }
    }
    let mut op = OperatorMatrix::new(matrix, domain, codomain).expect("shapes agree by construction");
    op.norm_bound = 1.0;
    op.truncation_bound = b.tail_bound(taylor_degree);
    op
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Construction {
    TakenakaMalmquist,
    NumericalComplement,
}

/// Orthonormal basis of the model space K_B, truncated to a degree budget.
#[derive(Clone, Debug)]
pub struct ModelSpaceBasis {
    pub blaschke: BlaschkeProduct,
    pub functions: Vec<CoeffFn>,
    pub construction: Construction,
}

impl ModelSpaceBasis {
    /// The basis functions as matrix columns.
    pub fn matrix(&self) -> CMatrix {
        let n = self.functions.first().map(|f| f.coeffs().len()).unwrap_or(0);
        let mut out = CMatrix::zeros(n, self.functions.len());
        for (j, f) in self.functions.iter().enumerate() {
            out.set_column(j, f.coeffs());
        }
        out
    }
}

fn check_model_budget(b: &BlaschkeProduct, spec: HardySpec) -> Result<()> {
    if spec.m != 1 {
        return Err(Error::Shape("model spaces live in scalar H²".into()));
    }
    if spec.degree < 4 * b.degree() {
        return Err(Error::Budget(format!("budget {} below 4·deg(B) = {}", spec.degree, 4 * b.degree())));
    }
    Ok(())
}

/// Takenaka–Malmquist basis of K_B.
pub fn model_space(b: &BlaschkeProduct, spec: HardySpec) -> Result<ModelSpaceBasis> {
    check_model_budget(b, spec)?;
    let functions = (0..b.degree())
        .map(|k| {
            let coeffs = CVector::from_vec(b.tm_taylor_coeffs(k, spec.degree + 1));
            CoeffFn::new(spec, coeffs, b.tm_tail_bound(k, spec.degree))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ModelSpaceBasis { blaschke: b.clone(), functions, construction: Construction::TakenakaMalmquist })
}

/// K_B as the near-kernel of the compressed backward Toeplitz operator T_{B̄}
/// on the truncated space; an independent cross-check of [`model_space`].
pub fn model_space_numerical(b: &BlaschkeProduct, spec: HardySpec) -> Result<ModelSpaceBasis> {
    check_model_budget(b, spec)?;
    let n = spec.degree + 1;
    let coeffs = b.taylor_coeffs(n);
    let compressed = CMatrix::from_fn(n, n, |i, j| if j >= i { coeffs[j - i].conj() } else { ZERO });
    let d = svd(&compressed);
    let tail = (0..b.degree()).map(|k| b.tm_tail_bound(k, spec.degree)).fold(0.0, f64::max);
    let functions = (0..b.degree())
        .map(|k| {
            let col = d.v.column(n - 1 - k).into_owned();
            CoeffFn::new(spec, col, tail + d.s[n - 1 - k])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ModelSpaceBasis { blaschke: b.clone(), functions, construction: Construction::NumericalComplement })
}

/// Layers of f = Σ Bⁿ hₙ with hₙ ∈ K_B.
#[derive(Clone, Debug)]
pub struct WoldCoefficients {
    /// hₙ as truncated functions (budget N + K for an input of budget N).
    pub layers: Vec<CoeffFn>,
    /// Coordinates of hₙ against the Takenaka–Malmquist basis of K_B.
    pub tm_coords: Vec<CVector>,
    /// ‖f − Σ_{n≤depth} Bⁿ hₙ‖.
    pub residual: f64,
}

impl WoldCoefficients {
    pub fn depth(&self) -> usize {
        self.layers.len().saturating_sub(1)
    }

    /// Σ w_n ‖hₙ‖² for a per-layer weight function.
    pub fn weighted_norm_squared(&self, weight: impl Fn(usize) -> f64) -> f64 {
        self.tm_coords.iter().enumerate().map(|(n, c)| weight(n) * c.norm_squared()).sum()
    }
}

struct WoldStepper {
    forward: CMatrix,
    /// Cholesky factor of T_B*T_B, which is the identity up to truncation.
    gram: nalgebra::linalg::Cholesky<Complex64, nalgebra::Dyn>,
    tm: CMatrix,
    budget: usize,
    padded: usize,
    tail: f64,
}

impl WoldStepper {
    fn new(b: &BlaschkeProduct, degree: usize) -> Result<Self> {
        let op = mult_operator(b, HardySpec::scalar(degree));
        let gram = (op.matrix.adjoint() * &op.matrix)
            .cholesky()
            .ok_or_else(|| Error::NumericalFailure("T_B*T_B is not positive definite".into()))?;
        let mut tm = CMatrix::zeros(degree + 1, b.degree());
        for k in 0..b.degree() {
            tm.set_column(k, &CVector::from_vec(b.tm_taylor_coeffs(k, degree + 1)));
        }
        Ok(Self { forward: op.matrix, gram, tm, budget: degree, padded: op.codomain.degree, tail: op.truncation_bound })
    }

    /// One layer from the current quotient fₙ: (hₙ, its TM coordinates, fₙ₊₁).
    fn step(&self, current: &CVector) -> (CoeffFn, CVector, CVector) {
        let mut padded = CVector::zeros(self.padded + 1);
        padded.rows_mut(0, self.budget + 1).copy_from(current);
        let quotient = self.gram.solve(&(self.forward.adjoint() * &padded));
        let layer = &padded - &self.forward * &quotient;
        let coords = self.tm.adjoint() * current;
        let h = CoeffFn::from_parts(HardySpec::scalar(self.padded), layer, self.tail * current.norm());
        (h, coords, quotient)
    }
}

fn check_scalar(f: &CoeffFn) -> Result<()> {
    if f.spec().m != 1 {
        return Err(Error::Shape("Wold layers are defined for scalar functions".into()));
    }
    Ok(())
}

/// Wold layers h₀..h_depth of a scalar function.
///
/// Each step divides by B in the least-squares sense (fₙ₊₁ = T_B⁺ fₙ) and takes
/// hₙ = fₙ − B fₙ₊₁; the reported residual is ‖f_{depth+1}‖.
pub fn wold_decompose(f: &CoeffFn, b: &BlaschkeProduct, depth: usize) -> Result<WoldCoefficients> {
    check_scalar(f)?;
    let stepper = WoldStepper::new(b, f.degree())?;
    let mut current = f.coeffs().clone();
    let start = current.norm();
    let mut layers = Vec::with_capacity(depth + 1);
    let mut tm_coords = Vec::with_capacity(depth + 1);
    for _ in 0..=depth {
        let before = current.norm();
        let (h, coords, next) = stepper.step(&current);
        layers.push(h);
        tm_coords.push(coords);
        if next.norm() > before * (1.0 + 1e-8) + 1e-300 {
            return Err(Error::NumericalFailure(format!(
                "Wold quotient grew from {before:.3e} to {:.3e}",
                next.norm()
            )));
        }
        current = next;
    }
    let residual = current.norm() + f.tail_bound();
    debug_assert!(residual <= start + f.tail_bound() + 1e-12);
    Ok(WoldCoefficients { layers, tm_coords, residual })
}

/// Default Wold depth ⌈N / deg B⌉ + 2.
pub fn default_wold_depth(budget: usize, b: &BlaschkeProduct) -> usize {
    budget.div_ceil(b.degree()) + 2
}

/// Wold layers computed until the quotient falls below `tol·‖f‖`, starting from
/// at least the default depth and stopping at `max_depth`.
pub fn wold_decompose_auto(f: &CoeffFn, b: &BlaschkeProduct, tol: f64, max_depth: usize) -> Result<WoldCoefficients> {
    check_scalar(f)?;
    let stepper = WoldStepper::new(b, f.degree())?;
    let min_depth = default_wold_depth(f.degree(), b).min(max_depth);
    let target = tol * f.norm();
    let mut current = f.coeffs().clone();
    let mut layers = Vec::new();
    let mut tm_coords = Vec::new();
    loop {
        let before = current.norm();
        let (h, coords, next) = stepper.step(&current);
        layers.push(h);
        tm_coords.push(coords);
        if next.norm() > before * (1.0 + 1e-8) + 1e-300 {
            return Err(Error::NumericalFailure(format!(
                "Wold quotient grew from {before:.3e} to {:.3e}",
                next.norm()
            )));
        }
        current = next;
        let depth = layers.len() - 1;
        if depth >= max_depth || (depth >= min_depth && current.norm() <= target) {
            break;
        }
    }
    Ok(WoldCoefficients { layers, tm_coords, residual: current.norm() + f.tail_bound() })
}

/// Radius s = max|z_k| + margin of a disc containing every zero.
pub fn enclosing_radius(b: &BlaschkeProduct, margin: f64) -> Result<f64> {
    let rho = b.max_zero_modulus();
    if !(margin > 0.0 && margin < 1.0 - rho) {
        return Err(Error::Domain(format!("margin {margin} must lie in (0, {})", 1.0 - rho)));
    }
    Ok(rho + margin)
}

/// Default margin 0.1·(1 − max|z_k|).
pub fn default_margin(b: &BlaschkeProduct) -> f64 {
    0.1 * (1.0 - b.max_zero_modulus())
}

/// Sampled supremum of |B| on a circle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SupNorm {
    pub value: f64,
    pub argmax: Complex64,
    pub grid: usize,
    /// |value(grid) − value(2·grid)|.
    pub delta: f64,
}

fn sampled_max(b: &BlaschkeProduct, s: f64, grid: usize) -> (f64, f64) {
    let step = 2.0 * PI / grid as f64;
    let (mut best, mut best_theta) = (f64::NEG_INFINITY, 0.0);
    for i in 0..grid {
        let theta = i as f64 * step;
        let v = b.eval(Complex64::from_polar(s, theta)).norm();
        if v > best {
            best = v;
            best_theta = theta;
        }
    }
    // golden-section polish inside the neighbouring grid cells
    let f = |t: f64| b.eval(Complex64::from_polar(s, t)).norm();
    let (mut lo, mut hi) = (best_theta - step, best_theta + step);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut x1, mut x2) = (hi - g * (hi - lo), lo + g * (hi - lo));
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..80 {
        if f1 > f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    let polished = f1.max(f2);
    if polished > best {
        (polished, if f1 > f2 { x1 } else { x2 })
    } else {
        (best, best_theta)
    }
}

/// max |B| over |z| = s from `grid` samples (polished locally), with the change
/// observed when the grid is doubled.
pub fn hinf_norm_on_disc(b: &BlaschkeProduct, s: f64, grid: usize) -> Result<SupNorm> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::Domain(format!("radius {s} must lie in (0, 1)")));
    }
    if grid < 256 {
        return Err(Error::InvalidInput(format!("grid {grid} below 256 points")));
    }
    let (value, theta) = sampled_max(b, s, grid);
    let (finer, _) = sampled_max(b, s, 2 * grid);
    Ok(SupNorm { value, argmax: Complex64::from_polar(s, theta), grid, delta: (finer - value).abs() })
}

/// Grid doubling from 256 points until the refinement delta drops below 1e-8
/// (or the grid reaches 2²⁰).
pub fn hinf_norm_adaptive(b: &BlaschkeProduct, s: f64) -> Result<SupNorm> {
    let mut grid = 256;
    loop {
        let sup = hinf_norm_on_disc(b, s, grid)?;
        if sup.delta < 1e-8 || grid >= 1 << 20 {
            return Ok(sup);
        }
        grid *= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn half() -> BlaschkeProduct {
        BlaschkeProduct::automorphism(c(0.5, 0.0)).unwrap()
    }

    fn pair() -> BlaschkeProduct {
        BlaschkeProduct::from_zeros(vec![c(0.3, 0.0), c(-0.4, 0.0)]).unwrap()
    }

    fn random_blaschke(rng: &mut ChaCha8Rng, degree: usize, radius: f64) -> BlaschkeProduct {
        let zeros = (0..degree)
            .map(|_| Complex64::from_polar(rng.random_range(0.0..radius), rng.random_range(0.0..2.0 * PI)))
            .collect();
        BlaschkeProduct::new(Complex64::from_polar(1.0, rng.random_range(0.0..2.0 * PI)), zeros).unwrap()
    }

    fn random_poly(rng: &mut ChaCha8Rng, degree: usize) -> CoeffFn {
        let v: Vec<Complex64> = (0..=degree).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        CoeffFn::scalar(&v)
    }

    #[test]
    fn construction_checks() {
        assert!(BlaschkeProduct::new(c(2.0, 0.0), vec![ZERO]).is_err());
        assert!(BlaschkeProduct::from_zeros(vec![]).is_err());
        assert!(BlaschkeProduct::from_zeros(vec![c(1.0, 0.0)]).is_err());
    }

    #[test]
    fn evaluation_examples() {
        let b = half();
        assert!((b.eval(ZERO) - c(0.5, 0.0)).norm() < 1e-15);
        assert!(b.eval(c(0.5, 0.0)).norm() < 1e-15);
        let on_circle = Complex64::from_polar(1.0, PI / 3.0);
        assert!((b.eval(on_circle).norm() - 1.0).abs() < 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = random_blaschke(&mut rng, 4, 0.9);
        for i in 0..64 {
            let z = Complex64::from_polar(1.0, 2.0 * PI * i as f64 / 64.0);
            assert!((r.eval(z).norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn taylor_examples() {
        let z = BlaschkeProduct::monomial(1).unwrap().taylor(5).unwrap();
        assert_eq!(z.coeffs()[1], ONE);
        assert_eq!(z.coeffs().iter().filter(|c| **c != ZERO).count(), 1);
        assert_eq!(z.tail_bound(), 0.0);
        let t = half().taylor(2).unwrap();
        // long division of (0.5 - z)(1 + 0.5z + 0.25z² + ...)
        assert!((t.coeffs()[0] - c(0.5, 0.0)).norm() < 1e-15);
        assert!((t.coeffs()[1] - c(-0.75, 0.0)).norm() < 1e-15);
        assert!((t.coeffs()[2] - c(-0.375, 0.0)).norm() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let b = random_blaschke(&mut rng, 3, 0.7);
            let t = b.taylor(64).unwrap();
            let e = t.evaluate(c(0.3, 0.0)).unwrap();
            assert!((e.value[0] - b.eval(c(0.3, 0.0))).norm() < 1e-12);
        }
    }

    #[test]
    fn tail_bound_dominates_actual_tail() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let b = random_blaschke(&mut rng, 3, 0.8);
            let coeffs = b.taylor_coeffs(400);
            for n in [5usize, 20, 60] {
                let actual: f64 = coeffs[n + 1..].iter().map(|c| c.norm()).sum();
                assert!(actual <= b.tail_bound(n) * (1.0 + 1e-12));
            }
            let k = b.effective_degree(1e-12);
            let actual: f64 = coeffs[k + 1..].iter().map(|c| c.norm()).sum();
            assert!(actual <= 1e-12);
        }
    }

    #[test]
    fn multiplication_operator() {
        let spec = HardySpec::scalar(6);
        let z = mult_operator(&BlaschkeProduct::monomial(1).unwrap(), spec);
        assert_eq!(z.matrix, crate::hardy::shift_matrix(spec).matrix);
        let z2 = mult_operator(&BlaschkeProduct::monomial(2).unwrap(), HardySpec::scalar(1));
        let out = z2.apply(&CoeffFn::scalar(&[ONE, ONE])).unwrap();
        assert_eq!(out.coeffs().as_slice(), &[ZERO, ZERO, ONE, ONE]);

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let b = random_blaschke(&mut rng, 2, 0.8);
        let op = mult_operator(&b, HardySpec::scalar(128));
        let f = random_poly(&mut rng, 128);
        let bf = op.apply(&f).unwrap();
        assert!((bf.norm() - f.norm()).abs() < 1e-8);
    }

    #[test]
    fn model_space_examples() {
        let spec = HardySpec::scalar(16);
        let k = model_space(&BlaschkeProduct::monomial(1).unwrap(), spec).unwrap();
        assert_eq!(k.functions.len(), 1);
        assert_eq!(k.functions[0].coeffs()[0], ONE);
        let k = model_space(&BlaschkeProduct::monomial(2).unwrap(), spec).unwrap();
        assert_eq!(k.functions[0].coeffs()[0], ONE);
        assert_eq!(k.functions[1].coeffs()[1], ONE);
        assert!(matches!(model_space(&pair(), HardySpec::scalar(7)), Err(Error::Budget(_))));
    }

    #[test]
    fn model_space_orthogonal_to_range() {
        let b = pair();
        let spec = HardySpec::scalar(80);
        let basis = model_space(&b, spec).unwrap().matrix();
        let gram = basis.adjoint() * &basis;
        assert!((gram - CMatrix::identity(2, 2)).norm() < 1e-10);
        let bt = b.taylor_coeffs(81);
        for n in 0..=10 {
            let mut bzn = CVector::zeros(81);
            for i in n..81 {
                bzn[i] = bt[i - n];
            }
            assert!((basis.adjoint() * bzn).norm() < 1e-10);
        }
    }

    #[test]
    fn model_space_numerical_agrees() {
        let b = pair();
        let spec = HardySpec::scalar(60);
        let tm = model_space(&b, spec).unwrap();
        let num = model_space_numerical(&b, spec).unwrap();
        let tol = crate::numerics::RankTolerance::default();
        let a = crate::numerics::SubspaceBasis::span(&tm.matrix(), tol).unwrap();
        let n = crate::numerics::SubspaceBasis::span(&num.matrix(), tol).unwrap();
        assert!(crate::numerics::max_principal_angle(&a, &n).unwrap() < 1e-8);
    }

    #[test]
    fn model_space_and_range_fill_truncation() {
        let b = pair();
        let n = 40;
        let d = b.degree();
        let k = model_space(&b, HardySpec::scalar(n)).unwrap().matrix();
        let range = mult_operator_with_budget(&b, HardySpec::scalar(n - d), d).matrix;
        // columns B z^j for j <= N - d, truncated to degree N
        let mut cols = CMatrix::zeros(n + 1, n - d + 1 + d);
        cols.columns_mut(0, d).copy_from(&k);
        cols.columns_mut(d, n - d + 1).copy_from(&range.rows(0, n + 1));
        let q = crate::numerics::SubspaceBasis::span(&cols, crate::numerics::RankTolerance::default()).unwrap();
        // projector is the identity on low degrees
        let p = q.projector();
        let low = n - d;
        let block = p.view((0, 0), (low + 1, low + 1)) - CMatrix::identity(low + 1, low + 1);
        assert!(block.norm() < 1e-9);
    }

    #[test]
    fn wold_monomial_split() {
        let b = BlaschkeProduct::monomial(2).unwrap();
        let f = CoeffFn::scalar(&[ONE, ONE, ONE, ONE]);
        let w = wold_decompose(&f, &b, 3).unwrap();
        for n in 0..2 {
            let h = w.layers[n].with_degree(3);
            assert!((h.coeffs()[0] - ONE).norm() < 1e-14 && (h.coeffs()[1] - ONE).norm() < 1e-14);
        }
        assert!(w.layers[2].norm() < 1e-14);
        assert!(w.residual < 1e-14);
        let w = wold_decompose(&CoeffFn::scalar(&[ONE]), &b, 4).unwrap();
        assert!((w.layers[0].coeffs()[0] - ONE).norm() < 1e-15);
        assert!(w.layers[1..].iter().all(|h| h.norm() < 1e-15));
        let vector = CoeffFn::zeros(HardySpec::new(2, 3).unwrap());
        assert!(matches!(wold_decompose(&vector, &b, 2), Err(Error::Shape(_))));
    }

    /// Σ Bⁿ hₙ rebuilt from TM coordinates on a long padded window, so the
    /// H² error includes the part of the remainder above the input degree.
    fn padded_reconstruction_error(f: &CoeffFn, b: &BlaschkeProduct, w: &WoldCoefficients, len: usize) -> f64 {
        let tm: Vec<Vec<Complex64>> = (0..b.degree()).map(|k| b.tm_taylor_coeffs(k, len)).collect();
        let bt = b.taylor_coeffs(len);
        let mut power = vec![ZERO; len];
        power[0] = ONE;
        let mut total = vec![ZERO; len];
        for coords in &w.tm_coords {
            for (k, col) in tm.iter().enumerate() {
                let term = convolve(&power, col, len);
                for i in 0..len {
                    total[i] += coords[k] * term[i];
                }
            }
            power = convolve(&power, &bt, len);
        }
        let padded = f.with_degree(len - 1);
        total.iter().zip(padded.coeffs().iter()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
    }

    #[test]
    fn wold_reconstruction_oracle() {
        let b = pair();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let f = random_poly(&mut rng, 12);
        // at depth 12 the remainder B^13 f_13 is still visible, and the
        // reported residual matches the independent reconstruction
        let shallow = wold_decompose(&f, &b, 12).unwrap();
        let err = padded_reconstruction_error(&f, &b, &shallow, 400);
        assert!((err - shallow.residual).abs() <= 1e-10 * (1.0 + err));
        let deep = wold_decompose_auto(&f, &b, 1e-13, 10_000).unwrap();
        let err = padded_reconstruction_error(&f, &b, &deep, 400);
        assert!(err <= 1e-10);
        assert!(deep.residual <= 1e-10);
        let total_norm: f64 = deep.tm_coords.iter().map(|c| c.norm_squared()).sum();
        assert!((total_norm - f.norm_squared()).abs() < 1e-10);
    }

    #[test]
    fn wold_residual_monotone_in_depth() {
        let b = half();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let f = random_poly(&mut rng, 10);
        let mut last = f64::INFINITY;
        for depth in [0usize, 5, 20, 80, 200] {
            let r = wold_decompose(&f, &b, depth).unwrap().residual;
            assert!(r <= last + 1e-15);
            last = r;
        }
        let auto = wold_decompose_auto(&f, &b, 1e-13, 10_000).unwrap();
        assert!(auto.residual <= 1e-12 * f.norm());
    }

    #[test]
    fn sup_norm_examples() {
        let z = BlaschkeProduct::monomial(1).unwrap();
        assert!((hinf_norm_on_disc(&z, 0.5, 256).unwrap().value - 0.5).abs() < 1e-15);
        let sup = hinf_norm_on_disc(&half(), 0.5, 1024).unwrap();
        assert!((sup.value - 0.8).abs() < 1e-12);
        assert!((sup.argmax - c(-0.5, 0.0)).norm() < 1e-6);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..5 {
            let b = random_blaschke(&mut rng, 3, 0.8);
            let coarse = hinf_norm_on_disc(&b, 0.9, 4096).unwrap().value;
            let fine = hinf_norm_on_disc(&b, 0.9, 65536).unwrap().value;
            assert!((coarse - fine).abs() < 1e-6);
        }
        assert!(hinf_norm_on_disc(&z, 0.5, 100).is_err());
        assert!(hinf_norm_adaptive(&half(), 0.6).unwrap().delta < 1e-8);
    }

    #[test]
    fn enclosing_radius_examples() {
        assert!((enclosing_radius(&pair(), 0.1).unwrap() - 0.5).abs() < 1e-15);
        let z = BlaschkeProduct::monomial(1).unwrap();
        assert!((enclosing_radius(&z, 0.25).unwrap() - 0.25).abs() < 1e-15);
        assert!(matches!(enclosing_radius(&pair(), 0.7), Err(Error::Domain(_))));
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..20 {
            let b = random_blaschke(&mut rng, 4, 0.95);
            let s = enclosing_radius(&b, default_margin(&b)).unwrap();
            assert!(b.zeros().iter().all(|z| z.norm() < s) && s < 1.0);
        }
    }
}
