//! Shift-type operators as matrices in orthonormal coordinates, together with
//! the frame that turns those coordinates back into functions.

use num_complex::Complex64;

use crate::blaschke::{mult_operator_with_budget, wold_decompose, BlaschkeProduct, TAYLOR_TAIL_TOL};
use crate::error::{Error, Result};
use crate::hardy::{convolve, shift_power_matrix, CoeffFn, HardySpec, OperatorMatrix};
use crate::numerics::{nullspace, spectral_norm, CMatrix, CVector, LeastSquares, RankTolerance, SubspaceBasis, ZERO};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub rank: RankTolerance,
    /// Largest mass a subspace may carry outside the operator's domain.
    pub leakage: f64,
    /// Threshold for containment and nearly-invariance checks.
    pub check: f64,
    /// Threshold for operator identities, relative to the input norm.
    pub identity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rank: RankTolerance::default(), leakage: 1e-9, check: 1e-9, identity: 1e-10 }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        RankTolerance::new(self.rank.absolute, self.rank.relative)?;
        for (name, v) in [("leakage", self.leakage), ("check", self.check), ("identity", self.identity)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} tolerance must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// The analytic function u with T = γ⁻¹M_u, when there is one.
#[derive(Clone, Debug, PartialEq)]
pub enum Multiplier {
    Monomial(usize),
    Blaschke(BlaschkeProduct),
    Abstract,
}

impl Multiplier {
    pub fn eval(&self, w: Complex64) -> Option<Complex64> {
        match self {
            Multiplier::Monomial(k) => Some(w.powu(*k as u32)),
            Multiplier::Blaschke(b) => Some(b.eval(w)),
            Multiplier::Abstract => None,
        }
    }
}

/// How coordinate vectors represent functions.
#[derive(Clone, Debug, PartialEq)]
pub enum Frame {
    /// Taylor coefficients (index n·m + j) scaled by √weight[n].
    Taylor { spec: HardySpec, weights: Vec<f64> },
    /// Index n·d + j holds the j-th Takenaka–Malmquist coordinate of the
    /// Wold layer hₙ, scaled by √weight[n].
    Wold { blaschke: BlaschkeProduct, weights: Vec<f64> },
}

impl Frame {
    pub fn taylor(spec: HardySpec) -> Self {
        Frame::Taylor { spec, weights: vec![1.0; spec.degree + 1] }
    }

    pub fn dim(&self) -> usize {
        match self {
            Frame::Taylor { spec, .. } => spec.dim(),
            Frame::Wold { blaschke, weights } => weights.len() * blaschke.degree(),
        }
    }

    /// Number of components of the represented functions.
    pub fn values(&self) -> usize {
        match self {
            Frame::Taylor { spec, .. } => spec.m,
            Frame::Wold { .. } => 1,
        }
    }

    /// Coordinates per degree (Taylor) or per layer (Wold).
    pub fn block(&self) -> usize {
        match self {
            Frame::Taylor { spec, .. } => spec.m,
            Frame::Wold { blaschke, .. } => blaschke.degree(),
        }
    }

    pub fn weights(&self) -> &[f64] {
        match self {
            Frame::Taylor { weights, .. } | Frame::Wold { weights, .. } => weights,
        }
    }

    /// Value at w of the function with coordinates x.
    pub fn eval(&self, x: &CVector, w: Complex64) -> CVector {
        match self {
            Frame::Taylor { spec, weights } => {
                let mut out = CVector::zeros(spec.m);
                for n in (0..weights.len()).rev() {
                    for j in 0..spec.m {
                        out[j] = out[j] * w + x[n * spec.m + j] / weights[n].sqrt();
                    }
                }
                out
            }
            Frame::Wold { blaschke, weights } => {
                let d = blaschke.degree();
                let basis: Vec<Complex64> = (0..d).map(|j| blaschke.tm_eval(j, w)).collect();
                let bw = blaschke.eval(w);
                let mut acc = ZERO;
                for n in (0..weights.len()).rev() {
                    let layer: Complex64 = (0..d).map(|j| x[n * d + j] * basis[j]).sum();
                    acc = acc * bw + layer / weights[n].sqrt();
                }
                CVector::from_element(1, acc)
            }
        }
    }

    /// Norm of the evaluation functional x ↦ f(w) on this frame.
    pub fn eval_norm(&self, w: Complex64) -> f64 {
        match self {
            Frame::Taylor { weights, .. } => {
                let r2 = w.norm_sqr();
                let mut pow = 1.0;
                let mut sum = 0.0;
                for wn in weights {
                    sum += pow / wn;
                    pow *= r2;
                }
                sum.sqrt()
            }
            Frame::Wold { blaschke, weights } => {
                let basis: f64 = (0..blaschke.degree()).map(|j| blaschke.tm_eval(j, w).norm_sqr()).sum();
                let b2 = blaschke.eval(w).norm_sqr();
                let mut pow = 1.0;
                let mut sum = 0.0;
                for wn in weights {
                    sum += pow / wn;
                    pow *= b2;
                }
                (basis * sum).sqrt()
            }
        }
    }

    /// Coordinates of a function; fails when it does not fit the frame to
    /// within `tol` relative to its norm.
    pub fn coordinates(&self, f: &CoeffFn, tol: f64) -> Result<CVector> {
        match self {
            Frame::Taylor { spec, weights } => {
                if f.spec().m != spec.m {
                    return Err(Error::Shape(format!("function has m = {} but frame has m = {}", f.spec().m, spec.m)));
                }
                let dropped = f.coeffs().rows(spec.dim().min(f.coeffs().len()), f.coeffs().len().saturating_sub(spec.dim())).norm();
                if dropped > tol * f.norm().max(f64::MIN_POSITIVE) {
                    return Err(Error::Budget(format!(
                        "function of degree {} does not fit degree budget {}",
                        f.degree(),
                        spec.degree
                    )));
                }
                let g = f.with_degree(spec.degree);
                Ok(CVector::from_fn(spec.dim(), |i, _| g.coeffs()[i] * weights[i / spec.m].sqrt()))
            }
            Frame::Wold { blaschke, weights } => {
                let layers = weights.len();
                // every available layer: stopping at `tol` would leave noise above the rank threshold
                let w = wold_decompose(f, blaschke, layers - 1)?;
                if w.residual > tol * f.norm().max(f64::MIN_POSITIVE) {
                    return Err(Error::Budget(format!(
                        "Wold residual {:.3e} after {} layers; more layers are needed",
                        w.residual, layers
                    )));
                }
                let d = blaschke.degree();
                let mut x = CVector::zeros(layers * d);
                for (n, c) in w.tm_coords.iter().enumerate() {
                    for j in 0..d {
                        x[n * d + j] = c[j] * weights[n].sqrt();
                    }
                }
                Ok(x)
            }
        }
    }

    /// Taylor coefficients (through `degree`) of the function with coordinates x.
    pub fn to_taylor(&self, x: &CVector, degree: usize) -> CoeffFn {
        match self {
            Frame::Taylor { spec, weights } => {
                let coeffs = CVector::from_fn(spec.dim(), |i, _| x[i] / weights[i / spec.m].sqrt());
                CoeffFn::from_parts(*spec, coeffs, 0.0).with_degree(degree)
            }
            Frame::Wold { blaschke, weights } => {
                let len = degree + 1;
                let d = blaschke.degree();
                let basis: Vec<Vec<Complex64>> = (0..d).map(|j| blaschke.tm_taylor_coeffs(j, len)).collect();
                let b = blaschke.taylor_coeffs(len);
                let mut power = vec![ZERO; len];
                power[0] = Complex64::new(1.0, 0.0);
                let mut out = vec![ZERO; len];
                for (n, wn) in weights.iter().enumerate() {
                    let mut layer = vec![ZERO; len];
                    for (j, phi) in basis.iter().enumerate() {
                        let c = x[n * d + j] / wn.sqrt();
                        for (l, v) in layer.iter_mut().zip(phi) {
                            *l += c * v;
                        }
                    }
                    for (o, v) in out.iter_mut().zip(convolve(&power, &layer, len)) {
                        *o += v;
                    }
                    power = convolve(&power, &b, len);
                }
                CoeffFn::scalar(&out)
            }
        }
    }
}

/// A left-invertible operator T on a truncated coordinate space. Its matrix
/// maps the first `domain_dim` coordinates into the whole space, so that the
/// image of every representable input is computed without truncation.
#[derive(Clone, Debug)]
pub struct ShiftModel {
    t: CMatrix,
    frame: Frame,
    multiplier: Multiplier,
    scale: f64,
    ls: LeastSquares,
    kernel: SubspaceBasis,
    isometry_defect: f64,
    pureness_residual: f64,
    tol: Tolerances,
}

impl ShiftModel {
    /// `t` represents γ⁻¹M_u where u is `multiplier` and γ is `scale`.
    pub fn new(t: CMatrix, frame: Frame, multiplier: Multiplier, scale: f64, tol: Tolerances) -> Result<Self> {
        tol.validate()?;
        let (n, nd) = t.shape();
        if n != frame.dim() {
            return Err(Error::Shape(format!("operator has {n} rows but the frame has dimension {}", frame.dim())));
        }
        if nd == 0 || nd > n {
            return Err(Error::Shape(format!("domain dimension {nd} must lie in 1..={n}")));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidInput(format!("scale must be positive, got {scale}")));
        }
        let ls = LeastSquares::new(&t, tol.rank).map_err(|e| match e {
            Error::SingularOperator { sigma_min } => {
                Error::InvalidShift(format!("operator is not injective (sigma_min = {sigma_min:.3e})"))
            }
            other => other,
        })?;
        let square = t.rows(0, nd).into_owned();
        let null = nullspace(&square.adjoint(), tol.rank, Some(1.0))?;
        if null.ncols() == 0 {
            return Err(Error::InvalidShift("ker T* is trivial on the truncation".into()));
        }
        let mut embedded = CMatrix::zeros(n, null.ncols());
        embedded.rows_mut(0, nd).copy_from(&null);
        let kernel = SubspaceBasis::from_orthonormal(embedded, tol.rank).canonical();
        let gram = t.adjoint() * &t;
        let isometry_defect = spectral_norm(&(gram - CMatrix::identity(nd, nd)));
        let mut model = Self {
            t,
            frame,
            multiplier,
            scale,
            ls,
            kernel,
            isometry_defect,
            pureness_residual: 0.0,
            tol,
        };
        model.pureness_residual = model.measure_pureness();
        Ok(model)
    }

    /// ‖T*^L v‖ for the top coordinate vectors, with L the number of blocks.
    fn measure_pureness(&self) -> f64 {
        let n = self.dim();
        let mult = self.multiplicity().min(n);
        let steps = n.div_ceil(mult) + 1;
        let mut worst: f64 = 0.0;
        for idx in n - mult..n {
            let mut v = CVector::zeros(n);
            v[idx] = Complex64::new(1.0, 0.0);
            for _ in 0..steps {
                v = self.adjoint_apply(&v);
            }
            worst = worst.max(v.norm());
        }
        worst
    }

    /// T from an operator matrix whose domain is a prefix of its codomain.
    pub fn from_operator(op: &OperatorMatrix, multiplier: Multiplier, tol: Tolerances) -> Result<Self> {
        if op.domain.m != op.codomain.m || op.domain.degree > op.codomain.degree {
            return Err(Error::Shape("operator domain must be a prefix of its codomain".into()));
        }
        let prefix = &op.codomain_weights[..op.domain_weights.len()];
        if prefix.iter().zip(&op.domain_weights).any(|(a, b)| (a - b).abs() > 1e-14 * a.abs().max(1.0)) {
            return Err(Error::InvalidInput("domain and codomain weights disagree on the shared degrees".into()));
        }
        let frame = Frame::Taylor { spec: op.codomain, weights: op.codomain_weights.clone() };
        Self::new(op.whitened(), frame, multiplier, 1.0, tol)
    }

    /// T_{z^k} on H²(ℂ^m) truncated at `spec`.
    pub fn monomial(spec: HardySpec, k: usize, tol: Tolerances) -> Result<Self> {
        if k == 0 || spec.degree < k {
            return Err(Error::Budget(format!("budget {} cannot host T_(z^{k})", spec.degree)));
        }
        let op = shift_power_matrix(spec.with_degree(spec.degree - k), k);
        Self::new(op.matrix, Frame::taylor(spec), Multiplier::Monomial(k), 1.0, tol)
    }

    /// The unilateral shift S.
    pub fn shift(spec: HardySpec, tol: Tolerances) -> Result<Self> {
        Self::monomial(spec, 1, tol)
    }

    /// T_B on H²(ℂ^m) truncated at `spec`; the domain leaves room for the
    /// effective Taylor degree of B.
    pub fn blaschke(b: &BlaschkeProduct, spec: HardySpec, tol: Tolerances) -> Result<Self> {
        if b.degree() == 0 {
            return Err(Error::InvalidShift("a unimodular constant is not a shift".into()));
        }
        let pad = b.effective_degree(TAYLOR_TAIL_TOL);
        if spec.degree <= pad {
            return Err(Error::Budget(format!("budget {} must exceed the Taylor length {pad} of B", spec.degree)));
        }
        let op = mult_operator_with_budget(b, spec.with_degree(spec.degree - pad), pad);
        Self::new(op.matrix, Frame::taylor(spec), Multiplier::Blaschke(b.clone()), 1.0, tol)
    }

    /// γ⁻¹T_B in Wold coordinates with layer weights w: the layer shift
    /// scaled by √(w_{n+1}/w_n)/γ.
    pub fn wold(b: &BlaschkeProduct, weights: Vec<f64>, gamma: f64, tol: Tolerances) -> Result<Self> {
        let d = b.degree();
        if d == 0 {
            return Err(Error::InvalidShift("a unimodular constant is not a shift".into()));
        }
        if weights.len() < 2 || weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidInput("need at least two positive layer weights".into()));
        }
        let layers = weights.len();
        let mut t = CMatrix::zeros(layers * d, (layers - 1) * d);
        for n in 0..layers - 1 {
            let factor = (weights[n + 1] / weights[n]).sqrt() / gamma;
            for j in 0..d {
                t[((n + 1) * d + j, n * d + j)] = Complex64::new(factor, 0.0);
            }
        }
        let frame = Frame::Wold { blaschke: b.clone(), weights };
        Self::new(t, frame, Multiplier::Blaschke(b.clone()), gamma, tol)
    }

    /// T₂ = V T V_D⁻¹ for V mapping the domain prefix into itself; returns the
    /// new model and the relative residual of T₂V_D = VT. Columns of V past
    /// the prefix should not feed back into it, or ker T₂* is lost to truncation.
    pub fn similar(&self, v: &CMatrix) -> Result<(ShiftModel, f64)> {
        let (n, nd) = (self.dim(), self.domain_dim());
        if v.shape() != (n, n) {
            return Err(Error::Shape(format!("V must be {n}x{n}, got {:?}", v.shape())));
        }
        let vnorm = spectral_norm(v);
        let spill = if nd < n { spectral_norm(&v.view((nd, 0), (n - nd, nd)).into_owned()) } else { 0.0 };
        if spill > self.tol.check * vnorm {
            return Err(Error::NotSimilar { residual: spill / vnorm });
        }
        let vd = v.view((0, 0), (nd, nd)).into_owned();
        let vd_inv = vd.clone().try_inverse().ok_or(Error::NotSimilar { residual: f64::INFINITY })?;
        let t2 = v * &self.t * &vd_inv;
        let lhs = &t2 * &vd;
        let rhs = v * &self.t;
        let residual = spectral_norm(&(lhs - &rhs)) / (vnorm * self.upper_bound()).max(f64::MIN_POSITIVE);
        if residual > self.tol.identity {
            return Err(Error::NotSimilar { residual });
        }
        let model = ShiftModel::new(t2, self.frame.clone(), Multiplier::Abstract, 1.0, self.tol)?;
        Ok((model, residual))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.t
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn multiplier(&self) -> &Multiplier {
        &self.multiplier
    }

    /// γ with T = γ⁻¹M_u.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn tol(&self) -> Tolerances {
        self.tol
    }

    pub fn dim(&self) -> usize {
        self.t.nrows()
    }

    pub fn domain_dim(&self) -> usize {
        self.t.ncols()
    }

    /// Orthonormal basis of ker T* (the e_j).
    pub fn kernel(&self) -> &SubspaceBasis {
        &self.kernel
    }

    pub fn multiplicity(&self) -> usize {
        self.kernel.dim()
    }

    /// Orthonormal basis of the range TH.
    pub fn range(&self) -> SubspaceBasis {
        SubspaceBasis::from_orthonormal(self.ls.range_basis().clone(), self.tol.rank)
    }

    pub fn lower_bound(&self) -> f64 {
        self.ls.sigma_min()
    }

    pub fn upper_bound(&self) -> f64 {
        self.ls.sigma_max()
    }

    /// ‖T*T − I‖.
    pub fn isometry_defect(&self) -> f64 {
        self.isometry_defect
    }

    /// Largest ‖T*^L v‖ over the top coordinate vectors.
    pub fn pureness_residual(&self) -> f64 {
        self.pureness_residual
    }

    /// Mass of x outside the domain.
    pub fn overflow(&self, x: &CVector) -> f64 {
        let nd = self.domain_dim();
        x.rows(nd, x.len() - nd).norm()
    }

    /// T x, reading x on the domain only.
    pub fn apply(&self, x: &CVector) -> CVector {
        &self.t * x.rows(0, self.domain_dim())
    }

    /// T^k x.
    pub fn apply_power(&self, x: &CVector, k: usize) -> CVector {
        (0..k).fold(x.clone(), |acc, _| self.apply(&acc))
    }

    /// T* x, embedded back into the full space.
    pub fn adjoint_apply(&self, x: &CVector) -> CVector {
        self.embed(&(self.t.adjoint() * x))
    }

    /// (T*T)⁻¹T* y, embedded into the full space.
    pub fn pinv(&self, y: &CVector) -> CVector {
        self.embed(&self.ls.solve(y))
    }

    fn embed(&self, x: &CVector) -> CVector {
        let mut out = CVector::zeros(self.dim());
        out.rows_mut(0, x.len()).copy_from(x);
        out
    }
}
