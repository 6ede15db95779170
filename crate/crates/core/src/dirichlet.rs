//! Dirichlet-type spaces D_α: the standard norm, the two Wold-layer norms used
//! for Blaschke multipliers, their lower bounds and the choice of (G, s).

use crate::blaschke::{
    default_margin, enclosing_radius, hinf_norm_adaptive, hinf_norm_on_disc, mult_operator, wold_decompose,
    wold_decompose_auto, BlaschkeProduct, SupNorm, WoldCoefficients,
};
use crate::error::{Error, Result};
use crate::hardy::CoeffFn;

/// Strictness margin η: parameters must satisfy ‖γ₁⁻¹B‖_{H∞(sD)} < 1 − η.
pub const ETA: f64 = 0.01;

/// Largest G tried by [`choose_params`].
pub const G_CAP: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DAlphaSpec {
    pub alpha: f64,
    pub budget: usize,
}

impl DAlphaSpec {
    pub fn new(alpha: f64, budget: usize) -> Result<Self> {
        check_alpha(alpha, -1.0, 1.0)?;
        Ok(Self { alpha, budget })
    }
}

fn check_alpha(alpha: f64, lo: f64, hi: f64) -> Result<()> {
    if !(alpha >= lo && alpha <= hi) {
        return Err(Error::Domain(format!("alpha = {alpha} outside [{lo}, {hi}]")));
    }
    Ok(())
}

fn check_scalar(f: &CoeffFn) -> Result<()> {
    if f.spec().m != 1 {
        return Err(Error::Shape("D_α norms are defined for scalar functions".into()));
    }
    Ok(())
}

/// (Σ (n+1)^α |a_n|²)^{1/2} over the stored coefficients.
pub fn norm_alpha(f: &CoeffFn, alpha: f64) -> Result<f64> {
    check_scalar(f)?;
    let sum: f64 = f.coeffs().iter().enumerate().map(|(n, a)| ((n + 1) as f64).powf(alpha) * a.norm_sqr()).sum();
    Ok(sum.sqrt())
}

/// Layer weight of ‖·‖₁: G^α on the first G layers, (n+1)^α afterwards.
pub fn norm1_weight(g: usize, alpha: f64, n: usize) -> f64 {
    if n < g {
        (g as f64).powf(alpha)
    } else {
        ((n + 1) as f64).powf(alpha)
    }
}

/// Layer weight of ‖·‖₂: (n+1)^α.
pub fn norm2_weight(alpha: f64, n: usize) -> f64 {
    ((n + 1) as f64).powf(alpha)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Norm1Params {
    pub g: usize,
    pub alpha: f64,
    pub blaschke: BlaschkeProduct,
}

impl Norm1Params {
    pub fn new(g: usize, alpha: f64, blaschke: BlaschkeProduct) -> Result<Self> {
        if g == 0 {
            return Err(Error::InvalidInput("G must be at least 1".into()));
        }
        if !(-1.0..0.0).contains(&alpha) {
            return Err(Error::Domain(format!("alpha = {alpha} outside [-1, 0)")));
        }
        Ok(Self { g, alpha, blaschke })
    }

    pub fn weight(&self, n: usize) -> f64 {
        norm1_weight(self.g, self.alpha, n)
    }

    pub fn gamma1(&self) -> f64 {
        gamma1(self.alpha, self.g).expect("validated at construction")
    }
}

/// A norm value with an error bar covering the unresolved Wold remainder.
#[derive(Clone, Debug, PartialEq)]
pub struct NormEstimate {
    pub value: f64,
    pub error: f64,
    pub depth: usize,
    pub wold_residual: f64,
}

/// Relative Wold residual above which a fixed-depth norm is refused.
const NORM_RESIDUAL_TOL: f64 = 1e-8;

/// Largest number of Wold layers used by adaptive norm computations.
pub fn max_wold_depth(budget: usize) -> usize {
    100 * (budget + 1) + 1000
}

fn layers_for(f: &CoeffFn, b: &BlaschkeProduct, depth: Option<usize>) -> Result<WoldCoefficients> {
    let w = match depth {
        Some(d) => wold_decompose(f, b, d)?,
        None => wold_decompose_auto(f, b, 1e-13, max_wold_depth(f.degree()))?,
    };
    if w.residual > NORM_RESIDUAL_TOL * f.norm().max(f64::MIN_POSITIVE) {
        return Err(Error::NumericalFailure(format!(
            "Wold residual {:.3e} at depth {} is too large for a norm estimate",
            w.residual,
            w.depth()
        )));
    }
    Ok(w)
}

fn weighted_estimate(w: &WoldCoefficients, weight: impl Fn(usize) -> f64) -> NormEstimate {
    let depth = w.depth();
    let value = w.weighted_norm_squared(&weight).sqrt();
    let worst = (depth + 1..=2 * depth + 2).map(&weight).fold(0.0, f64::max);
    NormEstimate { value, error: w.residual * worst.sqrt(), depth, wold_residual: w.residual }
}

/// ‖f‖₁ from the Wold layers of f against `p.blaschke`; `depth = None` picks
/// the depth adaptively.
pub fn norm1(f: &CoeffFn, p: &Norm1Params, depth: Option<usize>) -> Result<NormEstimate> {
    check_scalar(f)?;
    let w = layers_for(f, &p.blaschke, depth)?;
    Ok(weighted_estimate(&w, |n| p.weight(n)))
}

/// ‖f‖₂ = (Σ (n+1)^α ‖gₙ‖²)^{1/2} for α ∈ [0, 1].
pub fn norm2(f: &CoeffFn, alpha: f64, b: &BlaschkeProduct, depth: Option<usize>) -> Result<NormEstimate> {
    check_scalar(f)?;
    check_alpha(alpha, 0.0, 1.0)?;
    let w = layers_for(f, b, depth)?;
    Ok(weighted_estimate(&w, |n| norm2_weight(alpha, n)))
}

/// γ₁ = (1 − 1/(G+1))^{−α/2}. For α < 0 this lies in (0, 1) and increases to 1 with G.
pub fn gamma1(alpha: f64, g: usize) -> Result<f64> {
    if !(-1.0..0.0).contains(&alpha) {
        return Err(Error::Domain(format!("alpha = {alpha} outside [-1, 0)")));
    }
    if g == 0 {
        return Err(Error::InvalidInput("G must be at least 1".into()));
    }
    Ok((1.0 - 1.0 / (g as f64 + 1.0)).powf(-alpha / 2.0))
}

/// Lower bound of T_B under ‖·‖₂.
pub fn lower_bound_gamma2() -> f64 {
    1.0
}

/// B·f as a truncated function, padded so that nothing significant is lost.
pub fn multiply(b: &BlaschkeProduct, f: &CoeffFn) -> Result<CoeffFn> {
    mult_operator(b, f.spec()).apply(f)
}

/// min ‖Bf‖₂ / ‖f‖₂ over the samples (empirical check of γ₂ = 1).
pub fn empirical_gamma2_ratio(b: &BlaschkeProduct, alpha: f64, samples: &[CoeffFn]) -> Result<f64> {
    let mut worst = f64::INFINITY;
    for f in samples {
        let before = norm2(f, alpha, b, None)?.value;
        let after = norm2(&multiply(b, f)?, alpha, b, None)?.value;
        worst = worst.min(after / before);
    }
    Ok(worst)
}

/// Record of a verified choice of (G, s) with ‖γ₁⁻¹B‖_{H∞(sD)} < 1 − η.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamCertificate {
    pub g: usize,
    pub s: f64,
    pub alpha: f64,
    pub gamma1: f64,
    pub hinf: SupNorm,
    /// ‖B‖_{H∞(sD)} / γ₁.
    pub ratio: f64,
    pub eta: f64,
}

impl ParamCertificate {
    pub fn holds(&self) -> bool {
        self.ratio < 1.0 - self.eta
    }

    /// Recompute the inequality value from the stored (G, s, grid).
    pub fn replay(&self, b: &BlaschkeProduct) -> Result<f64> {
        let sup = hinf_norm_on_disc(b, self.s, self.hinf.grid)?;
        Ok(sup.value / gamma1(self.alpha, self.g)?)
    }

    pub fn params(&self, b: &BlaschkeProduct) -> Result<Norm1Params> {
        Norm1Params::new(self.g, self.alpha, b.clone())
    }
}

/// Smallest G with ‖B‖_{H∞(sD)}/γ₁(α, G) < 1 − η, with s from the default margin.
pub fn choose_params(b: &BlaschkeProduct, alpha: f64) -> Result<ParamCertificate> {
    let s = enclosing_radius(b, default_margin(b))?;
    choose_params_with_radius(b, alpha, s)
}

pub fn choose_params_with_radius(b: &BlaschkeProduct, alpha: f64, s: f64) -> Result<ParamCertificate> {
    gamma1(alpha, 1)?;
    if b.zeros().iter().any(|z| z.norm() >= s) {
        return Err(Error::Domain(format!("radius {s} does not enclose every zero")));
    }
    let hinf = hinf_norm_adaptive(b, s)?;
    let target = hinf.value / (1.0 - ETA);
    if target >= 1.0 {
        return Err(Error::ParameterFailure(format!(
            "sup |B| on |z| = {s} is {:.6}, so no γ₁ < 1 can push the ratio below {}",
            hinf.value,
            1.0 - ETA
        )));
    }
    // γ₁(G) > target  ⇔  G + 1 > 1 / (1 − target^{2/(−α)})
    let bound = 1.0 / (1.0 - target.powf(2.0 / -alpha)) - 1.0;
    let mut g = if bound.is_finite() && bound < G_CAP as f64 { (bound.floor() as usize).saturating_sub(2).max(1) } else { G_CAP };
    loop {
        let gamma = gamma1(alpha, g)?;
        let ratio = hinf.value / gamma;
        if ratio < 1.0 - ETA {
            return Ok(ParamCertificate { g, s, alpha, gamma1: gamma, hinf, ratio, eta: ETA });
        }
        if g >= G_CAP {
            return Err(Error::ParameterFailure(format!("no admissible G up to {G_CAP}")));
        }
        g += 1;
    }
}
