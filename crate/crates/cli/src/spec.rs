//! Problem descriptions read from JSON and turned into core objects.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use nisd::blaschke::{BlaschkeProduct, TAYLOR_TAIL_TOL};
use nisd::hardy::{CoeffFn, HardySpec};
use nisd::nearinv::{Frame, Multiplier, ShiftModel, Tolerances};
use nisd::numerics::{CMatrix, CVector, RankTolerance};
use nisd::Complex64;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// A complex number as `[re, im]`.
pub type C = [f64; 2];

pub fn complex(c: C) -> Complex64 {
    Complex64::new(c[0], c[1])
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    #[serde(default)]
    pub schema_version: Option<u32>,
    pub space: Space,
    pub operator: Operator,
    #[serde(default)]
    pub subspace: Vec<Generator>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub defect_hint: Option<Vec<Generator>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<TolSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Fixed series depth for the factorization; absent means automatic.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Space {
    Hardy {
        #[serde(default = "one")]
        m: usize,
        budget: usize,
    },
    Dalpha {
        alpha: f64,
        budget: usize,
    },
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Operator {
    Shift,
    Monomial { power: usize },
    Blaschke(BlaschkeSpec),
    /// Matrix of T from a JSON file, relative to the spec's directory.
    Matrix { file: PathBuf },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlaschkeSpec {
    #[serde(default = "unit_phase")]
    pub phase: C,
    pub zeros: Vec<C>,
}

fn unit_phase() -> C {
    [1.0, 0.0]
}

impl BlaschkeSpec {
    pub fn build(&self) -> Result<BlaschkeProduct, CliError> {
        Ok(BlaschkeProduct::new(complex(self.phase), self.zeros.iter().copied().map(complex).collect())?)
    }
}

/// One generator: an explicit coefficient vector, or the family B·z^k δ_j for
/// k in `monomials` and in the progression `from, from + step, … ≤ to`
/// (`to` defaults to the budget).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Generator {
    Coeffs {
        coeffs: Vec<C>,
    },
    Monomials {
        #[serde(default)]
        monomials: Vec<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        from: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        step: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        to: Option<usize>,
        #[serde(default)]
        component: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        blaschke: Option<BlaschkeSpec>,
    },
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolSpec {
    pub rank_absolute: Option<f64>,
    pub rank_relative: Option<f64>,
    pub leakage: Option<f64>,
    pub check: Option<f64>,
    pub identity: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixFile {
    rows: usize,
    cols: usize,
    /// Row-major entries.
    entries: Vec<Vec<C>>,
}

/// Command-line overrides applied on top of the spec.
#[derive(Clone, Copy, Debug, Default)]
pub struct Overrides {
    pub budget: Option<usize>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
}

pub fn read_spec(path: &Path) -> Result<ProblemSpec, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Spec(format!("cannot read {}: {e}", path.display())))?;
    parse_spec(&text).map_err(|e| match e {
        CliError::Spec(msg) => CliError::Spec(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse_spec(text: &str) -> Result<ProblemSpec, CliError> {
    let spec: ProblemSpec = serde_json::from_str(text).map_err(|e| CliError::Spec(e.to_string()))?;
    check_version(&spec)?;
    Ok(spec)
}

pub fn check_version(spec: &ProblemSpec) -> Result<(), CliError> {
    match spec.schema_version {
        Some(v) if v != SCHEMA_VERSION => {
            Err(CliError::Spec(format!("schema_version {v} is not supported (expected {SCHEMA_VERSION})")))
        }
        _ => Ok(()),
    }
}

/// Everything a command needs, resolved from a spec.
pub struct Problem {
    pub spec: ProblemSpec,
    pub budget: usize,
    pub seed: u64,
    pub tol: Tolerances,
    pub base_dir: PathBuf,
    /// Degrees added on top of the computed working degree.
    pub extra_degree: usize,
}

impl Problem {
    pub fn new(mut spec: ProblemSpec, base_dir: PathBuf, over: Overrides) -> Result<Self, CliError> {
        let budget = over.budget.unwrap_or(match spec.space {
            Space::Hardy { budget, .. } | Space::Dalpha { budget, .. } => budget,
        });
        match &mut spec.space {
            Space::Hardy { budget: b, m } => {
                if *m == 0 {
                    return Err(CliError::Spec("space.m must be at least 1".into()));
                }
                *b = budget;
            }
            Space::Dalpha { budget: b, alpha } => {
                if !(-1.0..=1.0).contains(alpha) {
                    return Err(CliError::Spec(format!("alpha = {alpha} outside [-1, 1]")));
                }
                *b = budget;
            }
        }
        let seed = over.seed.or(spec.seed).unwrap_or(0);
        spec.seed = Some(seed);
        let t = spec.tolerances.clone().unwrap_or_default();
        let d = Tolerances::default();
        let rank = RankTolerance::new(
            t.rank_absolute.unwrap_or(d.rank.absolute),
            t.rank_relative.unwrap_or(d.rank.relative),
        )
        .map_err(|e| CliError::Spec(e.to_string()))?;
        let mut tol = Tolerances {
            rank,
            leakage: t.leakage.unwrap_or(d.leakage),
            check: t.check.unwrap_or(d.check),
            identity: t.identity.unwrap_or(d.identity),
        };
        if let Some(x) = over.tol {
            tol.check = x;
            tol.leakage = x;
        }
        tol.validate().map_err(|e| CliError::Spec(e.to_string()))?;
        Ok(Self { spec, budget, seed, tol, base_dir, extra_degree: 0 })
    }

    pub fn require_subspace(&self) -> Result<(), CliError> {
        if self.spec.subspace.is_empty() {
            return Err(CliError::Spec("the subspace needs at least one generator".into()));
        }
        Ok(())
    }

    pub fn m(&self) -> usize {
        match self.spec.space {
            Space::Hardy { m, .. } => m,
            Space::Dalpha { .. } => 1,
        }
    }

    pub fn alpha(&self) -> Option<f64> {
        match self.spec.space {
            Space::Dalpha { alpha, .. } => Some(alpha),
            Space::Hardy { .. } => None,
        }
    }

    pub fn blaschke_operator(&self) -> Result<BlaschkeProduct, CliError> {
        match &self.spec.operator {
            Operator::Blaschke(b) => b.build(),
            Operator::Monomial { power } => Ok(BlaschkeProduct::monomial(*power)?),
            Operator::Shift => Ok(BlaschkeProduct::monomial(1)?),
            Operator::Matrix { .. } => Err(CliError::Spec("this command needs a Blaschke operator".into())),
        }
    }

    fn generator_pad(gens: &[Generator]) -> Result<usize, CliError> {
        let mut pad = 0;
        for g in gens {
            if let Generator::Monomials { blaschke: Some(b), .. } = g {
                pad = pad.max(b.build()?.effective_degree(TAYLOR_TAIL_TOL));
            }
        }
        Ok(pad)
    }

    fn all_generators(&self) -> impl Iterator<Item = &Generator> {
        self.spec.subspace.iter().chain(self.spec.defect_hint.iter().flatten())
    }

    /// Truncation degree: the budget plus room for generator factors and for
    /// the degree T adds (twice that for a Blaschke T).
    pub fn working_degree(&self) -> Result<usize, CliError> {
        let gens: Vec<Generator> = self.all_generators().cloned().collect();
        let gen_pad = Self::generator_pad(&gens)?;
        let op_pad = match &self.spec.operator {
            Operator::Shift => 1,
            Operator::Monomial { power } => *power,
            // the domain must itself outlast the Taylor tail of B, or ker T* is invisible
            Operator::Blaschke(b) => 2 * b.build()?.effective_degree(TAYLOR_TAIL_TOL),
            Operator::Matrix { .. } => 0,
        };
        Ok(self.budget + gen_pad + op_pad + self.extra_degree)
    }

    /// T on truncated H²(ℂ^m); D_α spaces are only accepted at α = 0.
    pub fn shift(&self) -> Result<ShiftModel, CliError> {
        if self.alpha().is_some_and(|a| a != 0.0) {
            return Err(CliError::Spec("detect and decompose work in H²; use dalpha for α ≠ 0".into()));
        }
        let m = self.m();
        let model = match &self.spec.operator {
            Operator::Shift => ShiftModel::shift(HardySpec::new(m, self.working_degree()?)?, self.tol)?,
            Operator::Monomial { power } => {
                if *power == 0 {
                    return Err(CliError::Spec("monomial power must be at least 1".into()));
                }
                ShiftModel::monomial(HardySpec::new(m, self.working_degree()?)?, *power, self.tol)?
            }
            Operator::Blaschke(b) => {
                ShiftModel::blaschke(&b.build()?, HardySpec::new(m, self.working_degree()?)?, self.tol)?
            }
            Operator::Matrix { file } => {
                let path = self.base_dir.join(file);
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| CliError::Spec(format!("cannot read {}: {e}", path.display())))?;
                let mf: MatrixFile =
                    serde_json::from_str(&text).map_err(|e| CliError::Spec(format!("{}: {e}", path.display())))?;
                if mf.entries.len() != mf.rows || mf.entries.iter().any(|r| r.len() != mf.cols) {
                    return Err(CliError::Spec(format!("{}: entries must be {}x{}", path.display(), mf.rows, mf.cols)));
                }
                if mf.rows == 0 || mf.rows % m != 0 {
                    return Err(CliError::Spec(format!("{} rows is not a multiple of m = {m}", mf.rows)));
                }
                let t = CMatrix::from_fn(mf.rows, mf.cols, |i, j| complex(mf.entries[i][j]));
                let spec = HardySpec::new(m, mf.rows / m - 1)?;
                ShiftModel::new(t, Frame::taylor(spec), Multiplier::Abstract, 1.0, self.tol)?
            }
        };
        Ok(model)
    }

    /// Generator functions as Taylor coefficient vectors (index n·m + j).
    pub fn functions(&self, gens: &[Generator]) -> Result<Vec<CoeffFn>, CliError> {
        let m = self.m();
        let mut out = Vec::new();
        for (index, g) in gens.iter().enumerate() {
            match g {
                Generator::Coeffs { coeffs } => {
                    if coeffs.is_empty() || coeffs.len() % m != 0 {
                        return Err(CliError::Spec(format!("generator {index}: length must be a positive multiple of m = {m}")));
                    }
                    if coeffs.iter().all(|c| c[0] == 0.0 && c[1] == 0.0) {
                        return Err(CliError::Spec(format!("generator {index} is zero")));
                    }
                    let spec = HardySpec::new(m, coeffs.len() / m - 1)?;
                    let v = CVector::from_iterator(coeffs.len(), coeffs.iter().copied().map(complex));
                    out.push(CoeffFn::polynomial(spec, v)?);
                }
                Generator::Monomials { monomials, from, step, to, component, blaschke } => {
                    if *component >= m {
                        return Err(CliError::Spec(format!("generator {index}: component {component} but m = {m}")));
                    }
                    let mut exps: BTreeSet<usize> = monomials.iter().copied().collect();
                    if let Some(start) = from {
                        let step = step.unwrap_or(1);
                        if step == 0 {
                            return Err(CliError::Spec(format!("generator {index}: step must be positive")));
                        }
                        let end = to.unwrap_or(self.budget);
                        exps.extend((*start..=end).step_by(step));
                    }
                    if exps.is_empty() {
                        return Err(CliError::Spec(format!("generator {index} has no exponents")));
                    }
                    let factor = blaschke.as_ref().map(BlaschkeSpec::build).transpose()?;
                    let pad = factor.as_ref().map_or(0, |b| b.effective_degree(TAYLOR_TAIL_TOL));
                    for k in exps {
                        let degree = k + pad;
                        let spec = HardySpec::new(m, degree)?;
                        let mut v = CVector::zeros(spec.dim());
                        match &factor {
                            Some(b) => {
                                for (n, c) in b.taylor_coeffs(pad + 1).into_iter().enumerate() {
                                    v[(k + n) * m + component] = c;
                                }
                            }
                            None => v[k * m + component] = Complex64::new(1.0, 0.0),
                        }
                        out.push(CoeffFn::polynomial(spec, v)?);
                    }
                }
            }
        }
        Ok(out)
    }
}
