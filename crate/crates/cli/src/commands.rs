//! The five subcommands. Each builds its report as plain serializable data.

use std::path::{Path, PathBuf};

use nisd::blaschke::{wold_decompose_auto, BlaschkeProduct, WoldCoefficients};
use nisd::dirichlet::{
    choose_params, lower_bound_gamma2, max_wold_depth, multiply, norm1, norm2, NormEstimate, ParamCertificate,
};
use nisd::hardy::CoeffFn;
use nisd::nearinv::{
    check_nearly_invariant, dalpha_decompose, detect, pointwise_check, transfer_decompose, DAlphaModel, NearInvReport,
    ShiftModel, TransferCase,
};
use nisd::numerics::{CMatrix, SubspaceBasis};
use nisd::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::Value;

use crate::export;
use crate::report::{self, basis, c, rows, vector, Header, Stopwatch, Timings};
use crate::spec::{check_version, read_spec, Overrides, Problem, ProblemSpec, C};
use crate::CliError;

/// Sample points per decomposed vector for the pointwise identity.
const POINTS: usize = 16;
/// Largest |u(w)|/γ allowed at a sample point.
const POINT_RATIO: f64 = 0.9;
/// Times `decompose` may double the working degree when U runs out of layers.
const MAX_GROWTH: usize = 3;
/// Relative Wold residual the `wold` command aims for.
const WOLD_TOL: f64 = 1e-13;
/// Random polynomials drawn by `gamma`.
const GAMMA_SAMPLES: usize = 32;

/// Overrides and output options shared by every command.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub overrides: Overrides,
    pub timings: bool,
    pub csv: Option<PathBuf>,
}

pub const COMMANDS: [&str; 5] = ["detect", "decompose", "dalpha", "wold", "gamma"];

/// Run a command on a problem file; relative matrix files resolve against its directory.
pub fn run_file(command: &str, path: &Path, opts: &RunOptions) -> Result<Value, CliError> {
    let spec = read_spec(path)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    run(command, spec, base, opts)
}

pub fn run(command: &str, spec: ProblemSpec, base_dir: PathBuf, opts: &RunOptions) -> Result<Value, CliError> {
    check_version(&spec)?;
    let problem = Problem::new(spec, base_dir, opts.overrides)?;
    let ctx = Ctx { problem, csv: opts.csv.as_deref(), timings: opts.timings, clock: Stopwatch::new() };
    match command {
        "detect" => cmd_detect(ctx),
        "decompose" => cmd_decompose(ctx),
        "dalpha" => cmd_dalpha(ctx),
        "wold" => cmd_wold(ctx),
        "gamma" => cmd_gamma(ctx),
        other => Err(CliError::Spec(format!("unknown command {other}; expected one of {}", COMMANDS.join(", ")))),
    }
}

struct Ctx<'a> {
    problem: Problem,
    csv: Option<&'a Path>,
    timings: bool,
    clock: Stopwatch,
}

impl Ctx<'_> {
    fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.problem.seed)
    }

    fn csv_table(&self, name: &str, label: &str, table: &[Vec<C>]) -> Result<(), CliError> {
        match self.csv {
            Some(dir) => export::table(dir, name, label, table),
            None => Ok(()),
        }
    }

    fn csv_basis(&self, name: &str, vectors: &[Vec<C>]) -> Result<(), CliError> {
        match self.csv {
            Some(dir) => export::basis(dir, name, vectors),
            None => Ok(()),
        }
    }
}

fn span_in(shift: &ShiftModel, fs: &[CoeffFn]) -> Result<SubspaceBasis, CliError> {
    let tol = shift.tol();
    let mut a = CMatrix::zeros(shift.dim(), fs.len());
    for (j, f) in fs.iter().enumerate() {
        a.set_column(j, &shift.frame().coordinates(f, tol.check)?);
    }
    Ok(SubspaceBasis::span(&a, tol.rank)?)
}

#[derive(Serialize)]
struct OperatorSummary {
    dimension: usize,
    domain_dimension: usize,
    multiplicity: usize,
    scale: f64,
    lower_bound: f64,
    upper_bound: f64,
    isometry_defect: f64,
    pureness_residual: f64,
}

impl OperatorSummary {
    fn of(shift: &ShiftModel) -> Self {
        Self {
            dimension: shift.dim(),
            domain_dimension: shift.domain_dim(),
            multiplicity: shift.multiplicity(),
            scale: shift.scale(),
            lower_bound: shift.lower_bound(),
            upper_bound: shift.upper_bound(),
            isometry_defect: shift.isometry_defect(),
            pureness_residual: shift.pureness_residual(),
        }
    }
}

#[derive(Serialize)]
struct Residuals {
    leakage: f64,
    invariance: f64,
    defect_orthogonality: f64,
}

#[derive(Serialize)]
struct HintCheck {
    dimension: usize,
    nearly_invariant: bool,
    residual: f64,
}

#[derive(Serialize)]
struct Detection {
    subspace_dimension: usize,
    /// Orthonormal basis of M in frame coordinates; per-vector tables follow its order.
    subspace_basis: Vec<Vec<C>>,
    r: usize,
    p: usize,
    contained_in_th: bool,
    nearly_invariant: bool,
    residuals: Residuals,
    norm_slack: f64,
    /// Orthonormal bases in frame coordinates.
    g0: Vec<Vec<C>>,
    f1: Vec<Vec<C>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    defect_hint: Option<HintCheck>,
}

impl Detection {
    fn new(m: &SubspaceBasis, report: &NearInvReport, check: (bool, f64), hint: Option<HintCheck>) -> Self {
        Self {
            subspace_dimension: m.dim(),
            subspace_basis: basis(m),
            r: report.r,
            p: report.p,
            contained_in_th: report.contained_in_th,
            nearly_invariant: check.0,
            residuals: Residuals {
                leakage: report.residuals.leakage,
                invariance: check.1,
                defect_orthogonality: report.residuals.defect_orthogonality,
            },
            norm_slack: report.norm_slack,
            g0: basis(&report.g0),
            f1: basis(&report.f1),
            defect_hint: hint,
        }
    }
}

/// M, the detection report and the defect space to decompose with: the
/// hint when there is one, the minimal defect space otherwise.
fn run_detection(
    ctx: &mut Ctx,
    shift: &ShiftModel,
    span: impl Fn(&[CoeffFn]) -> Result<SubspaceBasis, CliError>,
) -> Result<(SubspaceBasis, Detection, SubspaceBasis), CliError> {
    let problem = &ctx.problem;
    problem.require_subspace()?;
    let m = span(&problem.functions(&problem.spec.subspace)?)?;
    ctx.clock.lap("subspace");
    let report = detect(&m, shift)?;
    let (ok, residual) = check_nearly_invariant(&m, &report.f1, shift)?;
    let (hint, f) = match &problem.spec.defect_hint {
        Some(gens) => {
            // only the part orthogonal to M enlarges M ⊕ F
            let raw = span(&problem.functions(gens)?)?;
            let f = SubspaceBasis::span(&m.reject_columns(raw.basis()), shift.tol().rank)?;
            let (hint_ok, hint_residual) = check_nearly_invariant(&m, &f, shift)?;
            (Some(HintCheck { dimension: f.dim(), nearly_invariant: hint_ok, residual: hint_residual }), f)
        }
        None => (None, report.f1.clone()),
    };
    ctx.clock.lap("detect");
    let detection = Detection::new(&m, &report, (ok, residual), hint);
    Ok((m, detection, f))
}

#[derive(Serialize)]
struct DetectReport {
    #[serde(flatten)]
    header: Header,
    working_degree: usize,
    operator: OperatorSummary,
    detection: Detection,
    #[serde(skip_serializing_if = "Option::is_none")]
    timings: Option<Timings>,
}

fn cmd_detect(mut ctx: Ctx) -> Result<Value, CliError> {
    let shift = ctx.problem.shift()?;
    ctx.clock.lap("operator");
    let (_, detection, _) = run_detection(&mut ctx, &shift, |fs| span_in(&shift, fs))?;
    ctx.csv_basis("g0.csv", &detection.g0)?;
    ctx.csv_basis("f1.csv", &detection.f1)?;
    let report = DetectReport {
        header: Header::new("detect", &ctx.problem),
        working_degree: ctx.problem.working_degree()?,
        operator: OperatorSummary::of(&shift),
        detection,
        timings: ctx.clock.finish(ctx.timings),
    };
    report::to_value(&report)
}

#[derive(Serialize)]
struct PointSummary {
    points: usize,
    max_ratio: f64,
    max_error: f64,
    max_bound: f64,
    within_bound: bool,
}

#[derive(Serialize)]
struct TransferEntry {
    index: usize,
    norm: f64,
    depth: usize,
    /// Row k holds the degree-k coefficients of K₀ (resp. K₁).
    k0: Vec<Vec<C>>,
    k1: Vec<Vec<C>>,
    /// Row k holds c_k (resp. b_{k+1}).
    c: Vec<Vec<C>>,
    b: Vec<Vec<C>>,
    remainder: f64,
    identity_residual: f64,
    isometry_defect: f64,
    bessel_slack: f64,
    round_trip: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pointwise: Option<PointSummary>,
}

#[derive(Serialize)]
struct Flags {
    isometry: bool,
    invariance: bool,
    round_trip: bool,
    bessel: bool,
    pointwise: bool,
}

#[derive(Serialize)]
struct UnitarySummary {
    layers: usize,
    unitarity_defect: f64,
    intertwining_residual: f64,
}

#[derive(Serialize)]
struct Decomposition {
    case: &'static str,
    r: usize,
    p: usize,
    /// Bases actually used for G₀ and F₁; the tables below refer to them.
    g0: Vec<Vec<C>>,
    f1: Vec<Vec<C>>,
    unitary: UnitarySummary,
    /// K ⊂ H²(ℂ^{r+p}) truncated at `k_degree`, index k·(r+p) + i.
    k_width: usize,
    k_degree: usize,
    k_basis: Vec<Vec<C>>,
    invariance_residual: f64,
    entries: Vec<TransferEntry>,
    flags: Flags,
}

#[derive(Serialize)]
struct DecomposeReport {
    #[serde(flatten)]
    header: Header,
    working_degree: usize,
    /// How often the working degree was doubled to fit the transfer.
    degree_doublings: usize,
    operator: OperatorSummary,
    detection: Detection,
    decomposition: Decomposition,
    #[serde(skip_serializing_if = "Option::is_none")]
    timings: Option<Timings>,
}

/// Points with |u(w)| ≤ 0.9γ, drawn uniformly from the disc.
fn sample_points(rng: &mut ChaCha8Rng, shift: &ShiftModel) -> Option<Vec<Complex64>> {
    let gamma = shift.scale();
    let mut points = Vec::with_capacity(POINTS);
    for _ in 0..100_000 {
        if points.len() == POINTS {
            break;
        }
        let w = Complex64::from_polar(rng.random::<f64>().sqrt() * 0.99, rng.random_range(0.0..std::f64::consts::TAU));
        let u = shift.multiplier().eval(w)?;
        if u.norm() <= POINT_RATIO * gamma {
            points.push(w);
        }
    }
    (points.len() == POINTS).then_some(points)
}

fn cmd_decompose(mut ctx: Ctx) -> Result<Value, CliError> {
    let mut growth = 0;
    let (shift, m, detection, dec) = loop {
        let shift = ctx.problem.shift()?;
        ctx.clock.lap("operator");
        let (m, detection, f) = run_detection(&mut ctx, &shift, |fs| span_in(&shift, fs))?;
        let result = transfer_decompose(&m, &f, &shift, ctx.problem.spec.depth);
        ctx.clock.lap("transfer");
        match result {
            // long series need more layers than the budget alone provides
            Err(nisd::Error::Budget(_)) if growth < MAX_GROWTH => {
                ctx.problem.extra_degree += ctx.problem.working_degree()?;
                growth += 1;
            }
            other => break (shift, m, detection, other?),
        }
    };
    let tol = shift.tol();
    let mut rng = ctx.rng();
    let points = sample_points(&mut rng, &shift);
    let mut entries = Vec::with_capacity(dec.pairs.len());
    for (i, pair) in dec.pairs.iter().enumerate() {
        let rec = &pair.record;
        let pointwise = match &points {
            Some(pts) => {
                let checks = pointwise_check(rec, &m.column(i), &dec.ops, &shift, pts)?;
                let max_error = checks.iter().map(|p| p.error).fold(0.0, f64::max);
                Some(PointSummary {
                    points: checks.len(),
                    max_ratio: checks.iter().map(|p| p.ratio).fold(0.0, f64::max),
                    max_error,
                    max_bound: checks.iter().map(|p| p.bound).fold(0.0, f64::max),
                    within_bound: checks.iter().all(|p| p.error <= p.bound),
                })
            }
            None => None,
        };
        entries.push(TransferEntry {
            index: i,
            norm: rec.h_norm,
            depth: rec.depth,
            k0: rows(&pair.k0),
            k1: rows(&pair.k1),
            c: rows(&rec.c),
            b: rows(&rec.b),
            remainder: rec.remainder,
            identity_residual: rec.identity_residual,
            isometry_defect: pair.isometry_defect,
            bessel_slack: rec.h_norm * rec.h_norm - rec.bessel_sum,
            round_trip: pair.round_trip,
            pointwise,
        });
    }
    ctx.clock.lap("checks");
    let flags = Flags {
        isometry: entries.iter().all(|e| e.isometry_defect <= tol.identity * (e.norm * e.norm).max(1.0)),
        invariance: dec.invariance_residual <= tol.check,
        round_trip: entries.iter().all(|e| e.round_trip <= tol.check * e.norm.max(1.0)),
        bessel: entries.iter().all(|e| e.bessel_slack >= -tol.identity * (e.norm * e.norm).max(1.0)),
        pointwise: entries.iter().all(|e| e.pointwise.as_ref().is_none_or(|p| p.within_bound)),
    };
    let k_basis = basis(&dec.k);
    ctx.csv_basis("k.csv", &k_basis)?;
    for e in &entries {
        ctx.csv_table(&format!("k0_{}.csv", e.index), "degree", &e.k0)?;
        ctx.csv_table(&format!("k1_{}.csv", e.index), "degree", &e.k1)?;
        ctx.csv_table(&format!("c_{}.csv", e.index), "k", &e.c)?;
        ctx.csv_table(&format!("b_{}.csv", e.index), "k_minus_1", &e.b)?;
    }
    let decomposition = Decomposition {
        case: match dec.case {
            TransferCase::Wandering => "wandering",
            TransferCase::InsideRange => "inside_range",
        },
        r: dec.r(),
        p: dec.p(),
        g0: basis(&dec.ops.g0),
        f1: basis(&dec.ops.f1),
        unitary: UnitarySummary {
            layers: dec.unitary.layers(),
            unitarity_defect: dec.unitary.unitarity_defect,
            intertwining_residual: dec.unitary.intertwining_residual,
        },
        k_width: dec.r() + dec.p(),
        k_degree: dec.k_spec.degree,
        k_basis,
        invariance_residual: dec.invariance_residual,
        entries,
        flags,
    };
    let report = DecomposeReport {
        header: Header::new("decompose", &ctx.problem),
        working_degree: ctx.problem.working_degree()?,
        degree_doublings: growth,
        operator: OperatorSummary::of(&shift),
        detection,
        decomposition,
        timings: ctx.clock.finish(ctx.timings),
    };
    report::to_value(&report)
}

#[derive(Serialize)]
struct Certificate {
    g: usize,
    s: f64,
    alpha: f64,
    gamma1: f64,
    sup_abs_b: f64,
    argmax: C,
    grid: usize,
    grid_delta: f64,
    /// sup |B| on |z| = s divided by γ₁.
    value: f64,
    eta: f64,
    holds: bool,
    replay: f64,
    replay_matches: bool,
}

impl Certificate {
    fn new(cert: &ParamCertificate, b: &BlaschkeProduct) -> Result<Self, CliError> {
        let replay = cert.replay(b)?;
        Ok(Self {
            g: cert.g,
            s: cert.s,
            alpha: cert.alpha,
            gamma1: cert.gamma1,
            sup_abs_b: cert.hinf.value,
            argmax: c(cert.hinf.argmax),
            grid: cert.hinf.grid,
            grid_delta: cert.hinf.delta,
            value: cert.ratio,
            eta: cert.eta,
            holds: cert.holds(),
            replay,
            replay_matches: replay == cert.ratio,
        })
    }
}

#[derive(Serialize)]
struct WoldEntry {
    index: usize,
    depth: usize,
    residual: f64,
    h2_norm: f64,
    /// Row n holds the Takenaka–Malmquist coordinates of layer n.
    layers: Vec<Vec<C>>,
    layer_norms: Vec<f64>,
}

fn wold_entry(index: usize, f: &CoeffFn, w: &WoldCoefficients) -> WoldEntry {
    WoldEntry {
        index,
        depth: w.depth(),
        residual: w.residual,
        h2_norm: f.norm(),
        layers: w.tm_coords.iter().map(vector).collect(),
        layer_norms: w.layers.iter().map(CoeffFn::norm).collect(),
    }
}

/// Wold layers of f, deep enough that the residual is below `tol`·‖f‖.
fn wold_of(f: &CoeffFn, b: &BlaschkeProduct, tol: f64) -> Result<WoldCoefficients, CliError> {
    let w = wold_decompose_auto(f, b, tol, max_wold_depth(f.degree()))?;
    if w.residual > tol * f.norm() {
        return Err(nisd::Error::Budget(format!(
            "Wold residual {:.3e} after {} layers exceeds {tol:.1e}",
            w.residual,
            w.depth() + 1
        ))
        .into());
    }
    Ok(w)
}

fn scalar_only(problem: &Problem) -> Result<(), CliError> {
    if problem.m() != 1 {
        return Err(CliError::Spec("this command works in scalar spaces (m = 1)".into()));
    }
    Ok(())
}

#[derive(Serialize)]
struct DAlphaEntryReport {
    index: usize,
    f_norm: f64,
    q_norm: f64,
    h_norm: f64,
    lhs: f64,
    slack: f64,
    /// Whether the norm inequality ‖f‖ ≥ lhs holds within tolerance.
    norm_inequality: bool,
    coefficient_slack: f64,
    depth: usize,
    c: Vec<Vec<C>>,
    b: Vec<Vec<C>>,
    /// Taylor coefficients of each q_i (resp. h_j), one vector per series.
    q_taylor: Vec<Vec<C>>,
    h_taylor: Vec<Vec<C>>,
    pointwise_error: f64,
    pointwise_bound: f64,
}

#[derive(Serialize)]
struct DAlphaFlags {
    norm_inequality: bool,
    coefficient_bessel: bool,
    pointwise: bool,
}

#[derive(Serialize)]
struct DAlphaSection {
    alpha: f64,
    norm: &'static str,
    layers: usize,
    gamma: f64,
    radius: f64,
    ratio: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    certificate: Option<Certificate>,
    wold: Vec<WoldEntry>,
    /// G₀ and F₁ as Taylor coefficients through the working degree.
    g0_taylor: Vec<Vec<C>>,
    f1_taylor: Vec<Vec<C>>,
    r: usize,
    p: usize,
    entries: Vec<DAlphaEntryReport>,
    min_slack: f64,
    /// The norm inequality is an error condition only for α < 0 or B(0) = 0.
    norm_inequality_enforced: bool,
    flags: DAlphaFlags,
}

#[derive(Serialize)]
struct DAlphaReport {
    #[serde(flatten)]
    header: Header,
    working_degree: usize,
    operator: OperatorSummary,
    detection: Detection,
    dalpha: DAlphaSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    timings: Option<Timings>,
}

fn taylor_basis(model: &DAlphaModel, b: &SubspaceBasis, degree: usize) -> Vec<Vec<C>> {
    (0..b.dim()).map(|i| vector(model.shift.frame().to_taylor(&b.column(i), degree).coeffs())).collect()
}

fn cmd_dalpha(mut ctx: Ctx) -> Result<Value, CliError> {
    let problem = &ctx.problem;
    scalar_only(problem)?;
    problem.require_subspace()?;
    let alpha = problem.alpha().unwrap_or(0.0);
    let b = problem.blaschke_operator()?;
    let tol = problem.tol;
    let fs = problem.functions(&problem.spec.subspace)?;
    let hint = problem.spec.defect_hint.as_ref().map(|g| problem.functions(g)).transpose()?.unwrap_or_default();
    let mut wold = Vec::with_capacity(fs.len());
    let mut deepest = 0;
    for (i, f) in fs.iter().enumerate() {
        let w = wold_of(f, &b, tol.check.min(WOLD_TOL))?;
        deepest = deepest.max(w.depth());
        wold.push(wold_entry(i, f, &w));
    }
    for f in &hint {
        deepest = deepest.max(wold_of(f, &b, tol.check.min(WOLD_TOL))?.depth());
    }
    // two spare layers: one for T to move into, one kept empty
    let layers = deepest + 3;
    let model = DAlphaModel::new(alpha, &b, layers, tol)?;
    ctx.clock.lap("model");
    let (m, detection, f) = run_detection(&mut ctx, &model.shift, |fs| Ok(model.span(fs)?))?;
    let dec = dalpha_decompose(&model, &m, &f)?;
    ctx.clock.lap("decompose");
    let degree = ctx.problem.working_degree()?;
    let budget = ctx.problem.budget;
    let inner_at_zero = b.eval(Complex64::new(0.0, 0.0)).norm() < 1e-14;
    let enforced = alpha < 0.0 || inner_at_zero;
    let mut entries = Vec::with_capacity(dec.entries.len());
    for (i, e) in dec.entries.iter().enumerate() {
        let rec = &e.factorization;
        let series = |defect: bool, count: usize| -> Vec<Vec<C>> {
            (0..count).map(|j| vector(e.series_taylor(&model, defect, j, budget).coeffs())).collect()
        };
        entries.push(DAlphaEntryReport {
            index: i,
            f_norm: e.f_norm,
            q_norm: e.q_norm,
            h_norm: e.h_norm,
            lhs: e.lhs,
            slack: e.slack,
            norm_inequality: e.slack >= -tol.check * e.f_norm.max(1.0),
            coefficient_slack: e.coefficient_slack,
            depth: rec.depth,
            c: rows(&rec.c),
            b: rows(&rec.b),
            q_taylor: series(false, rec.c.ncols()),
            h_taylor: series(true, rec.b.ncols()),
            pointwise_error: e.pointwise_error,
            pointwise_bound: e.pointwise_bound,
        });
    }
    for e in &entries {
        ctx.csv_table(&format!("c_{}.csv", e.index), "k", &e.c)?;
        ctx.csv_table(&format!("b_{}.csv", e.index), "k_minus_1", &e.b)?;
        ctx.csv_basis(&format!("q_{}.csv", e.index), &e.q_taylor)?;
        ctx.csv_basis(&format!("h_{}.csv", e.index), &e.h_taylor)?;
    }
    for w in &wold {
        ctx.csv_table(&format!("wold_{}.csv", w.index), "layer", &w.layers)?;
    }
    let flags = DAlphaFlags {
        norm_inequality: entries.iter().all(|e| e.norm_inequality),
        coefficient_bessel: entries.iter().all(|e| e.coefficient_slack >= -tol.identity * (e.f_norm * e.f_norm).max(1.0)),
        pointwise: entries.iter().all(|e| e.pointwise_error <= e.pointwise_bound),
    };
    let section = DAlphaSection {
        alpha,
        norm: if alpha < 0.0 { "norm1" } else { "norm2" },
        layers,
        gamma: model.gamma,
        radius: model.radius,
        ratio: model.ratio,
        certificate: model.certificate.as_ref().map(|cert| Certificate::new(cert, &b)).transpose()?,
        wold,
        g0_taylor: taylor_basis(&model, &dec.ops.g0, degree),
        f1_taylor: taylor_basis(&model, &dec.ops.f1, degree),
        r: dec.r,
        p: dec.p,
        min_slack: dec.min_slack(),
        norm_inequality_enforced: enforced,
        entries,
        flags,
    };
    let report = DAlphaReport {
        header: Header::new("dalpha", &ctx.problem),
        working_degree: degree,
        operator: OperatorSummary::of(&model.shift),
        detection,
        dalpha: section,
        timings: ctx.clock.finish(ctx.timings),
    };
    report::to_value(&report)
}

#[derive(Serialize)]
struct Estimate {
    value: f64,
    error: f64,
    depth: usize,
    wold_residual: f64,
}

impl From<NormEstimate> for Estimate {
    fn from(e: NormEstimate) -> Self {
        Self { value: e.value, error: e.error, depth: e.depth, wold_residual: e.wold_residual }
    }
}

#[derive(Serialize)]
struct WoldNormEntry {
    #[serde(flatten)]
    wold: WoldEntry,
    #[serde(skip_serializing_if = "Option::is_none")]
    dalpha_norm: Option<Estimate>,
}

#[derive(Serialize)]
struct WoldReport {
    #[serde(flatten)]
    header: Header,
    blaschke_degree: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    certificate: Option<Certificate>,
    entries: Vec<WoldNormEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    timings: Option<Timings>,
}

/// ‖f‖₁ (α < 0, with certified parameters) or ‖f‖₂.
fn dalpha_norm(f: &CoeffFn, alpha: f64, b: &BlaschkeProduct, cert: Option<&ParamCertificate>) -> Result<NormEstimate, CliError> {
    Ok(match cert {
        Some(cert) => norm1(f, &cert.params(b)?, None)?,
        None => norm2(f, alpha, b, None)?,
    })
}

fn cmd_wold(mut ctx: Ctx) -> Result<Value, CliError> {
    let problem = &ctx.problem;
    scalar_only(problem)?;
    problem.require_subspace()?;
    let b = problem.blaschke_operator()?;
    let alpha = problem.alpha();
    let cert = match alpha {
        Some(a) if a < 0.0 => Some(choose_params(&b, a)?),
        _ => None,
    };
    let fs = problem.functions(&problem.spec.subspace)?;
    let mut entries = Vec::with_capacity(fs.len());
    for (i, f) in fs.iter().enumerate() {
        let w = wold_of(f, &b, problem.tol.check.min(WOLD_TOL))?;
        let dalpha_norm = alpha.map(|a| dalpha_norm(f, a, &b, cert.as_ref())).transpose()?.map(Estimate::from);
        entries.push(WoldNormEntry { wold: wold_entry(i, f, &w), dalpha_norm });
    }
    ctx.clock.lap("wold");
    for e in &entries {
        ctx.csv_table(&format!("wold_{}.csv", e.wold.index), "layer", &e.wold.layers)?;
    }
    let report = WoldReport {
        header: Header::new("wold", &ctx.problem),
        blaschke_degree: b.degree(),
        alpha,
        certificate: cert.as_ref().map(|cert| Certificate::new(cert, &b)).transpose()?,
        entries,
        timings: ctx.clock.finish(ctx.timings),
    };
    report::to_value(&report)
}

#[derive(Serialize)]
struct GammaReport {
    #[serde(flatten)]
    header: Header,
    alpha: f64,
    norm: &'static str,
    /// γ₁ for α < 0, γ₂ = 1 otherwise.
    gamma: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    certificate: Option<Certificate>,
    samples: usize,
    sample_degree: usize,
    /// min ‖Bf‖/‖f‖ over the samples.
    min_ratio: f64,
    /// max (γ‖f‖ − ‖Bf‖)/‖f‖ over the samples.
    worst_shortfall: f64,
    bound_holds: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    timings: Option<Timings>,
}

fn cmd_gamma(mut ctx: Ctx) -> Result<Value, CliError> {
    let problem = &ctx.problem;
    scalar_only(problem)?;
    let alpha = problem.alpha().unwrap_or(0.0);
    let b = problem.blaschke_operator()?;
    let cert = if alpha < 0.0 { Some(choose_params(&b, alpha)?) } else { None };
    let gamma = cert.as_ref().map_or(lower_bound_gamma2(), |c| c.gamma1);
    ctx.clock.lap("parameters");
    let degree = problem.budget.max(1);
    let mut rng = ctx.rng();
    let mut min_ratio = f64::INFINITY;
    let mut worst_shortfall = f64::NEG_INFINITY;
    for _ in 0..GAMMA_SAMPLES {
        let coeffs: Vec<Complex64> =
            (0..=degree).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let f = CoeffFn::scalar(&coeffs);
        let before = dalpha_norm(&f, alpha, &b, cert.as_ref())?.value;
        let after = dalpha_norm(&multiply(&b, &f)?, alpha, &b, cert.as_ref())?.value;
        min_ratio = min_ratio.min(after / before);
        worst_shortfall = worst_shortfall.max(gamma - after / before);
    }
    ctx.clock.lap("samples");
    let report = GammaReport {
        header: Header::new("gamma", &ctx.problem),
        alpha,
        norm: if alpha < 0.0 { "norm1" } else { "norm2" },
        gamma,
        certificate: cert.as_ref().map(|cert| Certificate::new(cert, &b)).transpose()?,
        samples: GAMMA_SAMPLES,
        sample_degree: degree,
        min_ratio,
        worst_shortfall,
        bound_holds: worst_shortfall <= problem.tol.check,
        timings: ctx.clock.finish(ctx.timings),
    };
    report::to_value(&report)
}
