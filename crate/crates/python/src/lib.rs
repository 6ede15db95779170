//! Python module `nisd_py`: the report pipeline of the command-line tool plus
//! a few core routines that are handy from a notebook.

use std::path::PathBuf;

use nisd::blaschke::{wold_decompose, wold_decompose_auto, BlaschkeProduct};
use nisd::dirichlet::{choose_params, max_wold_depth, norm_alpha};
use nisd::hardy::{CoeffFn, HardySpec};
use nisd::nearinv::{detect as detect_core, ShiftModel, Tolerances};
use nisd::numerics::{CMatrix, SubspaceBasis};
use nisd::Complex64;
use nisd_cli::spec::{parse_spec, Overrides};
use nisd_cli::{report, CliError, RunOptions};
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(nisd_py, NisdError, PyException, "Base class for nisd failures.");
create_exception!(nisd_py, SpecError, NisdError, "Malformed input.");
create_exception!(nisd_py, InconclusiveError, NisdError, "The truncation budget is too small to decide.");
create_exception!(nisd_py, ParameterError, NisdError, "No admissible parameters exist.");
create_exception!(nisd_py, NumericalError, NisdError, "A numerical check failed.");

fn to_py(e: CliError) -> PyErr {
    let msg = e.to_string();
    match e.exit_code() {
        1 => SpecError::new_err(msg),
        2 => InconclusiveError::new_err(msg),
        3 => ParameterError::new_err(msg),
        _ => NumericalError::new_err(msg),
    }
}

fn core_err(e: nisd::Error) -> PyErr {
    to_py(CliError::Core(e))
}

/// Run a command (`detect`, `decompose`, `dalpha`, `wold`, `gamma`) on a JSON
/// problem description and return the JSON report. `base_dir` resolves
/// relative matrix files.
#[pyfunction]
#[pyo3(signature = (command, spec, *, budget=None, tol=None, seed=None, timings=false, base_dir=None))]
fn run(
    py: Python<'_>,
    command: &str,
    spec: &str,
    budget: Option<usize>,
    tol: Option<f64>,
    seed: Option<u64>,
    timings: bool,
    base_dir: Option<PathBuf>,
) -> PyResult<String> {
    let parsed = parse_spec(spec).map_err(to_py)?;
    let opts = RunOptions { overrides: Overrides { budget, tol, seed }, timings, csv: None };
    let base = base_dir.unwrap_or_default();
    let json = py.detach(|| nisd_cli::run(command, parsed, base, &opts)).map_err(to_py)?;
    report::render(&json).map_err(to_py)
}

/// A finite Blaschke product phase · Π (z − a)/(1 − ā z).
#[pyclass(name = "Blaschke", frozen)]
struct PyBlaschke {
    inner: BlaschkeProduct,
}

#[pymethods]
impl PyBlaschke {
    #[new]
    #[pyo3(signature = (zeros, phase=Complex64::new(1.0, 0.0)))]
    fn new(zeros: Vec<Complex64>, phase: Complex64) -> PyResult<Self> {
        Ok(Self { inner: BlaschkeProduct::new(phase, zeros).map_err(core_err)? })
    }

    #[getter]
    fn zeros(&self) -> Vec<Complex64> {
        self.inner.zeros().to_vec()
    }

    #[getter]
    fn phase(&self) -> Complex64 {
        self.inner.phase()
    }

    #[getter]
    fn degree(&self) -> usize {
        self.inner.degree()
    }

    fn __call__(&self, z: Complex64) -> Complex64 {
        self.inner.eval(z)
    }

    /// First `n` Taylor coefficients.
    fn taylor(&self, n: usize) -> Vec<Complex64> {
        self.inner.taylor_coeffs(n)
    }

    fn __repr__(&self) -> String {
        format!("Blaschke(zeros={:?}, phase={})", self.inner.zeros(), self.inner.phase())
    }
}

/// (Σ (n+1)^α |a_n|²)^{1/2}.
#[pyfunction]
#[pyo3(name = "norm_alpha")]
fn norm_alpha_py(coeffs: Vec<Complex64>, alpha: f64) -> PyResult<f64> {
    norm_alpha(&CoeffFn::scalar(&coeffs), alpha).map_err(core_err)
}

/// Wold layers f = Σ Bⁿ hₙ: returns (Takenaka–Malmquist coordinates per
/// layer, residual). Without `depth` the layers continue until the residual
/// falls below `tol`·‖f‖.
#[pyfunction]
#[pyo3(signature = (coeffs, b, depth=None, tol=1e-13))]
fn wold(coeffs: Vec<Complex64>, b: &PyBlaschke, depth: Option<usize>, tol: f64) -> PyResult<(Vec<Vec<Complex64>>, f64)> {
    let f = CoeffFn::scalar(&coeffs);
    let w = match depth {
        Some(d) => wold_decompose(&f, &b.inner, d),
        None => wold_decompose_auto(&f, &b.inner, tol, max_wold_depth(f.degree())),
    }
    .map_err(core_err)?;
    Ok((w.tm_coords.iter().map(|c| c.iter().copied().collect()).collect(), w.residual))
}

/// (G, s, γ₁) with sup |B| on |z| = s below (1 − η)γ₁, as a dict.
#[pyfunction]
fn certify<'py>(py: Python<'py>, b: &PyBlaschke, alpha: f64) -> PyResult<Bound<'py, PyDict>> {
    let cert = choose_params(&b.inner, alpha).map_err(core_err)?;
    let replay = cert.replay(&b.inner).map_err(core_err)?;
    let d = PyDict::new(py);
    d.set_item("g", cert.g)?;
    d.set_item("s", cert.s)?;
    d.set_item("gamma1", cert.gamma1)?;
    d.set_item("value", cert.ratio)?;
    d.set_item("eta", cert.eta)?;
    d.set_item("holds", cert.holds())?;
    d.set_item("replay", replay)?;
    Ok(d)
}

/// (r, p) of span(generators) under T_{z^power} (or T_B when `zeros` is
/// given) on H²(ℂ^m) truncated at `degree`. Generators are interleaved
/// coefficient lists, index n·m + j.
#[pyfunction]
#[pyo3(signature = (generators, degree, *, m=1, power=1, zeros=None))]
fn detect(
    generators: Vec<Vec<Complex64>>,
    degree: usize,
    m: usize,
    power: usize,
    zeros: Option<Vec<Complex64>>,
) -> PyResult<(usize, usize)> {
    let spec = HardySpec::new(m, degree).map_err(core_err)?;
    let tol = Tolerances::default();
    let shift = match zeros {
        Some(z) => ShiftModel::blaschke(&BlaschkeProduct::from_zeros(z).map_err(core_err)?, spec, tol),
        None => ShiftModel::monomial(spec, power, tol),
    }
    .map_err(core_err)?;
    let mut a = CMatrix::zeros(spec.dim(), generators.len());
    for (j, g) in generators.iter().enumerate() {
        if g.len() > spec.dim() {
            return Err(InconclusiveError::new_err(format!("generator {j} has {} coefficients, room for {}", g.len(), spec.dim())));
        }
        for (i, &c) in g.iter().enumerate() {
            a[(i, j)] = c;
        }
    }
    let basis = SubspaceBasis::span(&a, tol.rank).map_err(core_err)?;
    let report = detect_core(&basis, &shift).map_err(core_err)?;
    Ok((report.r, report.p))
}

#[pymodule]
fn nisd_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add("NisdError", py.get_type::<NisdError>())?;
    m.add("SpecError", py.get_type::<SpecError>())?;
    m.add("InconclusiveError", py.get_type::<InconclusiveError>())?;
    m.add("ParameterError", py.get_type::<ParameterError>())?;
    m.add("NumericalError", py.get_type::<NumericalError>())?;
    m.add_class::<PyBlaschke>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(norm_alpha_py, m)?)?;
    m.add_function(wrap_pyfunction!(wold, m)?)?;
    m.add_function(wrap_pyfunction!(certify, m)?)?;
    m.add_function(wrap_pyfunction!(detect, m)?)?;
    Ok(())
}
