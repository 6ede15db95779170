//! Report plumbing shared by the commands: complex encodings, headers,
//! timings and output.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use nisd::numerics::{CMatrix, CVector, SubspaceBasis};
use nisd::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use crate::spec::{ProblemSpec, C, SCHEMA_VERSION};
use crate::CliError;

pub fn c(z: Complex64) -> C {
    [z.re, z.im]
}

pub fn vector(v: &CVector) -> Vec<C> {
    v.iter().copied().map(c).collect()
}

/// Rows of a table, e.g. coefficient k of every series in row k.
pub fn rows(a: &CMatrix) -> Vec<Vec<C>> {
    a.row_iter().map(|r| r.iter().copied().map(c).collect()).collect()
}

/// Basis vectors, one per entry.
pub fn basis(b: &SubspaceBasis) -> Vec<Vec<C>> {
    b.basis().column_iter().map(|col| col.iter().copied().map(c).collect()).collect()
}

#[derive(Serialize)]
pub struct Versions {
    pub nisd: &'static str,
    pub schema_version: u32,
}

#[derive(Serialize)]
pub struct Header {
    pub schema_version: u32,
    pub command: &'static str,
    pub status: &'static str,
    pub versions: Versions,
    pub seed: u64,
    pub budget: usize,
    pub problem: ProblemSpec,
}

impl Header {
    pub fn new(command: &'static str, problem: &crate::spec::Problem) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command,
            status: "ok",
            versions: Versions { nisd: env!("CARGO_PKG_VERSION"), schema_version: SCHEMA_VERSION },
            seed: problem.seed,
            budget: problem.budget,
            problem: problem.spec.clone(),
        }
    }
}

#[derive(Serialize)]
pub struct Stage {
    pub name: &'static str,
    pub seconds: f64,
}

/// Wall-clock time per stage, in the order the stages ran.
pub struct Stopwatch {
    start: Instant,
    last: Instant,
    stages: Vec<Stage>,
}

#[derive(Serialize)]
pub struct Timings {
    pub total_seconds: f64,
    pub stages: Vec<Stage>,
}

impl Stopwatch {
    pub fn new() -> Self {
        let now = Instant::now();
        Self { start: now, last: now, stages: Vec::new() }
    }

    pub fn lap(&mut self, name: &'static str) {
        let now = Instant::now();
        self.stages.push(Stage { name, seconds: (now - self.last).as_secs_f64() });
        self.last = now;
    }

    pub fn finish(self, enabled: bool) -> Option<Timings> {
        enabled.then(|| Timings { total_seconds: self.start.elapsed().as_secs_f64(), stages: self.stages })
    }
}

pub fn to_value<T: Serialize>(report: &T) -> Result<Value, CliError> {
    serde_json::to_value(report).map_err(|e| CliError::Io(format!("cannot serialize the report: {e}")))
}

pub fn failure(command: &str, e: &CliError) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "status": "error",
        "error": { "kind": e.kind(), "exit_code": e.exit_code(), "message": e.to_string() },
    })
}

/// Pretty JSON with a trailing newline.
pub fn render(json: &Value) -> Result<String, CliError> {
    let mut text = serde_json::to_string_pretty(json).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

pub fn write(out: Option<&Path>, json: &Value) -> Result<(), CliError> {
    let text = render(json)?;
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display()))),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string())),
    }
}
