use std::path::{Path, PathBuf};
use std::process::Command;

use nisd::blaschke::BlaschkeProduct;
use nisd::nearinv::Tolerances;
use nisd::numerics::{max_principal_angle, CMatrix, RankTolerance, SubspaceBasis};
use nisd::planted::EvenOddExample;
use nisd::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use tempfile::TempDir;

struct Run {
    code: i32,
    report: Value,
    bytes: Vec<u8>,
}

fn write_spec(dir: &Path, name: &str, spec: &Value) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(spec).unwrap()).unwrap();
    path
}

fn nisd(command: &str, spec: &Path, extra: &[&str]) -> Run {
    let out = spec.with_extension(format!("{command}.out.json"));
    let status = Command::new(env!("CARGO_BIN_EXE_nisd"))
        .arg(command)
        .arg("--spec")
        .arg(spec)
        .arg("--out")
        .arg(&out)
        .args(extra)
        .output()
        .expect("nisd runs");
    let bytes = std::fs::read(&out).unwrap_or_default();
    let report = serde_json::from_slice(&bytes).unwrap_or(Value::Null);
    Run { code: status.status.code().unwrap_or(-1), report, bytes }
}

fn ok(command: &str, dir: &Path, spec: &Value, extra: &[&str]) -> Value {
    let path = write_spec(dir, &format!("{command}.json"), spec);
    let run = nisd(command, &path, extra);
    assert_eq!(run.code, 0, "{command} failed: {}", run.report);
    run.report
}

fn complex(v: &Value) -> Complex64 {
    Complex64::new(v[0].as_f64().unwrap(), v[1].as_f64().unwrap())
}

/// Vectors stored one per entry, as matrix columns.
fn matrix(vectors: &Value) -> CMatrix {
    let cols: Vec<Vec<Complex64>> =
        vectors.as_array().unwrap().iter().map(|v| v.as_array().unwrap().iter().map(complex).collect()).collect();
    let rows = cols.first().map_or(0, Vec::len);
    CMatrix::from_fn(rows, cols.len(), |i, j| cols[j][i])
}

fn span(vectors: &Value) -> SubspaceBasis {
    SubspaceBasis::span(&matrix(vectors), RankTolerance::default()).unwrap()
}

fn padded(vectors: &Value, rows: usize) -> SubspaceBasis {
    let a = matrix(vectors);
    let mut b = CMatrix::zeros(rows, a.ncols());
    let n = rows.min(a.nrows());
    b.rows_mut(0, n).copy_from(&a.rows(0, n));
    SubspaceBasis::span(&b, RankTolerance::default()).unwrap()
}

fn rp(report: &Value) -> (u64, u64) {
    (report["detection"]["r"].as_u64().unwrap(), report["detection"]["p"].as_u64().unwrap())
}

fn example(budget: usize) -> Value {
    json!({
        "schema_version": 1,
        "space": {"kind": "hardy", "m": 1, "budget": budget},
        "operator": {"kind": "monomial", "power": 2},
        "subspace": [{"monomials": [0, 2, 1, 3, 5], "from": 6, "step": 2, "blaschke": {"zeros": [[0.5, 0.0]]}}],
        "seed": 11
    })
}

#[test]
fn example_detect_matches_the_worked_example() {
    let dir = TempDir::new().unwrap();
    let report = ok("detect", dir.path(), &example(32), &[]);
    assert_eq!(rp(&report), (2, 1));
    let ex = EvenOddExample::new(Complex64::new(0.5, 0.0), 2, 32, Tolerances::default()).unwrap();
    assert_eq!(report["working_degree"].as_u64().unwrap() as usize, ex.spec.degree);
    let g0 = span(&report["detection"]["g0"]);
    let f1 = span(&report["detection"]["f1"]);
    assert!(max_principal_angle(&g0, &ex.g0_reference().unwrap()).unwrap() <= 1e-7);
    assert!(max_principal_angle(&f1, &ex.defect_reference().unwrap()).unwrap() <= 1e-7);
    assert!(report["detection"]["nearly_invariant"].as_bool().unwrap());
    assert!(report["timings"]["total_seconds"].as_f64().unwrap() < 5.0);
}

#[test]
fn example_is_stable_in_the_budget() {
    let dir = TempDir::new().unwrap();
    let small = ok("detect", dir.path(), &example(32), &["--no-timings"]);
    let large = ok("detect", dir.path(), &example(64), &["--no-timings"]);
    assert_eq!(rp(&small), rp(&large));
    // the --budget override gives the same answer as editing the file
    let over = ok("detect", dir.path(), &example(32), &["--no-timings", "--budget", "64"]);
    assert_eq!(rp(&over), rp(&large));
    assert_eq!(over["working_degree"], large["working_degree"]);
}

#[test]
fn span_of_z_under_the_shift_is_all_defect() {
    let dir = TempDir::new().unwrap();
    let spec = json!({"space": {"kind": "hardy", "budget": 6}, "operator": {"kind": "shift"}, "subspace": [{"monomials": [1]}]});
    let report = ok("detect", dir.path(), &spec, &[]);
    assert_eq!(rp(&report), (0, 1));
    assert!(report["detection"]["contained_in_th"].as_bool().unwrap());
}

#[test]
fn span_of_one_and_z_has_k0_equal_to_the_coefficients() {
    let dir = TempDir::new().unwrap();
    let spec = json!({"space": {"kind": "hardy", "budget": 6}, "operator": {"kind": "shift"}, "subspace": [{"monomials": [0, 1]}]});
    let report = ok("decompose", dir.path(), &spec, &[]);
    let dec = &report["decomposition"];
    assert_eq!((dec["r"].as_u64(), dec["p"].as_u64()), (Some(1), Some(0)));
    assert_eq!(dec["case"], "wandering");
    // G₀ = span{1}, so f = a + bz has K₀ = (a + bz)/u with g₀ = u·1
    let u = complex(&dec["g0"][0][0]);
    assert!((u.norm() - 1.0).abs() < 1e-12);
    let basis = &report["detection"]["subspace_basis"];
    for (i, entry) in dec["entries"].as_array().unwrap().iter().enumerate() {
        let k0 = entry["k0"].as_array().unwrap();
        for (n, row) in k0.iter().enumerate() {
            let want = basis[i].get(n).map_or(Complex64::new(0.0, 0.0), complex) / u;
            assert!((complex(&row[0]) - want).norm() < 1e-12, "entry {i} degree {n}");
        }
        assert!(entry["k1"].as_array().unwrap().iter().all(|r| r.as_array().unwrap().is_empty()));
    }
}

#[test]
fn example_decomposition_matches_the_reference_k() {
    let dir = TempDir::new().unwrap();
    let report = ok("decompose", dir.path(), &example(32), &[]);
    let dec = &report["decomposition"];
    assert_eq!(report["degree_doublings"], 0);
    let ex = EvenOddExample::new(Complex64::new(0.5, 0.0), 2, 32, Tolerances::default()).unwrap();
    let tol = RankTolerance::default();
    let g0 = SubspaceBasis::from_orthonormal(matrix(&dec["g0"]), tol);
    let f1 = SubspaceBasis::from_orthonormal(matrix(&dec["f1"]), tol);
    let degree = dec["k_degree"].as_u64().unwrap() as usize;
    let reference = ex.k_reference(&g0, &f1, degree).unwrap();
    let k = span(&dec["k_basis"]);
    assert_eq!(k.dim(), reference.dim());
    assert!(max_principal_angle(&k, &reference).unwrap() <= 1e-7);
    let flags = &dec["flags"];
    for flag in ["isometry", "invariance", "round_trip", "bessel", "pointwise"] {
        assert_eq!(flags[flag], true, "{flag}");
    }
}

fn random_zero(rng: &mut ChaCha8Rng, rho: f64) -> Value {
    let z = Complex64::from_polar(rho * rng.random::<f64>().sqrt(), rng.random_range(0.0..std::f64::consts::TAU));
    json!([z.re, z.im])
}

#[test]
fn random_planted_specs_round_trip() {
    let dir = TempDir::new().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for case in 0..10 {
        let operator = match case % 3 {
            0 => json!({"kind": "shift"}),
            1 => json!({"kind": "monomial", "power": 2}),
            _ => json!({"kind": "blaschke", "zeros": [random_zero(&mut rng, 0.3)]}),
        };
        let count = rng.random_range(1..=4);
        let monomials: Vec<usize> = (0..count).map(|_| rng.random_range(0..10)).collect();
        let mut generator = json!({"monomials": monomials});
        if rng.random_bool(0.5) {
            generator["blaschke"] = json!({"zeros": [random_zero(&mut rng, 0.4)]});
        }
        let spec = json!({
            "space": {"kind": "hardy", "budget": 12},
            "operator": operator,
            "subspace": [generator],
            "seed": case
        });
        let report = ok("decompose", dir.path(), &spec, &["--no-timings"]);
        let flags = &report["decomposition"]["flags"];
        assert_eq!(flags["round_trip"], true, "case {case}: {spec}");
        assert_eq!(flags["isometry"], true, "case {case}: {spec}");
    }
}

#[test]
fn dalpha_at_zero_agrees_with_decompose() {
    let dir = TempDir::new().unwrap();
    let hardy = json!({
        "space": {"kind": "hardy", "budget": 12},
        "operator": {"kind": "blaschke", "zeros": [[0.3, 0.2]]},
        "subspace": [{"monomials": [0, 1, 4, 6]}]
    });
    let mut dirichlet = hardy.clone();
    dirichlet["space"] = json!({"kind": "dalpha", "alpha": 0.0, "budget": 12});
    let dec = ok("decompose", dir.path(), &hardy, &["--no-timings"]);
    let da = ok("dalpha", dir.path(), &dirichlet, &["--no-timings"]);
    assert_eq!(rp(&dec), rp(&da));
    assert_eq!(rp(&dec), (1, 2));
    assert_eq!(dec["detection"]["subspace_dimension"], da["detection"]["subspace_dimension"]);
    let rows = da["working_degree"].as_u64().unwrap() as usize + 1;
    for (a, b) in [("g0", "g0_taylor"), ("f1", "f1_taylor")] {
        let x = padded(&dec["decomposition"][a], rows);
        let y = padded(&da["dalpha"][b], rows);
        assert_eq!(x.dim(), y.dim());
        assert!(max_principal_angle(&x, &y).unwrap() <= 1e-7, "{a}");
    }
}

/// γ₁ = (1 − 1/(G+1))^{−α/2}.
fn gamma1(alpha: f64, g: u64) -> f64 {
    (1.0 - 1.0 / (g as f64 + 1.0)).powf(-alpha / 2.0)
}

#[test]
fn dalpha_certificate_for_an_automorphism_at_minus_one() {
    let dir = TempDir::new().unwrap();
    let spec = json!({
        "space": {"kind": "dalpha", "alpha": -1.0, "budget": 10},
        "operator": {"kind": "blaschke", "zeros": [[0.5, 0.0]]},
        "subspace": [{"monomials": [0, 2]}, {"coeffs": [[0, 0], [1, 0], [0.5, 0]]}]
    });
    let report = ok("dalpha", dir.path(), &spec, &["--no-timings"]);
    let cert = &report["dalpha"]["certificate"];
    let value = cert["value"].as_f64().unwrap();
    assert!(value < 0.99);
    assert_eq!(cert["replay_matches"], true);
    // sup |B_a| on |z| = s from a dense grid, then divide by γ₁(G)
    let s = cert["s"].as_f64().unwrap();
    let b = BlaschkeProduct::automorphism(Complex64::new(0.5, 0.0)).unwrap();
    let grid = 1 << 16;
    let sup = (0..grid)
        .map(|l| b.eval(Complex64::from_polar(s, std::f64::consts::TAU * l as f64 / grid as f64)).norm())
        .fold(0.0, f64::max);
    let recomputed = sup / gamma1(-1.0, cert["g"].as_u64().unwrap());
    assert!((recomputed - value).abs() <= 1e-6, "{recomputed} vs {value}");
    assert_eq!(report["dalpha"]["flags"]["norm_inequality"], true);
}

#[test]
fn dalpha_norm_inequality_for_z_squared_at_one() {
    let dir = TempDir::new().unwrap();
    let spec = json!({
        "space": {"kind": "dalpha", "alpha": 1.0, "budget": 12},
        "operator": {"kind": "monomial", "power": 2},
        "subspace": [{"monomials": [0, 1, 4, 6]}, {"coeffs": [[1, 0], [0, 1], [0, 0], [2, 0]]}]
    });
    let report = ok("dalpha", dir.path(), &spec, &["--no-timings"]);
    let da = &report["dalpha"];
    assert_eq!(da["flags"]["norm_inequality"], true);
    assert_eq!(da["norm_inequality_enforced"], true);
    // B = z² makes the powers of B orthonormal, so ‖q‖² + ‖h‖² is the sum of |c|² and |b|²
    for entry in da["entries"].as_array().unwrap() {
        let sum: f64 = ["c", "b"]
            .iter()
            .flat_map(|t| entry[*t].as_array().unwrap().iter())
            .flat_map(|row| row.as_array().unwrap().iter())
            .map(|z| complex(z).norm_sqr())
            .sum();
        let f = entry["f_norm"].as_f64().unwrap();
        let lhs = entry["lhs"].as_f64().unwrap();
        assert!(sum <= f * f * (1.0 + 1e-9));
        assert!((sum.sqrt() - lhs).abs() <= 1e-9 * f.max(1.0));
    }
}

#[test]
fn wold_and_gamma_reports() {
    let dir = TempDir::new().unwrap();
    let spec = json!({
        "space": {"kind": "dalpha", "alpha": -0.5, "budget": 8},
        "operator": {"kind": "blaschke", "zeros": [[0.3, 0.0], [0.0, -0.4]]},
        "subspace": [{"coeffs": [[1, 0], [2, 0], [0, 1]]}]
    });
    let wold = ok("wold", dir.path(), &spec, &["--no-timings"]);
    let entry = &wold["entries"][0];
    assert!(entry["residual"].as_f64().unwrap() <= 1e-12);
    assert!(entry["dalpha_norm"]["value"].as_f64().unwrap() > 0.0);
    let norms: f64 = entry["layer_norms"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap().powi(2)).sum();
    assert!((norms.sqrt() - entry["h2_norm"].as_f64().unwrap()).abs() <= 1e-10);
    let gamma = ok("gamma", dir.path(), &spec, &["--no-timings"]);
    assert_eq!(gamma["bound_holds"], true);
    assert!(gamma["min_ratio"].as_f64().unwrap() >= gamma["gamma"].as_f64().unwrap() - 1e-8);
    assert!(gamma["certificate"]["holds"].as_bool().unwrap());
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let cases = [
        // unknown field
        ("detect", json!({"space": {"kind": "hardy", "budget": 4}, "operator": {"kind": "shift"}, "subspace": [], "x": 1}), 1),
        // zero generator
        ("detect", json!({"space": {"kind": "hardy", "budget": 4}, "operator": {"kind": "shift"}, "subspace": [{"coeffs": [[0, 0]]}]}), 1),
        // alpha out of range
        ("dalpha", json!({"space": {"kind": "dalpha", "alpha": 2.0, "budget": 4}, "operator": {"kind": "shift"}, "subspace": [{"monomials": [0]}]}), 1),
        // mass past the domain of S
        ("detect", json!({"space": {"kind": "hardy", "budget": 4}, "operator": {"kind": "shift"}, "subspace": [{"monomials": [5]}]}), 2),
        // no γ₁ works when a zero sits on the edge
        ("gamma", json!({"space": {"kind": "dalpha", "alpha": -1.0, "budget": 4}, "operator": {"kind": "blaschke", "zeros": [[0.999999, 0.0]]}}), 3),
    ];
    for (i, (command, spec, code)) in cases.into_iter().enumerate() {
        let path = write_spec(d, &format!("case{i}.json"), &spec);
        let run = nisd(command, &path, &[]);
        assert_eq!(run.code, code, "case {i}: {}", run.report);
        assert_eq!(run.report["status"], "error");
        assert_eq!(run.report["error"]["exit_code"], code);
    }
    // a non-injective matrix is not a shift
    std::fs::write(d.join("t.json"), json!({"rows": 3, "cols": 2, "entries": [[[0, 0], [0, 0]], [[1, 0], [0, 0]], [[0, 0], [0, 0]]]}).to_string())
        .unwrap();
    let spec = json!({"space": {"kind": "hardy", "budget": 2}, "operator": {"kind": "matrix", "file": "t.json"}, "subspace": [{"monomials": [0]}]});
    let run = nisd("detect", &write_spec(d, "matrix.json", &spec), &[]);
    assert_eq!(run.code, 4, "{}", run.report);
    // missing matrix file is an input error
    let spec = json!({"space": {"kind": "hardy", "budget": 2}, "operator": {"kind": "matrix", "file": "nope.json"}, "subspace": [{"monomials": [0]}]});
    assert_eq!(nisd("detect", &write_spec(d, "missing.json", &spec), &[]).code, 1);
}

#[test]
fn matrix_operator_matches_the_built_in_shift() {
    let dir = TempDir::new().unwrap();
    let n = 8;
    let entries: Vec<Vec<[f64; 2]>> =
        (0..n).map(|i| (0..n - 1).map(|j| if i == j + 1 { [1.0, 0.0] } else { [0.0, 0.0] }).collect()).collect();
    std::fs::write(dir.path().join("s.json"), json!({"rows": n, "cols": n - 1, "entries": entries}).to_string()).unwrap();
    let spec = json!({"space": {"kind": "hardy", "budget": 7}, "operator": {"kind": "matrix", "file": "s.json"}, "subspace": [{"monomials": [0, 2, 3]}]});
    let a = ok("decompose", dir.path(), &spec, &["--no-timings"]);
    let mut shift = spec.clone();
    shift["operator"] = json!({"kind": "shift"});
    shift["space"]["budget"] = json!(6);
    let b = ok("decompose", dir.path(), &shift, &["--no-timings"]);
    assert_eq!(rp(&a), rp(&b));
    assert_eq!(rp(&a), (1, 1));
    assert_eq!(a["decomposition"]["flags"]["round_trip"], true);
}

#[test]
fn reports_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let spec = json!({
        "space": {"kind": "hardy", "m": 2, "budget": 8},
        "operator": {"kind": "shift"},
        "subspace": [{"monomials": [0, 2], "component": 1}, {"coeffs": [[1, 0], [0, 0], [0, 0], [1, 1]]}]
    });
    let path = write_spec(dir.path(), "det.json", &spec);
    for command in ["detect", "decompose"] {
        let first = nisd(command, &path, &["--no-timings", "--seed", "3"]);
        let second = nisd(command, &path, &["--no-timings", "--seed", "3"]);
        assert_eq!(first.code, 0, "{}", first.report);
        assert_eq!(first.bytes, second.bytes, "{command}");
        assert!(first.report.get("timings").is_none());
        assert_eq!(first.report["seed"], 3);
        assert_eq!(first.report["problem"]["seed"], 3);
    }
    let timed = nisd("detect", &path, &[]);
    assert!(timed.report["timings"]["stages"].as_array().is_some_and(|s| !s.is_empty()));
}

#[test]
fn csv_tables_are_written() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("tables");
    let spec = json!({"space": {"kind": "hardy", "budget": 6}, "operator": {"kind": "shift"}, "subspace": [{"monomials": [0, 1]}]});
    let path = write_spec(dir.path(), "csv.json", &spec);
    let run = nisd("decompose", &path, &["--csv", csv.to_str().unwrap()]);
    assert_eq!(run.code, 0);
    let c0 = std::fs::read_to_string(csv.join("c_0.csv")).unwrap();
    let mut lines = c0.lines();
    assert_eq!(lines.next(), Some("k,re_0,im_0"));
    let table = run.report["decomposition"]["entries"][0]["c"].as_array().unwrap().len();
    assert_eq!(lines.count(), table);
    for name in ["k.csv", "k0_0.csv", "k1_1.csv", "b_1.csv"] {
        assert!(csv.join(name).exists(), "{name}");
    }
}

#[test]
fn defect_hints_are_projected_and_may_be_larger_than_needed() {
    let dir = TempDir::new().unwrap();
    let spec = json!({
        "space": {"kind": "hardy", "m": 2, "budget": 8},
        "operator": {"kind": "shift"},
        "subspace": [{"monomials": [0, 2], "component": 1}, {"coeffs": [[1, 0], [0, 0], [0, 0], [1, 1]]}],
        "defect_hint": [{"monomials": [1], "component": 1}, {"monomials": [5], "component": 0}]
    });
    let report = ok("decompose", dir.path(), &spec, &["--no-timings"]);
    assert_eq!(rp(&report), (2, 1));
    assert_eq!(report["detection"]["defect_hint"]["dimension"], 2);
    assert_eq!(report["detection"]["defect_hint"]["nearly_invariant"], true);
    let dec = &report["decomposition"];
    assert_eq!(dec["p"], 2);
    for flag in ["isometry", "invariance", "round_trip", "bessel"] {
        assert_eq!(dec["flags"][flag], true, "{flag}");
    }
}
