//! End-to-end tests of the `geomech` binary: exit codes, derive output,
//! trajectory CSV, residual grids and the JSON check report.

use std::path::Path;
use std::process::{Command, Output};

fn geomech(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geomech"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, content: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, content).unwrap();
    path.to_string_lossy().into_owned()
}

const HO_FILE: &str = r#"
[model]
name = ho
kind = mechanics

[coordinates]
fiber = [q]

[lagrangian]
expr = "0.5*(v_q^2 - q^2)"
"#;

const SINGULAR_FILE: &str = r#"
[model]
name = singular
kind = mechanics

[coordinates]
fiber = [q1, q2]

[lagrangian]
expr = "0.5*(v_q1 - v_q2)^2"
"#;

const SCALAR_FILE: &str = r#"
[model]
name = scalar2
kind = field

[coordinates]
base = [x1, x2]
fiber = [u]

[lagrangian]
expr = "0.5*(u_d1^2 + u_d2^2)"

[hamiltonian]
expr = "0.5*(p1_u^2 + p2_u^2)"

[metric]
diag = [1, 1]
"#;

#[test]
fn derive_prints_ho_equations() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "ho.toml", HO_FILE);
    let out = geomech(&["derive", &file], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("p_q - v_q = 0"));
    assert!(text.contains("pdot_q + q = 0"));
    assert!(text.contains("qddot + q = 0"));
    assert!(text.contains("p_q = v_q"));
}

#[test]
fn derive_latex_format() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "ho.toml", HO_FILE);
    let out = geomech(&["derive", &file, "--format", "latex"], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("p_{q}"));
}

#[test]
fn derive_scalar_field_prints_laplace() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "scalar.toml", SCALAR_FILE);
    let out = geomech(&["derive", &file], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("u_d11 + u_d22 = 0"));
    assert!(text.contains("p1_u_d1 + p2_u_d2 = 0"));
}

#[test]
fn derive_rejects_malformed_file_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let broken = HO_FILE.replace("expr = \"0.5*(v_q^2 - q^2)\"", "expr = \"0.5*(v_q^2 -\"");
    let file = write(dir.path(), "broken.toml", &broken);
    let out = geomech(&["derive", &file], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let text = String::from_utf8(out.stderr).unwrap();
    assert!(text.contains("line 10"), "stderr: {text}");
}

#[test]
fn integrate_ho_returns_near_start_and_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "ho.toml", HO_FILE);
    let out_path = dir.path().join("traj.csv");
    // h small enough that the one-period state error sits below 1e-5.
    let out = geomech(
        &[
            "integrate",
            &file,
            "--z0",
            "1,0",
            "--t1",
            "6.283185307179586",
            "--h",
            "0.002",
            "--out",
            out_path.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("energy drift"));
    let csv = std::fs::read_to_string(&out_path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,q,p_q");
    let last = lines.last().unwrap();
    let cols: Vec<f64> = last.split(',').map(|v| v.parse().unwrap()).collect();
    assert!((cols[1] - 1.0).abs() < 1e-5, "q column: {}", cols[1]);
    assert!(cols[2].abs() < 1e-5, "p column: {}", cols[2]);
}

#[test]
fn integrate_free_particle_linear_column() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(
        dir.path(),
        "free.toml",
        &HO_FILE
            .replace("0.5*(v_q^2 - q^2)", "0.5*v_q^2")
            .replace("name = ho", "name = free"),
    );
    let out_path = dir.path().join("traj.csv");
    let out = geomech(
        &[
            "integrate",
            &file,
            "--z0",
            "0,0.5",
            "--t1",
            "1.0",
            "--h",
            "0.1",
            "--out",
            out_path.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let csv = std::fs::read_to_string(&out_path).unwrap();
    for line in csv.lines().skip(1) {
        let cols: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        assert!((cols[1] - 0.5 * cols[0]).abs() < 1e-12);
        assert!((cols[2] - 0.5).abs() < 1e-12);
    }
}

#[test]
fn integrate_rejects_inconsistent_singular_data() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "singular.toml", SINGULAR_FILE);
    let out = geomech(
        &["integrate", &file, "--z0", "0,0,0.3,0.2", "--t1", "1.0"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3));
    let text = String::from_utf8(out.stderr).unwrap();
    assert!(text.contains("inconsistent initial data"));
}

#[test]
fn hamiltonize_reports() {
    let dir = tempfile::tempdir().unwrap();
    let ho = write(dir.path(), "ho.toml", HO_FILE);
    let out = geomech(&["hamiltonize", &ho], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("H = 0.5*p_q^2 + 0.5*q^2"));

    let singular = write(dir.path(), "singular.toml", SINGULAR_FILE);
    let out = geomech(&["hamiltonize", &singular], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("no single Hamiltonian"));
    assert!(text.contains("generating family"));
}

fn scalar_data(nodes: usize, f: impl Fn(f64, f64) -> f64) -> String {
    let h = 2.0 / (nodes - 1) as f64;
    let mut out = format!(
        "m,2\nk,1\ndims,{nodes},{nodes}\norigin,-1,-1\nspacing,{h},{h}\nfields,u\n"
    );
    for i in 0..nodes {
        for j in 0..nodes {
            let x = -1.0 + i as f64 * h;
            let y = -1.0 + j as f64 * h;
            out.push_str(&format!("{}\n", f(x, y)));
        }
    }
    out
}

#[test]
fn residual_harmonic_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "scalar.toml", SCALAR_FILE);
    let data = write(dir.path(), "phi.csv", &scalar_data(17, |x, y| x * x - y * y));
    let nodes_out = dir.path().join("residual.csv");
    let out = geomech(
        &[
            "residual",
            &model,
            "--field-data",
            &data,
            "--which",
            "el",
            "--out",
            nodes_out.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let max: f64 = text
        .split("max residual ")
        .nth(1)
        .unwrap()
        .split_whitespace()
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!(max <= 1e-10, "max residual {max}");
    let csv = std::fs::read_to_string(&nodes_out).unwrap();
    assert!(csv.starts_with("node,residual\n"));
    assert_eq!(csv.lines().count(), 1 + 15 * 15);
}

#[test]
fn residual_detects_non_harmonic() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "scalar.toml", SCALAR_FILE);
    let data = write(dir.path(), "phi.csv", &scalar_data(17, |x, _| x * x));
    let out = geomech(&["residual", &model, "--field-data", &data], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("2.0000"), "stdout: {text}");
}

#[test]
fn residual_shape_mismatch_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "scalar.toml", SCALAR_FILE);
    let bad = "m,3\nk,1\ndims,3,3,3\norigin,0,0,0\nspacing,1,1,1\nfields,u\n";
    let data = write(dir.path(), "bad.csv", bad);
    let out = geomech(&["residual", &model, "--field-data", &data], dir.path());
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn check_bundles_suite_passes_and_writes_json() {
    let dir = tempfile::tempdir().unwrap();
    let json_path = dir.path().join("report.json");
    let out = geomech(
        &[
            "check",
            "--suite",
            "bundles",
            "--trials",
            "25",
            "--seed",
            "7",
            "--json",
            json_path.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("kappa_involution: PASS"));
    assert!(text.contains("all checks passed"));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["passed"], true);
    assert_eq!(doc["seed"], 7);
    assert!(doc["suites"].as_array().unwrap().len() == 1);
}

#[test]
fn check_theorem1_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = geomech(
        &[
            "check",
            "--suite",
            "theorem1",
            "--trials",
            "30",
            "--dimV",
            "5",
            "--dimW",
            "2",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("complement_independence: PASS"));
    assert!(text.contains("symplectic_pullback: PASS"));
    assert!(text.contains("symplectic_pullback_at_configured_dims: PASS"));
}

#[test]
fn check_rejects_unknown_suite() {
    let dir = tempfile::tempdir().unwrap();
    let out = geomech(&["check", "--suite", "bogus"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}
