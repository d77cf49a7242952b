//! Exit-code contract and output-shape checks for the command line:
//! 0 pass, 2 input error, 3 not separable, 4 inadmissible chart,
//! 5 verification failure.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sepfp"))
}

fn write(dir: &Path, name: &str, content: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, content).unwrap();
    path.to_str().unwrap().to_string()
}

fn code(output: &Output) -> i32 {
    output.status.code().unwrap()
}

const DIAG_SPEC: &str = r#"{"M": [[1.0,0,0],[0,2.0,0],[0,0,3.0]], "v": [0,0,0]}"#;
const ISO_SPEC: &str = r#"{"M": [[0.5,0,0],[0,0.5,0],[0,0,0.5]], "v": [0.1,0,0]}"#;
const NILPOTENT_SPEC: &str = r#"{"M": [[0,1.0,0],[0,0,1.0],[0,0,0]], "v": [0,0,0]}"#;

#[test]
fn classify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let diag = write(dir.path(), "diag.json", DIAG_SPEC);
    let out = bin().args(["classify", "--input", &diag]).output().unwrap();
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("\"case\": \"symmetric-distinct\""));

    let nil = write(dir.path(), "nil.json", NILPOTENT_SPEC);
    let out = bin().args(["classify", "--input", &nil]).output().unwrap();
    assert_eq!(code(&out), 3);

    let bad = write(dir.path(), "bad.json", "{not json");
    let out = bin().args(["classify", "--input", &bad]).output().unwrap();
    assert_eq!(code(&out), 2);
}

#[test]
fn solve_admissibility_and_residual_gate() {
    let dir = tempfile::tempdir().unwrap();
    let diag = write(dir.path(), "diag.json", DIAG_SPEC);
    let out = bin()
        .args([
            "solve",
            "--input",
            &diag,
            "--chart",
            "spherical",
            "--lambda",
            "1,0,0",
        ])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&out), 4);
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("Cartesian"), "lists admissible charts: {err}");

    let iso = write(dir.path(), "iso.json", ISO_SPEC);
    let csv = dir.path().join("sol.csv");
    let out = bin()
        .args([
            "solve",
            "--input",
            &iso,
            "--chart",
            "spherical",
            "--lambda=-0.8,0.4,-0.3",
            "--output",
            csv.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    let table = std::fs::read_to_string(&csv).unwrap();
    let mut lines = table.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,x1,x2,x3,omega1,omega2,omega3,u,residual"
    );
    let mut max_u = 0.0f64;
    for line in lines {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cols.len(), 9);
        max_u = max_u.max(cols[7].abs());
    }
    for line in table.lines().skip(1) {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert!(cols[8].abs() <= 5e-4 * max_u, "residual column: {line}");
    }
}

#[test]
fn solve_with_zero_spectral_params_is_spatially_constant() {
    let dir = tempfile::tempdir().unwrap();
    let iso = write(dir.path(), "iso.json", ISO_SPEC);
    let csv = dir.path().join("flat.csv");
    let out = bin()
        .args([
            "solve",
            "--input",
            &iso,
            "--chart",
            "cartesian",
            "--lambda",
            "0,0,0",
            "--times",
            "0.3,0.3",
            "--output",
            csv.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    let table = std::fs::read_to_string(&csv).unwrap();
    let us: Vec<f64> = table
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(7).unwrap().parse().unwrap())
        .collect();
    // Same time, zero spectral parameters: u is the time factor alone.
    for u in &us {
        assert!((u - us[0]).abs() < 1e-12);
    }
}

#[test]
fn verify_detects_tampering_and_rejects_empty_points() {
    let dir = tempfile::tempdir().unwrap();
    let iso = write(dir.path(), "iso.json", ISO_SPEC);
    let csv = dir.path().join("sol.csv");
    let out = bin()
        .args([
            "solve",
            "--input",
            &iso,
            "--chart",
            "prolate-spheroidal",
            "--lambda=-0.5,0.3,-0.2",
            "--output",
            csv.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    let manifest_path = dir.path().join("sol.manifest.json");
    let out = bin()
        .args(["verify", "--input", manifest_path.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);

    // Tamper with one spectral parameter.
    let manifest = std::fs::read_to_string(&manifest_path).unwrap();
    let tampered = manifest.replace(
        "\"lambda\": [ -5.0000000000000000e-1",
        "\"lambda\": [ -5.5000000000000000e-1",
    );
    assert_ne!(manifest, tampered);
    let tpath = write(dir.path(), "tampered.json", &tampered);
    let out = bin().args(["verify", "--input", &tpath]).output().unwrap();
    assert_eq!(code(&out), 5);

    // Empty point set is an input error.
    let emptied = regex_lite_strip_fingerprints(&manifest);
    let epath = write(dir.path(), "empty.json", &emptied);
    let out = bin().args(["verify", "--input", &epath]).output().unwrap();
    assert_eq!(code(&out), 2);

    // Version mismatch is an input error.
    let wrong_version = manifest.replace(
        &format!("\"version\": \"{}\"", env!("CARGO_PKG_VERSION")),
        "\"version\": \"0.0.0\"",
    );
    let vpath = write(dir.path(), "version.json", &wrong_version);
    let out = bin().args(["verify", "--input", &vpath]).output().unwrap();
    assert_eq!(code(&out), 2);
}

/// Drops every fingerprint entry, leaving an empty array.
fn regex_lite_strip_fingerprints(manifest: &str) -> String {
    let start = manifest.find("\"fingerprints\": [").unwrap();
    let end = manifest.rfind(']').unwrap();
    format!(
        "{}\"fingerprints\": []{}",
        &manifest[..start],
        &manifest[end + 1..]
    )
}

#[test]
fn mc_and_curl_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let iso = write(dir.path(), "iso.json", ISO_SPEC);
    let out = bin()
        .args([
            "mc", "--input", &iso, "--n", "2000", "--dt", "0.005", "--tau", "0.1,0.2",
        ])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("\"pass\": true"));

    let shear = write(
        dir.path(),
        "shear.json",
        r#"{"polynomial": {"B1": [], "B2": [], "B3": [
            {"coef": 1.0, "powers": [2,0,0]}, {"coef": 1.0, "powers": [0,2,0]}]}}"#,
    );
    let out = bin().args(["curl", "--input", &shear]).output().unwrap();
    assert_eq!(code(&out), 5);

    let constant = write(
        dir.path(),
        "const.json",
        r#"{"polynomial": {"B1": [], "B2": [], "B3": [{"coef": 3.0, "powers": [0,0,0]}]}}"#,
    );
    let out = bin().args(["curl", "--input", &constant]).output().unwrap();
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("not sufficient"));

    let out = bin()
        .args(["mc", "--input", "/nonexistent"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
}
