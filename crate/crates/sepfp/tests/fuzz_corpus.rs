//! Regression harness over the checked-in fuzz corpus: every seed runs
//! through the same code paths as the fuzz targets, so the corpus is
//! exercised by the plain test suite and parsers never panic on it.

use sepfp::algebra3::Vec3;
use std::fs;
use std::path::PathBuf;

fn corpus(target: &str) -> Vec<(PathBuf, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(target);
    let mut files: Vec<PathBuf> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("missing corpus dir {}: {e}", dir.display()))
        .map(|entry| entry.unwrap().path())
        .collect();
    files.sort();
    assert!(!files.is_empty(), "empty corpus for {target}");
    files
        .into_iter()
        .map(|p| {
            let bytes = fs::read(&p).unwrap();
            (p, bytes)
        })
        .collect()
}

#[test]
fn drift_spec_corpus() {
    let mut accepted = 0;
    for (path, bytes) in corpus("parse_drift_spec") {
        if let Ok(spec) = sepfp::io::parse_drift_spec(&bytes) {
            accepted += 1;
            if let Ok(class) = sepfp::drift::classify(&spec, 1e-9) {
                if class.is_separable() {
                    sepfp::drift::reconstruct(&class).unwrap();
                    sepfp::drift::admissible_charts(&class).unwrap();
                }
            }
        } else {
            let name = path.file_name().unwrap().to_string_lossy().into_owned();
            assert!(
                name.contains("short") || name.contains("overflow") || name.contains("truncated"),
                "unexpected rejection of {name}"
            );
        }
    }
    assert!(accepted >= 4, "valid seeds must parse");
}

#[test]
fn field_corpus() {
    for (_, bytes) in corpus("parse_field") {
        if let Ok(field) = sepfp::io::parse_field(&bytes) {
            for x in [Vec3::ZERO, Vec3::new(0.5, -0.5, 1.0)] {
                let _ = field.eval(x);
                let _ = sepfp::rsep::curl_at(&field, &x, 1e-4);
            }
        }
    }
}

#[test]
fn manifest_corpus() {
    let mut round_tripped = 0;
    for (_, bytes) in corpus("parse_manifest") {
        if let Ok(manifest) = sepfp::io::parse_manifest(&bytes) {
            let rendered = sepfp::io::manifest_json(&manifest);
            let back = sepfp::io::parse_manifest(rendered.as_bytes()).unwrap();
            assert_eq!(back, manifest);
            round_tripped += 1;
        }
    }
    assert!(round_tripped >= 2, "valid manifests must round-trip");
}

#[test]
fn scalar_list_corpus() {
    for (_, bytes) in corpus("parse_scalar_lists") {
        if let Ok(text) = std::str::from_utf8(&bytes) {
            let _ = sepfp::io::parse_f64_list(text);
            let _ = sepfp::io::parse_lambda(text);
            let _ = sepfp::charts::ChartId::parse(text);
        }
    }
}
