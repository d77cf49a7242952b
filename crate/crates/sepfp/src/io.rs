//! Input parsing and deterministic output writing.
//!
//! Parsers accept untrusted bytes and must never panic; they are the fuzz
//! entry points. Writers produce byte-stable JSON and CSV: object keys in
//! fixed order and every float serialized with 17 significant digits, so
//! repeated runs with the same inputs are byte-identical and values
//! round-trip exactly.

use crate::algebra3::{Mat3, Vec3};
use crate::charts::{Chart, ChartId, ChartParams};
use crate::drift::{admissible_charts, Classification, DriftError, DriftSpec};
use crate::rsep::{CurlReport, DriftField, PolyField, PolyTerm};
use crate::separation::ResidualReport;
use crate::stochastic::CompareReport;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("malformed JSON: {0}")]
    Json(String),
    #[error("invalid input: {0}")]
    Validation(String),
    #[error(transparent)]
    Drift(#[from] DriftError),
}

/// Formats a float with 17 significant digits; parses back bit-exactly.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

// ---------------------------------------------------------------------------
// Parsing

#[derive(Serialize, Deserialize)]
struct DriftSpecJson {
    #[serde(rename = "M")]
    m: [[f64; 3]; 3],
    v: [f64; 3],
}

/// Parses the drift-spec schema `{"M": [[..],[..],[..]], "v": [..]}`.
pub fn parse_drift_spec(bytes: &[u8]) -> Result<DriftSpec, IoError> {
    let raw: DriftSpecJson =
        serde_json::from_slice(bytes).map_err(|e| IoError::Json(e.to_string()))?;
    let spec = DriftSpec::new(Mat3(raw.m), Vec3(raw.v))?;
    Ok(spec)
}

#[derive(Deserialize)]
struct PolyTermJson {
    coef: f64,
    powers: [u8; 3],
}

#[derive(Deserialize)]
struct PolyFieldJson {
    #[serde(rename = "B1")]
    b1: Vec<PolyTermJson>,
    #[serde(rename = "B2")]
    b2: Vec<PolyTermJson>,
    #[serde(rename = "B3")]
    b3: Vec<PolyTermJson>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum FieldJson {
    Linear(DriftSpecJson),
    Polynomial { polynomial: PolyFieldJson },
}

/// Parses a drift field: either the linear drift-spec schema or
/// `{"polynomial": {"B1": [{"coef": c, "powers": [i, j, k]}, ..], ..}}`.
pub fn parse_field(bytes: &[u8]) -> Result<DriftField, IoError> {
    let raw: FieldJson = serde_json::from_slice(bytes).map_err(|e| IoError::Json(e.to_string()))?;
    match raw {
        FieldJson::Linear(l) => Ok(DriftField::Linear(DriftSpec::new(Mat3(l.m), Vec3(l.v))?)),
        FieldJson::Polynomial { polynomial } => {
            let convert = |terms: Vec<PolyTermJson>| -> Result<Vec<PolyTerm>, IoError> {
                terms
                    .into_iter()
                    .map(|t| {
                        if !t.coef.is_finite() {
                            return Err(IoError::Validation(
                                "polynomial coefficient not finite".into(),
                            ));
                        }
                        if t.powers.iter().any(|&p| p > 30) {
                            return Err(IoError::Validation(format!(
                                "monomial power {} too large (max 30)",
                                t.powers.iter().max().unwrap()
                            )));
                        }
                        Ok(PolyTerm {
                            coef: t.coef,
                            powers: t.powers,
                        })
                    })
                    .collect()
            };
            Ok(DriftField::Polynomial(PolyField {
                components: [
                    convert(polynomial.b1)?,
                    convert(polynomial.b2)?,
                    convert(polynomial.b3)?,
                ],
            }))
        }
    }
}

/// Everything needed to rebuild a separated solution and its verification
/// points: written by the solve command, consumed by verify. The
/// fingerprints record the solution values at the sample points, so verify
/// detects parameters tampered after the fact.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SolutionManifest {
    pub version: String,
    pub chart: String,
    pub chart_a: f64,
    pub chart_k: f64,
    pub drift_m: [[f64; 3]; 3],
    pub drift_v: [f64; 3],
    pub case: String,
    pub classify_tol: f64,
    pub lambda: [f64; 3],
    pub scales: [f64; 3],
    pub intervals: [[f64; 2]; 3],
    pub anchors: [f64; 3],
    pub ics: [[f64; 2]; 3],
    pub offset_start: [f64; 3],
    pub dense_tol: f64,
    pub seed: u64,
    pub n_points: usize,
    pub time_range: [f64; 2],
    pub margin: f64,
    pub residual_h: f64,
    pub residual_threshold: f64,
    #[serde(default)]
    pub fingerprints: Vec<Fingerprint>,
}

/// Solution value at one sample point.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Fingerprint {
    pub t: f64,
    pub x: [f64; 3],
    pub u: f64,
}

pub fn parse_manifest(bytes: &[u8]) -> Result<SolutionManifest, IoError> {
    let manifest: SolutionManifest =
        serde_json::from_slice(bytes).map_err(|e| IoError::Json(e.to_string()))?;
    let all_finite = manifest
        .lambda
        .iter()
        .chain(manifest.scales.iter())
        .chain(manifest.anchors.iter())
        .chain(manifest.drift_v.iter())
        .chain(manifest.offset_start.iter())
        .chain(manifest.drift_m.iter().flatten())
        .chain(manifest.intervals.iter().flatten())
        .chain(manifest.ics.iter().flatten())
        .chain(manifest.time_range.iter())
        .all(|x| x.is_finite());
    let finite_fingerprints = manifest
        .fingerprints
        .iter()
        .all(|f| f.t.is_finite() && f.u.is_finite() && f.x.iter().all(|x| x.is_finite()));
    if !all_finite
        || !finite_fingerprints
        || !manifest.chart_a.is_finite()
        || !manifest.chart_k.is_finite()
        || !manifest.dense_tol.is_finite()
        || !(manifest.classify_tol > 0.0)
        || !manifest.margin.is_finite()
        || !manifest.residual_h.is_finite()
        || !manifest.residual_threshold.is_finite()
    {
        return Err(IoError::Validation(
            "manifest contains non-finite values".into(),
        ));
    }
    if ChartId::parse(&manifest.chart).is_none() {
        return Err(IoError::Validation(format!(
            "unknown chart '{}'",
            manifest.chart
        )));
    }
    Ok(manifest)
}

/// Parses a comma-separated list of floats (CLI `--lambda`, `--tau`, ...).
pub fn parse_f64_list(s: &str) -> Result<Vec<f64>, IoError> {
    s.split(',')
        .map(|part| {
            let trimmed = part.trim();
            trimmed
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| IoError::Validation(format!("bad number '{trimmed}'")))
        })
        .collect()
}

/// Parses exactly three comma-separated spectral parameters.
pub fn parse_lambda(s: &str) -> Result<[f64; 3], IoError> {
    let v = parse_f64_list(s)?;
    let arr: [f64; 3] = v
        .try_into()
        .map_err(|_| IoError::Validation("expected three comma-separated values".into()))?;
    Ok(arr)
}

// ---------------------------------------------------------------------------
// Deterministic JSON writing

/// JSON document with insertion-ordered keys and fixed float formatting.
#[derive(Debug, Clone)]
pub enum Json {
    Null,
    Bool(bool),
    Num(f64),
    UInt(u64),
    Str(String),
    Arr(Vec<Json>),
    Obj(Vec<(&'static str, Json)>),
}

impl Json {
    pub fn render(&self) -> String {
        let mut out = String::new();
        self.write(&mut out, 0);
        out.push('\n');
        out
    }

    fn write(&self, out: &mut String, indent: usize) {
        match self {
            Json::Null => out.push_str("null"),
            Json::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            Json::Num(x) => out.push_str(&format_f64(*x)),
            Json::UInt(u) => out.push_str(&u.to_string()),
            Json::Str(s) => {
                out.push('"');
                for ch in s.chars() {
                    match ch {
                        '"' => out.push_str("\\\""),
                        '\\' => out.push_str("\\\\"),
                        '\n' => out.push_str("\\n"),
                        c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
                        c => out.push(c),
                    }
                }
                out.push('"');
            }
            Json::Arr(items) => {
                if items.is_empty() {
                    out.push_str("[]");
                    return;
                }
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    out.push(' ');
                    item.write(out, indent);
                }
                out.push_str(" ]");
            }
            Json::Obj(entries) => {
                if entries.is_empty() {
                    out.push_str("{}");
                    return;
                }
                out.push_str("{\n");
                let pad = "  ".repeat(indent + 1);
                for (i, (key, value)) in entries.iter().enumerate() {
                    out.push_str(&pad);
                    out.push('"');
                    out.push_str(key);
                    out.push_str("\": ");
                    value.write(out, indent + 1);
                    if i + 1 < entries.len() {
                        out.push(',');
                    }
                    out.push('\n');
                }
                out.push_str(&"  ".repeat(indent));
                out.push('}');
            }
        }
    }

    pub fn vec3(v: &Vec3) -> Json {
        Json::Arr(v.0.iter().map(|&x| Json::Num(x)).collect())
    }

    pub fn mat3(m: &Mat3) -> Json {
        Json::Arr(
            m.0.iter()
                .map(|row| Json::Arr(row.iter().map(|&x| Json::Num(x)).collect()))
                .collect(),
        )
    }
}

/// Serializes a manifest with the deterministic writer.
pub fn manifest_json(m: &SolutionManifest) -> String {
    let pair = |p: [f64; 2]| Json::Arr(vec![Json::Num(p[0]), Json::Num(p[1])]);
    Json::Obj(vec![
        ("version", Json::Str(m.version.clone())),
        ("chart", Json::Str(m.chart.clone())),
        ("chart_a", Json::Num(m.chart_a)),
        ("chart_k", Json::Num(m.chart_k)),
        ("drift_m", Json::mat3(&Mat3(m.drift_m))),
        ("drift_v", Json::vec3(&Vec3(m.drift_v))),
        ("case", Json::Str(m.case.clone())),
        ("classify_tol", Json::Num(m.classify_tol)),
        ("lambda", Json::vec3(&Vec3(m.lambda))),
        ("scales", Json::vec3(&Vec3(m.scales))),
        (
            "intervals",
            Json::Arr(m.intervals.iter().map(|&p| pair(p)).collect()),
        ),
        ("anchors", Json::vec3(&Vec3(m.anchors))),
        ("ics", Json::Arr(m.ics.iter().map(|&p| pair(p)).collect())),
        ("offset_start", Json::vec3(&Vec3(m.offset_start))),
        ("dense_tol", Json::Num(m.dense_tol)),
        ("seed", Json::UInt(m.seed)),
        ("n_points", Json::UInt(m.n_points as u64)),
        ("time_range", pair(m.time_range)),
        ("margin", Json::Num(m.margin)),
        ("residual_h", Json::Num(m.residual_h)),
        ("residual_threshold", Json::Num(m.residual_threshold)),
        (
            "fingerprints",
            Json::Arr(
                m.fingerprints
                    .iter()
                    .map(|f| {
                        Json::Obj(vec![
                            ("t", Json::Num(f.t)),
                            ("x", Json::vec3(&Vec3(f.x))),
                            ("u", Json::Num(f.u)),
                        ])
                    })
                    .collect(),
            ),
        ),
    ])
    .render()
}

/// Classification report for the classify command.
pub fn classification_json(class: &Classification, spec: &DriftSpec, tol: f64) -> String {
    let charts = admissible_charts(class)
        .map(|ids| {
            Json::Arr(
                ids.iter()
                    .map(|id| Json::Str(id.name().to_string()))
                    .collect(),
            )
        })
        .unwrap_or(Json::Arr(vec![]));
    Json::Obj(vec![
        ("case", Json::Str(class.case.name().to_string())),
        ("separable", Json::Bool(class.is_separable())),
        ("tolerance", Json::Num(tol)),
        ("drift_m", Json::mat3(&spec.m)),
        ("drift_v", Json::vec3(&spec.v)),
        ("rotation", Json::mat3(&class.rotation)),
        ("alignment", Json::mat3(&class.alignment.matrix())),
        ("spin_rate", Json::Num(class.spin_rate)),
        ("spin_phase", Json::Num(class.spin_phase)),
        ("rates", Json::vec3(&class.rates)),
        ("scales", Json::vec3(&class.scales)),
        ("admissible_charts", charts),
        (
            "borderline",
            Json::Arr(
                class
                    .borderline
                    .iter()
                    .map(|s| Json::Str(s.clone()))
                    .collect(),
            ),
        ),
    ])
    .render()
}

/// Chart catalog for the `charts list` command.
pub fn charts_catalog_json(params: &ChartParams) -> String {
    let entries: Vec<Json> = ChartId::ALL
        .iter()
        .map(|&id| {
            let chart = Chart::new(id, *params);
            let mut parameters = Vec::new();
            if id.uses_focal_scale() {
                parameters.push(Json::Str("a".to_string()));
            }
            if id.uses_modulus() {
                parameters.push(Json::Str("k".to_string()));
            }
            Json::Obj(vec![
                ("index", Json::UInt(id.index() as u64)),
                ("name", Json::Str(id.name().to_string())),
                (
                    "split_class",
                    Json::Str(
                        match id.split_class() {
                            crate::charts::SplitClass::CompletelySplit => "completely-split",
                            crate::charts::SplitClass::PartiallySplit => "partially-split",
                            crate::charts::SplitClass::NonSplit => "non-split",
                        }
                        .to_string(),
                    ),
                ),
                ("parameters", Json::Arr(parameters)),
                ("ranges", Json::Str(chart.range_description())),
            ])
        })
        .collect();
    Json::Obj(vec![
        ("a", Json::Num(params.a())),
        ("k", Json::Num(params.modulus().k())),
        ("charts", Json::Arr(entries)),
    ])
    .render()
}

/// Chart catalog as CSV.
pub fn charts_catalog_csv(params: &ChartParams) -> String {
    let mut out = String::from("index,name,split_class,parameters,ranges\n");
    for &id in &ChartId::ALL {
        let chart = Chart::new(id, *params);
        let mut parameters = Vec::new();
        if id.uses_focal_scale() {
            parameters.push("a");
        }
        if id.uses_modulus() {
            parameters.push("k");
        }
        out.push_str(&format!(
            "{},{},{},{},\"{}\"\n",
            id.index(),
            id.name(),
            match id.split_class() {
                crate::charts::SplitClass::CompletelySplit => "completely-split",
                crate::charts::SplitClass::PartiallySplit => "partially-split",
                crate::charts::SplitClass::NonSplit => "non-split",
            },
            parameters.join(";"),
            chart.range_description(),
        ));
    }
    out
}

/// Sampled-solution CSV with the fixed column order.
pub fn solution_csv(report: &ResidualReport) -> String {
    let mut out = String::from("t,x1,x2,x3,omega1,omega2,omega3,u,residual\n");
    for p in &report.points {
        let cols = [
            p.t,
            p.x[0],
            p.x[1],
            p.x[2],
            p.omega.0[0],
            p.omega.0[1],
            p.omega.0[2],
            p.u,
            p.residual,
        ];
        let row: Vec<String> = cols.iter().map(|&x| format_f64(x)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Residual summary (written next to the CSV and by the verify command).
pub fn residual_report_json(report: &ResidualReport, pass: bool) -> String {
    residual_report_fields(report, pass, None).render()
}

/// Residual summary plus the fingerprint-reproduction count from verify.
pub fn verify_report_json(
    report: &ResidualReport,
    pass: bool,
    fingerprint_mismatches: usize,
) -> String {
    residual_report_fields(report, pass, Some(fingerprint_mismatches)).render()
}

fn residual_report_fields(
    report: &ResidualReport,
    pass: bool,
    fingerprint_mismatches: Option<usize>,
) -> Json {
    let mut fields = vec![
        ("h", Json::Num(report.h)),
        ("threshold", Json::Num(report.threshold)),
        ("n_points", Json::UInt(report.points.len() as u64)),
        ("normalizer", Json::Num(report.normalizer)),
        ("max_abs", Json::Num(report.max_abs)),
        ("mean_abs", Json::Num(report.mean_abs)),
        ("normalized_max", Json::Num(report.normalized_max)),
        ("normalized_mean", Json::Num(report.normalized_mean)),
    ];
    if let Some(m) = fingerprint_mismatches {
        fields.push(("fingerprint_mismatches", Json::UInt(m as u64)));
    }
    fields.push(("pass", Json::Bool(pass)));
    Json::Obj(fields)
}

fn compare_json(report: &CompareReport) -> Json {
    Json::Obj(vec![
        ("n", Json::UInt(report.n as u64)),
        (
            "z_mean",
            Json::Arr(report.mean_z.iter().map(|&z| Json::Num(z)).collect()),
        ),
        (
            "z_cov",
            Json::Arr(report.cov_z.iter().map(|&z| Json::Num(z)).collect()),
        ),
        ("max_abs_z", Json::Num(report.max_abs_z)),
        ("pass", Json::Bool(report.pass)),
    ])
}

/// One Monte Carlo checkpoint for the mc command.
pub struct McCheckpoint {
    pub tau: f64,
    pub reference_mean: Vec3,
    pub reference_cov: Mat3,
    pub euler_maruyama: CompareReport,
    pub exact: CompareReport,
}

pub fn mc_report_json(seed: u64, n: usize, dt: f64, checkpoints: &[McCheckpoint]) -> String {
    let all_pass = checkpoints
        .iter()
        .all(|c| c.euler_maruyama.pass && c.exact.pass);
    Json::Obj(vec![
        ("seed", Json::UInt(seed)),
        ("n", Json::UInt(n as u64)),
        ("dt", Json::Num(dt)),
        (
            "checkpoints",
            Json::Arr(
                checkpoints
                    .iter()
                    .map(|c| {
                        Json::Obj(vec![
                            ("tau", Json::Num(c.tau)),
                            ("mean", Json::vec3(&c.reference_mean)),
                            ("cov", Json::mat3(&c.reference_cov)),
                            ("euler_maruyama", compare_json(&c.euler_maruyama)),
                            ("exact", compare_json(&c.exact)),
                        ])
                    })
                    .collect(),
            ),
        ),
        ("pass", Json::Bool(all_pass)),
    ])
    .render()
}

pub fn curl_report_json(report: &CurlReport) -> String {
    Json::Obj(vec![
        ("n_samples", Json::UInt(report.samples.len() as u64)),
        ("mean_curl", Json::vec3(&report.mean)),
        ("max_deviation", Json::Num(report.max_deviation)),
        ("tolerance", Json::Num(report.tol)),
        ("constant_curl", Json::Bool(report.passes())),
        ("verdict", Json::Str(report.summary().to_string())),
    ])
    .render()
}
