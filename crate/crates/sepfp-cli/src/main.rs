//! Command-line front end: classify drifts, list charts, build and verify
//! separated solutions, run Monte Carlo cross-validation, and test the
//! constant-curl condition.
//!
//! Exit codes: 0 pass, 2 input error, 3 not separable, 4 inadmissible
//! chart, 5 verification failure.
//!
//! All subcommands are deterministic given the same configuration and
//! seed; outputs are byte-identical across runs. Set `SEPFP_LOG` (e.g.
//! `SEPFP_LOG=debug`) for progress logging on stderr.

use clap::{Args, Parser, Subcommand};
use sepfp::algebra3::Vec3;
use sepfp::charts::{Chart, ChartId, ChartParams};
use sepfp::drift::{classify, DriftCase, DriftSpec};
use sepfp::io::{
    self, charts_catalog_csv, charts_catalog_json, classification_json, curl_report_json,
    manifest_json, mc_report_json, parse_drift_spec, parse_f64_list, parse_field, parse_lambda,
    parse_manifest, solution_csv, Fingerprint, McCheckpoint, SolutionManifest,
};
use sepfp::rsep::{check_constant_curl, ProbeBox};
use sepfp::separation::{verify_residual, SolutionBuilder, SpectralParams, RESIDUAL_THRESHOLD};
use sepfp::stochastic::{compare, moment_flow, simulate_exact, simulate_snapshots, MomentState};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_INPUT: u8 = 2;
const EXIT_NOT_SEPARABLE: u8 = 3;
const EXIT_INADMISSIBLE: u8 = 4;
const EXIT_VERIFY_FAIL: u8 = 5;

#[derive(Parser)]
#[command(
    name = "sepfp",
    about = "Separable drift-diffusion equations: classification, the \
             eleven coordinate systems, separated solutions, verification",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Chart catalog operations.
    Charts {
        #[command(subcommand)]
        action: ChartsAction,
    },
    /// Classify a drift spec against the separable families.
    Classify(ClassifyArgs),
    /// Build a separated solution and emit sampled values with residuals.
    Solve(SolveArgs),
    /// Re-verify a solution manifest from scratch.
    Verify(VerifyArgs),
    /// Monte Carlo cross-validation of the drift moments.
    Mc(McArgs),
    /// Constant-curl necessary condition for R-separability.
    Curl(CurlArgs),
}

#[derive(Subcommand)]
enum ChartsAction {
    /// Print the catalog of the eleven coordinate systems.
    List {
        /// Output format: json or csv.
        #[arg(long, default_value = "json")]
        format: String,
        /// Output path (stdout when omitted).
        #[arg(long)]
        output: Option<PathBuf>,
        /// Focal scale for charts that use it.
        #[arg(long, default_value_t = 1.0)]
        focal_a: f64,
        /// Elliptic modulus for the ellipsoidal and conical charts.
        #[arg(long, default_value_t = 0.6)]
        modulus_k: f64,
    },
}

#[derive(Args)]
struct ClassifyArgs {
    /// Drift spec JSON: {"M": [[..],[..],[..]], "v": [..]}.
    #[arg(long)]
    input: PathBuf,
    /// Classification tolerance.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    /// Drift spec JSON.
    #[arg(long)]
    input: PathBuf,
    /// Chart name or 1-based index.
    #[arg(long)]
    chart: String,
    /// Spectral parameters lambda1,lambda2,lambda3.
    #[arg(long, allow_hyphen_values = true)]
    lambda: String,
    /// Scale constants c1,c2,c3.
    #[arg(long, allow_hyphen_values = true)]
    scales: Option<String>,
    /// Classification tolerance.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Number of sample points.
    #[arg(long, default_value_t = 20)]
    points: usize,
    /// Sample time range lo,hi.
    #[arg(long, default_value = "0.0,0.5", allow_hyphen_values = true)]
    times: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    focal_a: f64,
    #[arg(long, default_value_t = 0.6)]
    modulus_k: f64,
    /// CSV output path; the manifest lands next to it.
    #[arg(long, default_value = "solution.csv")]
    output: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    /// Solution manifest JSON produced by solve.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct McArgs {
    /// Drift spec JSON.
    #[arg(long)]
    input: PathBuf,
    /// Snapshot pseudo-times, ascending.
    #[arg(long, default_value = "0.1,0.5,1.0")]
    tau: String,
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CurlArgs {
    /// Field JSON: drift-spec schema or polynomial components.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 64)]
    samples: usize,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Probe box lo,hi applied to every axis.
    #[arg(long, default_value = "-1.0,1.0", allow_hyphen_values = true)]
    probe_box: String,
    #[arg(long)]
    output: Option<PathBuf>,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Failure {
        Failure {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("SEPFP_LOG")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Charts { action } => charts_cmd(action),
        Command::Classify(args) => classify_cmd(args),
        Command::Solve(args) => solve_cmd(args),
        Command::Verify(args) => verify_cmd(args),
        Command::Mc(args) => mc_cmd(args),
        Command::Curl(args) => curl_cmd(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn write_output(path: &Option<PathBuf>, content: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, content)
            .map_err(|e| Failure::input(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn read_input(path: &Path) -> Result<Vec<u8>, Failure> {
    std::fs::read(path).map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))
}

fn chart_params(a: f64, k: f64) -> Result<ChartParams, Failure> {
    ChartParams::new(a, k).map_err(|e| Failure::input(e.to_string()))
}

fn charts_cmd(action: ChartsAction) -> Result<(), Failure> {
    match action {
        ChartsAction::List {
            format,
            output,
            focal_a,
            modulus_k,
        } => {
            let params = chart_params(focal_a, modulus_k)?;
            let content = match format.as_str() {
                "json" => charts_catalog_json(&params),
                "csv" => charts_catalog_csv(&params),
                other => return Err(Failure::input(format!("unknown format '{other}'"))),
            };
            write_output(&output, &content)
        }
    }
}

fn classify_cmd(args: ClassifyArgs) -> Result<(), Failure> {
    let bytes = read_input(&args.input)?;
    let spec = parse_drift_spec(&bytes).map_err(|e| Failure::input(e.to_string()))?;
    let class = classify(&spec, args.tol).map_err(|e| Failure::input(e.to_string()))?;
    log::info!("classified drift as {}", class.case.name());
    let report = classification_json(&class, &spec, args.tol);
    write_output(&args.output, &report)?;
    if class.case == DriftCase::NotSeparable {
        return Err(Failure {
            code: EXIT_NOT_SEPARABLE,
            message: "drift is not separable".into(),
        });
    }
    Ok(())
}

fn manifest_path_for(csv: &Path) -> PathBuf {
    let mut name = csv
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "solution".into());
    name.push_str(".manifest.json");
    csv.with_file_name(name)
}

fn solve_cmd(args: SolveArgs) -> Result<(), Failure> {
    let bytes = read_input(&args.input)?;
    let spec = parse_drift_spec(&bytes).map_err(|e| Failure::input(e.to_string()))?;
    let lambda = parse_lambda(&args.lambda).map_err(|e| Failure::input(e.to_string()))?;
    let times = parse_f64_list(&args.times).map_err(|e| Failure::input(e.to_string()))?;
    if times.len() != 2 || times[1] < times[0] {
        return Err(Failure::input("--times expects lo,hi with lo <= hi"));
    }
    if args.points == 0 {
        return Err(Failure::input("--points must be positive"));
    }
    let chart_id = ChartId::parse(&args.chart)
        .ok_or_else(|| Failure::input(format!("unknown chart '{}'", args.chart)))?;
    let params = chart_params(args.focal_a, args.modulus_k)?;

    let mut class = classify(&spec, args.tol).map_err(|e| Failure::input(e.to_string()))?;
    if class.case == DriftCase::NotSeparable {
        return Err(Failure {
            code: EXIT_NOT_SEPARABLE,
            message: "drift is not separable; no charts available".into(),
        });
    }
    if let Some(scales) = &args.scales {
        let c = parse_lambda(scales).map_err(|e| Failure::input(e.to_string()))?;
        class = class
            .with_scales(Vec3(c))
            .map_err(|e| Failure::input(e.to_string()))?;
    }
    let solution = SolutionBuilder::new(Chart::new(chart_id, params), &class, &spec)
        .lambda(SpectralParams(lambda))
        .build()
        .map_err(|e| match e {
            sepfp::separation::SeparationError::InadmissibleChart { .. } => Failure {
                code: EXIT_INADMISSIBLE,
                message: e.to_string(),
            },
            other => Failure::input(other.to_string()),
        })?;

    let margin = 0.05;
    let points = solution
        .sample_points(args.points, (times[0], times[1]), margin, args.seed)
        .map_err(|e| Failure::input(e.to_string()))?;
    let h = 1e-3;
    let report =
        verify_residual(&solution, &spec, &points, h).map_err(|e| Failure::input(e.to_string()))?;
    log::info!(
        "solved {} points, normalized max residual {:.3e}",
        report.points.len(),
        report.normalized_max
    );

    let manifest = SolutionManifest {
        version: sepfp::VERSION.to_string(),
        chart: chart_id.name().to_string(),
        chart_a: params.a(),
        chart_k: params.modulus().k(),
        drift_m: spec.m.0,
        drift_v: spec.v.0,
        case: class.case.name().to_string(),
        classify_tol: args.tol,
        lambda,
        scales: class.scales.0,
        intervals: [
            [
                solution.tables()[0].interval().0,
                solution.tables()[0].interval().1,
            ],
            [
                solution.tables()[1].interval().0,
                solution.tables()[1].interval().1,
            ],
            [
                solution.tables()[2].interval().0,
                solution.tables()[2].interval().1,
            ],
        ],
        anchors: [
            solution.tables()[0].anchor(),
            solution.tables()[1].anchor(),
            solution.tables()[2].anchor(),
        ],
        ics: [
            [
                solution.tables()[0].initial_condition().0,
                solution.tables()[0].initial_condition().1,
            ],
            [
                solution.tables()[1].initial_condition().0,
                solution.tables()[1].initial_condition().1,
            ],
            [
                solution.tables()[2].initial_condition().0,
                solution.tables()[2].initial_condition().1,
            ],
        ],
        offset_start: solution.frame().offset_start().0,
        dense_tol: 1e-11,
        seed: args.seed,
        n_points: args.points,
        time_range: [times[0], times[1]],
        margin,
        residual_h: h,
        residual_threshold: RESIDUAL_THRESHOLD,
        fingerprints: report
            .points
            .iter()
            .map(|p| Fingerprint {
                t: p.t,
                x: p.x.0,
                u: p.u,
            })
            .collect(),
    };
    std::fs::write(&args.output, solution_csv(&report))
        .map_err(|e| Failure::input(format!("cannot write {}: {e}", args.output.display())))?;
    let mpath = manifest_path_for(&args.output);
    std::fs::write(&mpath, manifest_json(&manifest))
        .map_err(|e| Failure::input(format!("cannot write {}: {e}", mpath.display())))?;
    println!(
        "wrote {} and {} (normalized max residual {})",
        args.output.display(),
        mpath.display(),
        io::format_f64(report.normalized_max),
    );
    if !report.passes() {
        return Err(Failure {
            code: EXIT_VERIFY_FAIL,
            message: format!(
                "residual gate failed: {} > {}",
                io::format_f64(report.normalized_max),
                io::format_f64(report.threshold)
            ),
        });
    }
    Ok(())
}

fn verify_cmd(args: VerifyArgs) -> Result<(), Failure> {
    let bytes = read_input(&args.input)?;
    let manifest = parse_manifest(&bytes).map_err(|e| Failure::input(e.to_string()))?;
    if manifest.version != sepfp::VERSION {
        return Err(Failure::input(format!(
            "manifest version {} does not match library version {}",
            manifest.version,
            sepfp::VERSION
        )));
    }
    if manifest.n_points == 0 || manifest.fingerprints.is_empty() {
        return Err(Failure::input("manifest has an empty point set"));
    }
    let chart_id = ChartId::parse(&manifest.chart)
        .ok_or_else(|| Failure::input(format!("unknown chart '{}'", manifest.chart)))?;
    let params = chart_params(manifest.chart_a, manifest.chart_k)?;
    let spec = DriftSpec::new(
        sepfp::algebra3::Mat3(manifest.drift_m),
        Vec3(manifest.drift_v),
    )
    .map_err(|e| Failure::input(e.to_string()))?;
    let class =
        classify(&spec, manifest.classify_tol).map_err(|e| Failure::input(e.to_string()))?;
    if class.case == DriftCase::NotSeparable {
        return Err(Failure {
            code: EXIT_NOT_SEPARABLE,
            message: "manifest drift is not separable".into(),
        });
    }
    let class = class
        .with_scales(Vec3(manifest.scales))
        .map_err(|e| Failure::input(e.to_string()))?;
    let mut builder = SolutionBuilder::new(Chart::new(chart_id, params), &class, &spec)
        .lambda(SpectralParams(manifest.lambda))
        .intervals([
            (manifest.intervals[0][0], manifest.intervals[0][1]),
            (manifest.intervals[1][0], manifest.intervals[1][1]),
            (manifest.intervals[2][0], manifest.intervals[2][1]),
        ])
        .tolerance(manifest.dense_tol)
        .frame_offset(Vec3(manifest.offset_start));
    for axis in 0..3 {
        builder = builder.initial_condition(
            axis,
            manifest.anchors[axis],
            (manifest.ics[axis][0], manifest.ics[axis][1]),
        );
    }
    let solution = builder.build().map_err(|e| match e {
        sepfp::separation::SeparationError::InadmissibleChart { .. } => Failure {
            code: EXIT_INADMISSIBLE,
            message: e.to_string(),
        },
        other => Failure::input(other.to_string()),
    })?;

    // Recompute everything at the recorded sample points.
    let points: Vec<(f64, Vec3)> = manifest
        .fingerprints
        .iter()
        .map(|f| (f.t, Vec3(f.x)))
        .collect();
    let report = verify_residual(&solution, &spec, &points, manifest.residual_h)
        .map_err(|e| Failure::input(e.to_string()))?;
    let mut fingerprint_mismatch = 0usize;
    for (f, p) in manifest.fingerprints.iter().zip(report.points.iter()) {
        if (f.u - p.u).abs() > 1e-9 * (1.0 + f.u.abs().max(p.u.abs())) {
            fingerprint_mismatch += 1;
        }
    }
    let residual_pass = report.normalized_max <= manifest.residual_threshold;
    let pass = residual_pass && fingerprint_mismatch == 0;
    let report_text = io::verify_report_json(&report, pass, fingerprint_mismatch);
    write_output(&args.output, &report_text)?;
    log::info!(
        "verify: normalized max {:.3e}, {} fingerprint mismatches",
        report.normalized_max,
        fingerprint_mismatch
    );
    if !pass {
        return Err(Failure {
            code: EXIT_VERIFY_FAIL,
            message: if residual_pass {
                format!("{fingerprint_mismatch} solution fingerprints do not reproduce")
            } else {
                format!(
                    "residual gate failed: {} > {}",
                    io::format_f64(report.normalized_max),
                    io::format_f64(manifest.residual_threshold)
                )
            },
        });
    }
    Ok(())
}

fn mc_cmd(args: McArgs) -> Result<(), Failure> {
    let bytes = read_input(&args.input)?;
    let spec = parse_drift_spec(&bytes).map_err(|e| Failure::input(e.to_string()))?;
    let taus = parse_f64_list(&args.tau).map_err(|e| Failure::input(e.to_string()))?;
    let init = MomentState::point(Vec3::ZERO);
    let ensembles = simulate_snapshots(&spec, &init, &taus, args.dt, args.n, args.seed)
        .map_err(|e| Failure::input(e.to_string()))?;
    let mut checkpoints = Vec::with_capacity(ensembles.len());
    for ens in &ensembles {
        let reference =
            moment_flow(&spec, &init, ens.tau).map_err(|e| Failure::input(e.to_string()))?;
        let em = compare(ens, &reference).map_err(|e| Failure::input(e.to_string()))?;
        let exact_ens = simulate_exact(&spec, &init, ens.tau, args.n, args.seed ^ 0x5EED)
            .map_err(|e| Failure::input(e.to_string()))?;
        let exact = compare(&exact_ens, &reference).map_err(|e| Failure::input(e.to_string()))?;
        log::info!(
            "tau {}: EM max |z| = {:.2}, exact max |z| = {:.2}",
            ens.tau,
            em.max_abs_z,
            exact.max_abs_z
        );
        checkpoints.push(McCheckpoint {
            tau: ens.tau,
            reference_mean: reference.mean,
            reference_cov: reference.cov,
            euler_maruyama: em,
            exact,
        });
    }
    let pass = checkpoints
        .iter()
        .all(|c| c.euler_maruyama.pass && c.exact.pass);
    let report = mc_report_json(args.seed, args.n, args.dt, &checkpoints);
    write_output(&args.output, &report)?;
    if !pass {
        return Err(Failure {
            code: EXIT_VERIFY_FAIL,
            message: "Monte Carlo moments disagree with the moment flow".into(),
        });
    }
    Ok(())
}

fn curl_cmd(args: CurlArgs) -> Result<(), Failure> {
    let bytes = read_input(&args.input)?;
    let field = parse_field(&bytes).map_err(|e| Failure::input(e.to_string()))?;
    let bounds = parse_f64_list(&args.probe_box).map_err(|e| Failure::input(e.to_string()))?;
    if bounds.len() != 2 || bounds[0] >= bounds[1] {
        return Err(Failure::input("--probe-box expects lo,hi with lo < hi"));
    }
    let probe = ProbeBox {
        lo: Vec3::new(bounds[0], bounds[0], bounds[0]),
        hi: Vec3::new(bounds[1], bounds[1], bounds[1]),
    };
    let report = check_constant_curl(&field, &probe, args.samples, args.seed, args.tol)
        .map_err(|e| Failure::input(e.to_string()))?;
    write_output(&args.output, &curl_report_json(&report))?;
    if !report.passes() {
        return Err(Failure {
            code: EXIT_VERIFY_FAIL,
            message: report.summary().into(),
        });
    }
    Ok(())
}
