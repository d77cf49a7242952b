//! Acceptance suite: one test per criterion, each printing a PASS/FAIL
//! line (visible with `--nocapture`) and asserting it.
//!
//! 1. Chart identities: orthogonality, Staeckel sums, harmonicity.
//! 2. Classification round-trip and rejection of non-conforming drifts.
//! 3. Moving-frame consistency with the drift matrix.
//! 4. End-to-end separability: every admissible (case, chart) pair yields
//!    solutions passing the PDE residual gate.
//! 5. Closed-form cross-checks (trig, Bessel, Legendre, time factors).
//! 6. Stochastic moment cross-validation (Euler-Maruyama and exact).
//! 7. Constant-curl necessary condition.
//! 8. CLI byte determinism.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sepfp::algebra3::{sym_antisym_split, Mat3, Vec3};
use sepfp::charts::{Chart, ChartId, ChartParams, SplitClass};
use sepfp::drift::{
    classify, sample_case_drift, sample_nonconforming, DriftCase, DriftSpec, MovingFrame,
};
use sepfp::rsep::{check_constant_curl, curl_at, DriftField, PolyField, PolyTerm, ProbeBox};
use sepfp::separation::{integrate_phi, verify_residual, Phi0, SolutionBuilder, SpectralParams};
use sepfp::specfun::{bessel_j, legendre_p};
use sepfp::stochastic::{
    compare, moment_flow, simulate_exact, simulate_snapshots, MomentState, Z_BOUND,
};
use std::process::Command;
use std::time::Instant;

const ALL_CASES: [DriftCase; 5] = [
    DriftCase::SymmetricDistinct,
    DriftCase::SymmetricDoubled,
    DriftCase::Isotropic,
    DriftCase::RotatingIsotropic,
    DriftCase::RotatingAxial,
];

fn report(criterion: &str, pass: bool, detail: &str) {
    println!(
        "criterion {criterion}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} failed: {detail}");
}

#[test]
fn criterion_1_chart_identity_suite() {
    let start = Instant::now();
    let mut worst_orth = 0.0f64;
    let mut worst_stackel = 0.0f64;
    let mut worst_laplace = 0.0f64;
    for &id in &ChartId::ALL {
        let chart = Chart::new(id, ChartParams::default());
        let pattern: [f64; 3] = match id.split_class() {
            SplitClass::CompletelySplit => [1.0, 1.0, 1.0],
            SplitClass::PartiallySplit => [1.0, 0.0, 1.0],
            SplitClass::NonSplit => [1.0, 0.0, 0.0],
        };
        for w in chart.sample_domain(100, 20260810) {
            worst_orth = worst_orth.max(chart.orthogonality_defect(&w).unwrap());
            let f = chart.stackel_matrix(&w).unwrap();
            let g = chart.grad_norms(&w).unwrap();
            for col in 0..3 {
                let sum: f64 = (0..3).map(|i| f[i][col] * g[i]).sum();
                worst_stackel = worst_stackel.max((sum - pattern[col]).abs());
            }
            worst_laplace = worst_laplace.max(chart.laplacian_defect(&w).unwrap().max_abs());
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass =
        worst_orth <= 1e-9 && worst_stackel <= 1e-8 && worst_laplace <= 1e-4 && elapsed <= 60.0;
    report(
        "1 (chart identity suite)",
        pass,
        &format!(
            "orthogonality {worst_orth:.2e} <= 1e-9, staeckel {worst_stackel:.2e} <= 1e-8, \
             laplacian {worst_laplace:.2e} <= 1e-4, runtime {elapsed:.1}s <= 60s"
        ),
    );
}

#[test]
fn criterion_2_classification_round_trip() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst_residual = 0.0f64;
    let mut case_mismatches = 0usize;
    for case in ALL_CASES {
        for _ in 0..500 {
            let m = sample_case_drift(case, &mut rng).unwrap();
            let spec = DriftSpec::new(m, Vec3::ZERO).unwrap();
            let class = classify(&spec, 1e-9).unwrap();
            if class.case != case {
                case_mismatches += 1;
                continue;
            }
            let recon = sepfp::drift::reconstruct(&class).unwrap();
            let rel = (recon - m).max_abs() / (1.0 + m.max_abs());
            worst_residual = worst_residual.max(rel);
        }
    }
    let mut false_accepts = 0usize;
    for _ in 0..100 {
        let m = sample_nonconforming(&mut rng);
        let class = classify(&DriftSpec::new(m, Vec3::ZERO).unwrap(), 1e-9).unwrap();
        if class.case != DriftCase::NotSeparable {
            false_accepts += 1;
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass =
        case_mismatches == 0 && false_accepts == 0 && worst_residual <= 1e-9 && elapsed <= 10.0;
    report(
        "2 (classification round-trip)",
        pass,
        &format!(
            "2500 draws: {case_mismatches} case mismatches, worst residual \
             {worst_residual:.2e} <= 1e-9; 100 non-conforming: {false_accepts} accepted; \
             runtime {elapsed:.1}s <= 10s"
        ),
    );
}

#[test]
fn criterion_3_frame_consistency() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_identity = 0.0f64;
    let mut worst_split = 0.0f64;
    let mut drifts = Vec::new();
    for case in ALL_CASES {
        drifts.push(sample_case_drift(case, &mut rng).unwrap());
        drifts.push(sample_case_drift(case, &mut rng).unwrap());
    }
    for m in drifts {
        let spec = DriftSpec::new(m, Vec3::new(0.1, -0.2, 0.05)).unwrap();
        let class = classify(&spec, 1e-9).unwrap();
        let frame = MovingFrame::new(&class, &spec, None).unwrap();
        let h = 1e-5;
        let scale = 1.0 + m.max_abs();
        for i in 0..10 {
            let t = -0.35 + 0.15 * i as f64;
            let fm = frame.at(t - h);
            let f0 = frame.at(t);
            let fp = frame.at(t + h);
            let spin = (fp.rotation - fm.rotation).scale(1.0 / (2.0 * h)) * f0.rotation.transpose();
            let mut stretch_diag = Mat3::ZERO;
            for j in 0..3 {
                stretch_diag[j][j] = (fp.scaling[j] - fm.scaling[j]) / (2.0 * h) / f0.scaling[j];
            }
            let stretch = f0.rotation * stretch_diag * f0.rotation.transpose();
            worst_identity = worst_identity.max(((spin + stretch) - m).max_abs() / scale);
            let (spin_sym, _) = sym_antisym_split(&spin);
            let (_, stretch_anti) = sym_antisym_split(&stretch);
            worst_split = worst_split
                .max(spin_sym.max_abs() / scale)
                .max(stretch_anti.max_abs() / scale);
        }
    }
    let pass = worst_identity <= 1e-6 && worst_split <= 1e-8;
    report(
        "3 (frame consistency)",
        pass,
        &format!(
            "identity residual {worst_identity:.2e} <= 1e-6, \
             split residual {worst_split:.2e} <= 1e-8"
        ),
    );
}

#[test]
fn criterion_4_end_to_end_separability() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let params = ChartParams::default();
    let mut worst = 0.0f64;
    let mut pairs = 0usize;
    let mut solutions = 0usize;
    for case in ALL_CASES {
        let m = sample_case_drift(case, &mut rng).unwrap();
        let v = Vec3::new(
            rng.random_range(-0.3..0.3),
            rng.random_range(-0.3..0.3),
            rng.random_range(-0.3..0.3),
        );
        let spec = DriftSpec::new(m, v).unwrap();
        let class = classify(&spec, 1e-9).unwrap();
        assert_eq!(class.case, case);
        let charts = sepfp::drift::admissible_charts(&class).unwrap();
        let expected = match case {
            DriftCase::SymmetricDistinct => 1,
            DriftCase::SymmetricDoubled | DriftCase::RotatingAxial => 4,
            _ => 11,
        };
        assert_eq!(charts.len(), expected, "{case:?} chart table");
        for id in charts {
            pairs += 1;
            for draw in 0..5 {
                let lambda = SpectralParams([
                    rng.random_range(-1.5..1.5),
                    rng.random_range(-1.5..1.5),
                    rng.random_range(-1.5..1.5),
                ]);
                let solution = SolutionBuilder::new(Chart::new(id, params), &class, &spec)
                    .lambda(lambda)
                    .build()
                    .unwrap();
                let points = solution
                    .sample_points(20, (0.0, 0.4), 0.05, 1000 + draw)
                    .unwrap();
                let rep = verify_residual(&solution, &spec, &points, 1e-3).unwrap();
                worst = worst.max(rep.normalized_max);
                solutions += 1;
                assert!(
                    rep.passes(),
                    "{case:?} x {id:?} draw {draw}: residual {:.3e}",
                    rep.normalized_max
                );
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = pairs == 31 && worst <= 5e-4 && elapsed <= 600.0;
    report(
        "4 (end-to-end separability)",
        pass,
        &format!(
            "{pairs} admissible pairs, {solutions} solutions, worst normalized residual \
             {worst:.2e} <= 5e-4, runtime {elapsed:.1}s <= 600s"
        ),
    );
}

#[test]
fn criterion_5_closed_form_cross_checks() {
    let params = ChartParams::default();
    let mut worst = 0.0f64;

    // Cartesian trig: psi'' = -alpha^2 psi from (1, 0) is cos(alpha w).
    let alpha = 1.2f64;
    let table = integrate_phi(
        &Chart::new(ChartId::Cartesian, params),
        0,
        &SpectralParams([-alpha * alpha, 0.0, 0.0]),
        (-1.0, 1.0),
        0.0,
        (1.0, 0.0),
        1e-11,
    )
    .unwrap();
    for i in 0..=50 {
        let w = -1.0 + 2.0 * i as f64 / 50.0;
        worst = worst.max((table.eval(w).unwrap() - (alpha * w).cos()).abs());
    }
    // And the exponential branch: psi'' = +alpha^2 psi from (1, alpha).
    let table = integrate_phi(
        &Chart::new(ChartId::Cartesian, params),
        0,
        &SpectralParams([alpha * alpha, 0.0, 0.0]),
        (-1.0, 1.0),
        0.0,
        (1.0, alpha),
        1e-11,
    )
    .unwrap();
    for i in 0..=50 {
        let w = -1.0 + 2.0 * i as f64 / 50.0;
        worst = worst.max((table.eval(w).unwrap() - (alpha * w).exp()).abs());
    }

    // Cylindrical radial factor vs Bessel J_n(alpha e^w).
    let (alpha, n) = (1.3, 2u32);
    let dj = |x: f64| 0.5 * (bessel_j(n - 1, x).unwrap() - bessel_j(n + 1, x).unwrap());
    let table = integrate_phi(
        &Chart::new(ChartId::Cylindrical, params),
        0,
        &SpectralParams([-alpha * alpha, -((n * n) as f64), 0.0]),
        (-0.8, 0.8),
        0.0,
        (bessel_j(n, alpha).unwrap(), dj(alpha) * alpha),
        1e-11,
    )
    .unwrap();
    for i in 0..=50 {
        let w = -0.8 + 1.6 * i as f64 / 50.0;
        worst = worst.max((table.eval(w).unwrap() - bessel_j(n, alpha * w.exp()).unwrap()).abs());
    }

    // Spherical latitude factor vs P_n^m(tanh w).
    let (n, m) = (4u32, 2i32);
    let slope = (n as f64 + m as f64) * legendre_p(n - 1, m, 0.0).unwrap();
    let table = integrate_phi(
        &Chart::new(ChartId::Spherical, params),
        1,
        &SpectralParams([0.0, -((n * (n + 1)) as f64), -((m * m) as f64)]),
        (-1.2, 1.2),
        0.0,
        (legendre_p(n, m, 0.0).unwrap(), slope),
        1e-11,
    )
    .unwrap();
    for i in 0..=50 {
        let w = -1.2 + 2.4 * i as f64 / 50.0;
        worst = worst.max((table.eval(w).unwrap() - legendre_p(n, m, w.tanh()).unwrap()).abs());
    }

    // Time factors against the independently coded exponential forms,
    // normalized at t = 0, including the vanishing-rate replacement of
    // (e^{-2lt})/(2l) terms by -t.
    let mut phi0_err = 0.0f64;
    {
        let reference = |rates: [f64; 3], lambda: [f64; 3], active: &[usize], t: f64| -> f64 {
            let term = |i: usize, tt: f64| -> f64 {
                // The literal lam/(2l) e^{-2lt} form cancels catastrophically
                // as l -> 0; the vanishing-rate replacement -lam t applies
                // below the eigenvalue noise floor.
                if rates[i].abs() > 1e-9 {
                    lambda[i] / (2.0 * rates[i]) * (-2.0 * rates[i] * tt).exp()
                } else {
                    -lambda[i] * tt
                }
            };
            let log_at = |tt: f64| -> f64 {
                active.iter().map(|&i| term(i, tt)).sum::<f64>()
                    - (rates[0] + rates[1] + rates[2]) * tt
            };
            (log_at(t) - log_at(0.0)).exp()
        };
        for (diag, lambda) in [
            ([0.7, -0.4, 0.2], [-1.1, 0.6, -0.3]),
            ([0.0, 0.5, -0.5], [0.8, -0.2, 0.4]),
            ([0.3, 0.3, -0.5], [0.8, -0.2, 0.4]),
            ([0.0, 0.0, 0.0], [1.0, -1.0, 0.5]),
        ] {
            let m = Mat3::diag(diag[0], diag[1], diag[2]);
            let spec = DriftSpec::new(m, Vec3::ZERO).unwrap();
            let class = classify(&spec, 1e-9).unwrap();
            // The spectral parameters couple to the canonically ordered
            // rates, so the reference uses the classified values.
            let rates = class.rates.0;
            for (chart_id, active) in [
                (ChartId::Cartesian, vec![0usize, 1, 2]),
                (ChartId::Cylindrical, vec![0, 2]),
                (ChartId::Spherical, vec![0]),
            ] {
                // Partially split and non-split charts need tied rates;
                // skip combinations the classification does not admit.
                let admissible = sepfp::drift::admissible_charts(&class).unwrap();
                if !admissible.contains(&chart_id) {
                    continue;
                }
                let phi0 = Phi0::new(&class, chart_id, SpectralParams(lambda));
                for t in [-0.6, 0.0, 0.3, 1.0] {
                    let want = reference(rates, lambda, &active, t);
                    phi0_err = phi0_err.max((phi0.eval(t) - want).abs() / (1.0 + want.abs()));
                }
            }
        }
    }

    let pass = worst <= 1e-7 && phi0_err <= 1e-12;
    report(
        "5 (closed-form cross-checks)",
        pass,
        &format!(
            "spatial factors vs trig/Bessel/Legendre {worst:.2e} <= 1e-7, \
             time factor vs exponential forms {phi0_err:.2e}"
        ),
    );
}

#[test]
fn criterion_6_stochastic_cross_validation() {
    let start = Instant::now();
    // One representative drift per family: symmetric (b = 0), rotating
    // isotropic, rotating axial.
    let representatives = [
        Mat3::diag(0.6, 0.3, -0.2),
        Mat3::from_rows([0.4, 0.9, 0.0], [-0.9, 0.4, 0.0], [0.0, 0.0, 0.4]),
        Mat3::from_rows([0.5, 0.7, 0.0], [-0.7, 0.5, 0.0], [0.0, 0.0, 1.1]),
    ];
    let n = 100_000;
    let dt = 1e-3;
    let taus = [0.1, 0.5, 1.0];
    let mut worst_z = 0.0f64;
    for (k, m) in representatives.iter().enumerate() {
        let spec = DriftSpec::new(*m, Vec3::new(0.2, -0.1, 0.0)).unwrap();
        let class = classify(&spec, 1e-9).unwrap();
        assert_ne!(class.case, DriftCase::NotSeparable);
        let init = MomentState::isotropic(Vec3::new(0.5, 0.0, -0.5), 0.2);
        let snapshots = simulate_snapshots(&spec, &init, &taus, dt, n, 600 + k as u64).unwrap();
        for ens in &snapshots {
            let reference = moment_flow(&spec, &init, ens.tau).unwrap();
            let em = compare(ens, &reference).unwrap();
            let exact_ens = simulate_exact(&spec, &init, ens.tau, n, 700 + k as u64).unwrap();
            let exact = compare(&exact_ens, &reference).unwrap();
            worst_z = worst_z.max(em.max_abs_z).max(exact.max_abs_z);
            assert!(
                em.pass && exact.pass,
                "drift {k} tau {}: EM z {:.2}, exact z {:.2}",
                ens.tau,
                em.max_abs_z,
                exact.max_abs_z
            );
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = worst_z <= Z_BOUND && elapsed <= 120.0;
    report(
        "6 (stochastic cross-validation)",
        pass,
        &format!("worst |z| {worst_z:.2} <= 4 at n = 1e5, runtime {elapsed:.1}s <= 120s"),
    );
}

#[test]
fn criterion_7_constant_curl_checker() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let probe = ProbeBox::default();
    // Every linear drift passes.
    let mut linear_ok = true;
    for case in ALL_CASES {
        let m = sample_case_drift(case, &mut rng).unwrap();
        let field = DriftField::Linear(DriftSpec::new(m, Vec3::new(0.3, 0.1, -0.2)).unwrap());
        linear_ok &= check_constant_curl(&field, &probe, 64, 0, 1e-6)
            .unwrap()
            .passes();
    }
    // Generic random linear fields too (separable or not).
    for _ in 0..5 {
        let m = sample_nonconforming(&mut rng);
        let field = DriftField::Linear(DriftSpec::new(m, Vec3::ZERO).unwrap());
        linear_ok &= check_constant_curl(&field, &probe, 64, 0, 1e-6)
            .unwrap()
            .passes();
    }
    // The cylindrically sheared field with nonlinear profile fails.
    let shear = DriftField::Polynomial(PolyField {
        components: [
            vec![],
            vec![],
            vec![
                PolyTerm {
                    coef: 1.0,
                    powers: [2, 0, 0],
                },
                PolyTerm {
                    coef: 1.0,
                    powers: [0, 2, 0],
                },
            ],
        ],
    });
    let shear_fails = !check_constant_curl(&shear, &probe, 64, 0, 1e-6)
        .unwrap()
        .passes();
    // Gradient fields have curl below 1e-7 everywhere probed.
    let mut gradient_ok = true;
    let grad = DriftField::from_fn(|x| {
        // grad(x1 x2 x3 + x1^2 - x2 x3)
        Vec3::new(
            x[1] * x[2] + 2.0 * x[0],
            x[0] * x[2] - x[2],
            x[0] * x[1] - x[1],
        )
    });
    for i in 0..16 {
        let x = Vec3::new(
            -0.9 + 0.12 * i as f64,
            0.8 - 0.1 * i as f64,
            -0.5 + 0.06 * i as f64,
        );
        gradient_ok &= curl_at(&grad, &x, 1e-4).unwrap().max_abs() <= 1e-7;
    }
    let pass = linear_ok && shear_fails && gradient_ok;
    report(
        "7 (constant-curl checker)",
        pass,
        &format!(
            "linear fields pass: {linear_ok}, nonlinear shear fails: {shear_fails}, \
             gradient curls <= 1e-7: {gradient_ok}"
        ),
    );
}

#[test]
fn criterion_8_cli_determinism() {
    let bin = env!("CARGO_BIN_EXE_sepfp");
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("drift.json"),
        r#"{"M": [[0.5, 0.8, 0.0], [-0.8, 0.5, 0.0], [0.0, 0.0, 0.5]], "v": [0.1, 0.0, -0.2]}"#,
    )
    .unwrap();
    std::fs::write(
        dir.path().join("field.json"),
        r#"{"polynomial": {"B1": [], "B2": [], "B3": [{"coef": 2.0, "powers": [0, 0, 0]}]}}"#,
    )
    .unwrap();

    // Each run works in its own directory with identical relative paths,
    // so message text and file bytes are comparable verbatim.
    let run_all = |tag: &str| -> Vec<(String, Vec<u8>)> {
        let workdir = dir.path().join(tag);
        std::fs::create_dir_all(&workdir).unwrap();
        let mut results = Vec::new();
        let mut capture = |label: &str, args: &[&str]| {
            let output = Command::new(bin)
                .current_dir(&workdir)
                .args(args)
                .output()
                .unwrap();
            results.push((
                format!("{label}-stdout"),
                [output.stdout, output.stderr].concat(),
            ));
        };
        capture("charts", &["charts", "list"]);
        capture(
            "classify",
            &[
                "classify",
                "--input",
                "../drift.json",
                "--output",
                "classify.json",
            ],
        );
        capture(
            "solve",
            &[
                "solve",
                "--input",
                "../drift.json",
                "--chart",
                "paraboloidal",
                "--lambda",
                "-0.7,0.4,-0.2",
                "--seed",
                "11",
                "--output",
                "sol.csv",
            ],
        );
        capture(
            "verify",
            &[
                "verify",
                "--input",
                "sol.manifest.json",
                "--output",
                "verify.json",
            ],
        );
        capture(
            "mc",
            &[
                "mc",
                "--input",
                "../drift.json",
                "--n",
                "2000",
                "--dt",
                "0.002",
                "--tau",
                "0.1,0.3",
                "--seed",
                "21",
                "--output",
                "mc.json",
            ],
        );
        capture(
            "curl",
            &[
                "curl",
                "--input",
                "../field.json",
                "--seed",
                "3",
                "--output",
                "curl.json",
            ],
        );
        for name in [
            "classify.json",
            "sol.csv",
            "sol.manifest.json",
            "verify.json",
            "mc.json",
            "curl.json",
        ] {
            results.push((
                name.to_string(),
                std::fs::read(workdir.join(name)).unwrap_or_default(),
            ));
        }
        results
    };

    let first = run_all("a");
    let second = run_all("b");
    let mut identical = true;
    for ((name_a, bytes_a), (_, bytes_b)) in first.iter().zip(second.iter()) {
        if bytes_a != bytes_b {
            identical = false;
            println!("criterion 8: output {name_a} differs between runs");
        }
        // File outputs must be non-trivial for the comparison to matter.
        if name_a.ends_with(".json") || name_a.ends_with(".csv") {
            assert!(!bytes_a.is_empty(), "{name_a} produced no bytes");
        }
    }
    report(
        "8 (CLI determinism)",
        identical,
        "repeated runs with identical config and seed are byte-identical",
    );
}
