//! Monte Carlo cross-validation of the drift model through the associated
//! diffusion process.
//!
//! The equation `u_t + Lap(u) + div(B u) = 0` becomes, under the time
//! reversal `tau = -t`, the forward Kolmogorov equation
//! `u_tau = Lap(u) + div(B u)`, which is the law of the diffusion
//!
//! ```text
//! dX = -B(X) dtau + sqrt(2) dW .
//! ```
//!
//! With linear drift `B = M x + v` the first two moments close exactly:
//!
//! ```text
//! m'     = -M m - v
//! Sigma' = -M Sigma - Sigma M^T + 2 I
//! ```
//!
//! Two independent samplers are provided - Euler-Maruyama stepping and the
//! exact Gaussian transition - and both are compared against the moment
//! flow by z-scores. All randomness is counter-based per particle, so
//! results do not depend on the number of worker threads.

use crate::algebra3::{cholesky_psd, exp_integral, mat_exp, symmetric_eigen, Mat3, Vec3};
use crate::drift::DriftSpec;
use crate::ode::{solve_to, OdeError, OdeOptions};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StochasticError {
    #[error("step size {dt} exceeds stability bound {max:.3e} = 0.01/(1+|M|)")]
    StepTooLarge { dt: f64, max: f64 },
    #[error("need at least {min} particles, got {n}")]
    TooFewParticles { n: usize, min: usize },
    #[error("ensemble is degenerate (zero variance in component {0})")]
    DegenerateEnsemble(usize),
    #[error("invalid moment state: {0}")]
    BadMoments(String),
    #[error("covariance integration failed: {0}")]
    Ode(#[from] OdeError),
}

/// First two moments of the particle law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentState {
    pub mean: Vec3,
    pub cov: Mat3,
}

impl MomentState {
    /// Validates symmetry and positive semidefiniteness of the covariance.
    pub fn new(mean: Vec3, cov: Mat3) -> Result<Self, StochasticError> {
        if !mean.is_finite() || !cov.is_finite() {
            return Err(StochasticError::BadMoments("non-finite entries".into()));
        }
        let scale = 1.0 + cov.max_abs();
        if (cov - cov.transpose()).max_abs() > 1e-10 * scale {
            return Err(StochasticError::BadMoments(
                "covariance not symmetric".into(),
            ));
        }
        let eig =
            symmetric_eigen(&cov, 1e-10).map_err(|e| StochasticError::BadMoments(e.to_string()))?;
        if eig.eigenvalues[0] < -1e-10 * scale {
            return Err(StochasticError::BadMoments(format!(
                "covariance indefinite (min eigenvalue {:.3e})",
                eig.eigenvalues[0]
            )));
        }
        Ok(MomentState { mean, cov })
    }

    /// A point mass at `mean`.
    pub fn point(mean: Vec3) -> Self {
        MomentState {
            mean,
            cov: Mat3::ZERO,
        }
    }

    pub fn isotropic(mean: Vec3, variance: f64) -> Self {
        MomentState {
            mean,
            cov: Mat3::diag(variance, variance, variance),
        }
    }
}

/// A particle ensemble at one pseudo-time.
#[derive(Debug, Clone)]
pub struct Ensemble {
    pub tau: f64,
    pub seed: u64,
    pub positions: Vec<Vec3>,
}

impl Ensemble {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Sample mean and covariance (unbiased), accumulated in index order.
    pub fn moments(&self) -> MomentState {
        let n = self.positions.len().max(1) as f64;
        let mut mean = Vec3::ZERO;
        for p in &self.positions {
            mean = mean + *p;
        }
        mean = mean.scale(1.0 / n);
        let mut cov = Mat3::ZERO;
        for p in &self.positions {
            let d = *p - mean;
            for i in 0..3 {
                for j in 0..3 {
                    cov[i][j] += d[i] * d[j];
                }
            }
        }
        MomentState {
            mean,
            cov: cov.scale(1.0 / (n - 1.0).max(1.0)),
        }
    }
}

fn max_step(spec: &DriftSpec) -> f64 {
    0.01 / (1.0 + spec.m.norm_inf())
}

fn draw_initial<R: Rng>(init: &MomentState, chol: &Mat3, rng: &mut R) -> Vec3 {
    let xi = Vec3::new(
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
    );
    init.mean + *chol * xi
}

/// Euler-Maruyama simulation to `tau_end`, snapshotting the ensemble at
/// each requested time (which must be positive and ascending; snapshots
/// land on the nearest step boundary). Each particle consumes its own
/// counter-based random stream, so the result is independent of thread
/// count and scheduling.
pub fn simulate_snapshots(
    spec: &DriftSpec,
    init: &MomentState,
    taus: &[f64],
    dt: f64,
    n: usize,
    seed: u64,
) -> Result<Vec<Ensemble>, StochasticError> {
    let bound = max_step(spec);
    if dt > bound {
        return Err(StochasticError::StepTooLarge { dt, max: bound });
    }
    if n == 0 {
        return Err(StochasticError::TooFewParticles { n, min: 1 });
    }
    let steps: Vec<usize> = taus
        .iter()
        .map(|&tau| (tau / dt).round() as usize)
        .collect();
    if steps.is_empty() || steps.windows(2).any(|w| w[1] <= w[0]) || steps[0] == 0 {
        return Err(StochasticError::BadMoments(
            "snapshot times must be positive, ascending multiples of dt".into(),
        ));
    }
    let chol = cholesky_psd(&init.cov);
    let total = *steps.last().unwrap();
    let sqrt2dt = (2.0 * dt).sqrt();
    let m = spec.m;
    let v = spec.v;
    let paths: Vec<Vec<Vec3>> = (0..n)
        .into_par_iter()
        .map(|particle| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(particle as u64);
            let mut x = draw_initial(init, &chol, &mut rng);
            let mut snaps = Vec::with_capacity(steps.len());
            let mut next = 0;
            for step in 1..=total {
                let drift = -(m * x + v);
                let noise = Vec3::new(
                    rng.sample(StandardNormal),
                    rng.sample(StandardNormal),
                    rng.sample(StandardNormal),
                );
                x = x + drift.scale(dt) + noise.scale(sqrt2dt);
                if next < steps.len() && step == steps[next] {
                    snaps.push(x);
                    next += 1;
                }
            }
            snaps
        })
        .collect();
    Ok(steps
        .iter()
        .enumerate()
        .map(|(k, &s)| Ensemble {
            tau: s as f64 * dt,
            seed,
            positions: paths.iter().map(|p| p[k]).collect(),
        })
        .collect())
}

/// Euler-Maruyama simulation to a single end time.
pub fn simulate(
    spec: &DriftSpec,
    init: &MomentState,
    tau_end: f64,
    dt: f64,
    n: usize,
    seed: u64,
) -> Result<Ensemble, StochasticError> {
    Ok(simulate_snapshots(spec, init, &[tau_end], dt, n, seed)?
        .pop()
        .expect("one snapshot"))
}

/// Exact sampler for the linear diffusion: the transition law is Gaussian,
/// so each particle is drawn in one step from
/// `X(tau) = e^{-M tau} X(0) + mean shift + L xi` with
/// `L L^T` the accumulated noise covariance.
pub fn simulate_exact(
    spec: &DriftSpec,
    init: &MomentState,
    tau: f64,
    n: usize,
    seed: u64,
) -> Result<Ensemble, StochasticError> {
    if n == 0 {
        return Err(StochasticError::TooFewParticles { n, min: 1 });
    }
    let propagator = mat_exp(&spec.m.scale(-tau));
    let shift = -(exp_integral(&spec.m.scale(-1.0), tau) * spec.v);
    // Accumulated noise covariance: the moment flow started from a point
    // mass at the origin.
    let noise_cov = moment_flow(spec, &MomentState::point(Vec3::ZERO), tau)?.cov;
    let noise_chol = cholesky_psd(&noise_cov);
    let init_chol = cholesky_psd(&init.cov);
    let positions: Vec<Vec3> = (0..n)
        .into_par_iter()
        .map(|particle| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(particle as u64);
            let x0 = draw_initial(init, &init_chol, &mut rng);
            let xi = Vec3::new(
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
            );
            propagator * x0 + shift + noise_chol * xi
        })
        .collect();
    Ok(Ensemble {
        tau,
        seed,
        positions,
    })
}

/// Exact moment dynamics: the mean in closed form through the matrix
/// exponential, the covariance by adaptive Runge-Kutta on
/// `Sigma' = -M Sigma - Sigma M^T + 2I`.
pub fn moment_flow(
    spec: &DriftSpec,
    init: &MomentState,
    tau: f64,
) -> Result<MomentState, StochasticError> {
    let mean =
        mat_exp(&spec.m.scale(-tau)) * init.mean - exp_integral(&spec.m.scale(-1.0), tau) * spec.v;
    let m = spec.m;
    let f = |_t: f64, y: &[f64; 9]| {
        let sigma = Mat3([[y[0], y[1], y[2]], [y[3], y[4], y[5]], [y[6], y[7], y[8]]]);
        let d = -(m * sigma) - sigma * m.transpose() + Mat3::diag(2.0, 2.0, 2.0);
        [
            d[0][0], d[0][1], d[0][2], d[1][0], d[1][1], d[1][2], d[2][0], d[2][1], d[2][2],
        ]
    };
    let y0 = [
        init.cov[0][0],
        init.cov[0][1],
        init.cov[0][2],
        init.cov[1][0],
        init.cov[1][1],
        init.cov[1][2],
        init.cov[2][0],
        init.cov[2][1],
        init.cov[2][2],
    ];
    let opts = OdeOptions {
        rtol: 1e-11,
        atol: 1e-13,
        ..Default::default()
    };
    let y = solve_to(&f, 0.0, y0, tau, &opts)?;
    let raw = Mat3([[y[0], y[1], y[2]], [y[3], y[4], y[5]], [y[6], y[7], y[8]]]);
    let cov = (raw + raw.transpose()).scale(0.5);
    Ok(MomentState { mean, cov })
}

/// z-scores of an ensemble against reference moments.
#[derive(Debug, Clone)]
pub struct CompareReport {
    pub n: usize,
    pub mean_z: [f64; 3],
    /// Upper-triangular (including diagonal) covariance z-scores, rows
    /// then columns: (0,0), (0,1), (0,2), (1,1), (1,2), (2,2).
    pub cov_z: [f64; 6],
    pub max_abs_z: f64,
    pub pass: bool,
}

/// z-score threshold for moment comparisons.
pub const Z_BOUND: f64 = 4.0;

/// Compares ensemble moments to a reference using standard-error
/// estimates: the mean with `sqrt(Sigma_ii / n)`, covariance entries with
/// the Gaussian expression `sqrt((Sigma_ii Sigma_jj + Sigma_ij^2)/(n-1))`.
/// Passes when every |z| <= 4.
pub fn compare(
    ensemble: &Ensemble,
    reference: &MomentState,
) -> Result<CompareReport, StochasticError> {
    let n = ensemble.len();
    if n < 1000 {
        return Err(StochasticError::TooFewParticles { n, min: 1000 });
    }
    let sample = ensemble.moments();
    for i in 0..3 {
        if sample.cov[i][i] <= 0.0 {
            return Err(StochasticError::DegenerateEnsemble(i));
        }
    }
    let nf = n as f64;
    let mut mean_z = [0.0; 3];
    for i in 0..3 {
        let se = (reference.cov[i][i] / nf).sqrt();
        if se <= 0.0 {
            return Err(StochasticError::DegenerateEnsemble(i));
        }
        mean_z[i] = (sample.mean[i] - reference.mean[i]) / se;
    }
    let mut cov_z = [0.0; 6];
    let mut k = 0;
    for i in 0..3 {
        for j in i..3 {
            let var = (reference.cov[i][i] * reference.cov[j][j]
                + reference.cov[i][j] * reference.cov[i][j])
                / (nf - 1.0);
            cov_z[k] = (sample.cov[i][j] - reference.cov[i][j]) / var.sqrt();
            k += 1;
        }
    }
    let max_abs_z = mean_z
        .iter()
        .chain(cov_z.iter())
        .fold(0.0f64, |m, z| m.max(z.abs()));
    Ok(CompareReport {
        n,
        mean_z,
        cov_z,
        max_abs_z,
        pass: max_abs_z <= Z_BOUND,
    })
}
