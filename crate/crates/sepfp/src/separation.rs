//! Separated solutions of the drift-diffusion equation
//! `u_t + Lap(u) + div(B u) = 0`: the closed-form time factor, numerically
//! integrated spatial factors with dense output, coordinate inversion
//! through the moving frame, solution assembly, and finite-difference
//! residual verification.
//!
//! A solution is the product `u = phi0(t) psi1(w1) psi2(w2) psi3(w3)`,
//! where each spatial factor solves the linear second-order equation
//! `psi_a'' = sigma_a (F_a1 l1 + F_a2 l2 + F_a3 l3) psi_a` in the real
//! line parameter of its coordinate (`sigma_a` flips sign along imaginary
//! coordinate lines), with `F` the chart's Staeckel matrix and `l` the
//! spectral parameters. Any real spectral triple yields a local exact
//! solution; no boundary or periodicity conditions are imposed.

use crate::algebra3::Vec3;
use crate::charts::{Chart, ChartError, ChartId, OmegaPoint};
use crate::drift::{
    admissible_charts, Classification, DriftError, DriftSpec, FrameAtTime, MovingFrame,
};
use crate::ode::{solve_nodes, OdeError, OdeOptions};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SeparationError {
    #[error(transparent)]
    Chart(#[from] ChartError),
    #[error(transparent)]
    Drift(#[from] DriftError),
    #[error("integration failed: {0}")]
    Ode(#[from] OdeError),
    #[error("tolerance {0} outside [1e-12, 1e-4]")]
    BadTolerance(f64),
    #[error("axis {axis}: interval [{lo}, {hi}] invalid or outside the chart range")]
    BadInterval { axis: usize, lo: f64, hi: f64 },
    #[error("axis {axis}: separated equation coefficient singular at {at}")]
    SingularInterval { axis: usize, at: f64 },
    #[error("axis {axis}: {value} outside tabulated interval [{lo}, {hi}]")]
    OutOfTable {
        axis: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("chart {requested:?} not admissible; admissible charts: {admissible:?}")]
    InadmissibleChart {
        requested: ChartId,
        admissible: Vec<ChartId>,
    },
    #[error("no evaluation points supplied")]
    EmptyPoints,
    #[error("point (t = {t}, x = {x:?}) not invertible: {source}")]
    PointNotInvertible {
        t: f64,
        x: [f64; 3],
        source: Box<SeparationError>,
    },
}

/// The three separation constants entering the reduced equations linearly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralParams(pub [f64; 3]);

impl SpectralParams {
    pub const ZERO: SpectralParams = SpectralParams([0.0; 3]);
}

/// Closed-form time factor, normalized to `phi0(0) = 1`:
///
/// ```text
/// phi0(t) = exp( -(l1+l2+l3) t + sum_active lam_i c_i^-2 (e^{-2 l_i t} - 1)/(2 l_i) )
/// ```
///
/// The active indices follow the chart's split class (all three for the
/// completely split chart, the first and third for the partially split
/// charts, only the first otherwise). A vanishing rate replaces
/// `(e^{-2 l t} - 1)/(2 l)` by its limit `-t`.
#[derive(Debug, Clone)]
pub struct Phi0 {
    rates: Vec3,
    inv_scales_sq: Vec3,
    active: [bool; 3],
    lambda: SpectralParams,
    decay: f64,
}

impl Phi0 {
    pub fn new(class: &Classification, chart: ChartId, lambda: SpectralParams) -> Phi0 {
        let active = chart.split_class().active_time_couplings();
        let c = class.scales;
        Phi0 {
            rates: class.rates,
            inv_scales_sq: Vec3::new(
                1.0 / (c[0] * c[0]),
                1.0 / (c[1] * c[1]),
                1.0 / (c[2] * c[2]),
            ),
            active,
            lambda,
            decay: -(class.rates[0] + class.rates[1] + class.rates[2]),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let mut log = self.decay * t;
        for i in 0..3 {
            if self.active[i] {
                let l = self.rates[i];
                let g = if l == 0.0 {
                    -t
                } else {
                    (-2.0 * l * t).exp_m1() / (2.0 * l)
                };
                log += self.lambda.0[i] * self.inv_scales_sq[i] * g;
            }
        }
        log.exp()
    }

    /// `d/dt log phi0`, the right-hand side of the time equation.
    pub fn log_derivative(&self, t: f64) -> f64 {
        let mut d = self.decay;
        for i in 0..3 {
            if self.active[i] {
                d -= self.lambda.0[i] * self.inv_scales_sq[i] * (-2.0 * self.rates[i] * t).exp();
            }
        }
        d
    }
}

/// Convenience wrapper matching the operation vocabulary.
pub fn phi0_eval(p: &Phi0, t: f64) -> f64 {
    p.eval(t)
}

#[derive(Debug, Clone, Copy)]
struct PhiNode {
    w: f64,
    value: f64,
    deriv: f64,
    /// ODE coefficient q(w) at the node (`psi'' = q psi`), giving the
    /// curvature for the quintic pieces.
    q: f64,
}

/// Dense-output table of one spatial factor: checkpointed integration with
/// piecewise quintic interpolation. Value, slope, and equation curvature
/// match at both ends of every piece, so the interpolant is C2 and free of
/// stencil-scale kinks.
#[derive(Debug, Clone)]
pub struct PhiTable {
    axis: usize,
    interval: (f64, f64),
    anchor: f64,
    ic: (f64, f64),
    nodes: Vec<PhiNode>,
}

impl PhiTable {
    pub fn axis(&self) -> usize {
        self.axis
    }

    pub fn interval(&self) -> (f64, f64) {
        self.interval
    }

    pub fn anchor(&self) -> f64 {
        self.anchor
    }

    pub fn initial_condition(&self) -> (f64, f64) {
        self.ic
    }

    pub fn eval(&self, w: f64) -> Result<f64, SeparationError> {
        Ok(self.eval_with_deriv(w)?.0)
    }

    pub fn eval_with_deriv(&self, w: f64) -> Result<(f64, f64), SeparationError> {
        let (lo, hi) = self.interval;
        if !(lo..=hi).contains(&w) {
            return Err(SeparationError::OutOfTable {
                axis: self.axis,
                value: w,
                lo,
                hi,
            });
        }
        let idx = self
            .nodes
            .partition_point(|n| n.w <= w)
            .clamp(1, self.nodes.len() - 1);
        let a = &self.nodes[idx - 1];
        let b = &self.nodes[idx];
        let h = b.w - a.w;
        let tau = (w - a.w) / h;
        // Two-point Taylor quintic in the scaled variable.
        let c0 = a.value;
        let c1 = a.deriv * h;
        let c2 = 0.5 * a.q * a.value * h * h;
        let rhs_a = b.value - c0 - c1 - c2;
        let rhs_b = b.deriv * h - c1 - 2.0 * c2;
        let rhs_c = b.q * b.value * h * h - 2.0 * c2;
        let c3 = 10.0 * rhs_a - 4.0 * rhs_b + 0.5 * rhs_c;
        let c4 = -15.0 * rhs_a + 7.0 * rhs_b - rhs_c;
        let c5 = 6.0 * rhs_a - 3.0 * rhs_b + 0.5 * rhs_c;
        let value = ((((c5 * tau + c4) * tau + c3) * tau + c2) * tau + c1) * tau + c0;
        let dvalue =
            ((((5.0 * c5 * tau + 4.0 * c4) * tau + 3.0 * c3) * tau + 2.0 * c2) * tau + c1) / h;
        Ok((value, dvalue))
    }
}

/// The separated-equation coefficient for one axis:
/// `q(w) = sigma_axis * (F_axis(w) . lambda)`.
pub fn ode_coefficient(
    chart: &Chart,
    axis: usize,
    w: f64,
    lambda: &SpectralParams,
) -> Result<f64, SeparationError> {
    let row = chart.stackel_row(axis, w)?;
    let sigma = chart.direction_signs()[axis];
    Ok(sigma * (row[0] * lambda.0[0] + row[1] * lambda.0[1] + row[2] * lambda.0[2]))
}

/// Integrates one spatial factor over `interval`, anchored at `anchor`
/// with initial values `ic = (value, slope)` there. Produces dense output
/// accurate to roughly the integration tolerance.
pub fn integrate_phi(
    chart: &Chart,
    axis: usize,
    lambda: &SpectralParams,
    interval: (f64, f64),
    anchor: f64,
    ic: (f64, f64),
    tol: f64,
) -> Result<PhiTable, SeparationError> {
    if !(1e-12..=1e-4).contains(&tol) {
        return Err(SeparationError::BadTolerance(tol));
    }
    let (lo, hi) = interval;
    if !(lo < hi) || !(lo..=hi).contains(&anchor) {
        return Err(SeparationError::BadInterval { axis, lo, hi });
    }
    // Coefficient scan: rejects singular intervals and sizes the node
    // spacing to resolve the local wavenumber.
    let mut q_max = 0.0f64;
    for i in 0..=32 {
        let w = lo + (hi - lo) * i as f64 / 32.0;
        let q = ode_coefficient(chart, axis, w, lambda)?;
        if !q.is_finite() {
            return Err(SeparationError::SingularInterval { axis, at: w });
        }
        q_max = q_max.max(q.abs());
    }
    let kappa = q_max.sqrt().max(1.0);
    let spacing = (0.118 / kappa.powf(1.5))
        .clamp(1e-3, 0.02)
        .min((hi - lo) / 4.0);

    let f = |w: f64, y: &[f64; 2]| {
        let q = chart
            .stackel_row(axis, w)
            .map(|row| {
                chart.direction_signs()[axis]
                    * (row[0] * lambda.0[0] + row[1] * lambda.0[1] + row[2] * lambda.0[2])
            })
            .unwrap_or(f64::NAN);
        [y[1], q * y[0]]
    };
    let opts = OdeOptions {
        rtol: tol,
        atol: tol * 1e-3,
        ..Default::default()
    };

    let grid = |from: f64, to: f64| -> Vec<f64> {
        let n = (((to - from).abs() / spacing).ceil() as usize).max(1);
        (1..=n)
            .map(|i| from + (to - from) * i as f64 / n as f64)
            .collect()
    };
    let mut nodes: Vec<PhiNode> = Vec::new();
    let make_node = |w: f64, y: &[f64; 2]| -> Result<PhiNode, SeparationError> {
        let q = ode_coefficient(chart, axis, w, lambda)?;
        if !y[0].is_finite() || !y[1].is_finite() {
            return Err(SeparationError::SingularInterval { axis, at: w });
        }
        Ok(PhiNode {
            w,
            value: y[0],
            deriv: y[1],
            q,
        })
    };
    // Downward sweep from the anchor, then upward, sharing the anchor node.
    if anchor > lo {
        let down = grid(anchor, lo);
        let states = solve_nodes(&f, anchor, [ic.0, ic.1], &down, &opts)?;
        for (w, y) in down.iter().zip(states.iter()).rev() {
            nodes.push(make_node(*w, y)?);
        }
    }
    nodes.push(make_node(anchor, &[ic.0, ic.1])?);
    if anchor < hi {
        let up = grid(anchor, hi);
        let states = solve_nodes(&f, anchor, [ic.0, ic.1], &up, &opts)?;
        for (w, y) in up.iter().zip(states.iter()) {
            nodes.push(make_node(*w, y)?);
        }
    }
    Ok(PhiTable {
        axis,
        interval,
        anchor,
        ic,
        nodes,
    })
}

/// A fully assembled separated solution.
#[derive(Debug, Clone)]
pub struct SeparatedSolution {
    chart: Chart,
    lambda: SpectralParams,
    phi0: Phi0,
    tables: [PhiTable; 3],
    frame: MovingFrame,
}

/// Builder for [`SeparatedSolution`]; defaults: intervals from the chart's
/// sampling box, initial value (1, 0) at each interval midpoint, dense
/// tolerance 1e-11, frame offset at the drift's resting point.
pub struct SolutionBuilder {
    chart: Chart,
    class: Classification,
    spec: DriftSpec,
    lambda: SpectralParams,
    intervals: Option<[(f64, f64); 3]>,
    ics: [Option<(f64, (f64, f64))>; 3],
    tol: f64,
    w0: Option<Vec3>,
}

impl SolutionBuilder {
    pub fn new(chart: Chart, class: &Classification, spec: &DriftSpec) -> Self {
        SolutionBuilder {
            chart,
            class: class.clone(),
            spec: *spec,
            lambda: SpectralParams::ZERO,
            intervals: None,
            ics: [None, None, None],
            tol: 1e-11,
            w0: None,
        }
    }

    pub fn lambda(mut self, lambda: SpectralParams) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn intervals(mut self, intervals: [(f64, f64); 3]) -> Self {
        self.intervals = Some(intervals);
        self
    }

    /// Initial condition for one axis: anchor position and (value, slope).
    pub fn initial_condition(mut self, axis: usize, anchor: f64, ic: (f64, f64)) -> Self {
        self.ics[axis] = Some((anchor, ic));
        self
    }

    pub fn tolerance(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn frame_offset(mut self, w0: Vec3) -> Self {
        self.w0 = Some(w0);
        self
    }

    pub fn build(self) -> Result<SeparatedSolution, SeparationError> {
        let admissible = admissible_charts(&self.class)?;
        if !admissible.contains(&self.chart.id()) {
            return Err(SeparationError::InadmissibleChart {
                requested: self.chart.id(),
                admissible,
            });
        }
        let frame = MovingFrame::new(&self.class, &self.spec, self.w0)?;
        let intervals = self.intervals.unwrap_or_else(|| self.chart.sampling_box());
        let phi0 = Phi0::new(&self.class, self.chart.id(), self.lambda);
        let mut tables = Vec::with_capacity(3);
        for axis in 0..3 {
            let (lo, hi) = intervals[axis];
            let (anchor, ic) = self.ics[axis].unwrap_or((0.5 * (lo + hi), (1.0, 0.0)));
            tables.push(integrate_phi(
                &self.chart,
                axis,
                &self.lambda,
                (lo, hi),
                anchor,
                ic,
                self.tol,
            )?);
        }
        let tables: [PhiTable; 3] = tables.try_into().expect("three axes");
        Ok(SeparatedSolution {
            chart: self.chart,
            lambda: self.lambda,
            phi0,
            tables,
            frame,
        })
    }
}

impl SeparatedSolution {
    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn lambda(&self) -> &SpectralParams {
        &self.lambda
    }

    pub fn phi0(&self) -> &Phi0 {
        &self.phi0
    }

    pub fn tables(&self) -> &[PhiTable; 3] {
        &self.tables
    }

    pub fn frame(&self) -> &MovingFrame {
        &self.frame
    }

    pub fn classification(&self) -> &Classification {
        self.frame.classification()
    }

    /// Midpoints of the tabulated intervals, the default inversion seed.
    pub fn interval_midpoints(&self) -> OmegaPoint {
        OmegaPoint([
            0.5 * (self.tables[0].interval().0 + self.tables[0].interval().1),
            0.5 * (self.tables[1].interval().0 + self.tables[1].interval().1),
            0.5 * (self.tables[2].interval().0 + self.tables[2].interval().1),
        ])
    }

    /// Evaluates the product directly in chart coordinates.
    pub fn eval_omega(&self, t: f64, w: &OmegaPoint) -> Result<f64, SeparationError> {
        let mut u = self.phi0.eval(t);
        for axis in 0..3 {
            u *= self.tables[axis].eval(w.0[axis])?;
        }
        Ok(u)
    }

    /// Evaluates at a lab point, inverting the frame and the chart map.
    pub fn eval(&self, t: f64, x: &Vec3) -> Result<f64, SeparationError> {
        self.eval_with_guess(t, x, &self.interval_midpoints())
            .map(|(u, _)| u)
    }

    /// Same as [`SeparatedSolution::eval`], seeded at `guess`; returns the
    /// chart point alongside the value.
    ///
    /// The returned point is the preimage inside the tabulated intervals
    /// (the chart ranges tile space, so Newton seeded far from the target
    /// can land on a periodic image; a deterministic seed grid over the
    /// intervals recovers the principal one).
    pub fn eval_with_guess(
        &self,
        t: f64,
        x: &Vec3,
        guess: &OmegaPoint,
    ) -> Result<(f64, OmegaPoint), SeparationError> {
        let frame = self.frame.at(t);
        let first = invert_coordinates(&self.chart, &frame, x, guess);
        let w = match first {
            Ok(w) if self.in_tables(&w) => w,
            fallback => {
                let mut found = None;
                'grid: for i in 0..3 {
                    for j in 0..3 {
                        for k in 0..3 {
                            let seed = OmegaPoint([
                                self.grid_seed(0, i),
                                self.grid_seed(1, j),
                                self.grid_seed(2, k),
                            ]);
                            if let Ok(w) = invert_coordinates(&self.chart, &frame, x, &seed) {
                                if self.in_tables(&w) {
                                    found = Some(w);
                                    break 'grid;
                                }
                            }
                        }
                    }
                }
                match (found, fallback) {
                    (Some(w), _) => w,
                    (None, Ok(w)) => w, // out of table; error surfaces below
                    (None, Err(e)) => return Err(e),
                }
            }
        };
        Ok((self.eval_omega(t, &w)?, w))
    }

    fn in_tables(&self, w: &OmegaPoint) -> bool {
        (0..3).all(|axis| {
            let (lo, hi) = self.tables[axis].interval();
            (lo..=hi).contains(&w.0[axis])
        })
    }

    fn grid_seed(&self, axis: usize, slot: usize) -> f64 {
        let (lo, hi) = self.tables[axis].interval();
        lo + (hi - lo) * (0.25 + 0.25 * slot as f64)
    }

    /// Deterministic interior sample points `(t, x)` for residual checks:
    /// chart points drawn inside the tabulated intervals (shrunk by
    /// `margin`), pushed through the frame at times drawn from `times`.
    pub fn sample_points(
        &self,
        n: usize,
        times: (f64, f64),
        margin: f64,
        seed: u64,
    ) -> Result<Vec<(f64, Vec3)>, SeparationError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let mut w = [0.0; 3];
            for (axis, c) in w.iter_mut().enumerate() {
                let (lo, hi) = self.tables[axis].interval();
                *c = rng.random_range(lo + margin..hi - margin);
            }
            let t = if times.1 > times.0 {
                rng.random_range(times.0..times.1)
            } else {
                times.0
            };
            let frame = self.frame.at(t);
            let z = self.chart.forward_map(&OmegaPoint(w))?;
            out.push((t, frame.embed(&z)));
        }
        Ok(out)
    }
}

/// Inverts the full coordinate map `x = T H z(omega) + w` at one time:
/// an exact affine pull-back, then the chart inverse (closed form where
/// available, damped Newton elsewhere).
pub fn invert_coordinates(
    chart: &Chart,
    frame: &FrameAtTime,
    x: &Vec3,
    guess: &OmegaPoint,
) -> Result<OmegaPoint, SeparationError> {
    let z = frame.pull_back(x);
    if let Some(closed) = chart.closed_form_inverse(&z) {
        return Ok(closed?);
    }
    Ok(chart.invert_local(&z, guess, 1e-13)?)
}

/// Residual statistics of a solution over sampled points.
#[derive(Debug, Clone)]
pub struct ResidualReport {
    pub h: f64,
    pub threshold: f64,
    /// max |u| over the sample (the normalizer), floored at 1e-300.
    pub normalizer: f64,
    pub max_abs: f64,
    pub mean_abs: f64,
    pub normalized_max: f64,
    pub normalized_mean: f64,
    pub points: Vec<PointResidual>,
}

#[derive(Debug, Clone)]
pub struct PointResidual {
    pub t: f64,
    pub x: Vec3,
    pub omega: OmegaPoint,
    pub u: f64,
    pub residual: f64,
}

impl ResidualReport {
    pub fn passes(&self) -> bool {
        self.normalized_max <= self.threshold
    }
}

/// Default acceptance threshold for the normalized residual at h = 1e-3.
pub const RESIDUAL_THRESHOLD: f64 = 5e-4;

/// Finite-difference verification of `u_t + Lap(u) + div(B u) = 0` at the
/// given interior points, using second-order central differences with step
/// `h` in both time and space. Residuals are normalized by the largest
/// sampled |u|.
pub fn verify_residual(
    solution: &SeparatedSolution,
    drift: &DriftSpec,
    points: &[(f64, Vec3)],
    h: f64,
) -> Result<ResidualReport, SeparationError> {
    if points.is_empty() {
        return Err(SeparationError::EmptyPoints);
    }
    let guess0 = solution.interval_midpoints();
    let mut report_points = Vec::with_capacity(points.len());
    let mut max_abs = 0.0f64;
    let mut sum_abs = 0.0f64;
    let mut normalizer = 1e-300f64;
    for &(t, x) in points {
        let wrap = |e: SeparationError| SeparationError::PointNotInvertible {
            t,
            x: x.0,
            source: Box::new(e),
        };
        let (u0, w0) = solution.eval_with_guess(t, &x, &guess0).map_err(wrap)?;
        let ut = {
            let up = solution.eval_with_guess(t + h, &x, &w0).map_err(wrap)?.0;
            let um = solution.eval_with_guess(t - h, &x, &w0).map_err(wrap)?.0;
            (up - um) / (2.0 * h)
        };
        let mut lap = 0.0;
        let mut div = 0.0;
        for j in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[j] += h;
            xm[j] -= h;
            let up = solution.eval_with_guess(t, &xp, &w0).map_err(wrap)?.0;
            let um = solution.eval_with_guess(t, &xm, &w0).map_err(wrap)?.0;
            lap += (up - 2.0 * u0 + um) / (h * h);
            div += (drift.eval(&xp)[j] * up - drift.eval(&xm)[j] * um) / (2.0 * h);
        }
        let residual = ut + lap + div;
        max_abs = max_abs.max(residual.abs());
        sum_abs += residual.abs();
        normalizer = normalizer.max(u0.abs());
        report_points.push(PointResidual {
            t,
            x,
            omega: w0,
            u: u0,
            residual,
        });
    }
    let n = report_points.len() as f64;
    Ok(ResidualReport {
        h,
        threshold: RESIDUAL_THRESHOLD,
        normalizer,
        max_abs,
        mean_abs: sum_abs / n,
        normalized_max: max_abs / normalizer,
        normalized_mean: sum_abs / n / normalizer,
        points: report_points,
    })
}
