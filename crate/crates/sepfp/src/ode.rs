//! Adaptive embedded Runge-Kutta integration (Dormand-Prince 5(4)) for the
//! small fixed-size systems used by the separated equations and the moment
//! flow. Supports forward and backward integration and integration onto a
//! prescribed node grid.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum OdeError {
    #[error("step size underflow at t = {0}")]
    StepSizeUnderflow(f64),
    #[error("step budget exhausted at t = {0}")]
    MaxStepsExceeded(f64),
    #[error("derivative became non-finite at t = {0}")]
    NonFinite(f64),
    #[error("nodes must move strictly away from the start in one direction")]
    BadNodes,
}

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    pub max_step: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-10,
            atol: 1e-12,
            max_steps: 1_000_000,
            max_step: f64::INFINITY,
        }
    }
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrates `y' = f(t, y)` from `(t0, y0)` to `t1` (either direction).
pub fn solve_to<const N: usize, F>(
    f: &F,
    t0: f64,
    y0: [f64; N],
    t1: f64,
    opts: &OdeOptions,
) -> Result<[f64; N], OdeError>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let mut state = Stepper::new(f, t0, y0, opts);
    state.advance_to(t1)?;
    Ok(state.y)
}

/// Integrates from `(t0, y0)` landing exactly on each node in turn; returns
/// the state at every node. Nodes must move monotonically away from `t0`.
pub fn solve_nodes<const N: usize, F>(
    f: &F,
    t0: f64,
    y0: [f64; N],
    nodes: &[f64],
    opts: &OdeOptions,
) -> Result<Vec<[f64; N]>, OdeError>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    if !nodes.is_empty() {
        let dir = (nodes[0] - t0).signum();
        let mut prev = t0;
        for &x in nodes {
            if dir == 0.0 || (x - prev) * dir <= 0.0 {
                return Err(OdeError::BadNodes);
            }
            prev = x;
        }
    }
    let mut state = Stepper::new(f, t0, y0, opts);
    let mut out = Vec::with_capacity(nodes.len());
    for &node in nodes {
        state.advance_to(node)?;
        out.push(state.y);
    }
    Ok(out)
}

struct Stepper<'a, const N: usize, F> {
    f: &'a F,
    t: f64,
    y: [f64; N],
    h: f64,
    opts: &'a OdeOptions,
    steps: usize,
}

impl<'a, const N: usize, F> Stepper<'a, N, F>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    fn new(f: &'a F, t0: f64, y0: [f64; N], opts: &'a OdeOptions) -> Self {
        Stepper {
            f,
            t: t0,
            y: y0,
            h: 0.0,
            opts,
            steps: 0,
        }
    }

    fn advance_to(&mut self, target: f64) -> Result<(), OdeError> {
        let dir = (target - self.t).signum();
        if dir == 0.0 {
            return Ok(());
        }
        if self.h == 0.0 || self.h.signum() != dir {
            self.h = dir
                * ((target - self.t).abs() / 50.0)
                    .min(self.opts.max_step)
                    .max(1e-12);
        }
        while (target - self.t) * dir > 0.0 {
            self.steps += 1;
            if self.steps > self.opts.max_steps {
                return Err(OdeError::MaxStepsExceeded(self.t));
            }
            let mut h = self.h.clamp(-self.opts.max_step, self.opts.max_step);
            let mut hit_target = false;
            if (self.t + h - target) * dir >= 0.0 {
                h = target - self.t;
                hit_target = true;
            }
            let span_floor = 1e-14 * (self.t.abs() + 1.0);
            if h.abs() < span_floor {
                if hit_target {
                    // Remaining gap is below resolution; snap to the target.
                    self.t = target;
                    return Ok(());
                }
                return Err(OdeError::StepSizeUnderflow(self.t));
            }

            let mut k = [[0.0; N]; 7];
            k[0] = (self.f)(self.t, &self.y);
            for stage in 1..7 {
                let mut ys = self.y;
                for (j, kj) in k.iter().enumerate().take(stage) {
                    let a = A[stage][j];
                    if a != 0.0 {
                        for i in 0..N {
                            ys[i] += h * a * kj[i];
                        }
                    }
                }
                k[stage] = (self.f)(self.t + C[stage] * h, &ys);
            }
            let mut y5 = self.y;
            let mut y4 = self.y;
            for (j, kj) in k.iter().enumerate() {
                for i in 0..N {
                    y5[i] += h * B5[j] * kj[i];
                    y4[i] += h * B4[j] * kj[i];
                }
            }
            if y5.iter().any(|v| !v.is_finite()) {
                return Err(OdeError::NonFinite(self.t));
            }
            let mut err_sq = 0.0;
            for i in 0..N {
                let scale = self.opts.atol + self.opts.rtol * self.y[i].abs().max(y5[i].abs());
                let e = (y5[i] - y4[i]) / scale;
                err_sq += e * e;
            }
            let err = (err_sq / N as f64).sqrt();
            if err <= 1.0 {
                self.t += h;
                self.y = y5;
                if hit_target {
                    self.t = target;
                }
            }
            let factor = if err > 0.0 {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            } else {
                5.0
            };
            self.h = h * factor;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exponential_decay() {
        let f = |_t: f64, y: &[f64; 1]| [-2.0 * y[0]];
        let y = solve_to(&f, 0.0, [1.0], 3.0, &OdeOptions::default()).unwrap();
        assert_abs_diff_eq!(y[0], (-6.0f64).exp(), epsilon = 1e-11);
    }

    #[test]
    fn harmonic_oscillator_round_trip() {
        let f = |_t: f64, y: &[f64; 2]| [y[1], -y[0]];
        let opts = OdeOptions {
            rtol: 1e-11,
            atol: 1e-13,
            ..Default::default()
        };
        let tau = 2.0 * std::f64::consts::PI;
        let y = solve_to(&f, 0.0, [1.0, 0.0], 3.0 * tau, &opts).unwrap();
        assert_abs_diff_eq!(y[0], 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(y[1], 0.0, epsilon = 1e-9);
    }

    #[test]
    fn backward_integration() {
        // y' = t y  =>  y(t) = exp(t^2/2 - 1/2) from y(1) = 1; y(-1) = 1.
        let f = |t: f64, y: &[f64; 1]| [t * y[0]];
        let y = solve_to(&f, 1.0, [1.0], -1.0, &OdeOptions::default()).unwrap();
        assert_abs_diff_eq!(y[0], 1.0, epsilon = 1e-10);
    }

    #[test]
    fn node_grid_matches_direct() {
        let f = |t: f64, y: &[f64; 2]| [y[1], -(1.0 + 0.3 * t * t) * y[0]];
        let nodes: Vec<f64> = (1..=20).map(|i| i as f64 * 0.1).collect();
        let at_nodes = solve_nodes(&f, 0.0, [1.0, 0.0], &nodes, &OdeOptions::default()).unwrap();
        for (i, &node) in nodes.iter().enumerate() {
            let direct = solve_to(&f, 0.0, [1.0, 0.0], node, &OdeOptions::default()).unwrap();
            assert_abs_diff_eq!(at_nodes[i][0], direct[0], epsilon = 1e-9);
        }
    }

    #[test]
    fn rejects_non_monotone_nodes() {
        let f = |_t: f64, y: &[f64; 1]| [y[0]];
        assert!(matches!(
            solve_nodes(&f, 0.0, [1.0], &[0.5, 0.2], &OdeOptions::default()),
            Err(OdeError::BadNodes)
        ));
    }

    #[test]
    fn tolerance_controls_error() {
        let f = |_t: f64, y: &[f64; 2]| [y[1], -y[0]];
        let loose = OdeOptions {
            rtol: 1e-6,
            atol: 1e-8,
            ..Default::default()
        };
        let tight = OdeOptions {
            rtol: 1e-12,
            atol: 1e-14,
            ..Default::default()
        };
        let t = 20.0;
        let yl = solve_to(&f, 0.0, [1.0, 0.0], t, &loose).unwrap();
        let yt = solve_to(&f, 0.0, [1.0, 0.0], t, &tight).unwrap();
        let exact = t.cos();
        assert!((yt[0] - exact).abs() < (yl[0] - exact).abs());
        assert!((yt[0] - exact).abs() < 1e-10);
    }
}
