//! Separable Fokker-Planck equations with constant linear drift.
//!
//! The equation under study is
//!
//! ```text
//! u_t + Lap(u) + d/dx_a (B_a(x) u) = 0,     B(x) = M x + v,
//! ```
//!
//! with unit diffusion. This crate decides whether a given drift admits
//! product solutions `u = phi0(t) * phi1(w1) * phi2(w2) * phi3(w3)` in a
//! moving orthogonal frame, enumerates the admissible coordinate systems
//! (eleven in the richest case), constructs the separated solutions, and
//! verifies them: directly against the PDE by finite-difference residuals,
//! and indirectly by Monte Carlo simulation of the associated diffusion.
//!
//! Module map:
//!
//! * [`algebra3`] - fixed-size 3x3 linear algebra, rotations, exponentials.
//! * [`specfun`] - elliptic integrals, Jacobi elliptic functions (including
//!   the two complex argument lines the curvilinear charts need), Bessel J,
//!   associated Legendre P.
//! * [`charts`] - the catalog of eleven separable coordinate systems with
//!   forward maps, Jacobians, Staeckel matrices and sampling.
//! * [`drift`] - classification of a drift matrix against the separable
//!   families and reconstruction of the moving frame.
//! * [`separation`] - separated solutions: the time factor, numerically
//!   integrated spatial factors, coordinate inversion, assembly, and
//!   PDE residual verification.
//! * [`stochastic`] - Euler-Maruyama / exact-Gaussian cross-validation of
//!   the drift model through moment dynamics.
//! * [`rsep`] - the constant-curl necessary condition for R-separability.
//! * [`io`] - JSON/CSV input parsing and deterministic report writers.

// Fixed-size 3x3 loops index both operands, and NaN-rejecting guards use
// negated comparisons on purpose.
#![allow(clippy::needless_range_loop)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra3;
pub mod charts;
pub mod drift;
pub mod io;
pub mod ode;
pub mod rsep;
pub mod separation;
pub mod specfun;
pub mod stochastic;

pub use algebra3::{EulerAngles, Mat3, Vec3};

/// Library version recorded in solution manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
