//! The catalog of eleven separable coordinate systems: forward maps
//! `z(omega)`, analytic Jacobians, Staeckel matrices, split classes, valid
//! ranges, gradient norms, and deterministic in-range sampling.
//!
//! The ellipsoidal and conical charts take two of their coordinates along
//! complex lines (`Re = K` and `Im = K'`); points are stored by the real
//! parameter along those lines and the complex arithmetic stays inside this
//! module. The products of elliptic factors then come out real; the
//! imaginary residue is checked at run time rather than assumed.

use crate::algebra3::{Mat3, Vec3};
use crate::specfun::{jacobi_on_lines, Complex, EllipticModulus, SpecFunError};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ChartError {
    #[error("{chart:?}: omega[{axis}] = {value} outside valid range {range}")]
    OutOfRange {
        chart: ChartId,
        axis: usize,
        value: f64,
        range: &'static str,
    },
    #[error("{chart:?}: coordinate singularity ({detail})")]
    CoordinateSingularity { chart: ChartId, detail: String },
    #[error("{chart:?}: imaginary residue {residue:.3e} exceeds tolerance")]
    ImaginaryResidue { chart: ChartId, residue: f64 },
    #[error("{chart:?}: inversion did not converge (last residual {residual:.3e})")]
    InversionFailed { chart: ChartId, residual: f64 },
    #[error("invalid chart parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    SpecFun(#[from] SpecFunError),
}

/// One of the eleven admissible coordinate systems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChartId {
    Cartesian,
    Cylindrical,
    ParabolicCylindrical,
    EllipticCylindrical,
    Spherical,
    ProlateSpheroidal,
    OblateSpheroidal,
    Parabolic,
    Paraboloidal,
    Ellipsoidal,
    Conical,
}

/// How the diagonal scale factors of the moving frame may differ:
/// completely split allows three independent scales, partially split ties
/// the first two, non-split ties all three.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitClass {
    CompletelySplit,
    PartiallySplit,
    NonSplit,
}

impl SplitClass {
    /// Which spectral parameters couple into the time factor: the pattern
    /// of nonzero time coefficients (1,1,1), (1,0,1), (1,0,0).
    pub fn active_time_couplings(&self) -> [bool; 3] {
        match self {
            SplitClass::CompletelySplit => [true, true, true],
            SplitClass::PartiallySplit => [true, false, true],
            SplitClass::NonSplit => [true, false, false],
        }
    }
}

impl ChartId {
    pub const ALL: [ChartId; 11] = [
        ChartId::Cartesian,
        ChartId::Cylindrical,
        ChartId::ParabolicCylindrical,
        ChartId::EllipticCylindrical,
        ChartId::Spherical,
        ChartId::ProlateSpheroidal,
        ChartId::OblateSpheroidal,
        ChartId::Parabolic,
        ChartId::Paraboloidal,
        ChartId::Ellipsoidal,
        ChartId::Conical,
    ];

    /// Catalog position, 1 through 11.
    pub fn index(&self) -> u8 {
        ChartId::ALL.iter().position(|c| c == self).unwrap() as u8 + 1
    }

    pub fn from_index(i: u8) -> Option<ChartId> {
        ChartId::ALL.get(i.checked_sub(1)? as usize).copied()
    }

    pub fn name(&self) -> &'static str {
        match self {
            ChartId::Cartesian => "cartesian",
            ChartId::Cylindrical => "cylindrical",
            ChartId::ParabolicCylindrical => "parabolic-cylindrical",
            ChartId::EllipticCylindrical => "elliptic-cylindrical",
            ChartId::Spherical => "spherical",
            ChartId::ProlateSpheroidal => "prolate-spheroidal",
            ChartId::OblateSpheroidal => "oblate-spheroidal",
            ChartId::Parabolic => "parabolic",
            ChartId::Paraboloidal => "paraboloidal",
            ChartId::Ellipsoidal => "ellipsoidal",
            ChartId::Conical => "conical",
        }
    }

    /// Parses a chart name or its 1-based index.
    pub fn parse(s: &str) -> Option<ChartId> {
        if let Ok(i) = s.parse::<u8>() {
            return ChartId::from_index(i);
        }
        let lower = s.to_ascii_lowercase().replace('_', "-");
        ChartId::ALL.iter().find(|c| c.name() == lower).copied()
    }

    pub fn split_class(&self) -> SplitClass {
        match self.index() {
            1 => SplitClass::CompletelySplit,
            2..=4 => SplitClass::PartiallySplit,
            _ => SplitClass::NonSplit,
        }
    }

    /// True when the chart formulas use the focal scale `a`.
    pub fn uses_focal_scale(&self) -> bool {
        matches!(
            self,
            ChartId::EllipticCylindrical
                | ChartId::ProlateSpheroidal
                | ChartId::OblateSpheroidal
                | ChartId::Paraboloidal
        )
    }

    /// True when the chart formulas use the elliptic modulus `k`.
    pub fn uses_modulus(&self) -> bool {
        matches!(self, ChartId::Ellipsoidal | ChartId::Conical)
    }
}

/// Free parameters of the catalog: focal scale `a` (charts 4, 6, 7, 9) and
/// elliptic modulus `k` (charts 10, 11).
#[derive(Debug, Clone, Copy)]
pub struct ChartParams {
    a: f64,
    modulus: EllipticModulus,
}

impl ChartParams {
    pub fn new(a: f64, k: f64) -> Result<Self, ChartError> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(ChartError::InvalidParams(format!(
                "focal scale a must be positive, got {a}"
            )));
        }
        Ok(ChartParams {
            a,
            modulus: EllipticModulus::new(k)?,
        })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn modulus(&self) -> &EllipticModulus {
        &self.modulus
    }
}

impl Default for ChartParams {
    fn default() -> Self {
        ChartParams::new(1.0, 0.6).unwrap()
    }
}

/// A point in chart coordinates. For the ellipsoidal and conical charts the
/// components are the real parameters along the complex coordinate lines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmegaPoint(pub [f64; 3]);

impl OmegaPoint {
    pub fn new(w1: f64, w2: f64, w3: f64) -> Self {
        OmegaPoint([w1, w2, w3])
    }
}

/// A chart instance: catalog entry plus parameter values.
#[derive(Debug, Clone, Copy)]
pub struct Chart {
    id: ChartId,
    params: ChartParams,
}

const IMAG_TOL: f64 = 1e-10;

impl Chart {
    pub fn new(id: ChartId, params: ChartParams) -> Chart {
        Chart { id, params }
    }

    pub fn id(&self) -> ChartId {
        self.id
    }

    pub fn params(&self) -> &ChartParams {
        &self.params
    }

    /// Direction signs of the three coordinate lines: -1 where the
    /// coordinate runs along an imaginary direction, +1 otherwise. The
    /// analytic square of a gradient picks up this sign.
    pub fn direction_signs(&self) -> [f64; 3] {
        match self.id {
            ChartId::Ellipsoidal => [1.0, -1.0, 1.0],
            ChartId::Conical => [1.0, 1.0, -1.0],
            _ => [1.0, 1.0, 1.0],
        }
    }

    /// Validates that a point lies in the chart's valid coordinate range.
    pub fn range_check(&self, w: &OmegaPoint) -> Result<(), ChartError> {
        let fail = |axis: usize, range: &'static str| {
            Err(ChartError::OutOfRange {
                chart: self.id,
                axis,
                value: w.0[axis],
                range,
            })
        };
        for (axis, v) in w.0.iter().enumerate() {
            if !v.is_finite() {
                return fail(axis, "finite");
            }
        }
        let m = self.params.modulus;
        let (bk, bkp) = (m.big_k(), m.big_k_prime());
        match self.id {
            ChartId::Cartesian
            | ChartId::Cylindrical
            | ChartId::Parabolic
            | ChartId::Paraboloidal => {}
            ChartId::ParabolicCylindrical | ChartId::EllipticCylindrical => {
                if w.0[0] < 0.0 {
                    return fail(0, "[0, inf)");
                }
            }
            ChartId::Spherical | ChartId::ProlateSpheroidal => {
                if w.0[0] <= 0.0 {
                    return fail(0, "(0, inf)");
                }
            }
            ChartId::OblateSpheroidal => {
                if w.0[0].abs() >= std::f64::consts::FRAC_PI_2 {
                    return fail(0, "(-pi/2, pi/2)");
                }
            }
            ChartId::Ellipsoidal => {
                if w.0[0].abs() > bk {
                    return fail(0, "[-K, K]");
                }
                if w.0[1].abs() > bkp {
                    return fail(1, "[-K', K'] along Re = K");
                }
                if w.0[2].abs() > bk {
                    return fail(2, "[-K, K] along Im = K'");
                }
            }
            ChartId::Conical => {
                if w.0[0] <= 0.0 {
                    return fail(0, "(0, inf)");
                }
                if w.0[1].abs() >= 2.0 * bk {
                    return fail(1, "(-2K, 2K)");
                }
                if !(0.0..2.0 * bkp).contains(&w.0[2]) {
                    return fail(2, "[0, 2K') along Re = K");
                }
            }
        }
        Ok(())
    }

    /// The embedding `z(omega)`. For the complex-line charts the imaginary
    /// parts must cancel; residues above 1e-10 are an internal-consistency
    /// error.
    pub fn forward_map(&self, w: &OmegaPoint) -> Result<Vec3, ChartError> {
        Ok(self.map_and_jacobian(w)?.0)
    }

    /// Analytic Jacobian `dz_i / domega_j`.
    pub fn jacobian(&self, w: &OmegaPoint) -> Result<Mat3, ChartError> {
        let (_, j) = self.map_and_jacobian(w)?;
        let scale = (0..3).map(|i| j.row(i).norm()).fold(1e-300, f64::max);
        if j.det().abs() <= 1e-12 * scale.powi(3) {
            return Err(ChartError::CoordinateSingularity {
                chart: self.id,
                detail: format!("Jacobian singular at {:?}", w.0),
            });
        }
        Ok(j)
    }

    /// Forward map and Jacobian together (one evaluation of the factors).
    pub fn map_and_jacobian(&self, w: &OmegaPoint) -> Result<(Vec3, Mat3), ChartError> {
        self.range_check(w)?;
        let [u1, u2, u3] = w.0;
        let a = self.params.a;
        let (z, j): ([f64; 3], [[f64; 3]; 3]) = match self.id {
            ChartId::Cartesian => ([u1, u2, u3], identity_rows()),
            ChartId::Cylindrical => {
                let (e, s2, c2) = (u1.exp(), u2.sin(), u2.cos());
                (
                    [e * c2, e * s2, u3],
                    [
                        [e * c2, -e * s2, 0.0],
                        [e * s2, e * c2, 0.0],
                        [0.0, 0.0, 1.0],
                    ],
                )
            }
            ChartId::ParabolicCylindrical => (
                [(u1 * u1 - u2 * u2) / 2.0, u1 * u2, u3],
                [[u1, -u2, 0.0], [u2, u1, 0.0], [0.0, 0.0, 1.0]],
            ),
            ChartId::EllipticCylindrical => {
                let (sh, ch) = (u1.sinh(), u1.cosh());
                let (s, c) = u2.sin_cos();
                (
                    [a * ch * c, a * sh * s, u3],
                    [
                        [a * sh * c, -a * ch * s, 0.0],
                        [a * ch * s, a * sh * c, 0.0],
                        [0.0, 0.0, 1.0],
                    ],
                )
            }
            ChartId::Spherical => {
                let sech = 1.0 / u2.cosh();
                let th = u2.tanh();
                let (s3, c3) = u3.sin_cos();
                let r = 1.0 / u1;
                (
                    [r * sech * c3, r * sech * s3, r * th],
                    [
                        [-r * r * sech * c3, -r * sech * th * c3, -r * sech * s3],
                        [-r * r * sech * s3, -r * sech * th * s3, r * sech * c3],
                        [-r * r * th, r * sech * sech, 0.0],
                    ],
                )
            }
            ChartId::ProlateSpheroidal => {
                let csch = 1.0 / u1.sinh();
                let coth = 1.0 / u1.tanh();
                let sech = 1.0 / u2.cosh();
                let th = u2.tanh();
                let (s3, c3) = u3.sin_cos();
                let rad = a * csch * sech;
                (
                    [rad * c3, rad * s3, a * coth * th],
                    [
                        [-rad * coth * c3, -rad * th * c3, -rad * s3],
                        [-rad * coth * s3, -rad * th * s3, rad * c3],
                        [-a * csch * csch * th, a * coth * sech * sech, 0.0],
                    ],
                )
            }
            ChartId::OblateSpheroidal => {
                let sec = 1.0 / u1.cos();
                let tan = u1.tan();
                let sech = 1.0 / u2.cosh();
                let th = u2.tanh();
                let (s3, c3) = u3.sin_cos();
                let rad = a * sec * sech;
                (
                    [rad * c3, rad * s3, a * tan * th],
                    [
                        [rad * tan * c3, -rad * th * c3, -rad * s3],
                        [rad * tan * s3, -rad * th * s3, rad * c3],
                        [a * sec * sec * th, a * tan * sech * sech, 0.0],
                    ],
                )
            }
            ChartId::Parabolic => {
                let e12 = (u1 + u2).exp();
                let (s3, c3) = u3.sin_cos();
                let (e1, e2) = ((2.0 * u1).exp(), (2.0 * u2).exp());
                (
                    [e12 * c3, e12 * s3, (e1 - e2) / 2.0],
                    [
                        [e12 * c3, e12 * c3, -e12 * s3],
                        [e12 * s3, e12 * s3, e12 * c3],
                        [e1, -e2, 0.0],
                    ],
                )
            }
            ChartId::Paraboloidal => {
                let (sh1, ch1) = (u1.sinh(), u1.cosh());
                let (s2, c2) = u2.sin_cos();
                let (sh3, ch3) = (u3.sinh(), u3.cosh());
                (
                    [
                        2.0 * a * ch1 * c2 * sh3,
                        2.0 * a * sh1 * s2 * ch3,
                        a * ((2.0 * u1).cosh() + (2.0 * u2).cos() - (2.0 * u3).cosh()) / 2.0,
                    ],
                    [
                        [
                            2.0 * a * sh1 * c2 * sh3,
                            -2.0 * a * ch1 * s2 * sh3,
                            2.0 * a * ch1 * c2 * ch3,
                        ],
                        [
                            2.0 * a * ch1 * s2 * ch3,
                            2.0 * a * sh1 * c2 * ch3,
                            2.0 * a * sh1 * s2 * sh3,
                        ],
                        [
                            a * (2.0 * u1).sinh(),
                            -a * (2.0 * u2).sin(),
                            -a * (2.0 * u3).sinh(),
                        ],
                    ],
                )
            }
            ChartId::Ellipsoidal | ChartId::Conical => return self.elliptic_map_and_jacobian(w),
        };
        Ok((Vec3(z), Mat3(j)))
    }

    /// Shared evaluation for the two elliptic-function charts: complex
    /// products with the imaginary residue check.
    fn elliptic_map_and_jacobian(&self, w: &OmegaPoint) -> Result<(Vec3, Mat3), ChartError> {
        let m = &self.params.modulus;
        let k = m.k();
        let kp = m.k_prime();
        let [u1, u2, u3] = w.0;

        // Per-axis complex arguments, direction factors d(omega)/du, and the
        // elliptic factor values with their derivatives.
        struct Axis {
            eps: Complex,
            sn: Complex,
            cn: Complex,
            dn: Complex,
        }
        let build = |u: Complex, eps: Complex| -> Result<Axis, ChartError> {
            let (sn, cn, dn) = jacobi_on_lines(u, m)?;
            Ok(Axis { eps, sn, cn, dn })
        };

        match self.id {
            ChartId::Ellipsoidal => {
                let axes = [
                    build(Complex::real(u1), Complex::real(1.0))?,
                    build(Complex::new(m.big_k(), u2), Complex::I)?,
                    build(Complex::new(u3, m.big_k_prime()), Complex::real(1.0))?,
                ];
                let pre = [
                    Complex::I.scale(1.0 / (k * kp)),
                    Complex::real(-k / kp),
                    Complex::real(k),
                ];
                let factor = |ax: &Axis, which: usize| match which {
                    0 => ax.dn,
                    1 => ax.cn,
                    _ => ax.sn,
                };
                // d/domega: dn' = -k^2 sn cn, cn' = -sn dn, sn' = cn dn.
                let dfactor = |ax: &Axis, which: usize| match which {
                    0 => (ax.sn * ax.cn).scale(-k * k),
                    1 => -(ax.sn * ax.dn),
                    _ => ax.cn * ax.dn,
                };
                let mut z = [Complex::default(); 3];
                let mut jac = [[Complex::default(); 3]; 3];
                for (i, which) in [0usize, 1, 2].into_iter().enumerate() {
                    z[i] = pre[i]
                        * factor(&axes[0], which)
                        * factor(&axes[1], which)
                        * factor(&axes[2], which);
                    for a in 0..3 {
                        let mut term = pre[i] * axes[a].eps * dfactor(&axes[a], which);
                        for (b, ax) in axes.iter().enumerate() {
                            if b != a {
                                term = term * factor(ax, which);
                            }
                        }
                        jac[i][a] = term;
                    }
                }
                self.realize(z, jac)
            }
            ChartId::Conical => {
                let axes = [
                    build(Complex::real(u2), Complex::real(1.0))?,
                    build(Complex::new(m.big_k(), u3), Complex::I)?,
                ];
                let pre = [
                    Complex::real(1.0 / kp),
                    Complex::I.scale(k / kp),
                    Complex::real(k),
                ];
                let factor = |ax: &Axis, which: usize| match which {
                    0 => ax.dn,
                    1 => ax.cn,
                    _ => ax.sn,
                };
                let dfactor = |ax: &Axis, which: usize| match which {
                    0 => (ax.sn * ax.cn).scale(-k * k),
                    1 => -(ax.sn * ax.dn),
                    _ => ax.cn * ax.dn,
                };
                let inv_r = 1.0 / u1;
                let mut z = [Complex::default(); 3];
                let mut jac = [[Complex::default(); 3]; 3];
                for (i, which) in [0usize, 1, 2].into_iter().enumerate() {
                    let g = pre[i] * factor(&axes[0], which) * factor(&axes[1], which);
                    z[i] = g.scale(inv_r);
                    jac[i][0] = g.scale(-inv_r * inv_r);
                    jac[i][1] =
                        (pre[i] * axes[0].eps * dfactor(&axes[0], which) * factor(&axes[1], which))
                            .scale(inv_r);
                    jac[i][2] =
                        (pre[i] * axes[1].eps * factor(&axes[0], which) * dfactor(&axes[1], which))
                            .scale(inv_r);
                }
                self.realize(z, jac)
            }
            _ => unreachable!("only the elliptic charts route here"),
        }
    }

    fn realize(&self, z: [Complex; 3], jac: [[Complex; 3]; 3]) -> Result<(Vec3, Mat3), ChartError> {
        let mut zr = [0.0; 3];
        let mut jr = [[0.0; 3]; 3];
        for i in 0..3 {
            let resid = z[i].im.abs();
            if resid > IMAG_TOL * (1.0 + z[i].re.abs()) {
                return Err(ChartError::ImaginaryResidue {
                    chart: self.id,
                    residue: resid,
                });
            }
            zr[i] = z[i].re;
            for a in 0..3 {
                let resid = jac[i][a].im.abs();
                if resid > IMAG_TOL * (1.0 + jac[i][a].re.abs()) {
                    return Err(ChartError::ImaginaryResidue {
                        chart: self.id,
                        residue: resid,
                    });
                }
                jr[i][a] = jac[i][a].re;
            }
        }
        Ok((Vec3(zr), Mat3(jr)))
    }

    /// One row of the Staeckel matrix; row `axis` depends only on the
    /// coordinate of that axis.
    pub fn stackel_row(&self, axis: usize, v: f64) -> Result<[f64; 3], ChartError> {
        assert!(axis < 3);
        let a = self.params.a;
        let m = &self.params.modulus;
        let k = m.k();
        let row = match (self.id, axis) {
            (ChartId::Cartesian, _) => {
                let mut r = [0.0; 3];
                r[axis] = 1.0;
                r
            }
            (ChartId::Cylindrical, 0) => [(2.0 * v).exp(), -1.0, 0.0],
            (ChartId::Cylindrical, 1) => [0.0, 1.0, 0.0],
            (ChartId::Cylindrical, 2) => [0.0, 0.0, 1.0],
            (ChartId::ParabolicCylindrical, 0) => [v * v, -1.0, 0.0],
            (ChartId::ParabolicCylindrical, 1) => [v * v, 1.0, 0.0],
            (ChartId::ParabolicCylindrical, 2) => [0.0, 0.0, 1.0],
            (ChartId::EllipticCylindrical, 0) => [(a * v.cosh()).powi(2), 1.0, 0.0],
            (ChartId::EllipticCylindrical, 1) => [-(a * v.cos()).powi(2), -1.0, 0.0],
            (ChartId::EllipticCylindrical, 2) => [0.0, 0.0, 1.0],
            (ChartId::Spherical, 0) => [v.powi(-4), -v.powi(-2), 0.0],
            (ChartId::Spherical, 1) => [0.0, v.cosh().powi(-2), -1.0],
            (ChartId::Spherical, 2) => [0.0, 0.0, 1.0],
            (ChartId::ProlateSpheroidal, 0) => {
                let s = v.sinh();
                [a * a * s.powi(-4), -s.powi(-2), -1.0]
            }
            (ChartId::ProlateSpheroidal, 1) => {
                let c = v.cosh();
                [a * a * c.powi(-4), c.powi(-2), -1.0]
            }
            (ChartId::ProlateSpheroidal, 2) => [0.0, 0.0, 1.0],
            (ChartId::OblateSpheroidal, 0) => {
                let c = v.cos();
                [a * a * c.powi(-4), -c.powi(-2), 1.0]
            }
            (ChartId::OblateSpheroidal, 1) => {
                let c = v.cosh();
                [-a * a * c.powi(-4), c.powi(-2), -1.0]
            }
            (ChartId::OblateSpheroidal, 2) => [0.0, 0.0, 1.0],
            (ChartId::Parabolic, 0) => [(4.0 * v).exp(), -(2.0 * v).exp(), -1.0],
            (ChartId::Parabolic, 1) => [(4.0 * v).exp(), (2.0 * v).exp(), -1.0],
            (ChartId::Parabolic, 2) => [0.0, 0.0, 1.0],
            (ChartId::Paraboloidal, 0) => {
                let c = (2.0 * v).cosh();
                [a * a * c * c, -a * c, -1.0]
            }
            (ChartId::Paraboloidal, 1) => {
                let c = (2.0 * v).cos();
                [-a * a * c * c, a * c, 1.0]
            }
            (ChartId::Paraboloidal, 2) => {
                let c = (2.0 * v).cosh();
                [a * a * c * c, a * c, -1.0]
            }
            (ChartId::Ellipsoidal, _) => {
                let u = match axis {
                    0 => Complex::real(v),
                    1 => Complex::new(m.big_k(), v),
                    _ => Complex::new(v, m.big_k_prime()),
                };
                let (sn, _, _) = jacobi_on_lines(u, m)?;
                let sn2 = sn * sn;
                let resid = sn2.im.abs();
                if resid > IMAG_TOL * (1.0 + sn2.re.abs()) {
                    return Err(ChartError::ImaginaryResidue {
                        chart: self.id,
                        residue: resid,
                    });
                }
                let s2 = sn2.re;
                [k * k * s2 * s2, k * k * s2, k * k]
            }
            (ChartId::Conical, 0) => [v.powi(-4), -v.powi(-2), 0.0],
            (ChartId::Conical, _) => {
                let u = match axis {
                    1 => Complex::real(v),
                    _ => Complex::new(m.big_k(), v),
                };
                let (sn, _, _) = jacobi_on_lines(u, m)?;
                let sn2 = sn * sn;
                let resid = sn2.im.abs();
                if resid > IMAG_TOL * (1.0 + sn2.re.abs()) {
                    return Err(ChartError::ImaginaryResidue {
                        chart: self.id,
                        residue: resid,
                    });
                }
                [0.0, -k * k * sn2.re, 1.0]
            }
            _ => unreachable!(),
        };
        Ok(row)
    }

    /// The full Staeckel matrix at a point; entry `(i, j)` is `F_ij(omega_i)`.
    pub fn stackel_matrix(&self, w: &OmegaPoint) -> Result<Mat3, ChartError> {
        self.range_check(w)?;
        let mut out = [[0.0; 3]; 3];
        for (axis, row) in out.iter_mut().enumerate() {
            *row = self.stackel_row(axis, w.0[axis])?;
        }
        Ok(Mat3(out))
    }

    /// Analytic squares of the coordinate gradients in embedding space,
    /// `(grad omega_i)^2`: signed squared row norms of the inverse Jacobian
    /// (negative along imaginary coordinate lines).
    pub fn grad_norms(&self, w: &OmegaPoint) -> Result<Vec3, ChartError> {
        let j = self.jacobian(w)?;
        let jinv = j.inverse().map_err(|_| ChartError::CoordinateSingularity {
            chart: self.id,
            detail: format!("Jacobian not invertible at {:?}", w.0),
        })?;
        let sig = self.direction_signs();
        let mut g = [0.0; 3];
        for (i, gi) in g.iter_mut().enumerate() {
            let r = jinv.row(i);
            *gi = sig[i] * r.dot(&r);
        }
        Ok(Vec3(g))
    }

    /// Maximum absolute off-diagonal entry of `(J^-1)(J^-1)^T`; measures the
    /// failure of coordinate orthogonality and should vanish for every chart.
    pub fn orthogonality_defect(&self, w: &OmegaPoint) -> Result<f64, ChartError> {
        let j = self.jacobian(w)?;
        let jinv = j.inverse().map_err(|_| ChartError::CoordinateSingularity {
            chart: self.id,
            detail: format!("Jacobian not invertible at {:?}", w.0),
        })?;
        let g = jinv * jinv.transpose();
        let mut worst = 0.0f64;
        for i in 0..3 {
            for jj in 0..3 {
                if i != jj {
                    worst = worst.max(g[i][jj].abs());
                }
            }
        }
        Ok(worst)
    }

    /// Numeric Laplacian (in embedding space) of each coordinate function,
    /// by second-order central differences on the inverted map. All eleven
    /// charts are gauge-fixed so these vanish; values are finite-difference
    /// noise.
    pub fn laplacian_defect(&self, w: &OmegaPoint) -> Result<Vec3, ChartError> {
        self.laplacian_defect_with_step(w, 4e-4)
    }

    pub fn laplacian_defect_with_step(&self, w: &OmegaPoint, h: f64) -> Result<Vec3, ChartError> {
        let z0 = self.forward_map(w)?;
        let mut acc = [0.0; 3];
        for j in 0..3 {
            for sign in [-1.0, 1.0] {
                let mut z = z0;
                z[j] += sign * h;
                let winv = self.invert_local(&z, w, 1e-13)?;
                for a in 0..3 {
                    acc[a] += winv.0[a];
                }
            }
        }
        let mut out = [0.0; 3];
        for a in 0..3 {
            out[a] = (acc[a] - 6.0 * w.0[a]) / (h * h);
        }
        Ok(Vec3(out))
    }

    /// Newton inversion of the chart map (identity frame): finds `omega`
    /// with `z(omega) = z`, starting from `guess`.
    pub(crate) fn invert_local(
        &self,
        z: &Vec3,
        guess: &OmegaPoint,
        tol: f64,
    ) -> Result<OmegaPoint, ChartError> {
        let mut w = *guess;
        let scale = 1.0 + z.norm();
        let mut resid = f64::INFINITY;
        for _ in 0..50 {
            let (zw, jac) = self.map_and_jacobian(&w)?;
            let r = *z - zw;
            resid = r.norm();
            if resid <= tol * scale {
                return Ok(w);
            }
            let jinv = jac
                .inverse()
                .map_err(|_| ChartError::CoordinateSingularity {
                    chart: self.id,
                    detail: "singular Jacobian during inversion".into(),
                })?;
            let mut step = jinv * r;
            // Damped update: halve the step until the residual decreases.
            let mut improved = false;
            for _ in 0..8 {
                let cand = OmegaPoint([w.0[0] + step[0], w.0[1] + step[1], w.0[2] + step[2]]);
                let cand = self.clamp_into_range(cand);
                match self.forward_map(&cand) {
                    Ok(zc) if (*z - zc).norm() < resid => {
                        w = cand;
                        improved = true;
                        break;
                    }
                    _ => step = step.scale(0.5),
                }
            }
            if !improved {
                break;
            }
        }
        // One more check: the last iterate may already satisfy the bound.
        if let Ok(zw) = self.forward_map(&w) {
            if (*z - zw).norm() <= tol * scale {
                return Ok(w);
            }
        }
        Err(ChartError::InversionFailed {
            chart: self.id,
            residual: resid,
        })
    }

    /// Keeps Newton iterates inside the open validity region.
    fn clamp_into_range(&self, w: OmegaPoint) -> OmegaPoint {
        let mut w = w.0;
        let m = self.params.modulus;
        let (bk, bkp) = (m.big_k(), m.big_k_prime());
        let eps = 1e-9;
        match self.id {
            ChartId::ParabolicCylindrical | ChartId::EllipticCylindrical => {
                w[0] = w[0].max(0.0);
            }
            ChartId::Spherical | ChartId::ProlateSpheroidal => {
                w[0] = w[0].max(eps);
            }
            ChartId::OblateSpheroidal => {
                let lim = std::f64::consts::FRAC_PI_2 - eps;
                w[0] = w[0].clamp(-lim, lim);
            }
            ChartId::Ellipsoidal => {
                w[0] = w[0].clamp(-bk, bk);
                w[1] = w[1].clamp(-bkp, bkp);
                w[2] = w[2].clamp(-bk, bk);
            }
            ChartId::Conical => {
                w[0] = w[0].max(eps);
                w[1] = w[1].clamp(-2.0 * bk + eps, 2.0 * bk - eps);
                w[2] = w[2].clamp(0.0, 2.0 * bkp - eps);
            }
            _ => {}
        }
        OmegaPoint(w)
    }

    /// Closed-form inverse of the chart map where one exists (charts with
    /// logarithm/arctangent inverses); `None` for the others.
    pub fn closed_form_inverse(&self, z: &Vec3) -> Option<Result<OmegaPoint, ChartError>> {
        let sing = |detail: &str| {
            Err(ChartError::CoordinateSingularity {
                chart: self.id,
                detail: detail.to_string(),
            })
        };
        match self.id {
            ChartId::Cartesian => Some(Ok(OmegaPoint(z.0))),
            ChartId::Cylindrical => {
                let r2 = z[0] * z[0] + z[1] * z[1];
                if r2 <= 0.0 {
                    return Some(sing("cylindrical axis"));
                }
                Some(Ok(OmegaPoint([0.5 * r2.ln(), z[1].atan2(z[0]), z[2]])))
            }
            ChartId::ParabolicCylindrical => {
                let m = z[0].hypot(z[1]);
                let w1 = (m + z[0]).max(0.0).sqrt();
                if w1 <= 0.0 {
                    return Some(sing("parabolic-cylindrical ridge"));
                }
                Some(Ok(OmegaPoint([w1, z[1] / w1, z[2]])))
            }
            ChartId::Spherical => {
                let r = z.norm();
                if r <= 0.0 {
                    return Some(sing("origin"));
                }
                let ratio = z[2] / r;
                if ratio.abs() >= 1.0 {
                    return Some(sing("polar axis"));
                }
                Some(Ok(OmegaPoint([1.0 / r, ratio.atanh(), z[1].atan2(z[0])])))
            }
            _ => None,
        }
    }

    /// The box used by [`Chart::sample_domain`]: inside the valid range and
    /// at least 0.05 away from the singular loci in every coordinate.
    pub fn sampling_box(&self) -> [(f64, f64); 3] {
        let m = self.params.modulus;
        let (bk, bkp) = (m.big_k(), m.big_k_prime());
        // Boxes sit inside the valid ranges and keep enough distance from
        // the singular loci, measured in embedding space, that the
        // finite-difference checks stay well conditioned. Near focal points
        // and umbilics the embedding distance shrinks quadratically with
        // the chart-coordinate distance, hence the generous margins.
        match self.id {
            ChartId::Cartesian => [(-1.0, 1.0); 3],
            ChartId::Cylindrical => [(-0.8, 0.8), (-3.0, 3.0), (-1.0, 1.0)],
            ChartId::ParabolicCylindrical => [(0.7, 1.6), (-1.5, 1.5), (-1.0, 1.0)],
            ChartId::EllipticCylindrical => [(0.7, 1.4), (-3.0, 3.0), (-1.0, 1.0)],
            ChartId::Spherical => [(0.4, 1.8), (-1.2, 1.2), (-3.0, 3.0)],
            ChartId::ProlateSpheroidal => [(0.3, 1.2), (-1.2, 1.2), (-3.0, 3.0)],
            ChartId::OblateSpheroidal => [(0.7, 1.3), (-1.2, 1.2), (-3.0, 3.0)],
            ChartId::Parabolic => [(-0.8, 0.8), (-0.8, 0.8), (-3.0, 3.0)],
            ChartId::Paraboloidal => [(0.4, 1.0), (0.5, 1.2), (0.4, 1.0)],
            ChartId::Ellipsoidal => [(0.3, 0.75 * bk), (0.35, bkp - 0.4), (0.35, bk - 0.35)],
            ChartId::Conical => [(0.4, 1.6), (0.35, bk - 0.6), (0.7, 2.0 * bkp - 0.7)],
        }
    }

    /// Deterministic pseudo-random in-range points, bounded away from the
    /// singular loci.
    pub fn sample_domain(&self, n: usize, seed: u64) -> Vec<OmegaPoint> {
        let mixed = seed ^ (self.id.index() as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        let mut rng = ChaCha8Rng::seed_from_u64(mixed);
        let cube = self.sampling_box();
        (0..n)
            .map(|_| {
                let mut w = [0.0; 3];
                for (c, (lo, hi)) in w.iter_mut().zip(cube.iter()) {
                    *c = rng.random_range(*lo..*hi);
                }
                OmegaPoint(w)
            })
            .collect()
    }

    /// Human-readable description of the valid coordinate ranges.
    pub fn range_description(&self) -> String {
        match self.id {
            ChartId::Cartesian
            | ChartId::Cylindrical
            | ChartId::Parabolic
            | ChartId::Paraboloidal => "w1, w2, w3 real".to_string(),
            ChartId::ParabolicCylindrical | ChartId::EllipticCylindrical => {
                "w1 >= 0; w2, w3 real".to_string()
            }
            ChartId::Spherical | ChartId::ProlateSpheroidal => "w1 > 0; w2, w3 real".to_string(),
            ChartId::OblateSpheroidal => "|w1| < pi/2; w2, w3 real".to_string(),
            ChartId::Ellipsoidal => {
                "w1 in [-K, K]; w2 = K + i u2, u2 in [-K', K']; w3 = u3 + i K', u3 in [-K, K]"
                    .to_string()
            }
            ChartId::Conical => {
                "w1 > 0; w2 in (-2K, 2K); w3 = K + i u3, u3 in [0, 2K')".to_string()
            }
        }
    }
}

fn identity_rows() -> [[f64; 3]; 3] {
    [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
}
