//! Classification of a constant linear drift `B(x) = M x + v` against the
//! separable families, reconstruction of canonical parameters, the
//! admissible-chart table, and the time-dependent moving frame
//! `x = T(t) H(t) z(omega) + w(t)`.
//!
//! A drift is separable exactly when `M` decomposes as
//! `M = rot * (b * G(s)) * rot^T + sym` with `G` the constant spin
//! generator and `sym` a compatible symmetric part. Splitting `M` into
//! symmetric and antisymmetric parts decides everything:
//!
//! * antisymmetric part zero: `M` symmetric - case decided by eigenvalue
//!   multiplicities (distinct / doubled / isotropic);
//! * antisymmetric part nonzero and symmetric part a multiple of the
//!   identity: rotating isotropic;
//! * antisymmetric part nonzero, symmetric part with a doubled eigenvalue
//!   whose simple eigenvector is parallel to the rotation axis: rotating
//!   axial;
//! * anything else is not separable.

use crate::algebra3::{
    self, antisym_axis, exp_integral, mat_exp, rotation_between, spin_generator, spin_rotation,
    sym_antisym_split, symmetric_eigen, Algebra3Error, EulerAngles, Mat3, Vec3,
};
use crate::charts::ChartId;
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DriftError {
    #[error("tolerance must be positive, got {0}")]
    NonPositiveTolerance(f64),
    #[error("drift entries must be finite")]
    NonFinite,
    #[error("drift is not separable; no canonical form exists")]
    NotSeparable,
    #[error("scale constants must be positive, got {0:?}")]
    InvalidScales([f64; 3]),
    #[error(
        "classification does not reconstruct the drift matrix \
         (residual {residual:.3e}); classify the same drift first"
    )]
    FrameMismatch { residual: f64 },
    #[error("angle path too short after excluding gimbal samples")]
    PathTooShort,
    #[error(transparent)]
    Algebra(#[from] Algebra3Error),
}

/// A constant-coefficient drift field `B(x) = M x + v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftSpec {
    pub m: Mat3,
    pub v: Vec3,
}

impl DriftSpec {
    pub fn new(m: Mat3, v: Vec3) -> Result<Self, DriftError> {
        if !m.is_finite() || !v.is_finite() {
            return Err(DriftError::NonFinite);
        }
        Ok(DriftSpec { m, v })
    }

    pub fn eval(&self, x: &Vec3) -> Vec3 {
        self.m * *x + self.v
    }
}

/// Separability verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriftCase {
    /// Symmetric `M` with three distinct eigenvalues.
    SymmetricDistinct,
    /// Symmetric `M` with a doubled and a simple eigenvalue.
    SymmetricDoubled,
    /// `M` a multiple of the identity.
    Isotropic,
    /// Nonzero spin with isotropic symmetric part.
    RotatingIsotropic,
    /// Nonzero spin about the simple axis of a doubled symmetric part.
    RotatingAxial,
    NotSeparable,
}

impl DriftCase {
    pub fn name(&self) -> &'static str {
        match self {
            DriftCase::SymmetricDistinct => "symmetric-distinct",
            DriftCase::SymmetricDoubled => "symmetric-doubled",
            DriftCase::Isotropic => "isotropic",
            DriftCase::RotatingIsotropic => "rotating-isotropic",
            DriftCase::RotatingAxial => "rotating-axial",
            DriftCase::NotSeparable => "not-separable",
        }
    }
}

/// The inner alignment rotation of the frame factorization
/// `T(t) = rotation * spin_rotation(b, s, t) * alignment`.
///
/// For the rotating-axial case only the special one-parameter family keeps
/// the frame consistent; it is stored by its signs and angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlignmentData {
    Full(Mat3),
    Axial { eps1: i8, eps2: i8, theta: f64 },
}

impl AlignmentData {
    pub fn matrix(&self) -> Mat3 {
        match self {
            AlignmentData::Full(m) => *m,
            AlignmentData::Axial { eps1, eps2, theta } => {
                let (e1, e2) = (*eps1 as f64, *eps2 as f64);
                let (st, ct) = theta.sin_cos();
                Mat3::from_rows(
                    [e1 * ct, -e1 * st, 0.0],
                    [0.0, 0.0, -e1 * e2],
                    [e2 * st, e2 * ct, 0.0],
                )
            }
        }
    }
}

/// Canonical parameters of a separable drift.
#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub case: DriftCase,
    /// Outer orthogonal conjugation (proper rotation).
    pub rotation: Mat3,
    /// Inner alignment rotation.
    pub alignment: AlignmentData,
    /// Spin rate, canonicalized to be >= 0.
    pub spin_rate: f64,
    /// Spin phase, canonicalized to 0.
    pub spin_phase: f64,
    /// Exponential growth rates of the scale factors (doubled rate in
    /// slots 1-2 for the doubled cases).
    pub rates: Vec3,
    /// Scale constants, all positive; default 1.
    pub scales: Vec3,
    /// Near-boundary observations: conditions decided within a factor 10
    /// of the tolerance.
    pub borderline: Vec<String>,
}

impl Classification {
    fn unseparable(borderline: Vec<String>) -> Self {
        Classification {
            case: DriftCase::NotSeparable,
            rotation: Mat3::identity(),
            alignment: AlignmentData::Full(Mat3::identity()),
            spin_rate: 0.0,
            spin_phase: 0.0,
            rates: Vec3::ZERO,
            scales: Vec3::new(1.0, 1.0, 1.0),
            borderline,
        }
    }

    /// Replaces the scale constants. They must be positive; chart
    /// compatibility is enforced per chart by [`admissible_charts`].
    pub fn with_scales(mut self, scales: Vec3) -> Result<Self, DriftError> {
        if !(scales[0] > 0.0 && scales[1] > 0.0 && scales[2] > 0.0) || !scales.is_finite() {
            return Err(DriftError::InvalidScales(scales.0));
        }
        self.scales = scales;
        Ok(self)
    }

    pub fn is_separable(&self) -> bool {
        self.case != DriftCase::NotSeparable
    }
}

/// The moving frame evaluated at one time.
#[derive(Debug, Clone, Copy)]
pub struct FrameAtTime {
    pub t: f64,
    /// Orthogonal part `T(t)`.
    pub rotation: Mat3,
    /// Diagonal entries of `H(t)`, all positive.
    pub scaling: Vec3,
    /// Translation `w(t)`.
    pub offset: Vec3,
}

impl FrameAtTime {
    pub fn scaling_matrix(&self) -> Mat3 {
        Mat3::diag(self.scaling[0], self.scaling[1], self.scaling[2])
    }

    /// Embeds a chart-space point: `x = T H z + w`.
    pub fn embed(&self, z: &Vec3) -> Vec3 {
        self.rotation * (self.scaling_matrix() * *z) + self.offset
    }

    /// Pulls a lab point back to chart space: `z = H^-1 T^T (x - w)`.
    pub fn pull_back(&self, x: &Vec3) -> Vec3 {
        let d = self.rotation.transpose() * (*x - self.offset);
        Vec3::new(
            d[0] / self.scaling[0],
            d[1] / self.scaling[1],
            d[2] / self.scaling[2],
        )
    }
}

/// Decides separability of the drift and extracts canonical parameters.
///
/// The decision procedure splits `M` into symmetric and antisymmetric
/// parts and branches on eigenvalue multiplicities and the axis-alignment
/// criterion. Quantities decided within a factor 10 of `tol` are recorded
/// as borderline warnings.
pub fn classify(spec: &DriftSpec, tol: f64) -> Result<Classification, DriftError> {
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(DriftError::NonPositiveTolerance(tol));
    }
    if !spec.m.is_finite() {
        return Err(DriftError::NonFinite);
    }
    let m = spec.m;
    let scale = 1.0 + m.max_abs();
    let tol_abs = tol * scale;
    let (sym, anti) = sym_antisym_split(&m);
    let anorm = anti.max_abs();
    let mut borderline = Vec::new();
    let mut flag = |name: &str, q: f64| {
        if q > 0.1 * tol_abs && q <= 10.0 * tol_abs {
            borderline.push(format!("{name} = {q:.3e} within 10x of tolerance"));
        }
    };
    flag("antisymmetric part", anorm);

    if anorm <= tol_abs {
        // Symmetric family: case (b = 0).
        let eig = symmetric_eigen(&sym, tol.max(1e-14))?;
        let vals = eig.eigenvalues;
        flag("eigenvalue gap 01", vals[1] - vals[0]);
        flag("eigenvalue gap 12", vals[2] - vals[1]);
        let clusters = eig.clusters(tol_abs);
        let (case, rates, q) = match clusters.len() {
            1 => {
                let mean = m.trace() / 3.0;
                (
                    DriftCase::Isotropic,
                    Vec3::new(mean, mean, mean),
                    Mat3::identity(),
                )
            }
            2 => {
                // Doubled pair into slots 1-2, simple into slot 3.
                let (pair, single) = if clusters[0].len() == 2 {
                    (&clusters[0], clusters[1][0])
                } else {
                    (&clusters[1], clusters[0][0])
                };
                let doubled = 0.5 * (vals[pair[0]] + vals[pair[1]]);
                let mut q = Mat3::ZERO;
                q.set_col(0, &eig.eigenvectors.col(pair[0]));
                q.set_col(1, &eig.eigenvectors.col(pair[1]));
                q.set_col(2, &eig.eigenvectors.col(single));
                if q.det() < 0.0 {
                    let flipped = -q.col(2);
                    q.set_col(2, &flipped);
                }
                (
                    DriftCase::SymmetricDoubled,
                    Vec3::new(doubled, doubled, vals[single]),
                    q,
                )
            }
            _ => (DriftCase::SymmetricDistinct, Vec3(vals), eig.eigenvectors),
        };
        return Ok(Classification {
            case,
            rotation: q,
            // spin_rotation(0, 0, 0) is an orthogonal involution, so using
            // it as the alignment makes T(t) equal the eigenvector frame.
            alignment: AlignmentData::Full(spin_rotation(0.0, 0.0, 0.0)),
            spin_rate: 0.0,
            spin_phase: 0.0,
            rates,
            scales: Vec3::new(1.0, 1.0, 1.0),
            borderline,
        });
    }

    // Rotating family: b != 0.
    let axis = antisym_axis(&anti)?;
    let b = axis.norm();
    let spin_dir = axis.scale(-1.0 / b);
    let mean = sym.trace() / 3.0;
    let iso_defect = (sym - Mat3::diag(mean, mean, mean)).max_abs();
    flag("symmetric-part anisotropy", iso_defect);
    if iso_defect <= tol_abs {
        return Ok(Classification {
            case: DriftCase::RotatingIsotropic,
            rotation: rotation_between(&Vec3::new(0.0, 0.0, 1.0), &spin_dir),
            alignment: AlignmentData::Full(Mat3::identity()),
            spin_rate: b,
            spin_phase: 0.0,
            rates: Vec3::new(mean, mean, mean),
            scales: Vec3::new(1.0, 1.0, 1.0),
            borderline,
        });
    }

    let eig = symmetric_eigen(&sym, tol.max(1e-14))?;
    let vals = eig.eigenvalues;
    flag("eigenvalue gap 01", vals[1] - vals[0]);
    flag("eigenvalue gap 12", vals[2] - vals[1]);
    let clusters = eig.clusters(tol_abs);
    if clusters.len() != 2 {
        return Ok(Classification::unseparable(borderline));
    }
    let (pair, single) = if clusters[0].len() == 2 {
        (&clusters[0], clusters[1][0])
    } else {
        (&clusters[1], clusters[0][0])
    };
    let doubled = 0.5 * (vals[pair[0]] + vals[pair[1]]);
    let simple_vec = eig.eigenvectors.col(single);
    // The spin axis must be parallel to the simple eigenvector.
    let misalignment = b * spin_dir.cross(&simple_vec).norm();
    flag("spin-axis misalignment", misalignment);
    if misalignment > tol_abs {
        return Ok(Classification::unseparable(borderline));
    }
    Ok(Classification {
        case: DriftCase::RotatingAxial,
        rotation: rotation_between(&Vec3::new(0.0, 0.0, 1.0), &spin_dir),
        alignment: AlignmentData::Axial {
            eps1: 1,
            eps2: 1,
            theta: 0.0,
        },
        spin_rate: b,
        spin_phase: 0.0,
        rates: Vec3::new(doubled, doubled, vals[single]),
        scales: Vec3::new(1.0, 1.0, 1.0),
        borderline,
    })
}

/// Rebuilds the drift matrix from canonical parameters:
/// antisymmetric part `rot * b G(s) * rot^T` plus the symmetric part
/// conjugated through the frame at time zero.
pub fn reconstruct(class: &Classification) -> Result<Mat3, DriftError> {
    if class.case == DriftCase::NotSeparable {
        return Err(DriftError::NotSeparable);
    }
    let c1 = class.rotation;
    let t0 = c1 * spin_rotation(class.spin_rate, class.spin_phase, 0.0) * class.alignment.matrix();
    let anti = c1 * spin_generator(class.spin_phase).scale(class.spin_rate) * c1.transpose();
    let l = Mat3::diag(class.rates[0], class.rates[1], class.rates[2]);
    Ok(anti + t0 * l * t0.transpose())
}

/// The admissible coordinate systems for a classified drift, intersected
/// with what the scale constants allow (partially split charts need
/// `c1 = c2`, non-split charts need `c1 = c2 = c3`).
pub fn admissible_charts(class: &Classification) -> Result<Vec<ChartId>, DriftError> {
    let by_case: &[u8] = match class.case {
        DriftCase::NotSeparable => return Err(DriftError::NotSeparable),
        DriftCase::SymmetricDistinct => &[1],
        DriftCase::SymmetricDoubled | DriftCase::RotatingAxial => &[1, 2, 3, 4],
        DriftCase::Isotropic | DriftCase::RotatingIsotropic => &[1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11],
    };
    let c = class.scales;
    let tol = 1e-12 * (1.0 + c.max_abs());
    let first_pair = (c[0] - c[1]).abs() <= tol;
    let all_equal = first_pair && (c[1] - c[2]).abs() <= tol;
    Ok(by_case
        .iter()
        .filter_map(|&i| ChartId::from_index(i))
        .filter(|id| match id.index() {
            1 => true,
            2..=4 => first_pair,
            _ => all_equal,
        })
        .collect())
}

/// Default resting offset: the fixed point `-M^-1 v` when `M` is
/// invertible, the origin otherwise.
pub fn default_offset(spec: &DriftSpec) -> Vec3 {
    let m = spec.m;
    if m.det().abs() > 1e-12 * (1.0 + m.norm_inf()).powi(3) {
        if let Ok(inv) = m.inverse() {
            return -(inv * spec.v);
        }
    }
    Vec3::ZERO
}

/// The moving frame of a classified drift.
#[derive(Debug, Clone)]
pub struct MovingFrame {
    class: Classification,
    spec: DriftSpec,
    w0: Vec3,
}

impl MovingFrame {
    pub fn new(
        class: &Classification,
        spec: &DriftSpec,
        w0: Option<Vec3>,
    ) -> Result<Self, DriftError> {
        let recon = reconstruct(class)?;
        let residual = (recon - spec.m).max_abs();
        if residual > 1e-8 * (1.0 + spec.m.max_abs()) {
            return Err(DriftError::FrameMismatch { residual });
        }
        Ok(MovingFrame {
            class: class.clone(),
            spec: *spec,
            w0: w0.unwrap_or_else(|| default_offset(spec)),
        })
    }

    pub fn classification(&self) -> &Classification {
        &self.class
    }

    pub fn spec(&self) -> &DriftSpec {
        &self.spec
    }

    pub fn offset_start(&self) -> Vec3 {
        self.w0
    }

    /// Frame at time `t`: `T(t) = rot * spin * alignment`,
    /// `H(t) = diag(c_i exp(l_i t))`, and the offset solving
    /// `w' = M w + v` from `w(0)`.
    pub fn at(&self, t: f64) -> FrameAtTime {
        let class = &self.class;
        let rotation = class.rotation
            * spin_rotation(class.spin_rate, class.spin_phase, t)
            * class.alignment.matrix();
        let scaling = Vec3::new(
            class.scales[0] * (class.rates[0] * t).exp(),
            class.scales[1] * (class.rates[1] * t).exp(),
            class.scales[2] * (class.rates[2] * t).exp(),
        );
        let offset =
            mat_exp(&self.spec.m.scale(t)) * self.w0 + exp_integral(&self.spec.m, t) * self.spec.v;
        FrameAtTime {
            t,
            rotation,
            scaling,
            offset,
        }
    }
}

/// Frame at one time; see [`MovingFrame`]. `w0 = None` uses
/// [`default_offset`].
pub fn frame_at(
    class: &Classification,
    spec: &DriftSpec,
    w0: Option<Vec3>,
    t: f64,
) -> Result<FrameAtTime, DriftError> {
    Ok(MovingFrame::new(class, spec, w0)?.at(t))
}

/// The constants appearing on the right-hand side of the Euler angle-rate
/// equations for a classified drift: a fixed shuffle of the spatial spin
/// vector `axis(dT/dt T^-1)`.
pub fn euler_rate_constants(class: &Classification) -> Vec3 {
    let g = spin_generator(class.spin_phase).scale(class.spin_rate);
    let omega_body = antisym_axis(&g).expect("generator is antisymmetric");
    let omega = class.rotation * omega_body;
    Vec3::new(omega[2], -omega[1], omega[0])
}

/// Maximum residual of the three Euler angle-rate equations
///
/// ```text
/// alpha' + beta' cos(gamma)                      = c1
/// beta' cos(alpha) sin(gamma) - gamma' sin(alpha) = c2
/// beta' sin(alpha) sin(gamma) + gamma' cos(alpha) = c3
/// ```
///
/// along a time-sampled path, using central differences. Samples too close
/// to the gimbal configuration `sin(gamma) = 0` are excluded; at least one
/// interior sample must survive.
pub fn euler_ode_residual(
    path: &[(f64, EulerAngles)],
    constants: &Vec3,
) -> Result<f64, DriftError> {
    if path.len() < 3 {
        return Err(DriftError::PathTooShort);
    }
    let mut worst: Option<f64> = None;
    for window in path.windows(3) {
        let (t0, _) = window[0];
        let (_, mid) = window[1];
        let (t2, _) = window[2];
        if mid.gamma.sin().abs() < 0.05 {
            continue;
        }
        let dt = t2 - t0;
        let da = (window[2].1.alpha - window[0].1.alpha) / dt;
        let db = (window[2].1.beta - window[0].1.beta) / dt;
        let dg = (window[2].1.gamma - window[0].1.gamma) / dt;
        let (sa, ca) = mid.alpha.sin_cos();
        let (sg, cg) = mid.gamma.sin_cos();
        let r1 = da + db * cg - constants[0];
        let r2 = db * ca * sg - dg * sa - constants[1];
        let r3 = db * sa * sg + dg * ca - constants[2];
        let r = r1.abs().max(r2.abs()).max(r3.abs());
        worst = Some(worst.map_or(r, |w: f64| w.max(r)));
    }
    worst.ok_or(DriftError::PathTooShort)
}

/// Extracts a continuous Euler-angle path from rotation samples,
/// unwrapping alpha and beta across branch cuts.
pub fn euler_path(rotations: &[(f64, Mat3)]) -> Vec<(f64, EulerAngles)> {
    let mut out: Vec<(f64, EulerAngles)> = Vec::with_capacity(rotations.len());
    for &(t, ref m) in rotations {
        let mut ang = algebra3::euler_angles_of(m);
        if let Some(&(_, prev)) = out.last() {
            let tau = 2.0 * std::f64::consts::PI;
            ang.alpha += tau * ((prev.alpha - ang.alpha) / tau).round();
            ang.beta += tau * ((prev.beta - ang.beta) / tau).round();
        }
        out.push((t, ang));
    }
    out
}

/// Draws a uniformly random proper rotation (uniform quaternion).
pub fn random_rotation<R: Rng>(rng: &mut R) -> Mat3 {
    loop {
        let q: [f64; 4] = [
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        ];
        let n2: f64 = q.iter().map(|x| x * x).sum();
        if !(1e-6..=1.0).contains(&n2) {
            continue;
        }
        let n = n2.sqrt();
        let (w, x, y, z) = (q[0] / n, q[1] / n, q[2] / n, q[3] / n);
        return Mat3::from_rows(
            [
                1.0 - 2.0 * (y * y + z * z),
                2.0 * (x * y - w * z),
                2.0 * (x * z + w * y),
            ],
            [
                2.0 * (x * y + w * z),
                1.0 - 2.0 * (x * x + z * z),
                2.0 * (y * z - w * x),
            ],
            [
                2.0 * (x * z - w * y),
                2.0 * (y * z + w * x),
                1.0 - 2.0 * (x * x + y * y),
            ],
        );
    }
}

/// Draws a random drift matrix belonging to the given separable case,
/// built from the case's parameterized form with well-separated rates.
/// Useful for round-trip and end-to-end testing.
pub fn sample_case_drift<R: Rng>(case: DriftCase, rng: &mut R) -> Result<Mat3, DriftError> {
    let rot = random_rotation(rng);
    let b = rng.random_range(0.2..2.0);
    let s = rng.random_range(0.0..std::f64::consts::PI);
    let l1: f64 = rng.random_range(-1.0..1.0);
    let mut l2: f64 = rng.random_range(-1.0..1.0);
    while (l2 - l1).abs() < 0.15 {
        l2 = rng.random_range(-1.0..1.0);
    }
    let mut l3: f64 = rng.random_range(-1.0..1.0);
    while (l3 - l1).abs() < 0.15 || (l3 - l2).abs() < 0.15 {
        l3 = rng.random_range(-1.0..1.0);
    }
    let g = spin_generator(s).scale(b);
    let m = match case {
        DriftCase::SymmetricDistinct => rot * Mat3::diag(l1, l2, l3) * rot.transpose(),
        DriftCase::SymmetricDoubled => rot * Mat3::diag(l1, l1, l3) * rot.transpose(),
        DriftCase::Isotropic => Mat3::diag(l1, l1, l1),
        DriftCase::RotatingIsotropic => rot * g * rot.transpose() + Mat3::diag(l1, l1, l1),
        DriftCase::RotatingAxial => {
            let axis_form = g + Mat3::diag(l1, l1, l1) + {
                let (ss, cs) = s.sin_cos();
                let m_dir = Vec3::new(ss, 0.0, cs);
                m_dir.outer(&m_dir).scale(l3 - l1)
            };
            rot * axis_form * rot.transpose()
        }
        DriftCase::NotSeparable => return Err(DriftError::NotSeparable),
    };
    Ok(m)
}

/// Draws a random matrix that violates every separable family by a solid
/// margin: nonzero spin, distinct symmetric spectrum, axis misaligned.
pub fn sample_nonconforming<R: Rng>(rng: &mut R) -> Mat3 {
    loop {
        let mut entries = [[0.0; 3]; 3];
        for row in entries.iter_mut() {
            for e in row.iter_mut() {
                *e = rng.random_range(-1.5..1.5);
            }
        }
        let m = Mat3(entries);
        let (sym, anti) = sym_antisym_split(&m);
        let axis = match antisym_axis(&anti) {
            Ok(a) => a,
            Err(_) => continue,
        };
        if axis.norm() < 0.1 {
            continue;
        }
        let eig = match symmetric_eigen(&sym, 1e-12) {
            Ok(e) => e,
            Err(_) => continue,
        };
        let gaps = [
            eig.eigenvalues[1] - eig.eigenvalues[0],
            eig.eigenvalues[2] - eig.eigenvalues[1],
        ];
        if gaps[0] > 0.1 && gaps[1] > 0.1 {
            return m;
        }
    }
}
