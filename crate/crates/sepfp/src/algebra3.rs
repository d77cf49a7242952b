//! Fixed-size 3-vector / 3x3-matrix algebra used throughout the crate.
//!
//! Everything here is plain `f64` arithmetic on stack values: vector and
//! matrix types, the Euler-angle rotation family, the one-parameter
//! rotating frame with constant spin, symmetric/antisymmetric splitting,
//! an analytic symmetric eigensolver with a Jacobi fallback, and a small
//! scaling-and-squaring matrix exponential.

use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Algebra3Error {
    #[error("matrix is not antisymmetric: symmetric residual {0:.3e}")]
    NotAntisymmetric(f64),
    #[error("matrix is not symmetric: antisymmetric residual {0:.3e}")]
    NotSymmetric(f64),
    #[error("tolerance must be positive, got {0}")]
    NonPositiveTolerance(f64),
    #[error("matrix is singular (|det| = {0:.3e})")]
    Singular(f64),
    #[error("matrix entries too large for a stable decomposition ({0:.3e})")]
    MagnitudeOverflow(f64),
}

/// A real 3-vector.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3(pub [f64; 3]);

/// A real 3x3 matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Mat3(pub [[f64; 3]; 3]);

/// Euler angles of the rotation parameterization used by the moving frame.
///
/// The angles are unconstrained reals; the rotation map is periodic in each.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerAngles {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3([0.0; 3]);

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3([x, y, z])
    }

    pub fn dot(&self, other: &Vec3) -> f64 {
        self.0[0] * other.0[0] + self.0[1] * other.0[1] + self.0[2] * other.0[2]
    }

    pub fn cross(&self, other: &Vec3) -> Vec3 {
        Vec3([
            self.0[1] * other.0[2] - self.0[2] * other.0[1],
            self.0[2] * other.0[0] - self.0[0] * other.0[2],
            self.0[0] * other.0[1] - self.0[1] * other.0[0],
        ])
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn scale(&self, s: f64) -> Vec3 {
        Vec3([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }

    pub fn normalized(&self) -> Vec3 {
        let n = self.norm();
        self.scale(1.0 / n)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    /// Outer product `self * other^T`.
    pub fn outer(&self, other: &Vec3) -> Mat3 {
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = self.0[i] * other.0[j];
            }
        }
        Mat3(m)
    }
}

impl Index<usize> for Vec3 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for Vec3 {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        self.scale(-1.0)
    }
}

impl Mat3 {
    pub const ZERO: Mat3 = Mat3([[0.0; 3]; 3]);

    pub fn identity() -> Mat3 {
        Mat3::diag(1.0, 1.0, 1.0)
    }

    pub fn diag(a: f64, b: f64, c: f64) -> Mat3 {
        Mat3([[a, 0.0, 0.0], [0.0, b, 0.0], [0.0, 0.0, c]])
    }

    pub fn from_rows(r0: [f64; 3], r1: [f64; 3], r2: [f64; 3]) -> Mat3 {
        Mat3([r0, r1, r2])
    }

    pub fn transpose(&self) -> Mat3 {
        let m = &self.0;
        Mat3([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    pub fn det(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Inverse by cofactor expansion.
    pub fn inverse(&self) -> Result<Mat3, Algebra3Error> {
        let d = self.det();
        let scale = self.norm_inf().max(1.0);
        if d.abs() <= 1e-300 * scale || !d.is_finite() {
            return Err(Algebra3Error::Singular(d.abs()));
        }
        let m = &self.0;
        let inv_d = 1.0 / d;
        let mut r = [[0.0; 3]; 3];
        r[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) * inv_d;
        r[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) * inv_d;
        r[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) * inv_d;
        r[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) * inv_d;
        r[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) * inv_d;
        r[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) * inv_d;
        r[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) * inv_d;
        r[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) * inv_d;
        r[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) * inv_d;
        Ok(Mat3(r))
    }

    pub fn row(&self, i: usize) -> Vec3 {
        Vec3(self.0[i])
    }

    pub fn col(&self, j: usize) -> Vec3 {
        Vec3([self.0[0][j], self.0[1][j], self.0[2][j]])
    }

    pub fn set_col(&mut self, j: usize, v: &Vec3) {
        for i in 0..3 {
            self.0[i][j] = v.0[i];
        }
    }

    pub fn scale(&self, s: f64) -> Mat3 {
        let mut r = self.0;
        for row in r.iter_mut() {
            for e in row.iter_mut() {
                *e *= s;
            }
        }
        Mat3(r)
    }

    /// Maximum absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    /// Infinity norm (maximum absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        self.0
            .iter()
            .map(|r| r.iter().map(|x| x.abs()).sum())
            .fold(0.0f64, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.0.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|x| x.is_finite())
    }

    pub fn diagonal(&self) -> Vec3 {
        Vec3([self.0[0][0], self.0[1][1], self.0[2][2]])
    }
}

impl Index<usize> for Mat3 {
    type Output = [f64; 3];
    fn index(&self, i: usize) -> &[f64; 3] {
        &self.0[i]
    }
}

impl IndexMut<usize> for Mat3 {
    fn index_mut(&mut self, i: usize) -> &mut [f64; 3] {
        &mut self.0[i]
    }
}

impl Add for Mat3 {
    type Output = Mat3;
    fn add(self, o: Mat3) -> Mat3 {
        let mut r = self.0;
        for i in 0..3 {
            for j in 0..3 {
                r[i][j] += o.0[i][j];
            }
        }
        Mat3(r)
    }
}

impl Sub for Mat3 {
    type Output = Mat3;
    fn sub(self, o: Mat3) -> Mat3 {
        let mut r = self.0;
        for i in 0..3 {
            for j in 0..3 {
                r[i][j] -= o.0[i][j];
            }
        }
        Mat3(r)
    }
}

impl Mul for Mat3 {
    type Output = Mat3;
    fn mul(self, o: Mat3) -> Mat3 {
        let mut r = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                r[i][j] =
                    self.0[i][0] * o.0[0][j] + self.0[i][1] * o.0[1][j] + self.0[i][2] * o.0[2][j];
            }
        }
        Mat3(r)
    }
}

impl Mul<Vec3> for Mat3 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        Vec3([
            self.0[0][0] * v.0[0] + self.0[0][1] * v.0[1] + self.0[0][2] * v.0[2],
            self.0[1][0] * v.0[0] + self.0[1][1] * v.0[1] + self.0[1][2] * v.0[2],
            self.0[2][0] * v.0[0] + self.0[2][1] * v.0[1] + self.0[2][2] * v.0[2],
        ])
    }
}

impl Neg for Mat3 {
    type Output = Mat3;
    fn neg(self) -> Mat3 {
        self.scale(-1.0)
    }
}

/// The orthogonal matrix of the Euler-angle parameterization used by the
/// moving frame.
///
/// Columns, with `ca = cos(alpha)` etc.:
///
/// ```text
/// | ca*cb - sa*sb*cg   -ca*sb - sa*cb*cg    sa*sg |
/// | sa*cb + ca*sb*cg   -sa*sb + ca*cb*cg   -ca*sg |
/// | sb*sg               cb*sg               cg    |
/// ```
///
/// Satisfies `T^T T = I` and `det T = +1` for all angles.
pub fn euler_rotation(angles: &EulerAngles) -> Mat3 {
    let (sa, ca) = angles.alpha.sin_cos();
    let (sb, cb) = angles.beta.sin_cos();
    let (sg, cg) = angles.gamma.sin_cos();
    Mat3([
        [ca * cb - sa * sb * cg, -ca * sb - sa * cb * cg, sa * sg],
        [sa * cb + ca * sb * cg, -sa * sb + ca * cb * cg, -ca * sg],
        [sb * sg, cb * sg, cg],
    ])
}

/// Extracts Euler angles from a rotation matrix, inverting [`euler_rotation`].
///
/// Near the gimbal configurations `sin(gamma) = 0` the split between alpha
/// and beta is not unique; beta is set to zero there.
pub fn euler_angles_of(t: &Mat3) -> EulerAngles {
    let cg = t[2][2].clamp(-1.0, 1.0);
    let gamma = cg.acos();
    let sg = gamma.sin();
    if sg < 1e-9 {
        // T reduces to a rotation about the third axis by alpha +/- beta.
        let alpha = t[1][0].atan2(t[0][0]);
        EulerAngles {
            alpha,
            beta: 0.0,
            gamma,
        }
    } else {
        EulerAngles {
            alpha: t[0][2].atan2(-t[1][2]),
            beta: t[2][0].atan2(t[2][1]),
            gamma,
        }
    }
}

/// The rotating orthogonal frame with constant spin rate `b` and phase `s`:
///
/// ```text
/// | -cos(s)cos(bt)   sin(s)   cos(s)sin(bt) |
/// |  sin(bt)         0        cos(bt)       |
/// |  sin(s)cos(bt)   cos(s)  -sin(s)sin(bt) |
/// ```
///
/// Its defining property is that the spatial angular velocity
/// `d/dt(T) * T^-1` is the constant antisymmetric matrix
/// `b * spin_generator(s)`. At `b = 0` the frame is constant in time.
pub fn spin_rotation(b: f64, s: f64, t: f64) -> Mat3 {
    let (ss, cs) = s.sin_cos();
    let (sbt, cbt) = (b * t).sin_cos();
    Mat3([
        [-cs * cbt, ss, cs * sbt],
        [sbt, 0.0, cbt],
        [ss * cbt, cs, -ss * sbt],
    ])
}

/// The constant antisymmetric generator of [`spin_rotation`]:
/// `d/dt(T) T^-1 = b * spin_generator(s)`.
pub fn spin_generator(s: f64) -> Mat3 {
    let (ss, cs) = s.sin_cos();
    Mat3([[0.0, cs, 0.0], [-cs, 0.0, ss], [0.0, -ss, 0.0]])
}

/// Splits `m` into its symmetric and antisymmetric parts, `m = s + a`.
pub fn sym_antisym_split(m: &Mat3) -> (Mat3, Mat3) {
    let mt = m.transpose();
    ((*m + mt).scale(0.5), (*m - mt).scale(0.5))
}

/// The rotation vector of an antisymmetric matrix: `a * x = axis x x`.
///
/// Rejects input whose symmetric part exceeds `1e-12 * (1 + max|a|)`.
pub fn antisym_axis(a: &Mat3) -> Result<Vec3, Algebra3Error> {
    let (sym, _) = sym_antisym_split(a);
    let defect = sym.max_abs();
    if defect > 1e-12 * (1.0 + a.max_abs()) {
        return Err(Algebra3Error::NotAntisymmetric(defect));
    }
    Ok(Vec3([a[2][1], a[0][2], a[1][0]]))
}

/// Hat map, the inverse of [`antisym_axis`]: `hat(v) * x = v x x`.
pub fn hat(v: &Vec3) -> Mat3 {
    Mat3([[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]])
}

/// Eigen-decomposition of a symmetric 3x3 matrix.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    /// Eigenvalues in ascending order.
    pub eigenvalues: [f64; 3],
    /// Orthogonal matrix with the matching eigenvectors as columns, det +1.
    pub eigenvectors: Mat3,
}

impl SymmetricEigen {
    /// Indices grouped into clusters of eigenvalues closer than `tol`.
    pub fn clusters(&self, tol: f64) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = vec![vec![0]];
        for i in 1..3 {
            if self.eigenvalues[i] - self.eigenvalues[i - 1] <= tol {
                out.last_mut().unwrap().push(i);
            } else {
                out.push(vec![i]);
            }
        }
        out
    }
}

/// Eigen-decomposition of a symmetric matrix.
///
/// Eigenvalues come from the trigonometric solution of the characteristic
/// cubic; eigenvectors from cross products of rows of `s - lambda I`. When
/// eigenvalues cluster within `tol * max|s|` that route is ill-conditioned
/// and a cyclic Jacobi sweep takes over.
pub fn symmetric_eigen(s: &Mat3, tol: f64) -> Result<SymmetricEigen, Algebra3Error> {
    if tol <= 0.0 {
        return Err(Algebra3Error::NonPositiveTolerance(tol));
    }
    // Entries squared must stay representable.
    if !s.is_finite() || s.max_abs() > 1e150 {
        return Err(Algebra3Error::MagnitudeOverflow(s.max_abs()));
    }
    let (_, anti) = sym_antisym_split(s);
    let defect = anti.max_abs();
    let scale = s.max_abs().max(1e-300);
    if defect > tol.max(1e-12) * (1.0 + s.max_abs()) {
        return Err(Algebra3Error::NotSymmetric(defect));
    }

    let vals = analytic_eigenvalues(s);
    // The trigonometric eigenvalues are only sqrt(eps)-accurate near a
    // degenerate spectrum, so gaps below ~1e-7 * scale are unresolvable on
    // this route and go to the Jacobi sweep.
    let cluster_tol = (tol * scale).max(1e-7 * scale);
    let min_gap = (vals[1] - vals[0]).min(vals[2] - vals[1]);
    if min_gap <= cluster_tol {
        return Ok(jacobi_eigen(s));
    }

    let mut q = Mat3::ZERO;
    for (k, &lam) in vals.iter().enumerate() {
        let v = eigenvector_for(s, lam);
        q.set_col(k, &v);
    }
    orthonormalize_columns(&mut q);
    // Verify the analytic route; clustered-but-undetected cases fall back.
    let recon = q * Mat3::diag(vals[0], vals[1], vals[2]) * q.transpose();
    let residual = (recon - *s).max_abs();
    if !(residual <= 1e-11 * (1.0 + scale)) || !q.is_finite() {
        return Ok(jacobi_eigen(s));
    }
    Ok(SymmetricEigen {
        eigenvalues: vals,
        eigenvectors: q,
    })
}

fn analytic_eigenvalues(s: &Mat3) -> [f64; 3] {
    let m = &s.0;
    let p1 = m[0][1] * m[0][1] + m[0][2] * m[0][2] + m[1][2] * m[1][2];
    let q = s.trace() / 3.0;
    let p2 = (m[0][0] - q).powi(2) + (m[1][1] - q).powi(2) + (m[2][2] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    if p < 1e-300 {
        return [q, q, q];
    }
    let b = (*s - Mat3::diag(q, q, q)).scale(1.0 / p);
    let r = (b.det() / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let e1 = q + 2.0 * p * phi.cos();
    let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::FRAC_PI_3 * 2.0).cos();
    let e2 = 3.0 * q - e1 - e3;
    let mut v = [e1, e2, e3];
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

fn eigenvector_for(s: &Mat3, lam: f64) -> Vec3 {
    let a = *s - Mat3::diag(lam, lam, lam);
    let r0 = a.row(0);
    let r1 = a.row(1);
    let r2 = a.row(2);
    let c01 = r0.cross(&r1);
    let c02 = r0.cross(&r2);
    let c12 = r1.cross(&r2);
    let best = [c01, c02, c12]
        .into_iter()
        .max_by(|x, y| x.norm().partial_cmp(&y.norm()).unwrap())
        .unwrap();
    best.normalized()
}

fn orthonormalize_columns(q: &mut Mat3) {
    let mut cols = [q.col(0), q.col(1), q.col(2)];
    for i in 0..3 {
        for j in 0..i {
            let proj = cols[i].dot(&cols[j]);
            cols[i] = cols[i] - cols[j].scale(proj);
        }
        cols[i] = cols[i].normalized();
    }
    // Keep a right-handed basis.
    if cols[0].cross(&cols[1]).dot(&cols[2]) < 0.0 {
        cols[2] = -cols[2];
    }
    for (j, c) in cols.iter().enumerate() {
        q.set_col(j, c);
    }
}

/// Cyclic Jacobi rotations; robust for clustered spectra.
fn jacobi_eigen(s: &Mat3) -> SymmetricEigen {
    let mut a = *s;
    let mut v = Mat3::identity();
    for _ in 0..30 {
        let off = (a[0][1].powi(2) + a[0][2].powi(2) + a[1][2].powi(2)).sqrt();
        if off <= 1e-15 * (1.0 + a.max_abs()) {
            break;
        }
        for &(p, q) in &[(0usize, 1usize), (0, 2), (1, 2)] {
            if a[p][q].abs() <= 1e-300 {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let c = 1.0 / (t * t + 1.0).sqrt();
            let sn = t * c;
            let mut g = Mat3::identity();
            g[p][p] = c;
            g[q][q] = c;
            g[p][q] = sn;
            g[q][p] = -sn;
            a = g.transpose() * a * g;
            v = v * g;
        }
    }
    let mut pairs: Vec<(f64, Vec3)> = (0..3).map(|j| (a[j][j], v.col(j))).collect();
    pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    let mut q = Mat3::ZERO;
    let mut vals = [0.0; 3];
    for (j, (lam, col)) in pairs.into_iter().enumerate() {
        vals[j] = lam;
        q.set_col(j, &col);
    }
    orthonormalize_columns(&mut q);
    SymmetricEigen {
        eigenvalues: vals,
        eigenvectors: q,
    }
}

/// `exp(m)` by scaling and squaring with a degree-6 diagonal Pade
/// approximant.
pub fn mat_exp(m: &Mat3) -> Mat3 {
    let norm = m.norm_inf();
    let squarings = if norm > 0.25 {
        ((norm / 0.25).log2().ceil() as i32).max(0)
    } else {
        0
    };
    let a = m.scale(0.5f64.powi(squarings));
    // Pade(6,6) coefficients of exp.
    const B: [f64; 7] = [
        1.0,
        0.5,
        5.0 / 44.0,
        1.0 / 66.0,
        1.0 / 792.0,
        1.0 / 15840.0,
        1.0 / 665_280.0,
    ];
    let i = Mat3::identity();
    let a2 = a * a;
    let a4 = a2 * a2;
    let a6 = a2 * a4;
    let u = a * (i.scale(B[1]) + a2.scale(B[3]) + a4.scale(B[5]));
    let v = i.scale(B[0]) + a2.scale(B[2]) + a4.scale(B[4]) + a6.scale(B[6]);
    let num = v + u;
    let den = v - u;
    let mut e = den
        .inverse()
        .expect("Pade denominator is nonsingular for scaled input")
        * num;
    for _ in 0..squarings {
        e = e * e;
    }
    e
}

/// `exp(m t) x`.
pub fn mat_exp_action(m: &Mat3, t: f64, x: &Vec3) -> Vec3 {
    mat_exp(&m.scale(t)) * *x
}

/// `int_0^t exp(m s) ds`.
///
/// Closed form `m^-1 (exp(mt) - I)` away from singular `m`; composite
/// Simpson quadrature of the analytic integrand otherwise.
pub fn exp_integral(m: &Mat3, t: f64) -> Mat3 {
    let scale = m.norm_inf();
    if m.det().abs() > 1e-10 * scale.powi(3).max(1e-30) {
        if let Ok(inv) = m.inverse() {
            return inv * (mat_exp(&m.scale(t)) - Mat3::identity());
        }
    }
    // Simpson with enough panels that h^4 truncation is below 1e-13.
    let panels = (200.0 * (1.0 + scale * t.abs())) as usize;
    let n = 2 * panels.clamp(100, 4000);
    let h = t / n as f64;
    let mut acc = Mat3::ZERO;
    for k in 0..=n {
        let w = if k == 0 || k == n {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc = acc + mat_exp(&m.scale(h * k as f64)).scale(w);
    }
    acc.scale(h / 3.0)
}

/// Proper rotation taking the unit direction `from` onto the unit direction
/// `to` by the minimal-angle rotation (a half turn about a perpendicular
/// axis when they are opposite).
pub fn rotation_between(from: &Vec3, to: &Vec3) -> Mat3 {
    let f = from.normalized();
    let t = to.normalized();
    let axis = f.cross(&t);
    let cos = f.dot(&t);
    if 1.0 + cos < 1e-12 {
        // Opposite directions: half turn about any axis perpendicular to f.
        let helper = if f[0].abs() < 0.9 {
            Vec3::new(1.0, 0.0, 0.0)
        } else {
            Vec3::new(0.0, 1.0, 0.0)
        };
        let p = (helper - f.scale(helper.dot(&f))).normalized();
        return p.outer(&p).scale(2.0) - Mat3::identity();
    }
    let k = hat(&axis);
    Mat3::identity() + k + (k * k).scale(1.0 / (1.0 + cos))
}

/// Lower-triangular Cholesky factor of a symmetric positive semidefinite
/// matrix; zero rows where the pivot vanishes.
pub fn cholesky_psd(s: &Mat3) -> Mat3 {
    let mut l = Mat3::ZERO;
    let floor = 1e-14 * (1.0 + s.max_abs());
    for i in 0..3 {
        for j in 0..=i {
            let mut sum = s[i][j];
            for k in 0..j {
                sum -= l[i][k] * l[j][k];
            }
            if i == j {
                l[i][j] = if sum > floor { sum.sqrt() } else { 0.0 };
            } else if l[j][j] > 0.0 {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    l
}
