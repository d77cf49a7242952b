//! Necessary condition for R-separability: the curl of the drift field
//! must be constant. A failing check certifies that no R-separable product
//! solution exists; a passing check is necessary but not sufficient, and
//! the report says so explicitly.

use crate::algebra3::Vec3;
use crate::drift::DriftSpec;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RsepError {
    #[error("need at least 8 probe points, got {0}")]
    TooFewSamples(usize),
    #[error("field evaluation returned a non-finite value at {0:?}")]
    NonFinite([f64; 3]),
    #[error("probe box must have positive extent")]
    EmptyBox,
}

/// A drift velocity field: a callable, optionally with a polynomial
/// description for serialization.
pub enum DriftField {
    Linear(DriftSpec),
    Polynomial(PolyField),
    Custom(Box<dyn Fn(Vec3) -> Vec3 + Sync>),
}

impl DriftField {
    pub fn eval(&self, x: Vec3) -> Vec3 {
        match self {
            DriftField::Linear(spec) => spec.eval(&x),
            DriftField::Polynomial(p) => p.eval(x),
            DriftField::Custom(f) => f(x),
        }
    }

    pub fn from_fn(f: impl Fn(Vec3) -> Vec3 + Sync + 'static) -> Self {
        DriftField::Custom(Box::new(f))
    }
}

/// One polynomial monomial: `coef * x1^p1 x2^p2 x3^p3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolyTerm {
    pub coef: f64,
    pub powers: [u8; 3],
}

/// Component-wise polynomial vector field.
#[derive(Debug, Clone, Default)]
pub struct PolyField {
    pub components: [Vec<PolyTerm>; 3],
}

impl PolyField {
    pub fn eval(&self, x: Vec3) -> Vec3 {
        let mut out = [0.0; 3];
        for (c, terms) in out.iter_mut().zip(self.components.iter()) {
            for term in terms {
                let mut val = term.coef;
                for (xi, &p) in x.0.iter().zip(term.powers.iter()) {
                    val *= xi.powi(p as i32);
                }
                *c += val;
            }
        }
        Vec3(out)
    }
}

/// Axis-aligned probe box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeBox {
    pub lo: Vec3,
    pub hi: Vec3,
}

impl Default for ProbeBox {
    fn default() -> Self {
        ProbeBox {
            lo: Vec3::new(-1.0, -1.0, -1.0),
            hi: Vec3::new(1.0, 1.0, 1.0),
        }
    }
}

/// Central-difference curl of the field at `x` with step `h`:
/// `(dB3/dx2 - dB2/dx3, dB1/dx3 - dB3/dx1, dB2/dx1 - dB1/dx2)`.
pub fn curl_at(field: &DriftField, x: &Vec3, h: f64) -> Result<Vec3, RsepError> {
    let mut partials = [[0.0; 3]; 3]; // partials[i][j] = dB_i / dx_j
    for j in 0..3 {
        let mut xp = *x;
        let mut xm = *x;
        xp[j] += h;
        xm[j] -= h;
        let bp = field.eval(xp);
        let bm = field.eval(xm);
        if !bp.is_finite() || !bm.is_finite() {
            return Err(RsepError::NonFinite(x.0));
        }
        for i in 0..3 {
            partials[i][j] = (bp[i] - bm[i]) / (2.0 * h);
        }
    }
    Ok(Vec3::new(
        partials[2][1] - partials[1][2],
        partials[0][2] - partials[2][0],
        partials[1][0] - partials[0][1],
    ))
}

/// Verdict of the constant-curl probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurlVerdict {
    /// Necessary condition satisfied - not sufficient for R-separability.
    ConstantWithinTolerance,
    /// Curl varies across the box: the field is not R-separable.
    NonConstant,
}

/// Sampled curl statistics and the separability verdict.
#[derive(Debug, Clone)]
pub struct CurlReport {
    pub samples: Vec<(Vec3, Vec3)>,
    pub mean: Vec3,
    pub max_deviation: f64,
    pub tol: f64,
    pub verdict: CurlVerdict,
}

impl CurlReport {
    pub fn passes(&self) -> bool {
        self.verdict == CurlVerdict::ConstantWithinTolerance
    }

    /// One-line explanation mirroring the one-sided nature of the test.
    pub fn summary(&self) -> &'static str {
        match self.verdict {
            CurlVerdict::ConstantWithinTolerance => {
                "curl constant within tolerance: necessary condition for \
                 R-separability satisfied - not sufficient"
            }
            CurlVerdict::NonConstant => "curl varies across the probe box: not R-separable",
        }
    }
}

/// Samples the curl on a deterministic low-discrepancy point set (Halton,
/// bases 2/3/5, offset by `seed`) and checks constancy:
/// pass iff `max |curl - mean| <= tol * (1 + |mean|)`.
pub fn check_constant_curl(
    field: &DriftField,
    probe: &ProbeBox,
    n_samples: usize,
    seed: u64,
    tol: f64,
) -> Result<CurlReport, RsepError> {
    if n_samples < 8 {
        return Err(RsepError::TooFewSamples(n_samples));
    }
    let extent = probe.hi - probe.lo;
    if extent[0] <= 0.0 || extent[1] <= 0.0 || extent[2] <= 0.0 {
        return Err(RsepError::EmptyBox);
    }
    let h = 1e-4 * extent.max_abs().max(1.0);
    let mut samples = Vec::with_capacity(n_samples);
    let mut mean = Vec3::ZERO;
    for i in 0..n_samples {
        let idx = seed.wrapping_add(i as u64 + 1);
        let frac = Vec3::new(
            radical_inverse(idx, 2),
            radical_inverse(idx, 3),
            radical_inverse(idx, 5),
        );
        let x = Vec3::new(
            probe.lo[0] + extent[0] * frac[0],
            probe.lo[1] + extent[1] * frac[1],
            probe.lo[2] + extent[2] * frac[2],
        );
        let c = curl_at(field, &x, h)?;
        mean = mean + c;
        samples.push((x, c));
    }
    mean = mean.scale(1.0 / n_samples as f64);
    let max_deviation = samples
        .iter()
        .map(|(_, c)| (*c - mean).max_abs())
        .fold(0.0f64, f64::max);
    let verdict = if max_deviation <= tol * (1.0 + mean.norm()) {
        CurlVerdict::ConstantWithinTolerance
    } else {
        CurlVerdict::NonConstant
    };
    Ok(CurlReport {
        samples,
        mean,
        max_deviation,
        tol,
        verdict,
    })
}

/// Van der Corput radical inverse in the given base.
fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut inv = 0.0;
    let mut denom = 1.0;
    while i > 0 {
        denom *= base as f64;
        inv += (i % base) as f64 / denom;
        i /= base;
    }
    inv
}
