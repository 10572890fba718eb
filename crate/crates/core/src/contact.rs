//! Contact-type certification of `ω = ι_X Ω` over families of invariant measures,
//! the pointwise `ν ∧ ω > 0` check, and the conformal Reeb field `R = X / ν(X)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::asymptotic::{lk_omega_direct_estimate, uniform_points, MeasureSample, Provenance};
use crate::fields::{tangent_frame, FieldError, FieldSpec, Primitive};
use crate::geometry::PointS3;
use crate::num::{self, Real, Vec4};

pub const DEFAULT_CERTIFY_TOL: f64 = 1e-3;
/// `ν(X)` at or below this is treated as a tangency of `X` to `ker ν`.
pub const TRANSVERSALITY_FLOOR: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ContactError {
    #[error("certification needs at least one measure")]
    EmptyMeasureFamily,
    #[error("ν(X) = {value:.3e} is not positive at {point:?}")]
    NonTransverse { value: f64, point: [f64; 4] },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    CertifiedPositive,
    CertifiedNegative,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureValue {
    pub provenance: Provenance,
    pub value: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub values: Vec<MeasureValue>,
    pub verdict: Verdict,
    pub tolerance: f64,
}

/// Evaluates `Lk_ω` on every measure with the field's canonical primitive and
/// certifies a sign when all values clear `tolerance` by three standard errors.
/// A certificate means no counterexample in this family, not a proof over all
/// invariant measures.
pub fn mcduff_certify<T: Real>(
    spec: &FieldSpec<T>,
    measures: &[MeasureSample<T>],
    tolerance: T,
) -> Result<CertificationReport, ContactError> {
    mcduff_certify_with(spec, &spec.primitive()?, measures, tolerance)
}

pub fn mcduff_certify_with<T: Real, P: Primitive<T>>(
    spec: &FieldSpec<T>,
    nu: &P,
    measures: &[MeasureSample<T>],
    tolerance: T,
) -> Result<CertificationReport, ContactError> {
    if measures.is_empty() {
        return Err(ContactError::EmptyMeasureFamily);
    }
    if !(tolerance >= T::zero() && tolerance.is_finite()) {
        return Err(ContactError::InvalidParameter(format!("tolerance {tolerance} must be nonnegative")));
    }
    let values: Vec<MeasureValue> = measures
        .iter()
        .map(|mu| {
            let e = lk_omega_direct_estimate(spec, nu, mu);
            MeasureValue {
                provenance: mu.provenance().clone(),
                value: e.value.as_f64(),
                stderr: e.stderr.as_f64(),
            }
        })
        .collect();
    let tol = tolerance.as_f64();
    let verdict = if values.iter().all(|v| v.value - 3.0 * v.stderr > tol) {
        Verdict::CertifiedPositive
    } else if values.iter().all(|v| v.value + 3.0 * v.stderr < -tol) {
        Verdict::CertifiedNegative
    } else {
        Verdict::Inconclusive
    };
    Ok(CertificationReport {
        values,
        verdict,
        tolerance: tol,
    })
}

/// `(ν ∧ ω)(e₁, e₂, e₃)` on an oriented orthonormal tangent frame at `x`.
pub fn nu_wedge_omega<T: Real, P: Primitive<T>>(spec: &FieldSpec<T>, nu: &P, p: &PointS3<T>) -> T {
    let x = p.coords();
    let [e1, e2, e3] = tangent_frame(&x);
    let n = nu.covector(&x);
    num::dot(&n, &e1) * spec.omega(p, &e2, &e3) - num::dot(&n, &e2) * spec.omega(p, &e1, &e3)
        + num::dot(&n, &e3) * spec.omega(p, &e1, &e2)
}

/// Minimum of the `ν ∧ ω` density over `n_samples` round-uniform points, using the
/// field's canonical primitive. A positive minimum is the pointwise contact-type
/// condition at the sampled points.
pub fn contact_type_check<T: Real>(spec: &FieldSpec<T>, n_samples: usize, seed: u64) -> Result<T, ContactError> {
    contact_type_check_with(spec, &spec.primitive()?, n_samples, seed)
}

pub fn contact_type_check_with<T: Real, P: Primitive<T>>(
    spec: &FieldSpec<T>,
    nu: &P,
    n_samples: usize,
    seed: u64,
) -> Result<T, ContactError> {
    if n_samples == 0 {
        return Err(ContactError::InvalidParameter("n_samples must be positive".into()));
    }
    Ok(uniform_points::<T>(n_samples, seed)
        .par_iter()
        .map(|p| nu_wedge_omega(spec, nu, p))
        .reduce(T::infinity, |a, b| a.min(b)))
}

/// `R(p) = X(p) / ν(X)(p)` with the field's canonical primitive.
pub fn reconstruct_reeb<T: Real>(spec: &FieldSpec<T>, p: &PointS3<T>) -> Result<Vec4<T>, ContactError> {
    reconstruct_reeb_with(spec, &spec.primitive()?, p)
}

pub fn reconstruct_reeb_with<T: Real, P: Primitive<T>>(
    spec: &FieldSpec<T>,
    nu: &P,
    p: &PointS3<T>,
) -> Result<Vec4<T>, ContactError> {
    let x = p.coords();
    let field = spec.eval_raw(&x);
    let pairing = nu.pair(&x, &field);
    if !(pairing > T::lit(TRANSVERSALITY_FLOOR)) {
        return Err(ContactError::NonTransverse {
            value: pairing.as_f64(),
            point: x.map(|c| c.as_f64()),
        });
    }
    Ok(num::scale(&field, T::one() / pairing))
}

/// Worst Reeb-condition defects of the reconstructed field over a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReebDefects {
    /// `max |ν(R) − 1|`
    pub max_pairing_defect: f64,
    /// `max |ω(R, v)|` over the tangent frame and one random unit tangent `v` per point.
    pub max_omega_defect: f64,
    pub samples: usize,
}

pub fn verify_reeb<T: Real>(spec: &FieldSpec<T>, n_samples: usize, seed: u64) -> Result<ReebDefects, ContactError> {
    verify_reeb_with(spec, &spec.primitive()?, n_samples, seed)
}

pub fn verify_reeb_with<T: Real, P: Primitive<T>>(
    spec: &FieldSpec<T>,
    nu: &P,
    n_samples: usize,
    seed: u64,
) -> Result<ReebDefects, ContactError> {
    if n_samples == 0 {
        return Err(ContactError::InvalidParameter("n_samples must be positive".into()));
    }
    let points = uniform_points::<T>(n_samples, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eeb);
    let directions: Vec<[f64; 4]> = (0..n_samples)
        .map(|_| std::array::from_fn(|_| rng.sample(StandardNormal)))
        .collect();
    let defects: Vec<Result<(f64, f64), ContactError>> = points
        .par_iter()
        .zip(&directions)
        .map(|(p, g)| {
            let r = reconstruct_reeb_with(spec, nu, p)?;
            let x = p.coords();
            let pairing = (nu.pair(&x, &r) - T::one()).abs().as_f64();
            let random = num::reject(&g.map(T::lit), &x);
            let random = num::scale(&random, T::one() / num::norm(&random));
            let frame = tangent_frame(&x);
            let omega = frame
                .iter()
                .chain(std::iter::once(&random))
                .map(|v| spec.omega(p, &r, v).abs().as_f64())
                .fold(0.0, f64::max);
            Ok((pairing, omega))
        })
        .collect();
    let mut out = ReebDefects {
        max_pairing_defect: 0.0,
        max_omega_defect: 0.0,
        samples: n_samples,
    };
    for d in defects {
        let (a, b) = d?;
        out.max_pairing_defect = out.max_pairing_defect.max(a);
        out.max_omega_defect = out.max_omega_defect.max(b);
    }
    Ok(out)
}
