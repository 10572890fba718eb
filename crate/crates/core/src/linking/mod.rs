//! Gauss linking integrals of closed curves and an exact crossing-count oracle.

mod crossing;
mod kernel;
mod quadrature;

pub use crossing::{DEGENERACY_RESOLUTION, MAX_RETRIES};
pub use kernel::{gauss_kernel, NEAR_SINGULAR};
pub use quadrature::{MAX_DEPTH, MIN_SEPARATION, SUBDIVISION_RATIO};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{select_pole, GeometryError, Polyline, StereographicChart};
use crate::num::{Real, Vec3};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinkingError {
    #[error("kernel evaluated closer than 1e-9 to the diagonal")]
    NearSingular,
    #[error("curves intersect or come within 1e-6 of each other")]
    CurvesIntersect,
    #[error("curves live in different ambient spaces")]
    MixedAmbient,
    #[error("linking is defined for closed curves only")]
    OpenCurve,
    #[error("projection stays degenerate after 16 perturbed directions")]
    DegenerateProjection,
    #[error("projection direction must be a nonzero finite vector")]
    InvalidDirection,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    GaussIntegral,
    CrossingCount,
    Asymptotic,
    KernelMc,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkingResult<T> {
    pub value: T,
    pub stderr: T,
    pub method: Method,
}

impl<T: Real> LinkingResult<T> {
    /// The nearest integer to `value`.
    pub fn rounded(&self) -> i64 {
        self.value.round().to_i64().expect("finite linking value")
    }
}

/// Both curves as closed Euclidean polygons. Curves on S³ are projected from one
/// pole chosen for the pair.
pub(crate) fn euclidean_pair<T: Real>(
    c1: &Polyline<T>,
    c2: &Polyline<T>,
) -> Result<(Vec<Vec3<T>>, Vec<Vec3<T>>), LinkingError> {
    if !(c1.is_closed() && c2.is_closed()) {
        return Err(LinkingError::OpenCurve);
    }
    match (c1.s3_vertices(), c2.s3_vertices()) {
        (Some(a), Some(b)) => {
            let chart = StereographicChart::new(select_pole([a, b]));
            let project = |pts: &[crate::geometry::PointS3<T>]| {
                pts.iter()
                    .map(|p| chart.project(p).map(|q| q.coords()))
                    .collect::<Result<Vec<_>, _>>()
            };
            Ok((project(a)?, project(b)?))
        }
        (None, None) => Ok((
            c1.raw_r3().expect("R3 curve"),
            c2.raw_r3().expect("R3 curve"),
        )),
        _ => Err(LinkingError::MixedAmbient),
    }
}

/// Gauss double integral over two disjoint closed curves.
///
/// Segment pairs closer than 4× their length sum are bisected recursively (depth
/// ≤ 12); the rest use a 3×3 Gauss–Legendre rule whose difference from the 2×2 rule
/// is the error estimate.
pub fn linking_integral<T: Real>(
    c1: &Polyline<T>,
    c2: &Polyline<T>,
) -> Result<LinkingResult<T>, LinkingError> {
    let (a, b) = euclidean_pair(c1, c2)?;
    let total = quadrature::closed_pair(&a, &b)?;
    Ok(LinkingResult {
        value: total.value,
        stderr: total.stderr(),
        method: Method::GaussIntegral,
    })
}

/// Linking number from signed crossings of the projection along `direction`.
pub fn crossing_number<T: Real>(
    c1: &Polyline<T>,
    c2: &Polyline<T>,
    direction: &Vec3<T>,
) -> Result<i64, LinkingError> {
    let (a, b) = euclidean_pair(c1, c2)?;
    crossing::crossing_number_r3(&a, &b, direction)
}

/// Gauss integral over a single pair of straight segments in ℝ³.
pub fn segment_pair_integral<T: Real>(
    a0: &Vec3<T>,
    a1: &Vec3<T>,
    b0: &Vec3<T>,
    b1: &Vec3<T>,
) -> Result<LinkingResult<T>, LinkingError> {
    let p = quadrature::segment_pair(a0, a1, b0, b1)?;
    Ok(LinkingResult {
        value: p.value,
        stderr: p.stderr(),
        method: Method::GaussIntegral,
    })
}

/// Gauss integral of two Euclidean polygons given as vertex lists, each closed or
/// open; returns the value and its error estimate.
pub(crate) fn polygon_integral<T: Real>(
    a: &[Vec3<T>],
    closed_a: bool,
    b: &[Vec3<T>],
    closed_b: bool,
) -> Result<(T, T), LinkingError> {
    let p = quadrature::polygon_pair(a, closed_a, b, closed_b)?;
    Ok((p.value, p.stderr()))
}
