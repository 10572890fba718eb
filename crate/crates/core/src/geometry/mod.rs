//! Points and curves on the unit three-sphere and in Euclidean three-space.
//!
//! Every curve carries an explicit [`Ambient`] flag. Operations that combine
//! curves reject mixed ambients instead of coercing.

mod curve_file;
mod design;
mod stereo;

pub use curve_file::{parse_curve, write_curve};
pub use design::{pole_design, select_pole};
pub use stereo::{stereographic_project, StereographicChart};

use thiserror::Error;

use crate::num::{self, Real, Vec3, Vec4};

/// Radius around the projection pole inside which projection is refused.
pub const POLE_EXCLUSION: f64 = 1e-6;
/// Largest angle (distance from π) for which the minimizing geodesic is considered unique.
pub const ANTIPODAL_MARGIN: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("point lies within {POLE_EXCLUSION} of the projection pole")]
    PoleCollision,
    #[error("points are antipodal; the minimizing geodesic is not unique")]
    AntipodalPoints,
    #[error("cannot normalize a zero or non-finite vector onto the sphere")]
    NotNormalizable,
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("polyline needs at least {needed} vertices, got {got}")]
    TooFewVertices { needed: usize, got: usize },
    #[error("consecutive vertices {index} and {next} coincide")]
    RepeatedVertex { index: usize, next: usize },
    #[error("geodesic arc needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("curves live in different ambient spaces")]
    MixedAmbient,
    #[error("curve file: {0}")]
    CurveFile(String),
}

/// A point on the unit three-sphere in ambient ℝ⁴ coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointS3<T> {
    coords: Vec4<T>,
}

impl<T: Real> PointS3<T> {
    /// Normalizes `coords` onto the sphere.
    pub fn new(coords: Vec4<T>) -> Result<Self, GeometryError> {
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let n = num::norm(&coords);
        if n <= T::epsilon() || !n.is_finite() {
            return Err(GeometryError::NotNormalizable);
        }
        Ok(Self {
            coords: num::scale(&coords, T::one() / n),
        })
    }

    /// Renormalizes without error checking; the caller guarantees a nonzero finite input.
    #[inline]
    pub(crate) fn normalized(coords: Vec4<T>) -> Self {
        let n = num::norm(&coords);
        Self {
            coords: num::scale(&coords, T::one() / n),
        }
    }

    /// Wraps coordinates already known to be unit length, keeping their exact bits.
    #[inline]
    pub(crate) fn from_unit(coords: Vec4<T>) -> Self {
        Self { coords }
    }

    #[inline]
    pub fn coords(&self) -> Vec4<T> {
        self.coords
    }

    #[inline]
    pub fn dot(&self, other: &Self) -> T {
        num::dot(&self.coords, &other.coords)
    }

    #[inline]
    pub fn chordal_distance(&self, other: &Self) -> T {
        num::dist(&self.coords, &other.coords)
    }

    /// Great-circle distance, computed as `2 atan2(|a-b|, |a+b|)` which stays accurate
    /// for nearly equal and nearly antipodal points.
    pub fn angle(&self, other: &Self) -> T {
        let d = num::norm(&num::sub(&self.coords, &other.coords));
        let s = num::norm(&num::add(&self.coords, &other.coords));
        T::lit(2.0) * d.atan2(s)
    }

    pub fn antipode(&self) -> Self {
        Self {
            coords: num::scale(&self.coords, -T::one()),
        }
    }

    pub fn cast<U: Real>(&self) -> PointS3<U> {
        PointS3::normalized(self.coords.map(|c| U::lit(c.as_f64())))
    }
}

/// A point of Euclidean three-space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointR3<T> {
    coords: Vec3<T>,
}

impl<T: Real> PointR3<T> {
    pub fn new(coords: Vec3<T>) -> Result<Self, GeometryError> {
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        Ok(Self { coords })
    }

    #[inline]
    pub(crate) fn from_coords(coords: Vec3<T>) -> Self {
        Self { coords }
    }

    #[inline]
    pub fn coords(&self) -> Vec3<T> {
        self.coords
    }

    #[inline]
    pub fn distance(&self, other: &Self) -> T {
        num::dist(&self.coords, &other.coords)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ambient {
    R3,
    S3,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Vertices<T> {
    R3(Vec<PointR3<T>>),
    S3(Vec<PointS3<T>>),
}

impl<T> Vertices<T> {
    pub fn len(&self) -> usize {
        match self {
            Vertices::R3(v) => v.len(),
            Vertices::S3(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// An ordered, oriented sampled curve. A closed polyline has an implicit segment
/// from the last vertex back to the first.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline<T> {
    vertices: Vertices<T>,
    closed: bool,
}

impl<T: Real> Polyline<T> {
    pub fn new(vertices: Vertices<T>, closed: bool) -> Result<Self, GeometryError> {
        let needed = if closed { 3 } else { 2 };
        let got = vertices.len();
        if got < needed {
            return Err(GeometryError::TooFewVertices { needed, got });
        }
        let line = Self { vertices, closed };
        line.check_distinct()?;
        Ok(line)
    }

    pub fn from_s3(points: Vec<PointS3<T>>, closed: bool) -> Result<Self, GeometryError> {
        Self::new(Vertices::S3(points), closed)
    }

    pub fn from_r3(points: Vec<PointR3<T>>, closed: bool) -> Result<Self, GeometryError> {
        Self::new(Vertices::R3(points), closed)
    }

    /// A single-vertex open curve, the degenerate geodesic between a point and itself.
    pub(crate) fn degenerate(p: PointS3<T>) -> Self {
        Self {
            vertices: Vertices::S3(vec![p]),
            closed: false,
        }
    }

    /// Builds without validation; callers construct vertices that already satisfy
    /// the invariants (or are deliberately degenerate arcs).
    pub(crate) fn from_parts_unchecked(vertices: Vertices<T>, closed: bool) -> Self {
        Self { vertices, closed }
    }

    fn check_distinct(&self) -> Result<(), GeometryError> {
        let n = self.len();
        let pairs = if self.closed { n } else { n - 1 };
        for i in 0..pairs {
            let j = (i + 1) % n;
            let same = match &self.vertices {
                Vertices::R3(v) => v[i].coords == v[j].coords,
                Vertices::S3(v) => v[i].coords == v[j].coords,
            };
            if same {
                return Err(GeometryError::RepeatedVertex { index: i, next: j });
            }
        }
        Ok(())
    }

    pub fn ambient(&self) -> Ambient {
        match self.vertices {
            Vertices::R3(_) => Ambient::R3,
            Vertices::S3(_) => Ambient::S3,
        }
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &Vertices<T> {
        &self.vertices
    }

    pub fn s3_vertices(&self) -> Option<&[PointS3<T>]> {
        match &self.vertices {
            Vertices::S3(v) => Some(v),
            Vertices::R3(_) => None,
        }
    }

    pub fn r3_vertices(&self) -> Option<&[PointR3<T>]> {
        match &self.vertices {
            Vertices::R3(v) => Some(v),
            Vertices::S3(_) => None,
        }
    }

    /// Number of straight segments, counting the closing segment of a closed curve.
    pub fn segment_count(&self) -> usize {
        let n = self.len();
        match (self.closed, n) {
            (_, 0 | 1) => 0,
            (true, _) => n,
            (false, _) => n - 1,
        }
    }

    /// Total length of the straight (chordal) segments in the ambient space.
    pub fn length(&self) -> T {
        let n = self.len();
        let seg = |i: usize, j: usize| match &self.vertices {
            Vertices::R3(v) => v[i].distance(&v[j]),
            Vertices::S3(v) => v[i].chordal_distance(&v[j]),
        };
        (0..self.segment_count()).map(|i| seg(i, (i + 1) % n)).sum()
    }

    /// Sum of great-circle distances between consecutive vertices; `None` for ℝ³ curves.
    pub fn geodesic_length(&self) -> Option<T> {
        let v = self.s3_vertices()?;
        let n = v.len();
        Some(
            (0..self.segment_count())
                .map(|i| v[i].angle(&v[(i + 1) % n]))
                .sum(),
        )
    }

    /// The same curve traversed backwards.
    pub fn reversed(&self) -> Self {
        let vertices = match &self.vertices {
            Vertices::R3(v) => Vertices::R3(v.iter().rev().copied().collect()),
            Vertices::S3(v) => Vertices::S3(v.iter().rev().copied().collect()),
        };
        Self {
            vertices,
            closed: self.closed,
        }
    }

    pub(crate) fn raw_r3(&self) -> Option<Vec<Vec3<T>>> {
        self.r3_vertices()
            .map(|v| v.iter().map(PointR3::coords).collect())
    }
}

/// Minimizing great-circle arc from `a` to `b`, sampled at `n_samples` points
/// including both endpoints. Equal endpoints give a single-vertex degenerate arc.
pub fn geodesic_arc<T: Real>(
    a: &PointS3<T>,
    b: &PointS3<T>,
    n_samples: usize,
) -> Result<Polyline<T>, GeometryError> {
    let theta = a.angle(b);
    if theta > T::PI() - T::lit(ANTIPODAL_MARGIN) {
        return Err(GeometryError::AntipodalPoints);
    }
    if a.coords == b.coords || theta == T::zero() {
        return Ok(Polyline::degenerate(*a));
    }
    if n_samples < 2 {
        return Err(GeometryError::TooFewSamples(n_samples));
    }
    // Orthonormal direction u in the plane of a and b, perpendicular to a.
    let u = num::reject(&b.coords, &a.coords);
    let u = num::scale(&u, T::one() / num::norm(&u));
    let last = n_samples - 1;
    let mut pts = Vec::with_capacity(n_samples);
    for k in 0..n_samples {
        let p = if k == 0 {
            *a
        } else if k == last {
            *b
        } else {
            let t = theta * T::from_usize_lossy(k) / T::from_usize_lossy(last);
            PointS3::normalized(num::axpy(&num::scale(&a.coords, t.cos()), t.sin(), &u))
        };
        pts.push(p);
    }
    Ok(Polyline::from_parts_unchecked(Vertices::S3(pts), false))
}
