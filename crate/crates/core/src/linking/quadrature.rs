//! Adaptive Gauss–Legendre quadrature of the linking kernel over pairs of straight
//! segments, summed over closed polygons.

use rayon::prelude::*;

use crate::num::{self, Real, Vec3};

use super::kernel::{kernel_raw, NEAR_SINGULAR};
use super::LinkingError;

/// Segment pairs closer than this factor times their length sum are bisected.
pub const SUBDIVISION_RATIO: f64 = 4.0;
pub const MAX_DEPTH: usize = 12;
/// Curves closer than this are reported as intersecting.
pub const MIN_SEPARATION: f64 = 1e-6;

/// A quadrature value with its error estimate and the sum of absolute
/// contributions (for a roundoff floor).
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Partial<T> {
    pub value: T,
    pub error: T,
    pub magnitude: T,
}

impl<T: Real> Partial<T> {
    fn add(self, o: Self) -> Self {
        Self {
            value: self.value + o.value,
            error: self.error + o.error,
            magnitude: self.magnitude + o.magnitude,
        }
    }

    /// Error estimate including a floor for floating-point summation.
    pub fn stderr(&self) -> T {
        self.error + T::lit(64.0) * T::epsilon() * self.magnitude
    }
}

const GL2_X: [f64; 2] = [0.211_324_865_405_187_1, 0.788_675_134_594_812_9];
const GL2_W: [f64; 2] = [0.5, 0.5];
const GL3_X: [f64; 3] = [0.112_701_665_379_258_3, 0.5, 0.887_298_334_620_741_7];
const GL3_W: [f64; 3] = [5.0 / 18.0, 4.0 / 9.0, 5.0 / 18.0];

/// Tensor Gauss–Legendre rule over `[0,1]²` of `K(a(s), b(t)) V W`.
#[inline]
fn rule<T: Real, const N: usize>(
    a0: &Vec3<T>,
    da: &Vec3<T>,
    b0: &Vec3<T>,
    db: &Vec3<T>,
    x: &[f64; N],
    w: &[f64; N],
) -> T {
    let mut sum = T::zero();
    for i in 0..N {
        let p = num::axpy(a0, T::lit(x[i]), da);
        for j in 0..N {
            let q = num::axpy(b0, T::lit(x[j]), db);
            sum = sum + T::lit(w[i] * w[j]) * kernel_raw(&num::sub(&p, &q), da, db);
        }
    }
    sum
}

fn midpoint<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> Vec3<T> {
    num::scale(&num::add(a, b), T::lit(0.5))
}

fn pair_rec<T: Real>(
    a0: &Vec3<T>,
    a1: &Vec3<T>,
    b0: &Vec3<T>,
    b1: &Vec3<T>,
    depth: usize,
) -> Result<Partial<T>, LinkingError> {
    let da = num::sub(a1, a0);
    let db = num::sub(b1, b0);
    let (la, lb) = (num::norm(&da), num::norm(&db));
    let centre = num::dist(&midpoint(a0, a1), &midpoint(b0, b1));
    let separation = centre - (la + lb) / T::lit(2.0);
    if separation < T::lit(SUBDIVISION_RATIO) * (la + lb) && depth < MAX_DEPTH {
        let (am, bm) = (midpoint(a0, a1), midpoint(b0, b1));
        let mut acc = Partial::default();
        for (p0, p1) in [(a0, &am), (&am, a1)] {
            for (q0, q1) in [(b0, &bm), (&bm, b1)] {
                acc = acc.add(pair_rec(p0, p1, q0, q1, depth + 1)?);
            }
        }
        return Ok(acc);
    }
    if depth == MAX_DEPTH && separation < T::lit(SUBDIVISION_RATIO) * (la + lb) {
        let (d, _, _) = num::segment_distance(a0, a1, b0, b1);
        if d < T::lit(NEAR_SINGULAR) {
            return Err(LinkingError::NearSingular);
        }
    }
    let q3 = rule(a0, &da, b0, &db, &GL3_X, &GL3_W);
    let q2 = rule(a0, &da, b0, &db, &GL2_X, &GL2_W);
    Ok(Partial {
        value: q3,
        error: (q3 - q2).abs(),
        magnitude: q3.abs(),
    })
}

/// Linking integral over one pair of straight segments `[a0, a1] × [b0, b1]`.
pub(crate) fn segment_pair<T: Real>(
    a0: &Vec3<T>,
    a1: &Vec3<T>,
    b0: &Vec3<T>,
    b1: &Vec3<T>,
) -> Result<Partial<T>, LinkingError> {
    pair_rec(a0, a1, b0, b1, 0)
}

/// Sums the segment-pair integrals of two polygons, each closed or open. Segment
/// pairs are evaluated in parallel per segment of `c1` and reduced in a fixed order.
pub(crate) fn polygon_pair<T: Real>(
    c1: &[Vec3<T>],
    closed1: bool,
    c2: &[Vec3<T>],
    closed2: bool,
) -> Result<Partial<T>, LinkingError> {
    let (n, m) = (c1.len(), c2.len());
    let segs1 = if closed1 { n } else { n.saturating_sub(1) };
    let segs2 = if closed2 { m } else { m.saturating_sub(1) };
    let rows: Vec<Result<Partial<T>, LinkingError>> = (0..segs1)
        .into_par_iter()
        .map(|i| {
            let (a0, a1) = (&c1[i], &c1[(i + 1) % n]);
            let la = num::dist(a0, a1);
            let am = midpoint(a0, a1);
            let mut row = Partial::default();
            for j in 0..segs2 {
                let (b0, b1) = (&c2[j], &c2[(j + 1) % m]);
                let lb = num::dist(b0, b1);
                let near = num::dist(&am, &midpoint(b0, b1)) - (la + lb) / T::lit(2.0)
                    < T::lit(SUBDIVISION_RATIO) * (la + lb);
                if near && num::segment_distance(a0, a1, b0, b1).0 < T::lit(MIN_SEPARATION) {
                    return Err(LinkingError::CurvesIntersect);
                }
                let part = pair_rec(a0, a1, b0, b1, 0).map_err(|_| LinkingError::CurvesIntersect)?;
                row = row.add(part);
            }
            Ok(row)
        })
        .collect();
    let mut total = Partial::default();
    for r in rows {
        total = total.add(r?);
    }
    Ok(total)
}

pub(crate) fn closed_pair<T: Real>(c1: &[Vec3<T>], c2: &[Vec3<T>]) -> Result<Partial<T>, LinkingError> {
    polygon_pair(c1, true, c2, true)
}
