//! Scalar abstraction and the small fixed-size vector algebra used throughout.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar the geometry, fields, flows and estimators are generic over.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + LowerExp
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Every literal used by this crate is representable in `f32`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub type Vec3<T> = [T; 3];
pub type Vec4<T> = [T; 4];

#[inline]
pub fn dot<T: Real, const N: usize>(a: &[T; N], b: &[T; N]) -> T {
    let mut s = T::zero();
    for i in 0..N {
        s = s + a[i] * b[i];
    }
    s
}

#[inline]
pub fn norm<T: Real, const N: usize>(a: &[T; N]) -> T {
    dot(a, a).sqrt()
}

#[inline]
pub fn sub<T: Real, const N: usize>(a: &[T; N], b: &[T; N]) -> [T; N] {
    let mut out = *a;
    for i in 0..N {
        out[i] = a[i] - b[i];
    }
    out
}

#[inline]
pub fn add<T: Real, const N: usize>(a: &[T; N], b: &[T; N]) -> [T; N] {
    let mut out = *a;
    for i in 0..N {
        out[i] = a[i] + b[i];
    }
    out
}

#[inline]
pub fn scale<T: Real, const N: usize>(a: &[T; N], s: T) -> [T; N] {
    let mut out = *a;
    for x in out.iter_mut() {
        *x = *x * s;
    }
    out
}

/// `a + s * b`
#[inline]
pub fn axpy<T: Real, const N: usize>(a: &[T; N], s: T, b: &[T; N]) -> [T; N] {
    let mut out = *a;
    for i in 0..N {
        out[i] = a[i] + s * b[i];
    }
    out
}

#[inline]
pub fn dist<T: Real, const N: usize>(a: &[T; N], b: &[T; N]) -> T {
    norm(&sub(a, b))
}

#[inline]
pub fn cross<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> Vec3<T> {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Determinant of the 4x4 matrix with the given columns.
pub fn det4<T: Real>(c0: &Vec4<T>, c1: &Vec4<T>, c2: &Vec4<T>, c3: &Vec4<T>) -> T {
    // Laplace expansion along the first column, using 2x2 minors of columns 2 and 3.
    let m = |i: usize, j: usize| c2[i] * c3[j] - c2[j] * c3[i];
    let minor3 = |r0: usize, r1: usize, r2: usize| {
        c1[r0] * m(r1, r2) - c1[r1] * m(r0, r2) + c1[r2] * m(r0, r1)
    };
    c0[0] * minor3(1, 2, 3) - c0[1] * minor3(0, 2, 3) + c0[2] * minor3(0, 1, 3)
        - c0[3] * minor3(0, 1, 2)
}

/// The four-dimensional cross product: the unique vector `w` with
/// `<w, x> = det[a, b, c, x]` for all `x`. Orthogonal to `a`, `b` and `c`.
pub fn cross4<T: Real>(a: &Vec4<T>, b: &Vec4<T>, c: &Vec4<T>) -> Vec4<T> {
    let e = |k: usize| {
        let mut v = [T::zero(); 4];
        v[k] = T::one();
        v
    };
    [
        det4(a, b, c, &e(0)),
        det4(a, b, c, &e(1)),
        det4(a, b, c, &e(2)),
        det4(a, b, c, &e(3)),
    ]
}

/// Removes the component of `v` along the unit vector `n`.
#[inline]
pub fn reject<T: Real, const N: usize>(v: &[T; N], n: &[T; N]) -> [T; N] {
    axpy(v, -dot(v, n), n)
}

/// Minimum distance between the segments `[p0, p1]` and `[q0, q1]`, together with
/// the parameters of the closest points.
pub fn segment_distance<T: Real, const N: usize>(
    p0: &[T; N],
    p1: &[T; N],
    q0: &[T; N],
    q1: &[T; N],
) -> (T, T, T) {
    let d1 = sub(p1, p0);
    let d2 = sub(q1, q0);
    let r = sub(p0, q0);
    let a = dot(&d1, &d1);
    let e = dot(&d2, &d2);
    let f = dot(&d2, &r);
    let clamp = |x: T| x.max(T::zero()).min(T::one());
    let (s, t) = if a <= T::epsilon() && e <= T::epsilon() {
        (T::zero(), T::zero())
    } else if a <= T::epsilon() {
        (T::zero(), clamp(f / e))
    } else {
        let c = dot(&d1, &r);
        if e <= T::epsilon() {
            (clamp(-c / a), T::zero())
        } else {
            let b = dot(&d1, &d2);
            let denom = a * e - b * b;
            let mut s = if denom > T::zero() {
                clamp((b * f - c * e) / denom)
            } else {
                T::zero()
            };
            let mut t = (b * s + f) / e;
            if t < T::zero() {
                t = T::zero();
                s = clamp(-c / a);
            } else if t > T::one() {
                t = T::one();
                s = clamp((b - c) / a);
            }
            (s, t)
        }
    };
    let cp = axpy(p0, s, &d1);
    let cq = axpy(q0, t, &d2);
    (dist(&cp, &cq), s, t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn det4_identity_and_swap() {
        let e0 = [1.0, 0.0, 0.0, 0.0];
        let e1 = [0.0, 1.0, 0.0, 0.0];
        let e2 = [0.0, 0.0, 1.0, 0.0];
        let e3 = [0.0, 0.0, 0.0, 1.0];
        assert_eq!(det4(&e0, &e1, &e2, &e3), 1.0);
        assert_eq!(det4(&e1, &e0, &e2, &e3), -1.0);
    }

    #[test]
    fn cross4_is_orthogonal_and_matches_det() {
        let a = [0.3, -1.2, 0.5, 2.0];
        let b = [1.0, 0.1, -0.7, 0.4];
        let c = [-0.2, 0.9, 1.1, -0.3];
        let w = cross4(&a, &b, &c);
        for v in [&a, &b, &c] {
            assert!(dot(&w, v).abs() < 1e-12);
        }
        let x = [0.7, 0.2, -0.4, 1.3];
        assert!((dot(&w, &x) - det4(&a, &b, &c, &x)).abs() < 1e-12);
    }

    #[test]
    fn segment_distance_cases() {
        // Skew perpendicular segments one unit apart.
        let (d, s, t) = segment_distance(
            &[-1.0, 0.0, 0.0],
            &[1.0, 0.0, 0.0],
            &[0.0, -1.0, 1.0],
            &[0.0, 1.0, 1.0],
        );
        assert!((d - 1.0).abs() < 1e-15 && (s - 0.5).abs() < 1e-15 && (t - 0.5).abs() < 1e-15);
        // Parallel, offset along their common direction: endpoint to endpoint.
        let (d, _, _) = segment_distance(&[0.0, 0.0], &[1.0, 0.0], &[2.0, 1.0], &[3.0, 1.0]);
        assert!((d - 2f64.sqrt()).abs() < 1e-15);
        // Crossing segments.
        let (d, _, _) = segment_distance(&[0.0, 0.0], &[2.0, 2.0], &[0.0, 2.0], &[2.0, 0.0]);
        assert!(d < 1e-15);
    }

    #[test]
    fn f32_literals() {
        assert_eq!(<f32 as Real>::lit(0.5), 0.5f32);
    }
}
