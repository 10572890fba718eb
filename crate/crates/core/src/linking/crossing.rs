//! Exact linking numbers by counting signed crossings in a planar projection.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::num::{self, Real, Vec3};

use super::LinkingError;

/// Crossings closer than this (in segment parameter, planar offset or height) to a
/// degenerate configuration trigger a new projection direction.
pub const DEGENERACY_RESOLUTION: f64 = 1e-9;
pub const MAX_RETRIES: usize = 16;

enum Outcome {
    Sum(i64),
    Degenerate,
}

/// Orthonormal basis `(u, v)` of the plane orthogonal to the unit vector `d`,
/// with `u × v = d`.
fn plane_basis<T: Real>(d: &Vec3<T>) -> (Vec3<T>, Vec3<T>) {
    let k = (0..3)
        .min_by(|&i, &j| d[i].abs().partial_cmp(&d[j].abs()).unwrap())
        .unwrap();
    let mut e = [T::zero(); 3];
    e[k] = T::one();
    let u = num::reject(&e, d);
    let u = num::scale(&u, T::one() / num::norm(&u));
    (u, num::cross(d, &u))
}

fn signed_crossings<T: Real>(c1: &[Vec3<T>], c2: &[Vec3<T>], d: &Vec3<T>) -> Outcome {
    let res = T::lit(DEGENERACY_RESOLUTION);
    let (u, v) = plane_basis(d);
    let flat = |c: &[Vec3<T>]| -> Vec<([T; 2], T)> {
        c.iter()
            .map(|p| ([num::dot(p, &u), num::dot(p, &v)], num::dot(p, d)))
            .collect()
    };
    let (f1, f2) = (flat(c1), flat(c2));
    let (n, m) = (c1.len(), c2.len());
    let mut sum = 0i64;
    for i in 0..n {
        let (a0, ha0) = f1[i];
        let (a1, ha1) = f1[(i + 1) % n];
        let da = [a1[0] - a0[0], a1[1] - a0[1]];
        let (lo_a, hi_a) = (
            [a0[0].min(a1[0]), a0[1].min(a1[1])],
            [a0[0].max(a1[0]), a0[1].max(a1[1])],
        );
        for j in 0..m {
            let (b0, hb0) = f2[j];
            let (b1, hb1) = f2[(j + 1) % m];
            if b0[0].max(b1[0]) < lo_a[0] - res
                || b0[0].min(b1[0]) > hi_a[0] + res
                || b0[1].max(b1[1]) < lo_a[1] - res
                || b0[1].min(b1[1]) > hi_a[1] + res
            {
                continue;
            }
            let db = [b1[0] - b0[0], b1[1] - b0[1]];
            let r = [b0[0] - a0[0], b0[1] - a0[1]];
            let denom = da[0] * db[1] - da[1] * db[0];
            let scale = (da[0].hypot(da[1])) * (db[0].hypot(db[1]));
            if denom.abs() <= res * scale {
                // Parallel in projection: degenerate only if the lines overlap.
                let offset = (r[0] * da[1] - r[1] * da[0]).abs() / da[0].hypot(da[1]);
                if offset <= res {
                    return Outcome::Degenerate;
                }
                continue;
            }
            let s = (r[0] * db[1] - r[1] * db[0]) / denom;
            let t = (r[0] * da[1] - r[1] * da[0]) / denom;
            let inside = |x: T| x >= -res && x <= T::one() + res;
            if !(inside(s) && inside(t)) {
                continue;
            }
            let near_end = |x: T| x.abs() <= res || (x - T::one()).abs() <= res;
            if near_end(s) || near_end(t) {
                return Outcome::Degenerate;
            }
            let ha = ha0 + s * (ha1 - ha0);
            let hb = hb0 + t * (hb1 - hb0);
            if (ha - hb).abs() <= res {
                return Outcome::Degenerate;
            }
            // Viewer at +d. With the over strand's tangent first, a crossing is
            // positive when T_over × T_under points at the viewer, which in the
            // plane is the sign of the 2D cross product (u × v = d).
            let sign = if ha > hb { denom } else { -denom };
            sum += if sign > T::zero() { 1 } else { -1 };
        }
    }
    if sum % 2 != 0 {
        return Outcome::Degenerate;
    }
    Outcome::Sum(sum)
}

/// Linking number of two closed polygons in ℝ³ from the signed crossings seen
/// along `direction`, retrying with perturbed directions on degeneracy.
pub(crate) fn crossing_number_r3<T: Real>(
    c1: &[Vec3<T>],
    c2: &[Vec3<T>],
    direction: &Vec3<T>,
) -> Result<i64, LinkingError> {
    let len = num::norm(direction);
    if !(len > T::zero() && len.is_finite()) {
        return Err(LinkingError::InvalidDirection);
    }
    let mut d = num::scale(direction, T::one() / len);
    let mut rng = ChaCha8Rng::seed_from_u64(0x11_4b);
    for attempt in 0..=MAX_RETRIES {
        if attempt > 0 {
            let kick: [f64; 3] = std::array::from_fn(|_| rng.sample(StandardNormal));
            let p = num::axpy(&d, T::lit(1e-2), &kick.map(T::lit));
            d = num::scale(&p, T::one() / num::norm(&p));
        }
        if let Outcome::Sum(s) = signed_crossings(c1, c2, &d) {
            return Ok(s / 2);
        }
    }
    Err(LinkingError::DegenerateProjection)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle(centre: Vec3<f64>, e1: Vec3<f64>, e2: Vec3<f64>, n: usize) -> Vec<Vec3<f64>> {
        (0..n)
            .map(|k| {
                let t = std::f64::consts::TAU * k as f64 / n as f64;
                num::axpy(&num::axpy(&centre, t.cos(), &e1), t.sin(), &e2)
            })
            .collect()
    }

    #[test]
    fn manual_hopf_link_enumeration() {
        // Square in the xy-plane and a square in the xz-plane threading it once.
        let a = vec![[-1.0, -1.0, 0.0], [1.0, -1.0, 0.0], [1.0, 1.0, 0.0], [-1.0, 1.0, 0.0]];
        let b = vec![[0.0, 0.0, -1.0], [3.0, 0.0, -1.0], [3.0, 0.0, 1.0], [0.0, 0.0, 1.0]];
        // Looking down +z, b's edges at z = ±1 cross a's edge x = 1 twice: the lower
        // one is under a, the upper one over a, both with the same handedness.
        let lk = crossing_number_r3(&a, &b, &[0.1, 0.2, 1.0]).unwrap();
        assert_eq!(lk.abs(), 1);
        assert_eq!(crossing_number_r3(&b, &a, &[0.1, 0.2, 1.0]).unwrap(), lk);
        let rev: Vec<_> = b.iter().rev().copied().collect();
        assert_eq!(crossing_number_r3(&a, &rev, &[0.1, 0.2, 1.0]).unwrap(), -lk);
        // Independent of the viewing direction.
        assert_eq!(crossing_number_r3(&a, &b, &[1.0, -0.3, 0.4]).unwrap(), lk);
    }

    #[test]
    fn distant_circles_do_not_link() {
        let a = circle([0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], 64);
        let b = circle([10.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], 64);
        assert_eq!(crossing_number_r3(&a, &b, &[0.0, 0.0, 1.0]).unwrap(), 0);
    }

    #[test]
    fn degenerate_view_is_retried() {
        // Viewing exactly along the plane of a planar circle puts all its vertices on a line.
        let a = circle([0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], 32);
        let b = circle([1.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0], 32);
        let lk = crossing_number_r3(&a, &b, &[0.0, 1.0, 0.0]).unwrap();
        assert_eq!(lk.abs(), 1);
        assert_eq!(
            crossing_number_r3(&a, &b, &[0.0, 0.0, 0.0]),
            Err(LinkingError::InvalidDirection)
        );
    }
}
