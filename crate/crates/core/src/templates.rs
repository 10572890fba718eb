//! Closed-form curves with known linking numbers: Hopf and anti-Hopf fibers, circle
//! pairs and torus links, plus random rigid motions for randomized testing.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::geometry::{PointR3, PointS3, Polyline};
use crate::num::{self, Real, Vec3};

fn rotate_planes<T: Real>(x: &[T; 4], a: T, b: T) -> [T; 4] {
    let (sa, ca) = a.sin_cos();
    let (sb, cb) = b.sin_cos();
    [
        ca * x[0] - sa * x[1],
        sa * x[0] + ca * x[1],
        cb * x[2] - sb * x[3],
        sb * x[2] + cb * x[3],
    ]
}

fn fiber<T: Real>(base: &PointS3<T>, n: usize, second_rate: T) -> Polyline<T> {
    let x = base.coords();
    let pts = (0..n)
        .map(|k| {
            let t = T::lit(std::f64::consts::TAU) * T::from_usize_lossy(k) / T::from_usize_lossy(n);
            PointS3::new(rotate_planes(&x, t, second_rate * t)).expect("unit point")
        })
        .collect();
    Polyline::from_s3(pts, true).expect("fiber with at least 3 samples")
}

/// The Hopf fiber through `base`, sampled at `n ≥ 3` points, oriented by the flow.
pub fn hopf_fiber<T: Real>(base: &PointS3<T>, n: usize) -> Polyline<T> {
    fiber(base, n, T::one())
}

/// The anti-Hopf fiber through `base`, oriented by the anti-Hopf flow.
pub fn anti_hopf_fiber<T: Real>(base: &PointS3<T>, n: usize) -> Polyline<T> {
    fiber(base, n, -T::one())
}

/// Circle `centre + cos t · e1 + sin t · e2` sampled at `n` points.
pub fn circle<T: Real>(centre: Vec3<T>, e1: Vec3<T>, e2: Vec3<T>, n: usize) -> Polyline<T> {
    let pts = (0..n)
        .map(|k| {
            let t = T::lit(std::f64::consts::TAU) * T::from_usize_lossy(k) / T::from_usize_lossy(n);
            PointR3::new(num::axpy(&num::axpy(&centre, t.cos(), &e1), t.sin(), &e2)).expect("finite")
        })
        .collect();
    Polyline::from_r3(pts, true).expect("circle with at least 3 samples")
}

fn axis<T: Real>(i: usize) -> Vec3<T> {
    let mut e = [T::zero(); 3];
    e[i] = T::one();
    e
}

/// Unit circle in the xy-plane at the origin and unit circle in the xz-plane centred
/// at `(1, 0, 0)`, both traversed counterclockwise in their coordinate planes. They
/// form a Hopf link with linking number −1.
pub fn hopf_link_circles<T: Real>(n: usize) -> (Polyline<T>, Polyline<T>) {
    let zero = [T::zero(); 3];
    (
        circle(zero, axis(0), axis(1), n),
        circle(axis(0), axis(0), axis(2), n),
    )
}

/// Two unit circles in the xy-plane whose centres are `separation` apart.
pub fn distant_circles<T: Real>(n: usize, separation: T) -> (Polyline<T>, Polyline<T>) {
    let zero = [T::zero(); 3];
    (
        circle(zero, axis(0), axis(1), n),
        circle(num::scale(&axis(0), separation), axis(0), axis(1), n),
    )
}

/// The two curves `((2 + cos φ) cos t, (2 + cos φ) sin t, −sin φ)` with
/// `φ = q t + kπ` (k = 0, 1) on the torus with radii 2 and 1; they link `+q` times.
pub fn torus_link<T: Real>(q: usize, n: usize) -> (Polyline<T>, Polyline<T>) {
    let component = |k: usize| {
        let pts = (0..n)
            .map(|i| {
                let t = T::lit(std::f64::consts::TAU) * T::from_usize_lossy(i) / T::from_usize_lossy(n);
                let phi = T::from_usize_lossy(q) * t + T::from_usize_lossy(k) * T::PI();
                let rho = T::lit(2.0) + phi.cos();
                PointR3::new([rho * t.cos(), rho * t.sin(), -phi.sin()]).expect("finite")
            })
            .collect();
        Polyline::from_r3(pts, true).expect("torus curve with at least 3 samples")
    };
    (component(0), component(1))
}

/// A rotation followed by a translation of ℝ³.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidMotion<T> {
    pub rotation: [Vec3<T>; 3],
    pub translation: Vec3<T>,
}

impl<T: Real> RigidMotion<T> {
    /// Uniformly random rotation (from a random unit quaternion) and a translation
    /// with standard normal coordinates times `spread`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, spread: f64) -> Self {
        let q: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
        let n = num::norm(&q);
        let [w, x, y, z] = q.map(|c| c / n);
        let rotation = [
            [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
            [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
            [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
        ];
        let t: [f64; 3] = std::array::from_fn(|_| spread * rng.sample::<f64, _>(StandardNormal));
        Self {
            rotation: rotation.map(|row| row.map(T::lit)),
            translation: t.map(T::lit),
        }
    }

    pub fn apply_point(&self, p: &Vec3<T>) -> Vec3<T> {
        let r = &self.rotation;
        num::add(
            &[num::dot(&r[0], p), num::dot(&r[1], p), num::dot(&r[2], p)],
            &self.translation,
        )
    }

    /// Moves every vertex of a Euclidean polyline; `None` for curves on S³.
    pub fn apply(&self, line: &Polyline<T>) -> Option<Polyline<T>> {
        let pts = line
            .r3_vertices()?
            .iter()
            .map(|p| PointR3::new(self.apply_point(&p.coords())).expect("finite"))
            .collect();
        Polyline::from_r3(pts, line.is_closed()).ok()
    }
}

/// A randomly moved template pair with its known linking number.
#[derive(Debug, Clone)]
pub struct TemplatePair<T> {
    pub name: &'static str,
    pub first: Polyline<T>,
    pub second: Polyline<T>,
    pub linking: i64,
}

/// Draws a linked or unlinked template, applies one random rigid motion to both
/// curves and randomly reverses the second curve.
pub fn random_template_pair<T: Real, R: Rng + ?Sized>(rng: &mut R) -> TemplatePair<T> {
    let n = rng.random_range(48..=160);
    let (name, (a, b), lk) = match rng.random_range(0..5) {
        0 => ("hopf_link", hopf_link_circles(n), -1),
        1 => ("distant_circles", distant_circles(n, T::lit(rng.random_range(2.5..12.0))), 0),
        2 => ("near_unlinked_circles", {
            let zero = [T::zero(); 3];
            (
                circle(zero, axis(0), axis(1), n),
                circle(num::scale(&axis(0), T::lit(2.2)), axis(0), axis(2), n),
            )
        }, 0),
        3 => ("torus_link_2_4", torus_link(2, 2 * n), 2),
        _ => ("torus_link_2_6", torus_link(3, 3 * n), 3),
    };
    let motion = RigidMotion::random(rng, 3.0);
    let (a, mut b) = (motion.apply(&a).expect("R3"), motion.apply(&b).expect("R3"));
    let mut linking = lk;
    if rng.random_bool(0.5) {
        b = b.reversed();
        linking = -linking;
    }
    TemplatePair {
        name,
        first: a,
        second: b,
        linking,
    }
}
