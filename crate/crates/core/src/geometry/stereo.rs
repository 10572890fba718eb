use crate::num::{self, Real, Vec3, Vec4};

use super::{GeometryError, PointR3, PointS3, Polyline, Vertices, POLE_EXCLUSION};

/// Orientation-preserving stereographic chart `S³ ∖ {pole} → ℝ³`.
///
/// A rotation `Q ∈ SO(4)` carries the pole to `e₄`, after which the standard
/// projection `x ↦ (x₁, x₂, x₃) / (1 − x₄)` applies. With this orientation the
/// fibers of the Hopf field `(−x₂, x₁, −x₄, x₃)` link `+1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StereographicChart<T> {
    pole: PointS3<T>,
    rotation: [Vec4<T>; 4],
}

impl<T: Real> StereographicChart<T> {
    pub fn new(pole: PointS3<T>) -> Self {
        let n = pole.coords();
        let mut rotation = [[T::zero(); 4]; 4];
        for (i, row) in rotation.iter_mut().enumerate() {
            row[i] = T::one();
        }
        let u = [n[0], n[1], n[2], n[3] - T::one()];
        let uu = num::dot(&u, &u);
        if uu > T::lit(1e-24) {
            // Householder reflection sending the pole to e₄, followed by a flip of the
            // first coordinate so the composite has determinant +1.
            for (i, row) in rotation.iter_mut().enumerate() {
                for (j, entry) in row.iter_mut().enumerate() {
                    let delta = if i == j { T::one() } else { T::zero() };
                    *entry = delta - T::lit(2.0) * u[i] * u[j] / uu;
                }
            }
            for entry in rotation[0].iter_mut() {
                *entry = -*entry;
            }
        }
        Self { pole, rotation }
    }

    pub fn pole(&self) -> PointS3<T> {
        self.pole
    }

    #[inline]
    fn rotate(&self, x: &Vec4<T>) -> Vec4<T> {
        [
            num::dot(&self.rotation[0], x),
            num::dot(&self.rotation[1], x),
            num::dot(&self.rotation[2], x),
            num::dot(&self.rotation[3], x),
        ]
    }

    #[inline]
    fn rotate_back(&self, y: &Vec4<T>) -> Vec4<T> {
        let mut x = [T::zero(); 4];
        for (i, row) in self.rotation.iter().enumerate() {
            for j in 0..4 {
                x[j] = x[j] + row[j] * y[i];
            }
        }
        x
    }

    pub fn project(&self, p: &PointS3<T>) -> Result<PointR3<T>, GeometryError> {
        if p.chordal_distance(&self.pole) < T::lit(POLE_EXCLUSION) {
            return Err(GeometryError::PoleCollision);
        }
        Ok(PointR3::from_coords(self.project_raw(&p.coords())))
    }

    #[inline]
    pub(crate) fn project_raw(&self, x: &Vec4<T>) -> Vec3<T> {
        let y = self.rotate(x);
        let s = T::one() / (T::one() - y[3]);
        [y[0] * s, y[1] * s, y[2] * s]
    }

    /// Pushes a tangent vector `v` at `p` forward through the chart.
    #[cfg(test)]
    pub(crate) fn push_tangent(&self, p: &Vec4<T>, v: &Vec4<T>) -> Vec3<T> {
        let y = self.rotate(p);
        let w = self.rotate(v);
        let s = T::one() / (T::one() - y[3]);
        let s2 = s * s * w[3];
        [w[0] * s + y[0] * s2, w[1] * s + y[1] * s2, w[2] * s + y[2] * s2]
    }

    /// Closed-form inverse of [`project`](Self::project).
    pub fn lift(&self, q: &PointR3<T>) -> PointS3<T> {
        let y = q.coords();
        let r2 = num::dot(&y, &y);
        let d = T::one() / (r2 + T::one());
        let two = T::lit(2.0);
        let x = [two * y[0] * d, two * y[1] * d, two * y[2] * d, (r2 - T::one()) * d];
        PointS3::normalized(self.rotate_back(&x))
    }

    /// Projects every vertex of an S³ polyline, keeping orientation and closedness.
    pub fn project_polyline(&self, line: &Polyline<T>) -> Result<Polyline<T>, GeometryError> {
        let pts = line.s3_vertices().ok_or(GeometryError::MixedAmbient)?;
        let out = pts
            .iter()
            .map(|p| self.project(p))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Polyline::from_parts_unchecked(
            Vertices::R3(out),
            line.is_closed(),
        ))
    }
}

/// Stereographic image of `p` seen from `pole`.
pub fn stereographic_project<T: Real>(
    p: &PointS3<T>,
    pole: &PointS3<T>,
) -> Result<PointR3<T>, GeometryError> {
    StereographicChart::new(*pole).project(p)
}
