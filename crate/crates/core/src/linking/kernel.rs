use crate::geometry::PointR3;
use crate::num::{self, Real, Vec3};

use super::LinkingError;

/// Smallest point separation at which the kernel is evaluated.
pub const NEAR_SINGULAR: f64 = 1e-9;

/// The Euclidean Gauss linking kernel `⟨V, W × (p − q)⟩ / (4π ‖p − q‖³)`.
pub fn gauss_kernel<T: Real>(
    p: &PointR3<T>,
    q: &PointR3<T>,
    v: &Vec3<T>,
    w: &Vec3<T>,
) -> Result<T, LinkingError> {
    let d = num::sub(&p.coords(), &q.coords());
    if num::norm(&d) < T::lit(NEAR_SINGULAR) {
        return Err(LinkingError::NearSingular);
    }
    Ok(kernel_raw(&d, v, w))
}

/// Kernel on the difference `d = p − q`, without the singularity check.
#[inline]
pub(crate) fn kernel_raw<T: Real>(d: &Vec3<T>, v: &Vec3<T>, w: &Vec3<T>) -> T {
    let r2 = num::dot(d, d);
    let triple = num::dot(v, &num::cross(w, d));
    triple / (T::lit(4.0) * T::PI() * r2 * r2.sqrt())
}
