//! Flow lines of catalog fields: integration, recurrence detection and loop closing.

mod cache;
mod closing;
mod integrator;
mod recurrence;

pub use cache::{format_trajectory, parse_trajectory, TrajectoryCache};
pub use closing::{close_up, CLOSE_DIRECTLY_BELOW, EMBEDDING_RESOLUTION};
pub use integrator::{
    flow_map, integrate, MAX_HORIZON, MAX_SAMPLE_CHORD, MAX_TOL, MIN_STEP, MIN_TOL,
};
pub use recurrence::find_recurrences;

use thiserror::Error;

use crate::fields::FieldSpec;
use crate::geometry::{GeometryError, PointS3};
use crate::num::Real;

/// Default integration tolerance (local error per unit time).
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("horizon {0} outside (0, 1e5]")]
    InvalidHorizon(f64),
    #[error("tolerance {0} outside [1e-12, 1e-4]")]
    InvalidTolerance(f64),
    #[error("step size fell below 1e-12")]
    StepUnderflow,
    #[error("recurrence threshold {0} outside (0, 2)")]
    InvalidDelta(f64),
    #[error("time {0} outside the trajectory span")]
    TimeOutOfSpan(f64),
    #[error("jitter {0} must be finite and nonnegative")]
    InvalidJitter(f64),
    #[error("closing arc still self-intersects after 8 jitter halvings")]
    EmbeddingFailure,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("trajectory cache: {0}")]
    Cache(String),
}

/// How estimators obtain trajectories: integration tolerance and an optional cache.
#[derive(Debug, Clone, Copy)]
pub struct FlowOptions<'a> {
    pub tol: f64,
    pub cache: Option<&'a TrajectoryCache>,
}

impl Default for FlowOptions<'_> {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            cache: None,
        }
    }
}

impl FlowOptions<'_> {
    pub fn integrate<T: Real>(
        &self,
        spec: &FieldSpec<T>,
        p0: &PointS3<T>,
        horizon: T,
    ) -> Result<Trajectory<T>, FlowError> {
        let tol = T::lit(self.tol);
        match self.cache {
            Some(cache) => cache.integrate(spec, p0, horizon, tol),
            None => integrate(spec, p0, horizon, tol),
        }
    }
}

/// A time-stamped sampled flow line starting at time 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    field: FieldSpec<T>,
    tol: T,
    times: Vec<T>,
    points: Vec<PointS3<T>>,
}

/// A time `S` at which the flow line returns close to its start.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecurrenceEvent<T> {
    pub time: T,
    /// Chordal distance between the start and the point at `time`.
    pub gap: T,
}

impl<T: Real> Trajectory<T> {
    pub(crate) fn from_parts(field: FieldSpec<T>, tol: T, times: Vec<T>, points: Vec<PointS3<T>>) -> Self {
        debug_assert_eq!(times.len(), points.len());
        Self {
            field,
            tol,
            times,
            points,
        }
    }

    pub fn field(&self) -> &FieldSpec<T> {
        &self.field
    }

    pub fn tol(&self) -> T {
        self.tol
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn points(&self) -> &[PointS3<T>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn start(&self) -> PointS3<T> {
        self.points[0]
    }

    pub fn horizon(&self) -> T {
        *self.times.last().expect("trajectory has samples")
    }

    /// Index of the last sample at or before `t`.
    pub(crate) fn sample_before(&self, t: T) -> usize {
        match self.times.binary_search_by(|s| s.partial_cmp(&t).expect("finite times")) {
            Ok(i) => i,
            Err(i) => i.saturating_sub(1),
        }
    }

    /// The flow at time `t`, propagated from the nearest earlier sample with the
    /// trajectory's own tolerance.
    pub fn state_at(&self, t: T) -> Result<PointS3<T>, FlowError> {
        if !(t >= T::zero() && t <= self.horizon()) {
            return Err(FlowError::TimeOutOfSpan(t.as_f64()));
        }
        let i = self.sample_before(t);
        let dt = t - self.times[i];
        if dt <= T::zero() {
            return Ok(self.points[i]);
        }
        let x = integrator::Stepper::new(&self.field, self.tol).advance(&self.points[i].coords(), dt)?;
        Ok(PointS3::normalized(x))
    }

    /// Minimum chordal distance between the samples of two trajectories.
    pub fn min_sample_distance(&self, other: &Trajectory<T>) -> T {
        let mut best = T::infinity();
        for p in &self.points {
            for q in &other.points {
                let d = p.chordal_distance(q);
                if d < best {
                    best = d;
                }
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num;
    use std::f64::consts::PI;

    fn s3(c: [f64; 4]) -> PointS3<f64> {
        PointS3::new(c).unwrap()
    }

    #[test]
    fn hopf_period_closes() {
        let p0 = s3([0.3, 0.5, -0.2, 0.6]);
        let tr = integrate(&FieldSpec::Hopf, &p0, 2.0 * PI, DEFAULT_TOL).unwrap();
        assert_eq!(tr.times()[0], 0.0);
        assert_eq!(tr.points()[0], p0);
        assert_eq!(tr.horizon(), 2.0 * PI);
        assert!(tr.points().last().unwrap().chordal_distance(&p0) < 1e-8);
    }

    #[test]
    fn ellipsoid_core_circle_period() {
        let p0 = s3([0.0, 0.0, 1.0, 0.0]);
        let spec = FieldSpec::ellipsoid(1.0, 2.0).unwrap();
        let tr = integrate(&spec, &p0, PI, DEFAULT_TOL).unwrap();
        assert!(tr.points().last().unwrap().chordal_distance(&p0) < 1e-8);
    }

    #[test]
    fn samples_are_dense_and_on_sphere() {
        let p0 = s3([0.1, 0.2, 0.3, 0.4]);
        for spec in [FieldSpec::Hopf, FieldSpec::conformal_default()] {
            for tol in [1e-4, 1e-10] {
                let tr = integrate(&spec, &p0, 30.0, tol).unwrap();
                for w in tr.points().windows(2) {
                    assert!(w[0].chordal_distance(&w[1]) <= MAX_SAMPLE_CHORD);
                }
                for w in tr.times().windows(2) {
                    assert!(w[0] < w[1]);
                }
                for p in tr.points() {
                    assert!((num::norm(&p.coords()) - 1.0).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn first_integrals_conserved() {
        let p0 = s3([0.5, -0.3, 0.7, 0.2]);
        let c = p0.coords();
        let (r1, r2) = (c[0] * c[0] + c[1] * c[1], c[2] * c[2] + c[3] * c[3]);
        for spec in [FieldSpec::Hopf, FieldSpec::ellipsoid(1.0, 2.0).unwrap()] {
            let tr = integrate(&spec, &p0, 100.0, DEFAULT_TOL).unwrap();
            for p in tr.points() {
                let x = p.coords();
                assert!((x[0] * x[0] + x[1] * x[1] - r1).abs() < 1e-7);
                assert!((x[2] * x[2] + x[3] * x[3] - r2).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn halving_tolerance_halves_error() {
        let p0 = s3([0.3, 0.5, -0.2, 0.6]);
        let err = |tol: f64| {
            let tr = integrate(&FieldSpec::Hopf, &p0, 2.0 * PI, tol).unwrap();
            tr.points().last().unwrap().chordal_distance(&p0)
        };
        for tol in [1e-9, 4e-10, 1e-10] {
            let (e1, e2) = (err(tol), err(tol / 2.0));
            assert!(e2 <= e1 / 2.0, "tol {tol}: {e1:e} -> {e2:e}");
        }
    }

    #[test]
    fn state_at_matches_closed_form() {
        let p0 = s3([0.3, 0.5, -0.2, 0.6]);
        let tr = integrate(&FieldSpec::Hopf, &p0, 10.0, DEFAULT_TOL).unwrap();
        let c = p0.coords();
        for t in [0.0, 0.123, 3.3, 9.99, 10.0] {
            let (s, co) = (f64::sin(t), f64::cos(t));
            let exact = [
                co * c[0] - s * c[1],
                s * c[0] + co * c[1],
                co * c[2] - s * c[3],
                s * c[2] + co * c[3],
            ];
            assert!(num::dist(&tr.state_at(t).unwrap().coords(), &exact) < 1e-9);
        }
        assert!(tr.state_at(10.5).is_err());
    }

    #[test]
    fn rejects_bad_parameters() {
        let p0 = s3([1.0, 0.0, 0.0, 0.0]);
        assert_eq!(
            integrate(&FieldSpec::Hopf, &p0, 0.0, 1e-8),
            Err(FlowError::InvalidHorizon(0.0))
        );
        assert_eq!(
            integrate(&FieldSpec::Hopf, &p0, 1.0, 1e-2),
            Err(FlowError::InvalidTolerance(1e-2))
        );
    }

    #[test]
    fn flow_map_matches_integrate() {
        let p0 = s3([0.2, -0.4, 0.1, 0.9]);
        let spec = FieldSpec::conformal_default();
        let a = flow_map(&spec, &p0, 3.0, 1e-10).unwrap();
        let b = *integrate(&spec, &p0, 3.0, 1e-10).unwrap().points().last().unwrap();
        assert!(a.chordal_distance(&b) < 1e-8);
    }

    #[test]
    fn generic_over_f32() {
        let p0 = PointS3::<f32>::new([0.3, 0.5, -0.2, 0.6]).unwrap();
        let tr = integrate(&FieldSpec::<f32>::Hopf, &p0, std::f32::consts::TAU, 1e-6).unwrap();
        assert!(tr.points().last().unwrap().chordal_distance(&p0) < 1e-4);
    }
}
