//! Dormand–Prince 5(4) with local extrapolation, error control per unit time and
//! renormalization onto S³ after every accepted step.

use crate::fields::FieldSpec;
use crate::geometry::PointS3;
use crate::num::{self, Real, Vec4};

use super::{FlowError, Trajectory};

/// Smallest step the controller may take before giving up.
pub const MIN_STEP: f64 = 1e-12;
/// Upper bound on the chordal distance between consecutive trajectory samples.
pub const MAX_SAMPLE_CHORD: f64 = 0.05;
/// Steps are capped so one step moves at most this far.
const STEP_CHORD: f64 = 0.04;
pub const MAX_HORIZON: f64 = 1e5;
pub const MIN_TOL: f64 = 1e-12;
pub const MAX_TOL: f64 = 1e-4;

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

pub(crate) struct Stepper<'a, T> {
    spec: &'a FieldSpec<T>,
    tol: T,
    a: [[T; 6]; 7],
    e: [T; 7],
}

impl<'a, T: Real> Stepper<'a, T> {
    pub(crate) fn new(spec: &'a FieldSpec<T>, tol: T) -> Self {
        Self {
            spec,
            tol,
            a: A.map(|row| row.map(T::lit)),
            e: E.map(T::lit),
        }
    }

    /// One trial step; returns the fifth-order solution and the error norm.
    fn trial(&self, x: &Vec4<T>, k1: &Vec4<T>, h: T) -> (Vec4<T>, T) {
        let mut k = [[T::zero(); 4]; 7];
        k[0] = *k1;
        for s in 1..7 {
            let mut y = *x;
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = self.a[s][j];
                if a != T::zero() {
                    y = num::axpy(&y, h * a, kj);
                }
            }
            k[s] = self.spec.eval_raw(&y);
        }
        // Row 6 of the tableau is the fifth-order solution (FSAL).
        let mut y5 = *x;
        for (j, kj) in k.iter().enumerate().take(6) {
            y5 = num::axpy(&y5, h * self.a[6][j], kj);
        }
        let mut err = [T::zero(); 4];
        for (j, kj) in k.iter().enumerate() {
            err = num::axpy(&err, h * self.e[j], kj);
        }
        (y5, num::norm(&err))
    }

    /// Advances `x` by one accepted step of size at most `h_max`, returning the new
    /// state (on the sphere), the step taken and a proposal for the next step.
    pub(crate) fn step(&self, x: &Vec4<T>, h: T, h_max: T) -> Result<(Vec4<T>, T, T), FlowError> {
        let k1 = self.spec.eval_raw(x);
        let mut h = h.min(h_max);
        loop {
            if h < T::lit(MIN_STEP) {
                return Err(FlowError::StepUnderflow);
            }
            let (y, err) = self.trial(x, &k1, h);
            let allowed = self.tol * h;
            let ratio = if err > T::zero() {
                (allowed / err).powf(T::lit(0.25))
            } else {
                T::lit(5.0)
            };
            let factor = (T::lit(0.9) * ratio).min(T::lit(5.0)).max(T::lit(0.2));
            if err <= allowed && y.iter().all(|c| c.is_finite()) {
                let n = num::norm(&y);
                return Ok((num::scale(&y, T::one() / n), h, h * factor));
            }
            h = h * factor.min(T::lit(0.9));
        }
    }

    fn step_cap(&self, x: &Vec4<T>) -> T {
        let speed = num::norm(&self.spec.eval_raw(x));
        if speed > T::zero() {
            T::lit(STEP_CHORD) / speed
        } else {
            T::lit(1.0)
        }
    }

    /// Remainders this small are absorbed into the previous step instead of being
    /// attempted, which would trip the underflow check.
    fn slack(span: T) -> T {
        (T::epsilon() * T::lit(64.0) * span.abs().max(T::one())).max(T::lit(10.0 * MIN_STEP))
    }

    /// Flows `x` forward for time `dt` without recording samples.
    pub(crate) fn advance(&self, x: &Vec4<T>, dt: T) -> Result<Vec4<T>, FlowError> {
        let mut x = *x;
        let mut t = T::zero();
        let mut h = self.initial_step(&x);
        while t < dt {
            let remaining = dt - t;
            let cap = self.step_cap(&x).min(remaining);
            let (y, taken, next) = self.step(&x, h, cap)?;
            x = y;
            t = if remaining - taken <= Self::slack(dt) { dt } else { t + taken };
            h = next;
        }
        Ok(x)
    }

    fn initial_step(&self, x: &Vec4<T>) -> T {
        // Order-of-magnitude guess from err ~ h⁵|X|: the controller corrects it.
        let speed = num::norm(&self.spec.eval_raw(x)).max(T::lit(1e-3));
        (self.tol.powf(T::lit(0.25)) / speed).min(self.step_cap(x))
    }
}

pub(crate) fn validate(horizon: f64, tol: f64) -> Result<(), FlowError> {
    if !(horizon > 0.0 && horizon <= MAX_HORIZON) {
        return Err(FlowError::InvalidHorizon(horizon));
    }
    if !(MIN_TOL..=MAX_TOL).contains(&tol) {
        return Err(FlowError::InvalidTolerance(tol));
    }
    Ok(())
}

/// Integrates the flow of `spec` from `p0` over `[0, horizon]`.
///
/// Every accepted step keeps the local error estimate below `tol` per unit time.
/// Samples are thinned so consecutive points stay within [`MAX_SAMPLE_CHORD`]
/// of each other; the final sample sits exactly at `horizon`.
pub fn integrate<T: Real>(
    spec: &FieldSpec<T>,
    p0: &PointS3<T>,
    horizon: T,
    tol: T,
) -> Result<Trajectory<T>, FlowError> {
    validate(horizon.as_f64(), tol.as_f64())?;
    let stepper = Stepper::new(spec, tol);
    let limit = T::lit(MAX_SAMPLE_CHORD);
    let mut x = p0.coords();
    let mut t = T::zero();
    let mut times = vec![T::zero()];
    let mut points = vec![*p0];
    // The most recent accepted state not yet emitted.
    let mut pending: Option<(T, Vec4<T>)> = None;
    let mut h = stepper.initial_step(&x);
    while t < horizon {
        let remaining = horizon - t;
        let cap = stepper.step_cap(&x).min(remaining);
        let (y, taken, next) = stepper.step(&x, h, cap)?;
        let t_new = if remaining - taken <= Stepper::<T>::slack(horizon) {
            horizon
        } else {
            t + taken
        };
        let last = points.last().expect("nonempty").coords();
        if num::dist(&last, &y) > limit {
            if let Some((tp, xp)) = pending.take() {
                times.push(tp);
                points.push(PointS3::normalized(xp));
            }
        }
        pending = Some((t_new, y));
        x = y;
        t = t_new;
        h = next;
    }
    if let Some((tp, xp)) = pending {
        times.push(tp);
        points.push(PointS3::normalized(xp));
    }
    Ok(Trajectory::from_parts(*spec, tol, times, points))
}

/// The time-`t` flow map, without recording intermediate samples.
pub fn flow_map<T: Real>(
    spec: &FieldSpec<T>,
    p: &PointS3<T>,
    t: T,
    tol: T,
) -> Result<PointS3<T>, FlowError> {
    validate(t.as_f64(), tol.as_f64())?;
    let x = Stepper::new(spec, tol).advance(&p.coords(), t)?;
    Ok(PointS3::normalized(x))
}
