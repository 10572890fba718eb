use crate::num::{self, Real};

use super::{FlowError, RecurrenceEvent, Trajectory};

/// Returns times at which the flow line returns within `delta` of its start.
///
/// Candidates are discrete local minima of the sampled squared distance to the
/// start at times after 1. Each is located by a parabola through the three
/// samples around the minimum, then polished as a root of
/// `⟨x(t) − p₀, X(x(t))⟩` (half the derivative of the squared distance) by
/// bracketed regula falsi on the re-propagated flow.
pub fn find_recurrences<T: Real>(
    traj: &Trajectory<T>,
    delta: T,
) -> Result<Vec<RecurrenceEvent<T>>, FlowError> {
    if !(delta > T::zero() && delta < T::lit(2.0)) {
        return Err(FlowError::InvalidDelta(delta.as_f64()));
    }
    let p0 = traj.start().coords();
    let times = traj.times();
    let d2: Vec<T> = traj
        .points()
        .iter()
        .map(|p| {
            let d = num::sub(&p.coords(), &p0);
            num::dot(&d, &d)
        })
        .collect();
    // The true minimum is at most one sample chord below the sampled one.
    let admit = delta + T::lit(super::MAX_SAMPLE_CHORD);
    let mut events = Vec::new();
    for k in 1..d2.len().saturating_sub(1) {
        if !(d2[k] <= d2[k - 1] && d2[k] < d2[k + 1]) || times[k + 1] <= T::one() {
            continue;
        }
        if d2[k].sqrt() > admit {
            continue;
        }
        let t = refine(traj, &p0, [k - 1, k, k + 1], &d2)?;
        if t <= T::one() {
            continue;
        }
        let gap = num::dist(&traj.state_at(t)?.coords(), &p0);
        if gap <= delta {
            events.push(RecurrenceEvent { time: t, gap });
        }
    }
    Ok(events)
}

fn refine<T: Real>(
    traj: &Trajectory<T>,
    p0: &[T; 4],
    idx: [usize; 3],
    d2: &[T],
) -> Result<T, FlowError> {
    let times = traj.times();
    let [t0, t1, t2] = idx.map(|i| times[i]);
    let [f0, f1, f2] = idx.map(|i| d2[i]);
    let guess = parabola_vertex(t0, t1, t2, f0, f1, f2).unwrap_or(t1);
    let slope = |t: T| -> Result<T, FlowError> {
        let x = traj.state_at(t)?.coords();
        Ok(num::dot(&num::sub(&x, p0), &traj.field().eval_raw(&x)))
    };
    let (mut lo, mut hi) = (t0, t2);
    let (mut g_lo, mut g_hi) = (slope(lo)?, slope(hi)?);
    if !(g_lo < T::zero() && g_hi > T::zero()) {
        return Ok(guess);
    }
    let g = slope(guess)?;
    if g == T::zero() {
        return Ok(guess);
    }
    if g < T::zero() {
        lo = guess;
        g_lo = g;
    } else {
        hi = guess;
        g_hi = g;
    }
    // Illinois variant of regula falsi: halve the stale endpoint's value so both
    // ends keep moving.
    let mut side = 0i8;
    let mut t = guess;
    for _ in 0..60 {
        let next = (lo * g_hi - hi * g_lo) / (g_hi - g_lo);
        if (next - t).abs() <= T::epsilon() * T::lit(8.0) * t.abs().max(T::one()) {
            return Ok(next);
        }
        t = next;
        let g = slope(t)?;
        if g == T::zero() {
            return Ok(t);
        }
        if g < T::zero() {
            lo = t;
            g_lo = g;
            if side == -1 {
                g_hi = g_hi / T::lit(2.0);
            }
            side = -1;
        } else {
            hi = t;
            g_hi = g;
            if side == 1 {
                g_lo = g_lo / T::lit(2.0);
            }
            side = 1;
        }
        if hi - lo <= T::epsilon() * T::lit(8.0) * t.abs().max(T::one()) {
            return Ok(t);
        }
    }
    Ok(t)
}

fn parabola_vertex<T: Real>(t0: T, t1: T, t2: T, f0: T, f1: T, f2: T) -> Option<T> {
    let d01 = (f1 - f0) / (t1 - t0);
    let d12 = (f2 - f1) / (t2 - t1);
    let curvature = (d12 - d01) / (t2 - t0);
    if !(curvature > T::zero()) {
        return None;
    }
    // f(t) = f0 + d01 (t − t0) + curvature (t − t0)(t − t1); set f'(t) = 0.
    let v = (t0 + t1) / T::lit(2.0) - d01 / (T::lit(2.0) * curvature);
    (v >= t0 && v <= t2).then_some(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::FieldSpec;
    use crate::flow::{integrate, DEFAULT_TOL};
    use crate::geometry::PointS3;
    use std::f64::consts::{PI, SQRT_2};

    fn s3(c: [f64; 4]) -> PointS3<f64> {
        PointS3::new(c).unwrap()
    }

    #[test]
    fn parabola_vertex_exact_for_quadratics() {
        let f = |t: f64| 3.0 * (t - 1.3) * (t - 1.3) + 0.5;
        let v = parabola_vertex(1.0, 1.2, 1.7, f(1.0), f(1.2), f(1.7)).unwrap();
        assert!((v - 1.3).abs() < 1e-12);
    }

    #[test]
    fn hopf_returns_every_period() {
        let p0 = s3([0.3, 0.5, -0.2, 0.6]);
        let tr = integrate(&FieldSpec::Hopf, &p0, 20.0 * PI, DEFAULT_TOL).unwrap();
        let ev = find_recurrences(&tr, 1e-2).unwrap();
        assert_eq!(ev.len(), 9);
        for (k, e) in ev.iter().enumerate() {
            assert!((e.time - 2.0 * PI * (k + 1) as f64).abs() < 1e-6, "{e:?}");
            assert!(e.gap < 1e-6);
        }
    }

    /// Times in (1, T] at which the closed-form flow of the (1, √2) ellipsoid field
    /// has a local distance minimum within `delta`, by brute-force scanning.
    fn brute_force_minima(p0: [f64; 4], horizon: f64, delta: f64) -> Vec<f64> {
        let flow = |t: f64| {
            let (c1, s1, c2, s2) = (t.cos(), t.sin(), (SQRT_2 * t).cos(), (SQRT_2 * t).sin());
            [
                c1 * p0[0] - s1 * p0[1],
                s1 * p0[0] + c1 * p0[1],
                c2 * p0[2] - s2 * p0[3],
                s2 * p0[2] + c2 * p0[3],
            ]
        };
        let d = |t: f64| {
            let x = flow(t);
            (0..4).map(|i| (x[i] - p0[i]).powi(2)).sum::<f64>().sqrt()
        };
        let h = 1e-4;
        let n = (horizon / h) as usize;
        let mut out = Vec::new();
        for k in 1..n {
            let t = k as f64 * h;
            if t > 1.0 && d(t) <= d(t - h) && d(t) < d(t + h) && d(t) <= delta {
                out.push(t);
            }
        }
        out
    }

    #[test]
    fn irrational_ellipsoid_returns_match_brute_force() {
        let p0 = s3([0.6, 0.1, -0.5, 0.61]);
        let spec = FieldSpec::ellipsoid(1.0, SQRT_2).unwrap();
        let horizon = 200.0;
        let tr = integrate(&spec, &p0, horizon, DEFAULT_TOL).unwrap();
        let ev = find_recurrences(&tr, 0.05).unwrap();
        let expected = brute_force_minima(p0.coords(), horizon - 0.1, 0.05);
        assert!(!expected.is_empty());
        let found: Vec<f64> = ev.iter().map(|e| e.time).filter(|&t| t < horizon - 0.1).collect();
        assert_eq!(found.len(), expected.len(), "{found:?} vs {expected:?}");
        for (a, b) in found.iter().zip(&expected) {
            assert!((a - b).abs() < 2e-4, "{a} vs {b}");
        }
        // A close return needs both planes near a full turn: t ≈ 2πq with q√2 ≈ p.
        for t in &found {
            let turns = t / (2.0 * PI);
            let second = turns * SQRT_2;
            assert!((turns - turns.round()).abs() < 0.02 && (second - second.round()).abs() < 0.02);
        }
    }

    #[test]
    fn large_delta_reports_every_minimum() {
        let p0 = s3([0.6, 0.1, -0.5, 0.61]);
        let spec = FieldSpec::ellipsoid(1.0, SQRT_2).unwrap();
        let tr = integrate(&spec, &p0, 60.0, DEFAULT_TOL).unwrap();
        let ev = find_recurrences(&tr, 1.99).unwrap();
        let expected = brute_force_minima(p0.coords(), 59.9, 1.99);
        let found = ev.iter().filter(|e| e.time < 59.9).count();
        assert_eq!(found, expected.len());
        for w in ev.windows(2) {
            assert!(w[0].time < w[1].time);
        }
    }

    #[test]
    fn rejects_bad_delta() {
        let p0 = s3([1.0, 0.0, 0.0, 0.0]);
        let tr = integrate(&FieldSpec::Hopf, &p0, 7.0, DEFAULT_TOL).unwrap();
        assert!(find_recurrences(&tr, 0.0).is_err());
        assert!(find_recurrences(&tr, 2.5).is_err());
    }
}
