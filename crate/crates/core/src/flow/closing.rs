use crate::geometry::{geodesic_arc, PointS3, Polyline};
use crate::num::{self, Real, Vec4};

use super::{FlowError, RecurrenceEvent, Trajectory};

/// Returns closer than this are closed by the straight segment back to the start.
pub const CLOSE_DIRECTLY_BELOW: f64 = 1e-6;
/// Minimum distance the closing arc must keep from the flow segment.
pub const EMBEDDING_RESOLUTION: f64 = 1e-6;
/// Target spacing of closing-arc samples, comparable to flow samples.
const ARC_SPACING: f64 = 0.02;
const MAX_HALVINGS: usize = 8;

/// Closes the flow segment `[0, event.time]` into a loop with the shortest geodesic
/// arc from its endpoint back to its start.
///
/// The arc interior is pushed off the great circle by `h sin(πs)` along a unit normal
/// orthogonal to both endpoints and to the flow direction at the endpoint, with `h`
/// starting at `jitter` and halved whenever the arc comes within
/// [`EMBEDDING_RESOLUTION`] of the flow segment. The two arc segments touching the
/// endpoints are exempt from the check, since no offset can move their fixed ends.
pub fn close_up<T: Real>(
    traj: &Trajectory<T>,
    event: &RecurrenceEvent<T>,
    jitter: T,
) -> Result<Polyline<T>, FlowError> {
    if !(jitter >= T::zero() && jitter.is_finite()) {
        return Err(FlowError::InvalidJitter(jitter.as_f64()));
    }
    let s = event.time;
    if !(s > T::zero() && s <= traj.horizon()) {
        return Err(FlowError::TimeOutOfSpan(s.as_f64()));
    }
    let p0 = traj.start();
    let mut flow: Vec<PointS3<T>> = traj
        .times()
        .iter()
        .zip(traj.points())
        .take_while(|(t, _)| **t < s)
        .map(|(_, p)| *p)
        .collect();
    let end = traj.state_at(s)?;
    if end.chordal_distance(&p0) < T::lit(CLOSE_DIRECTLY_BELOW) {
        return Ok(Polyline::from_s3(flow, true)?);
    }
    if flow.last().is_some_and(|p| p.coords() != end.coords()) {
        flow.push(end);
    }
    let theta = end.angle(&p0);
    let n = ((theta.as_f64() / ARC_SPACING).ceil() as usize + 1).max(5);
    let arc = geodesic_arc(&end, &p0, n)?;
    let arc = arc.s3_vertices().expect("arc on S3");
    let normal = arc_normal(&end.coords(), &p0.coords(), &traj.field().eval_raw(&end.coords()));
    let mut h = jitter;
    for attempt in 0..=MAX_HALVINGS {
        if attempt > 0 {
            h = h / T::lit(2.0);
        }
        let last = arc.len() - 1;
        let offset: Vec<PointS3<T>> = arc
            .iter()
            .enumerate()
            .map(|(i, a)| {
                if i == 0 || i == last {
                    return *a;
                }
                let s = T::from_usize_lossy(i) / T::from_usize_lossy(last);
                let bump = h * (T::PI() * s).sin();
                PointS3::normalized(num::axpy(&a.coords(), bump, &normal))
            })
            .collect();
        if embedded(&flow, &offset) {
            let mut vertices = flow;
            vertices.extend_from_slice(&offset[1..last]);
            return Ok(Polyline::from_s3(vertices, true)?);
        }
    }
    Err(FlowError::EmbeddingFailure)
}

/// Unit vector orthogonal to `a`, `b` and, when possible, the flow direction `v`.
fn arc_normal<T: Real>(a: &Vec4<T>, b: &Vec4<T>, v: &Vec4<T>) -> Vec4<T> {
    let mut best = num::cross4(a, b, v);
    let floor = T::lit(1e-3) * num::norm(&num::sub(a, b)) * num::norm(v);
    if !(num::norm(&best) > floor) {
        // The flow runs along the arc's own great circle; any normal to the arc will do.
        for k in 0..4 {
            let mut e = [T::zero(); 4];
            e[k] = T::one();
            let c = num::cross4(a, b, &e);
            if num::norm(&c) > num::norm(&best) {
                best = c;
            }
        }
    }
    num::scale(&best, T::one() / num::norm(&best))
}

fn embedded<T: Real>(flow: &[PointS3<T>], arc: &[PointS3<T>]) -> bool {
    let res = T::lit(EMBEDDING_RESOLUTION);
    let last = arc.len() - 1;
    for j in 1..last.saturating_sub(1) {
        let (a0, a1) = (arc[j].coords(), arc[j + 1].coords());
        let a_mid = num::scale(&num::add(&a0, &a1), T::lit(0.5));
        let a_half = num::dist(&a0, &a1) / T::lit(2.0);
        for w in flow.windows(2) {
            let (f0, f1) = (w[0].coords(), w[1].coords());
            // Cheap rejection before the exact segment distance.
            let f_mid = num::scale(&num::add(&f0, &f1), T::lit(0.5));
            let f_half = num::dist(&f0, &f1) / T::lit(2.0);
            if num::dist(&a_mid, &f_mid) > a_half + f_half + res {
                continue;
            }
            if num::segment_distance(&a0, &a1, &f0, &f1).0 < res {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::FieldSpec;
    use crate::flow::{integrate, DEFAULT_TOL};
    use std::f64::consts::PI;

    fn s3(c: [f64; 4]) -> PointS3<f64> {
        PointS3::new(c).unwrap()
    }

    #[test]
    fn periodic_event_closes_directly() {
        let p0 = s3([0.3, 0.5, -0.2, 0.6]);
        let tr = integrate(&FieldSpec::Hopf, &p0, 7.0, DEFAULT_TOL).unwrap();
        let event = RecurrenceEvent {
            time: 2.0 * PI,
            gap: 0.0,
        };
        let lp = close_up(&tr, &event, 1e-3).unwrap();
        assert!(lp.is_closed());
        let n_flow = tr.times().iter().filter(|t| **t < 2.0 * PI).count();
        assert_eq!(lp.len(), n_flow);
    }

    #[test]
    fn length_is_flow_plus_arc() {
        let p0 = s3([0.6, 0.1, -0.5, 0.61]);
        let spec = FieldSpec::ellipsoid(1.0, 2f64.sqrt()).unwrap();
        let tr = integrate(&spec, &p0, 50.0, DEFAULT_TOL).unwrap();
        let event = RecurrenceEvent { time: 44.4, gap: 0.0 };
        let lp = close_up(&tr, &event, 1e-5).unwrap();
        let mut flow: Vec<[f64; 4]> = tr
            .times()
            .iter()
            .zip(tr.points())
            .filter(|(t, _)| **t < 44.4)
            .map(|(_, p)| p.coords())
            .collect();
        let end = tr.state_at(44.4).unwrap();
        flow.push(end.coords());
        let flow_len: f64 = flow.windows(2).map(|w| num::dist(&w[0], &w[1])).sum();
        let n = ((end.angle(&p0) / ARC_SPACING).ceil() as usize + 1).max(5);
        let arc_len = geodesic_arc(&end, &p0, n).unwrap().length();
        assert!((lp.length() - flow_len - arc_len).abs() < 1e-6);
    }

    #[test]
    fn overlapping_closure_without_jitter_fails() {
        // After a full turn plus a quarter, the shortest way home runs back along the
        // fiber itself, on top of the first quarter of the flow segment.
        let p0 = s3([0.3, 0.5, -0.2, 0.6]);
        let tr = integrate(&FieldSpec::Hopf, &p0, 8.0, DEFAULT_TOL).unwrap();
        let event = RecurrenceEvent {
            time: 2.5 * PI,
            gap: 0.0,
        };
        assert_eq!(close_up(&tr, &event, 0.0), Err(FlowError::EmbeddingFailure));
        assert!(close_up(&tr, &event, 0.05).is_ok());
        assert_eq!(close_up(&tr, &event, -1.0), Err(FlowError::InvalidJitter(-1.0)));
    }

    #[test]
    fn arc_normal_is_orthonormal() {
        let a = [1.0f64, 0.0, 0.0, 0.0];
        let b = [0.0f64, 1.0, 0.0, 0.0];
        for v in [[0.0, 1.0, 0.0, 0.0], [0.0, 0.3, 0.5, -0.2]] {
            let n = arc_normal(&a, &b, &v);
            assert!((num::norm(&n) - 1.0).abs() < 1e-14);
            assert!(num::dot(&n, &a).abs() < 1e-14 && num::dot(&n, &b).abs() < 1e-14);
        }
    }
}
