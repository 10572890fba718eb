//! Asymptotic linking of flow lines and the linking `Lk_ω(μ)` of an invariant
//! measure with the volume, by the primitive formula and by the Gauss kernel.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fields::{FieldError, FieldSpec, Primitive};
use crate::flow::{self, FlowError, FlowOptions, Trajectory, CLOSE_DIRECTLY_BELOW};
use crate::geometry::{select_pole, PointS3, StereographicChart};
use crate::linking::{self, LinkingError, LinkingResult, Method};
use crate::num::{self, Real, Vec3, Vec4};

/// Shortest horizon accepted by the long-time estimators.
pub const MIN_HORIZON: f64 = 10.0;
pub const MIN_VOLUME_SAMPLES: usize = 16;
/// Trajectories are integrated this far past the horizon so that a return at the
/// horizon itself is seen as an interior minimum.
pub const HORIZON_MARGIN: f64 = 0.5;
/// Largest gap closed by a chord in the kernel estimator.
pub const KERNEL_RECURRENCE_GAP: f64 = 1e-3;
/// Fraction of kernel pairs allowed to fail on near-singular geometry.
pub const MAX_SINGULAR_FRACTION: f64 = 0.01;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AsymptoticError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("orbits come within {0:.3e} of each other")]
    OrbitsNotDisjoint(f64),
    #[error("no recurrence with gap at most delta below the horizon")]
    NoRecurrence,
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Linking(#[from] LinkingError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Where the points of a [`MeasureSample`] came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    PeriodicOrbit { start: [f64; 4], period: f64, nodes: usize },
    Birkhoff { start: [f64; 4], horizon: f64, nodes: usize },
    Volume { n_samples: usize, seed: u64 },
    /// Volume samples each spread over `nodes` equally spaced times of its closed orbit.
    VolumeOrbits { n_samples: usize, nodes: usize, seed: u64 },
    Explicit,
}

/// A weighted point cloud standing in for an invariant probability measure.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureSample<T> {
    points: Vec<PointS3<T>>,
    weights: Vec<T>,
    provenance: Provenance,
}

fn invalid(msg: impl Into<String>) -> AsymptoticError {
    AsymptoticError::InvalidParameter(msg.into())
}

impl<T: Real> MeasureSample<T> {
    /// Weights must be nonnegative and sum to 1 up to rounding.
    pub fn new(points: Vec<PointS3<T>>, weights: Vec<T>, provenance: Provenance) -> Result<Self, AsymptoticError> {
        if points.is_empty() || points.len() != weights.len() {
            return Err(AsymptoticError::InvalidMeasure(format!(
                "{} points with {} weights",
                points.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !(*w >= T::zero() && w.is_finite())) {
            return Err(AsymptoticError::InvalidMeasure("weights must be finite and nonnegative".into()));
        }
        let sum: f64 = weights.iter().map(|w| w.as_f64()).sum();
        let slack = 1e-12f64.max(4.0 * T::epsilon().as_f64() * weights.len() as f64);
        if (sum - 1.0).abs() > slack {
            return Err(AsymptoticError::InvalidMeasure(format!("weights sum to {sum}")));
        }
        Ok(Self {
            points,
            weights,
            provenance,
        })
    }

    fn normalized(points: Vec<PointS3<T>>, raw: Vec<T>, provenance: Provenance) -> Result<Self, AsymptoticError> {
        let total = raw.iter().fold(T::zero(), |a, &w| a + w);
        let weights = raw.into_iter().map(|w| w / total).collect();
        Self::new(points, weights, provenance)
    }

    /// Time-uniform nodes `k · period / nodes` along a closed orbit. For a periodic
    /// integrand this rectangle rule is the trapezoid rule and converges spectrally.
    pub fn periodic_orbit(
        spec: &FieldSpec<T>,
        start: &PointS3<T>,
        period: T,
        nodes: usize,
        opts: &FlowOptions<'_>,
    ) -> Result<Self, AsymptoticError> {
        if nodes == 0 {
            return Err(invalid("periodic orbit needs at least one node"));
        }
        let traj = opts.integrate(spec, start, period)?;
        let n = T::from_usize_lossy(nodes);
        let points = (0..nodes)
            .map(|k| traj.state_at(period * T::from_usize_lossy(k) / n))
            .collect::<Result<Vec<_>, _>>()?;
        let weights = vec![T::one() / n; nodes];
        Self::normalized(
            points,
            weights,
            Provenance::PeriodicOrbit {
                start: start.coords().map(|c| c.as_f64()),
                period: period.as_f64(),
                nodes,
            },
        )
    }

    /// Trapezoid-weighted nodes on `[0, horizon]` along the flow line of `start`.
    pub fn birkhoff(
        spec: &FieldSpec<T>,
        start: &PointS3<T>,
        horizon: T,
        nodes: usize,
        opts: &FlowOptions<'_>,
    ) -> Result<Self, AsymptoticError> {
        if nodes < 2 {
            return Err(invalid("Birkhoff average needs at least two nodes"));
        }
        let traj = opts.integrate(spec, start, horizon)?;
        let last = nodes - 1;
        let points = (0..nodes)
            .map(|k| {
                let t = if k == last {
                    horizon
                } else {
                    horizon * T::from_usize_lossy(k) / T::from_usize_lossy(last)
                };
                traj.state_at(t)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let weights = (0..nodes)
            .map(|k| if k == 0 || k == last { T::lit(0.5) } else { T::one() })
            .collect();
        Self::normalized(
            points,
            weights,
            Provenance::Birkhoff {
                start: start.coords().map(|c| c.as_f64()),
                horizon: horizon.as_f64(),
                nodes,
            },
        )
    }

    /// `n` round-uniform points reweighted by the field's density, i.e. a
    /// self-normalized importance sample of the invariant volume.
    pub fn volume(spec: &FieldSpec<T>, n: usize, seed: u64) -> Result<Self, AsymptoticError> {
        if n == 0 {
            return Err(invalid("volume sample needs at least one point"));
        }
        let points = uniform_points(n, seed);
        let weights = points.iter().map(|p| spec.density(p)).collect();
        Self::normalized(points, weights, Provenance::Volume { n_samples: n, seed })
    }

    /// Flow-invariant version of [`MeasureSample::volume`]: each of the `n` volume
    /// samples is replaced by `nodes` time-equidistant points of its closed orbit,
    /// sharing its weight. Integrals of exact forms `dg(X)` then vanish up to the
    /// spectral error of the periodic rectangle rule. Needs closed-form periods.
    pub fn invariant_volume(
        spec: &FieldSpec<T>,
        n: usize,
        nodes: usize,
        seed: u64,
        opts: &FlowOptions<'_>,
    ) -> Result<Self, AsymptoticError> {
        if n == 0 || nodes == 0 {
            return Err(invalid("invariant volume sample needs points and orbit nodes"));
        }
        let base = uniform_points::<T>(n, seed);
        let orbits: Vec<Result<Vec<PointS3<T>>, AsymptoticError>> = base
            .par_iter()
            .map(|p| {
                let period = spec
                    .orbit_period(p)
                    .ok_or_else(|| invalid(format!("no closed-form period for {spec} at {:?}", p.coords())))?;
                let traj = opts.integrate(spec, p, period)?;
                let m = T::from_usize_lossy(nodes);
                (0..nodes)
                    .map(|k| traj.state_at(period * T::from_usize_lossy(k) / m).map_err(Into::into))
                    .collect()
            })
            .collect();
        let mut points = Vec::with_capacity(n * nodes);
        let mut weights = Vec::with_capacity(n * nodes);
        for (p, orbit) in base.iter().zip(orbits) {
            let w = spec.density(p);
            points.extend(orbit?);
            weights.extend(std::iter::repeat_n(w, nodes));
        }
        Self::normalized(points, weights, Provenance::VolumeOrbits { n_samples: n, nodes, seed })
    }

    pub fn points(&self) -> &[PointS3<T>] {
        &self.points
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `n` round-uniform points on S³ from a ChaCha8 stream seeded with `seed`.
pub fn uniform_points<T: Real>(n: usize, seed: u64) -> Vec<PointS3<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| loop {
            let g: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
            if num::norm(&g) > 1e-6 {
                break PointS3::normalized(g.map(T::lit));
            }
        })
        .collect()
}

/// A value with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<T> {
    pub value: T,
    pub stderr: T,
}

/// `Σ wᵢ ν(X)(pᵢ)` with the field's canonical primitive.
pub fn lk_omega_direct<T: Real>(spec: &FieldSpec<T>, mu: &MeasureSample<T>) -> Result<T, FieldError> {
    Ok(lk_omega_direct_with(spec, &spec.primitive()?, mu))
}

/// `Σ wᵢ ν(X)(pᵢ)` for a caller-supplied primitive `ν`.
pub fn lk_omega_direct_with<T: Real, P: Primitive<T>>(spec: &FieldSpec<T>, nu: &P, mu: &MeasureSample<T>) -> T {
    mu.points
        .iter()
        .zip(&mu.weights)
        .fold(T::zero(), |acc, (p, &w)| {
            let x = p.coords();
            acc + w * nu.pair(&x, &spec.eval_raw(&x))
        })
}

/// [`lk_omega_direct_with`] together with an error estimate: the self-normalized
/// importance-sampling standard error for volume samples (over whole orbits when
/// they are spread along orbits), and a summation roundoff floor for every sample.
pub fn lk_omega_direct_estimate<T: Real, P: Primitive<T>>(
    spec: &FieldSpec<T>,
    nu: &P,
    mu: &MeasureSample<T>,
) -> Estimate<T> {
    let values: Vec<T> = mu
        .points
        .iter()
        .map(|p| {
            let x = p.coords();
            nu.pair(&x, &spec.eval_raw(&x))
        })
        .collect();
    let value = lk_omega_direct_with(spec, nu, mu);
    let magnitude = values.iter().zip(&mu.weights).fold(T::zero(), |a, (v, &w)| a + w * v.abs());
    let mut stderr = T::lit(64.0) * T::epsilon() * magnitude * T::from_usize_lossy(mu.len()).sqrt();
    let cluster = match mu.provenance {
        Provenance::Volume { .. } => Some(1),
        Provenance::VolumeOrbits { nodes, .. } => Some(nodes),
        _ => None,
    };
    if let Some(size) = cluster {
        let var = values
            .chunks(size)
            .zip(mu.weights.chunks(size))
            .fold(T::zero(), |a, (vs, ws)| {
                let w = ws.iter().fold(T::zero(), |s, &x| s + x);
                if w <= T::zero() {
                    return a;
                }
                let v = vs.iter().zip(ws).fold(T::zero(), |s, (v, &x)| s + x * *v) / w;
                a + w * w * (v - value) * (v - value)
            });
        stderr = stderr + var.sqrt();
    }
    Estimate { value, stderr }
}

/// Normalized linking of two closed-up flow lines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticEstimate<T> {
    /// `link / (S* T*)`, with quadrature error plus the finite-time term `1/min(S*, T*)`.
    pub result: LinkingResult<T>,
    pub s_star: T,
    pub t_star: T,
    /// The linking number of the two loops before normalization.
    pub link: LinkingResult<T>,
}

fn check_horizon<T: Real>(name: &str, h: T) -> Result<(), AsymptoticError> {
    if !(h >= T::lit(MIN_HORIZON) && h + T::lit(HORIZON_MARGIN) <= T::lit(flow::MAX_HORIZON)) {
        return Err(invalid(format!(
            "{name} = {h} outside [{MIN_HORIZON}, {}]",
            flow::MAX_HORIZON - HORIZON_MARGIN
        )));
    }
    Ok(())
}

/// Smallest distance between the chords of two sampled curves on S³, computed
/// exactly only where it is below `cutoff`; otherwise some value ≥ `cutoff`.
fn orbit_separation<T: Real>(a: &[PointS3<T>], b: &[PointS3<T>], cutoff: T) -> T {
    let seg = |pts: &[PointS3<T>]| -> Vec<(Vec4<T>, Vec4<T>, Vec4<T>, T)> {
        pts.windows(2)
            .map(|w| {
                let (p, q) = (w[0].coords(), w[1].coords());
                let mid = num::scale(&num::add(&p, &q), T::lit(0.5));
                (p, q, mid, num::dist(&p, &q) / T::lit(2.0))
            })
            .collect()
    };
    let (sa, sb) = (seg(a), seg(b));
    sa.par_iter()
        .map(|(p0, p1, ma, ra)| {
            let mut best = cutoff;
            for (q0, q1, mb, rb) in &sb {
                if num::dist(ma, mb) - *ra - *rb >= best {
                    continue;
                }
                let d = num::segment_distance(p0, p1, q0, q1).0;
                if d < best {
                    best = d;
                }
            }
            best
        })
        .reduce(|| cutoff, |x, y| x.min(y))
}

fn last_recurrence<T: Real>(
    traj: &Trajectory<T>,
    delta: T,
    lower: T,
    upper: T,
) -> Result<Option<flow::RecurrenceEvent<T>>, FlowError> {
    let cap = upper * (T::one() + T::lit(1e-9));
    Ok(flow::find_recurrences(traj, delta)?
        .into_iter()
        .rev()
        .find(|e| e.time <= cap && e.time >= lower && e.gap <= delta))
}

/// Normalized linking `link(k(S*, p), k(T*, q)) / (S* T*)` of the flow lines of `p`
/// and `q` closed up at their last returns within `delta` before `s` and `t`.
pub fn asymptotic_linking<T: Real>(
    spec: &FieldSpec<T>,
    p: &PointS3<T>,
    q: &PointS3<T>,
    s: T,
    t: T,
    delta: T,
    jitter: T,
) -> Result<AsymptoticEstimate<T>, AsymptoticError> {
    asymptotic_linking_with(spec, p, q, s, t, delta, jitter, &FlowOptions::default())
}

#[allow(clippy::too_many_arguments)]
pub fn asymptotic_linking_with<T: Real>(
    spec: &FieldSpec<T>,
    p: &PointS3<T>,
    q: &PointS3<T>,
    s: T,
    t: T,
    delta: T,
    jitter: T,
    opts: &FlowOptions<'_>,
) -> Result<AsymptoticEstimate<T>, AsymptoticError> {
    check_horizon("S", s)?;
    check_horizon("T", t)?;
    if !(delta > T::zero() && delta < T::lit(2.0)) {
        return Err(invalid(format!("delta = {delta} outside (0, 2)")));
    }
    if !(jitter >= T::zero() && jitter.is_finite()) {
        return Err(invalid(format!("jitter = {jitter} must be nonnegative")));
    }
    let margin = T::lit(HORIZON_MARGIN);
    let (tp, tq) = rayon::join(
        || opts.integrate(spec, p, s + margin),
        || opts.integrate(spec, q, t + margin),
    );
    let (tp, tq) = (tp?, tq?);
    let separation = orbit_separation(tp.points(), tq.points(), delta);
    if separation < delta {
        return Err(AsymptoticError::OrbitsNotDisjoint(separation.as_f64()));
    }
    let one = T::one();
    let ep = last_recurrence(&tp, delta, one, s)?.ok_or(AsymptoticError::NoRecurrence)?;
    let eq = last_recurrence(&tq, delta, one, t)?.ok_or(AsymptoticError::NoRecurrence)?;
    let kp = flow::close_up(&tp, &ep, jitter)?;
    let kq = flow::close_up(&tq, &eq, jitter)?;
    let link = linking::linking_integral(&kp, &kq)?;
    let norm = ep.time * eq.time;
    Ok(AsymptoticEstimate {
        result: LinkingResult {
            value: link.value / norm,
            stderr: link.stderr / norm + one / ep.time.min(eq.time),
            method: Method::Asymptotic,
        },
        s_star: ep.time,
        t_star: eq.time,
        link,
    })
}

/// A flow segment prepared for the kernel average: closed by a chord at its last
/// return in `[horizon/2, horizon]` when there is one, open at `horizon` otherwise.
struct Segment<T> {
    vertices: Vec<PointS3<T>>,
    time: T,
    closed: bool,
    min_speed: T,
}

fn segment<T: Real>(traj: &Trajectory<T>, horizon: T) -> Result<Segment<T>, FlowError> {
    let event = last_recurrence(traj, T::lit(KERNEL_RECURRENCE_GAP), horizon / T::lit(2.0), horizon)?;
    let (end_time, closed) = match event {
        Some(e) => (e.time.min(traj.horizon()), true),
        None => (horizon, false),
    };
    let end = traj.state_at(end_time)?;
    let mut vertices: Vec<PointS3<T>> = traj
        .times()
        .iter()
        .zip(traj.points())
        .take_while(|(s, _)| **s < end_time)
        .map(|(_, p)| *p)
        .collect();
    let tiny = T::lit(1e-12);
    let near_start = closed && end.chordal_distance(&vertices[0]) < T::lit(CLOSE_DIRECTLY_BELOW);
    if !near_start && end.chordal_distance(vertices.last().expect("start sample")) > tiny {
        vertices.push(end);
    }
    let min_speed = vertices
        .iter()
        .map(|p| num::norm(&traj.field().eval(p)))
        .fold(T::infinity(), |a, b| a.min(b));
    Ok(Segment {
        vertices,
        time: end_time,
        closed,
        min_speed,
    })
}

/// Output of the kernel estimator of `Lk_ω`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelEstimate<T> {
    pub result: LinkingResult<T>,
    pub seed: u64,
    /// Length of the seed flow segment actually used.
    pub s_star: T,
    pub pairs_used: usize,
    pub pairs_dropped: usize,
}

/// Monte Carlo estimate of `∬ 𝓛(X, X) d(μ × Ω)` for μ the Birkhoff measure of
/// `mu_seed`: the ρ-weighted mean over volume samples `qⱼ` of the Gauss integral of
/// the two flow segments divided by their lengths in time.
///
/// Each segment is closed by a chord at its last return within `1e-3` in the second
/// half of its horizon, which removes the boundary terms of the open double
/// integral. The error adds the weighted sample standard error, the quadrature
/// error, a relative `2·tol/min|X|` for the recurrence times found by a numerical
/// flow, and `1/min(S, T)` for any segment left open.
pub fn lk_omega_kernel<T: Real>(
    spec: &FieldSpec<T>,
    mu_seed: &PointS3<T>,
    s: T,
    t: T,
    n_volume: usize,
    seed: u64,
) -> Result<KernelEstimate<T>, AsymptoticError> {
    lk_omega_kernel_with(spec, mu_seed, s, t, n_volume, seed, &FlowOptions::default())
}

#[allow(clippy::too_many_arguments)]
pub fn lk_omega_kernel_with<T: Real>(
    spec: &FieldSpec<T>,
    mu_seed: &PointS3<T>,
    s: T,
    t: T,
    n_volume: usize,
    seed: u64,
    opts: &FlowOptions<'_>,
) -> Result<KernelEstimate<T>, AsymptoticError> {
    check_horizon("S", s)?;
    check_horizon("T", t)?;
    if n_volume < MIN_VOLUME_SAMPLES {
        return Err(invalid(format!("n_volume = {n_volume} below {MIN_VOLUME_SAMPLES}")));
    }
    let margin = T::lit(HORIZON_MARGIN);
    let base = segment(&opts.integrate(spec, mu_seed, s + margin)?, s)?;
    let samples = uniform_points::<T>(n_volume, seed);
    let tol = T::lit(opts.tol);

    let per_pair: Vec<Result<Option<(T, T, T)>, AsymptoticError>> = samples
        .par_iter()
        .map(|qj| {
            let other = segment(&opts.integrate(spec, qj, t + margin)?, t)?;
            let chart = StereographicChart::new(select_pole([base.vertices.as_slice(), other.vertices.as_slice()]));
            let project = |pts: &[PointS3<T>]| -> Result<Vec<Vec3<T>>, LinkingError> {
                pts.iter()
                    .map(|p| chart.project(p).map(|r| r.coords()).map_err(LinkingError::from))
                    .collect()
            };
            let (a, b) = (project(&base.vertices)?, project(&other.vertices)?);
            let (link, quad) = match linking::polygon_integral(&a, base.closed, &b, other.closed) {
                Ok(v) => v,
                Err(LinkingError::CurvesIntersect) | Err(LinkingError::NearSingular) => return Ok(None),
                Err(e) => return Err(e.into()),
            };
            let norm = base.time * other.time;
            let value = link / norm;
            let mut sys = quad / norm
                + value.abs() * T::lit(2.0) * tol / base.min_speed.min(other.min_speed);
            if !(base.closed && other.closed) {
                sys = sys + T::one() / base.time.min(other.time);
            }
            Ok(Some((spec.density(qj), value, sys)))
        })
        .collect();

    let mut kept = Vec::with_capacity(n_volume);
    let mut dropped = 0usize;
    for r in per_pair {
        match r? {
            Some(v) => kept.push(v),
            None => dropped += 1,
        }
    }
    if dropped as f64 > MAX_SINGULAR_FRACTION * n_volume as f64 || kept.is_empty() {
        return Err(LinkingError::NearSingular.into());
    }
    let total = kept.iter().fold(T::zero(), |a, k| a + k.0);
    let mean = kept.iter().fold(T::zero(), |a, k| a + k.0 / total * k.1);
    let var = kept.iter().fold(T::zero(), |a, k| {
        let w = k.0 / total;
        a + w * w * (k.1 - mean) * (k.1 - mean)
    });
    let systematic = kept.iter().fold(T::zero(), |a, k| a + k.0 / total * k.2);
    Ok(KernelEstimate {
        result: LinkingResult {
            value: mean,
            stderr: var.sqrt() + systematic,
            method: Method::KernelMc,
        },
        seed,
        s_star: base.time,
        pairs_used: kept.len(),
        pairs_dropped: dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{grad_x1x3, ConformalFactor, ExactShift, INV_FOUR_PI2};
    use std::f64::consts::{PI, TAU};

    fn s3(c: [f64; 4]) -> PointS3<f64> {
        PointS3::new(c).unwrap()
    }

    #[test]
    fn measure_weights_are_validated() {
        let p = vec![s3([1.0, 0.0, 0.0, 0.0]), s3([0.0, 1.0, 0.0, 0.0])];
        assert!(MeasureSample::new(p.clone(), vec![0.5, 0.5], Provenance::Explicit).is_ok());
        assert!(MeasureSample::new(p.clone(), vec![0.6, 0.5], Provenance::Explicit).is_err());
        assert!(MeasureSample::new(p.clone(), vec![1.5, -0.5], Provenance::Explicit).is_err());
        assert!(MeasureSample::new(p, vec![1.0], Provenance::Explicit).is_err());
    }

    #[test]
    fn constructed_measures_sum_to_one() {
        let opts = FlowOptions::default();
        let spec = FieldSpec::conformal_default();
        let p = s3([0.3, 0.1, -0.8, 0.5]);
        let period = spec.orbit_period(&p).unwrap();
        for mu in [
            MeasureSample::periodic_orbit(&spec, &p, period, 64, &opts).unwrap(),
            MeasureSample::birkhoff(&spec, &p, 30.0, 200, &opts).unwrap(),
            MeasureSample::volume(&spec, 1000, 3).unwrap(),
        ] {
            let sum: f64 = mu.weights().iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
            assert!(mu.weights().iter().all(|w| *w >= 0.0));
        }
    }

    #[test]
    fn hopf_orbit_average_is_exact() {
        let spec = FieldSpec::Hopf;
        let mu = MeasureSample::periodic_orbit(&spec, &s3([0.2, -0.4, 0.7, 0.1]), TAU, 64, &FlowOptions::default())
            .unwrap();
        assert!((lk_omega_direct(&spec, &mu).unwrap() - INV_FOUR_PI2).abs() < 1e-10);
    }

    #[test]
    fn conformal_orbit_average_matches_closed_form() {
        // On the circle through (0,0,1,0) x₁ = x₂ = 0, so f ≡ 2 and ν(X) = c·2/(4π²).
        let spec = FieldSpec::conformal_default();
        let p = s3([0.0, 0.0, 1.0, 0.0]);
        let mu = MeasureSample::periodic_orbit(&spec, &p, spec.orbit_period(&p).unwrap(), 64, &FlowOptions::default())
            .unwrap();
        let c = ConformalFactor::<f64>::Default.normalization();
        assert!((lk_omega_direct(&spec, &mu).unwrap() - 2.0 * c * INV_FOUR_PI2).abs() < 1e-6);

        // Off the core the time average of f over one period is 2π / P.
        let q = s3([0.6, 0.0, 0.8, 0.0]);
        let period = spec.orbit_period(&q).unwrap();
        let mu = MeasureSample::periodic_orbit(&spec, &q, period, 128, &FlowOptions::default()).unwrap();
        let expected = c * TAU / period * INV_FOUR_PI2;
        assert!((lk_omega_direct(&spec, &mu).unwrap() - expected).abs() < 1e-6);
    }

    #[test]
    fn exact_shift_leaves_orbit_average() {
        let spec = FieldSpec::Hopf;
        let mu = MeasureSample::periodic_orbit(&spec, &s3([0.5, 0.5, 0.5, 0.5]), TAU, 64, &FlowOptions::default())
            .unwrap();
        let base = spec.primitive().unwrap();
        let shifted = ExactShift {
            base,
            scale: 1.0,
            gradient: grad_x1x3,
        };
        let a = lk_omega_direct_with(&spec, &base, &mu);
        let b = lk_omega_direct_with(&spec, &shifted, &mu);
        assert!((a - b).abs() < 1e-8);
    }

    #[test]
    fn volume_estimate_error_covers_truth() {
        let spec = FieldSpec::<f64>::conformal_default();
        let mu = MeasureSample::volume(&spec, 20_000, 11).unwrap();
        let est = lk_omega_direct_estimate(&spec, &spec.primitive().unwrap(), &mu);
        let c = ConformalFactor::<f64>::Default.normalization();
        let exact = c * c * INV_FOUR_PI2;
        assert!(est.stderr > 0.0);
        assert!((est.value - exact).abs() < 4.0 * est.stderr, "{} ± {}", est.value, est.stderr);
    }

    #[test]
    fn invariant_volume_annihilates_exact_forms() {
        let opts = FlowOptions::default();
        for spec in [FieldSpec::<f64>::Hopf, FieldSpec::ellipsoid(1.0, 2.0).unwrap(), FieldSpec::conformal_default()] {
            let mu = MeasureSample::invariant_volume(&spec, 200, 64, 9, &opts).unwrap();
            assert_eq!(mu.len(), 200 * 64);
            let base = spec.primitive().unwrap();
            let shifted = ExactShift {
                base,
                scale: 1.0,
                gradient: grad_x1x3,
            };
            let a = lk_omega_direct_with(&spec, &base, &mu);
            let b = lk_omega_direct_with(&spec, &shifted, &mu);
            assert!((a - b).abs() < 1e-9, "{spec}: {}", (a - b).abs());
            // A pointwise volume sample is not invariant and only averages dg(X) away slowly.
            let plain = MeasureSample::volume(&spec, 200, 9).unwrap();
            let gap = (lk_omega_direct_with(&spec, &base, &plain) - lk_omega_direct_with(&spec, &shifted, &plain)).abs();
            assert!(gap > 1e-4);
        }
        let irrational = FieldSpec::ellipsoid(1.0, 2f64.sqrt()).unwrap();
        assert!(MeasureSample::invariant_volume(&irrational, 4, 8, 1, &opts).is_err());
    }

    #[test]
    fn separation_detects_shared_orbits() {
        let spec = FieldSpec::Hopf;
        let opts = FlowOptions::default();
        let p = s3([1.0, 0.0, 0.0, 0.0]);
        let a = opts.integrate(&spec, &p, 20.0).unwrap();
        let same = opts.integrate(&spec, &s3([0.6, 0.8, 0.0, 0.0]), 20.0).unwrap();
        assert!(orbit_separation(a.points(), same.points(), 1e-3) < 1e-3);
        let other = opts.integrate(&spec, &s3([0.0, 0.0, 1.0, 0.0]), 20.0).unwrap();
        let d = orbit_separation(a.points(), other.points(), 2.0);
        // The fibers through e₁ and e₃ are orthogonal great circles at chordal distance √2.
        assert!((d - 2f64.sqrt()).abs() < 1e-3);
    }

    #[test]
    fn hopf_asymptotic_linking() {
        let spec = FieldSpec::Hopf;
        let p = s3([1.0, 0.0, 0.0, 0.0]);
        let q = s3([0.0, 0.0, 0.6, 0.8]);
        let est = asymptotic_linking(&spec, &p, &q, 12.0 * PI, 12.0 * PI, 1e-3, 1e-3).unwrap();
        assert_eq!(est.link.rounded(), 36);
        assert!((est.s_star - 12.0 * PI).abs() < 1e-6);
        assert!((est.result.value - INV_FOUR_PI2).abs() < 1e-8);
        assert!(est.result.stderr >= 1.0 / est.s_star);
    }

    #[test]
    fn asymptotic_rejects_bad_input() {
        let spec = FieldSpec::Hopf;
        let p = s3([1.0, 0.0, 0.0, 0.0]);
        let same_fiber = s3([0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(
            asymptotic_linking(&spec, &p, &same_fiber, 20.0, 20.0, 1e-3, 1e-3),
            Err(AsymptoticError::OrbitsNotDisjoint(_))
        ));
        let q = s3([0.0, 0.0, 1.0, 0.0]);
        assert!(matches!(
            asymptotic_linking(&spec, &p, &q, 5.0, 20.0, 1e-3, 1e-3),
            Err(AsymptoticError::InvalidParameter(_))
        ));
        // Orbits of an irrational ellipsoid field do not return within 1e-6 before t = 11.
        let irrational = FieldSpec::ellipsoid(1.0, 2f64.sqrt()).unwrap();
        let g = s3([0.6, 0.0, 0.8, 0.0]);
        let h = s3([0.0, 0.8, 0.0, 0.6]);
        assert_eq!(
            asymptotic_linking(&irrational, &g, &h, 11.0, 11.0, 1e-6, 1e-3).unwrap_err(),
            AsymptoticError::NoRecurrence
        );
    }

    #[test]
    fn kernel_rejects_short_horizon_and_few_samples() {
        let p = s3([1.0, 0.0, 0.0, 0.0]);
        assert!(matches!(
            lk_omega_kernel(&FieldSpec::Hopf, &p, 0.0, 20.0, 64, 1),
            Err(AsymptoticError::InvalidParameter(_))
        ));
        assert!(matches!(
            lk_omega_kernel(&FieldSpec::Hopf, &p, 20.0, 20.0, 8, 1),
            Err(AsymptoticError::InvalidParameter(_))
        ));
    }
}
