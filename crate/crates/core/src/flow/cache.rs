//! On-disk trajectory cache: one `time x1 x2 x3 x4` text row per sample, one file per
//! (field, start, horizon, tolerance) key.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use sha2::{Digest, Sha256};

use crate::fields::FieldSpec;
use crate::geometry::PointS3;
use crate::num::Real;

use super::{integrate, FlowError, Trajectory};

#[derive(Debug, Clone)]
pub struct TrajectoryCache {
    dir: PathBuf,
}

fn io_err(path: &Path, e: std::io::Error) -> FlowError {
    FlowError::Cache(format!("{}: {e}", path.display()))
}

impl TrajectoryCache {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self, FlowError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Hex SHA-256 of the exact bit patterns of the inputs.
    pub fn key<T: Real>(spec: &FieldSpec<T>, p0: &PointS3<T>, horizon: T, tol: T) -> String {
        let mut text = format!("{spec}|{}|", std::any::type_name::<T>());
        for c in p0.coords() {
            let _ = write!(text, "{:016x},", c.as_f64().to_bits());
        }
        let _ = write!(
            text,
            "|{:016x}|{:016x}",
            horizon.as_f64().to_bits(),
            tol.as_f64().to_bits()
        );
        Sha256::digest(text.as_bytes())
            .iter()
            .fold(String::with_capacity(64), |mut s, b| {
                let _ = write!(s, "{b:02x}");
                s
            })
    }

    fn path_for(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.traj"))
    }

    /// Returns the cached trajectory or integrates and stores it.
    pub fn integrate<T: Real>(
        &self,
        spec: &FieldSpec<T>,
        p0: &PointS3<T>,
        horizon: T,
        tol: T,
    ) -> Result<Trajectory<T>, FlowError> {
        let key = Self::key(spec, p0, horizon, tol);
        let path = self.path_for(&key);
        if path.exists() {
            let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
            return parse_trajectory(&text, *spec, tol);
        }
        let traj = integrate(spec, p0, horizon, tol)?;
        self.store(&key, &traj)?;
        Ok(traj)
    }

    /// Writes under a unique temporary name, then renames into place so concurrent
    /// readers never observe a partial file.
    fn store<T: Real>(&self, key: &str, traj: &Trajectory<T>) -> Result<(), FlowError> {
        static COUNTER: AtomicU64 = AtomicU64::new(0);
        let tmp = self.dir.join(format!(
            ".{key}.{}.{}.tmp",
            std::process::id(),
            COUNTER.fetch_add(1, Ordering::Relaxed)
        ));
        let mut f = fs::File::create(&tmp).map_err(|e| io_err(&tmp, e))?;
        f.write_all(format_trajectory(traj).as_bytes())
            .and_then(|_| f.sync_all())
            .map_err(|e| io_err(&tmp, e))?;
        let dest = self.path_for(key);
        fs::rename(&tmp, &dest).map_err(|e| io_err(&dest, e))
    }
}

pub fn format_trajectory<T: Real>(traj: &Trajectory<T>) -> String {
    let mut out = format!(
        "# field={} tol={:e}\n# time x1 x2 x3 x4\n",
        traj.field(),
        traj.tol().as_f64()
    );
    for (t, p) in traj.times().iter().zip(traj.points()) {
        let _ = write!(out, "{:.17e}", t.as_f64());
        for c in p.coords() {
            let _ = write!(out, " {:.17e}", c.as_f64());
        }
        out.push('\n');
    }
    out
}

pub fn parse_trajectory<T: Real>(text: &str, field: FieldSpec<T>, tol: T) -> Result<Trajectory<T>, FlowError> {
    let bad = |n: usize, msg: &str| FlowError::Cache(format!("line {n}: {msg}"));
    let mut times = Vec::new();
    let mut points = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let vals = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| bad(i + 1, "not a number"))?;
        if vals.len() != 5 {
            return Err(bad(i + 1, "expected 5 columns"));
        }
        let c = [vals[1], vals[2], vals[3], vals[4]];
        let n: f64 = c.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !((n - 1.0).abs() < 1e-12) {
            return Err(bad(i + 1, "point off the unit sphere"));
        }
        if times.last().is_some_and(|&t: &T| !(T::lit(vals[0]) > t)) {
            return Err(bad(i + 1, "times not increasing"));
        }
        times.push(T::lit(vals[0]));
        points.push(PointS3::from_unit(c.map(T::lit)));
    }
    if times.first().is_none_or(|t| *t != T::zero()) {
        return Err(FlowError::Cache("trajectory must start at time 0".into()));
    }
    Ok(Trajectory::from_parts(field, tol, times, points))
}
