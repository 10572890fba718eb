//! Dispatch of validated plans to the library and serialization of their results.

use std::f64::consts::FRAC_PI_2;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use righthand::asymptotic::{self, AsymptoticError, MeasureSample};
use righthand::contact;
use righthand::fields::{FieldSpec, INV_FOUR_PI2};
use righthand::flow::{FlowOptions, TrajectoryCache};
use righthand::geometry::{parse_curve, write_curve, PointS3, Polyline};
use righthand::linking;
use righthand::templates;
use righthand::ulam::{self, UlamChain};

use crate::plan::{
    parse_field, CertifyPlan, ConfigError, FiberKind, FibersPlan, FlowlinkPlan, LinkMethod, LinkPlan, LkMethod,
    LkOmegaPlan, LpSense, LpminPlan, MeasureKind, Plan, ReconstructPlan, UlamPlan,
};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] righthand::Error),
    #[error("{0}")]
    Io(String),
}

impl RunError {
    /// 2 for domain errors (bad input, unreadable files), 3 for numerical failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Core(e) if e.is_numerical() => 3,
            _ => 2,
        }
    }
}

fn core<E: Into<righthand::Error>>(e: E) -> RunError {
    RunError::Core(e.into())
}

fn io(path: &Path, e: std::io::Error) -> RunError {
    RunError::Io(format!("{}: {e}", path.display()))
}

/// Writes through a temporary sibling and a rename, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), RunError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents).map_err(|e| io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io(path, e))
}

/// Rows for `--csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

pub struct Outcome {
    pub outputs: Value,
    pub table: Option<Table>,
}

/// The result artifact of one run.
#[derive(Debug, Serialize)]
pub struct Record<'a> {
    pub artifact: &'static str,
    pub version: &'static str,
    pub cmd: &'static str,
    /// The plan with every default filled in; `run --config` on it reproduces the record.
    pub inputs: &'a Plan,
    pub outputs: Value,
    pub wall_time_s: f64,
}

impl Plan {
    pub fn supports_csv(&self) -> bool {
        matches!(self, Plan::Flowlink(_) | Plan::Certify(_))
    }
}

pub fn execute(plan: &Plan, cache: Option<&TrajectoryCache>) -> Result<Outcome, RunError> {
    match plan {
        Plan::Link(p) => link(p),
        Plan::Flowlink(p) => flowlink(p, cache),
        Plan::Lkomega(p) => lkomega(p, cache),
        Plan::Certify(p) => certify(p, cache),
        Plan::Reconstruct(p) => reconstruct(p),
        Plan::Ulam(p) => build_ulam(p),
        Plan::Lpmin(p) => lpmin(p),
        Plan::Fibers(p) => fibers(p),
    }
}

fn plain(outputs: Value) -> Result<Outcome, RunError> {
    Ok(Outcome { outputs, table: None })
}

fn read_curve(path: &Path) -> Result<Polyline<f64>, RunError> {
    let text = fs::read_to_string(path).map_err(|e| io(path, e))?;
    parse_curve(&text).map_err(core)
}

fn link(p: &LinkPlan) -> Result<Outcome, RunError> {
    let a = read_curve(&p.curve[0])?;
    let b = read_curve(&p.curve[1])?;
    let mut out = serde_json::Map::new();
    if matches!(p.method, LinkMethod::Gauss | LinkMethod::Both) {
        let r = linking::linking_integral(&a, &b).map_err(core)?;
        out.insert(
            "gauss".into(),
            json!({"value": r.value, "stderr": r.stderr, "rounded": r.rounded()}),
        );
    }
    if matches!(p.method, LinkMethod::Crossing | LinkMethod::Both) {
        let n = linking::crossing_number(&a, &b, &p.direction.vec3("direction")?).map_err(core)?;
        out.insert("crossing".into(), json!(n));
    }
    plain(Value::Object(out))
}

fn flow_options(tol: f64, cache: Option<&TrajectoryCache>) -> FlowOptions<'_> {
    FlowOptions { tol, cache }
}

fn flowlink(p: &FlowlinkPlan, cache: Option<&TrajectoryCache>) -> Result<Outcome, RunError> {
    let spec = parse_field(&p.field)?;
    let (a, b) = (p.p.point("p")?, p.q.point("q")?);
    let opts = flow_options(p.tol, cache);
    let mut runs = Vec::new();
    let mut rows = Vec::new();
    for &s in &p.horizon {
        let t = p.t_horizon.unwrap_or(s);
        let e = asymptotic::asymptotic_linking_with(&spec, &a, &b, s, t, p.delta, p.jitter, &opts).map_err(core)?;
        runs.push(json!({
            "S": s,
            "T": t,
            "value": e.result.value,
            "stderr": e.result.stderr,
            "S_star": e.s_star,
            "T_star": e.t_star,
            "link": e.link.value,
            "link_stderr": e.link.stderr,
        }));
        rows.push(
            [s, t, e.result.value, e.result.stderr, e.s_star, e.t_star, e.link.value]
                .iter()
                .map(|x| x.to_string())
                .collect(),
        );
    }
    Ok(Outcome {
        outputs: json!({ "runs": runs }),
        table: Some(Table {
            header: vec!["S", "T", "value", "stderr", "S_star", "T_star", "link"],
            rows,
        }),
    })
}

fn closed_form_period(spec: &FieldSpec<f64>, p: &PointS3<f64>) -> Result<f64, RunError> {
    spec.orbit_period(p).ok_or_else(|| {
        core(AsymptoticError::InvalidMeasure(format!(
            "no closed-form period for {spec} at {:?}; give one explicitly",
            p.coords()
        )))
    })
}

fn lkomega(p: &LkOmegaPlan, cache: Option<&TrajectoryCache>) -> Result<Outcome, RunError> {
    let spec = parse_field(&p.field)?;
    let start = p.orbit_seed.point("orbit_seed")?;
    let opts = flow_options(p.tol, cache);
    match p.method {
        LkMethod::Kernel => {
            let t = p.t.unwrap_or(p.s);
            let k = asymptotic::lk_omega_kernel_with(&spec, &start, p.s, t, p.n_volume, p.seed, &opts).map_err(core)?;
            plain(json!({
                "value": k.result.value,
                "stderr": k.result.stderr,
                "S_star": k.s_star,
                "seed": k.seed,
                "pairs_used": k.pairs_used,
                "pairs_dropped": k.pairs_dropped,
            }))
        }
        LkMethod::Direct => {
            let mu = match p.measure {
                MeasureKind::Orbit => {
                    let period = match p.period {
                        Some(t) => t,
                        None => closed_form_period(&spec, &start)?,
                    };
                    MeasureSample::periodic_orbit(&spec, &start, period, p.nodes, &opts)
                }
                MeasureKind::Birkhoff => MeasureSample::birkhoff(&spec, &start, p.horizon, p.nodes, &opts),
                MeasureKind::Volume => MeasureSample::volume(&spec, p.n_samples, p.seed),
                MeasureKind::InvariantVolume => {
                    MeasureSample::invariant_volume(&spec, p.n_samples, p.nodes, p.seed, &opts)
                }
            }
            .map_err(core)?;
            let nu = spec.primitive().map_err(core)?;
            let e = asymptotic::lk_omega_direct_estimate(&spec, &nu, &mu);
            plain(json!({
                "value": e.value,
                "stderr": e.stderr,
                "value_over_inv_four_pi2": e.value / INV_FOUR_PI2,
                "provenance": mu.provenance(),
            }))
        }
    }
}

fn certify(p: &CertifyPlan, cache: Option<&TrajectoryCache>) -> Result<Outcome, RunError> {
    let spec = parse_field(&p.field)?;
    let opts = flow_options(p.tol, cache);
    let mut family = Vec::new();
    for (i, c) in p.orbit.iter().enumerate() {
        let start = c.point(&format!("orbit {i}"))?;
        let period = closed_form_period(&spec, &start)?;
        family.push(MeasureSample::periodic_orbit(&spec, &start, period, p.nodes, &opts).map_err(core)?);
    }
    if p.volume_samples > 0 {
        family.push(
            MeasureSample::invariant_volume(&spec, p.volume_samples, p.volume_nodes, p.seed, &opts).map_err(core)?,
        );
    }
    let report = contact::mcduff_certify(&spec, &family, p.tolerance).map_err(core)?;
    let rows = report
        .values
        .iter()
        .map(|v| {
            let kind = serde_json::to_value(&v.provenance).expect("provenance serializes")["kind"]
                .as_str()
                .unwrap_or("")
                .to_string();
            vec![kind, v.value.to_string(), v.stderr.to_string()]
        })
        .collect();
    Ok(Outcome {
        outputs: serde_json::to_value(&report).expect("report serializes"),
        table: Some(Table {
            header: vec!["measure", "value", "stderr"],
            rows,
        }),
    })
}

fn reconstruct(p: &ReconstructPlan) -> Result<Outcome, RunError> {
    let spec = parse_field(&p.field)?;
    let defects = contact::verify_reeb(&spec, p.samples, p.seed).map_err(core)?;
    let contact_min = contact::contact_type_check(&spec, p.samples, p.seed).map_err(core)?;
    let reeb_at = match &p.at {
        Some(c) => Some(contact::reconstruct_reeb(&spec, &c.point("at")?).map_err(core)?),
        None => None,
    };
    plain(json!({
        "defects": defects,
        "contact_min": contact_min,
        "reeb_at": reeb_at,
    }))
}

fn build_ulam(p: &UlamPlan) -> Result<Outcome, RunError> {
    let spec = parse_field(&p.field)?;
    let chain = ulam::build_chain(&spec, [p.res[0], p.res[1], p.res[2]], p.tau, p.spc, p.seed).map_err(core)?;
    write_atomic(&p.chain, &chain.to_json())?;
    plain(json!({
        "chain": p.chain,
        "cells": chain.len(),
        "volume_stationarity_residual": chain.stationarity_residual(&chain.volume),
    }))
}

fn lpmin(p: &LpminPlan) -> Result<Outcome, RunError> {
    let text = fs::read_to_string(&p.chain).map_err(|e| io(&p.chain, e))?;
    let chain = UlamChain::from_json(&text).map_err(core)?;
    let lp = match p.sense {
        LpSense::Min => ulam::min_invariant_linking(&chain),
        LpSense::Max => ulam::max_invariant_linking(&chain),
    }
    .map_err(core)?;
    plain(json!({
        "field": chain.field,
        "sense": lp.sense,
        "value": lp.value,
        "value_over_inv_four_pi2": lp.value / INV_FOUR_PI2,
        "feasibility_residual": lp.feasibility_residual,
        "weights": lp.weights,
    }))
}

fn fibers(p: &FibersPlan) -> Result<Outcome, RunError> {
    fs::create_dir_all(&p.out_dir).map_err(|e| io(&p.out_dir, e))?;
    let letter = |k: usize| char::from(b'a' + k as u8);
    let curves: Vec<(String, Polyline<f64>)> = match p.kind {
        FiberKind::Hopf | FiberKind::Antihopf => (0..p.count)
            .map(|k| {
                // Distinct heights η put every base point on a different fiber.
                let eta = FRAC_PI_2 * (k + 1) as f64 / (p.count + 1) as f64;
                let base = ulam::from_hopf_coordinates([eta, 0.0, 0.0]);
                match p.kind {
                    FiberKind::Hopf => (format!("hopf_fiber_{}", letter(k)), templates::hopf_fiber(&base, p.n)),
                    _ => (format!("antihopf_fiber_{}", letter(k)), templates::anti_hopf_fiber(&base, p.n)),
                }
            })
            .collect(),
        FiberKind::HopfLink => {
            let (a, b) = templates::hopf_link_circles(p.n);
            vec![("hopf_link_a".into(), a), ("hopf_link_b".into(), b)]
        }
        FiberKind::TorusLink => {
            let (a, b) = templates::torus_link(p.q, p.n);
            vec![(format!("torus_link_{}_a", p.q), a), (format!("torus_link_{}_b", p.q), b)]
        }
    };
    let mut files = Vec::new();
    for (name, curve) in curves {
        let path = p.out_dir.join(format!("{name}.xyz"));
        write_atomic(&path, &write_curve(&curve))?;
        files.push(path);
    }
    plain(json!({ "files": files }))
}
