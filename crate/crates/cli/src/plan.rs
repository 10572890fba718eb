//! Experiment plans: one struct per subcommand, shared by the command line and by
//! JSON config files, with validation of every numeric parameter up front.

use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use righthand::asymptotic::{MIN_HORIZON, MIN_VOLUME_SAMPLES};
use righthand::fields::FieldSpec;
use righthand::geometry::PointS3;
use righthand::ulam::{MAX_CELLS, MIN_SAMPLES_PER_CELL, TAU_RANGE};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("malformed config at line {line}, column {column}: {message}")]
    MalformedConfig { line: usize, column: usize, message: String },
    #[error("unknown key: {0}")]
    UnknownKey(String),
    #[error("parameter out of range: {0}")]
    OutOfRangeParameter(String),
}

fn out_of_range(msg: impl Into<String>) -> ConfigError {
    ConfigError::OutOfRangeParameter(msg.into())
}

/// Comma-separated coordinates on the command line, a plain array in JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Coords(pub Vec<f64>);

impl FromStr for Coords {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}")))
            .collect::<Result<Vec<_>, _>>()
            .map(Coords)
    }
}

impl fmt::Display for Coords {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|x| x.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

impl Coords {
    pub fn point(&self, name: &str) -> Result<PointS3<f64>, ConfigError> {
        let c: [f64; 4] = self
            .0
            .as_slice()
            .try_into()
            .map_err(|_| out_of_range(format!("{name} needs 4 coordinates, got {}", self.0.len())))?;
        PointS3::new(c).map_err(|e| out_of_range(format!("{name}: {e}")))
    }

    pub fn vec3(&self, name: &str) -> Result<[f64; 3], ConfigError> {
        self.0
            .as_slice()
            .try_into()
            .map_err(|_| out_of_range(format!("{name} needs 3 coordinates, got {}", self.0.len())))
    }
}

pub fn parse_field(name: &str) -> Result<FieldSpec<f64>, ConfigError> {
    name.parse().map_err(|e| out_of_range(format!("field: {e}")))
}

fn default_view() -> Coords {
    Coords(vec![0.31, 0.22, 0.92])
}
fn default_delta() -> f64 {
    1e-3
}
fn default_tol() -> f64 {
    righthand::flow::DEFAULT_TOL
}
fn default_orbit_seed() -> Coords {
    Coords(vec![1.0, 0.0, 0.0, 0.0])
}
fn default_nodes() -> usize {
    128
}
fn default_volume_samples() -> usize {
    4096
}
fn default_horizon() -> f64 {
    20.0 * PI
}
fn default_n_volume() -> usize {
    64
}
fn default_orbits() -> Vec<Coords> {
    vec![
        Coords(vec![1.0, 0.0, 0.0, 0.0]),
        Coords(vec![0.0, 0.0, 0.6, 0.8]),
        Coords(vec![0.5, -0.5, 0.5, 0.5]),
    ]
}
fn default_volume_nodes() -> usize {
    32
}
fn default_certify_tol() -> f64 {
    righthand::contact::DEFAULT_CERTIFY_TOL
}
fn default_samples() -> usize {
    1000
}
fn default_res() -> Vec<usize> {
    vec![8, 8, 8]
}
fn default_tau() -> f64 {
    0.1
}
fn default_spc() -> usize {
    16
}
fn default_chain() -> PathBuf {
    PathBuf::from("chain.json")
}
fn default_count() -> usize {
    2
}
fn default_vertices() -> usize {
    2048
}
fn default_q() -> usize {
    2
}
fn default_out_dir() -> PathBuf {
    PathBuf::from(".")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkMethod {
    Gauss,
    Crossing,
    #[default]
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LkMethod {
    #[default]
    Direct,
    Kernel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureKind {
    /// One period of the orbit through `orbit_seed`.
    #[default]
    Orbit,
    /// Time average along the orbit through `orbit_seed` up to `horizon`.
    Birkhoff,
    /// Density-weighted round-uniform sample.
    Volume,
    /// Volume sample spread along closed orbits.
    InvariantVolume,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpSense {
    #[default]
    Min,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FiberKind {
    Hopf,
    Antihopf,
    HopfLink,
    TorusLink,
}

/// Linking number of two curve files.
#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkPlan {
    /// Curve file; give exactly two.
    #[arg(long, required = true)]
    pub curve: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    #[serde(default)]
    pub method: LinkMethod,
    /// Projection direction of the crossing count.
    #[arg(long, allow_hyphen_values = true, default_value_t = default_view())]
    #[serde(default = "default_view")]
    pub direction: Coords,
}

/// Asymptotic linking of the flow lines through two points, at one or more horizons.
#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowlinkPlan {
    #[arg(long)]
    pub field: String,
    #[arg(long, allow_hyphen_values = true)]
    pub p: Coords,
    #[arg(long, allow_hyphen_values = true)]
    pub q: Coords,
    /// Horizon S of the first flow line; repeat for a sweep.
    #[arg(long, required = true, value_delimiter = ',')]
    pub horizon: Vec<f64>,
    /// Horizon T of the second flow line; defaults to each S.
    #[arg(long)]
    #[serde(default)]
    pub t_horizon: Option<f64>,
    #[arg(long, default_value_t = default_delta())]
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[arg(long, default_value_t = default_delta())]
    #[serde(default = "default_delta")]
    pub jitter: f64,
    #[arg(long, default_value_t = default_tol())]
    #[serde(default = "default_tol")]
    pub tol: f64,
}

/// `Lk_ω` of one measure, by the primitive formula or the kernel average.
#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LkOmegaPlan {
    #[arg(long)]
    pub field: String,
    #[arg(long, value_enum, default_value_t)]
    #[serde(default)]
    pub method: LkMethod,
    #[arg(long, value_enum, default_value_t)]
    #[serde(default)]
    pub measure: MeasureKind,
    #[arg(long, allow_hyphen_values = true, default_value_t = default_orbit_seed())]
    #[serde(default = "default_orbit_seed")]
    pub orbit_seed: Coords,
    /// Quadrature nodes per orbit.
    #[arg(long, default_value_t = default_nodes())]
    #[serde(default = "default_nodes")]
    pub nodes: usize,
    /// Orbit period; defaults to the closed form.
    #[arg(long)]
    #[serde(default)]
    pub period: Option<f64>,
    /// Birkhoff horizon.
    #[arg(long, default_value_t = default_horizon())]
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    /// Size of volume samples.
    #[arg(long, default_value_t = default_volume_samples())]
    #[serde(default = "default_volume_samples")]
    pub n_samples: usize,
    #[arg(long, default_value_t = 0)]
    #[serde(default)]
    pub seed: u64,
    /// Kernel horizon of the seed orbit.
    #[arg(long = "S", default_value_t = default_horizon())]
    #[serde(rename = "S", default = "default_horizon")]
    pub s: f64,
    /// Kernel horizon of the volume orbits; defaults to S.
    #[arg(long = "T")]
    #[serde(rename = "T", default)]
    pub t: Option<f64>,
    #[arg(long, default_value_t = default_n_volume())]
    #[serde(default = "default_n_volume")]
    pub n_volume: usize,
    #[arg(long, default_value_t = default_tol())]
    #[serde(default = "default_tol")]
    pub tol: f64,
}

/// Sign certification of `Lk_ω` over periodic orbits and an invariant volume sample.
#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifyPlan {
    #[arg(long)]
    pub field: String,
    /// Start of a periodic orbit; repeat for several.
    #[arg(long, allow_hyphen_values = true, default_values_t = default_orbits())]
    #[serde(default = "default_orbits")]
    pub orbit: Vec<Coords>,
    #[arg(long, default_value_t = default_nodes())]
    #[serde(default = "default_nodes")]
    pub nodes: usize,
    /// Volume points spread along their orbits; 0 leaves the volume out.
    #[arg(long, default_value_t = default_volume_samples())]
    #[serde(default = "default_volume_samples")]
    pub volume_samples: usize,
    #[arg(long, default_value_t = default_volume_nodes())]
    #[serde(default = "default_volume_nodes")]
    pub volume_nodes: usize,
    #[arg(long, default_value_t = 0)]
    #[serde(default)]
    pub seed: u64,
    #[arg(long, default_value_t = default_certify_tol())]
    #[serde(default = "default_certify_tol")]
    pub tolerance: f64,
    #[arg(long, default_value_t = default_tol())]
    #[serde(default = "default_tol")]
    pub tol: f64,
}

/// Reeb field `X/ν(X)` with its defects, and the pointwise contact check.
#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconstructPlan {
    #[arg(long)]
    pub field: String,
    #[arg(long, default_value_t = default_samples())]
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    #[serde(default)]
    pub seed: u64,
    /// Also report the Reeb vector at this point.
    #[arg(long, allow_hyphen_values = true)]
    #[serde(default)]
    pub at: Option<Coords>,
}

/// Builds an Ulam chain and writes it as JSON.
#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UlamPlan {
    #[arg(long)]
    pub field: String,
    /// Cells along η, ξ₁, ξ₂.
    #[arg(long, value_delimiter = ',', default_values_t = default_res())]
    #[serde(default = "default_res")]
    pub res: Vec<usize>,
    #[arg(long, default_value_t = default_tau())]
    #[serde(default = "default_tau")]
    pub tau: f64,
    /// Samples per cell.
    #[arg(long, default_value_t = default_spc())]
    #[serde(default = "default_spc")]
    pub spc: usize,
    #[arg(long, default_value_t = 0)]
    #[serde(default)]
    pub seed: u64,
    /// Where to write the chain.
    #[arg(long, default_value_os_t = default_chain())]
    #[serde(default = "default_chain")]
    pub chain: PathBuf,
}

/// Optimizes `Lk_ω` over the stationary distributions of a saved chain.
#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LpminPlan {
    #[arg(long)]
    pub chain: PathBuf,
    #[arg(long, value_enum, default_value_t)]
    #[serde(default)]
    pub sense: LpSense,
}

/// Writes curve files of Hopf or anti-Hopf fibers, or of a template link.
#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FibersPlan {
    #[arg(long, value_enum)]
    pub kind: FiberKind,
    /// Number of fibers.
    #[arg(long, default_value_t = default_count())]
    #[serde(default = "default_count")]
    pub count: usize,
    /// Vertices per curve.
    #[arg(long, default_value_t = default_vertices())]
    #[serde(default = "default_vertices")]
    pub n: usize,
    /// Winding parameter of the torus link.
    #[arg(long, default_value_t = default_q())]
    #[serde(default = "default_q")]
    pub q: usize,
    #[arg(long, default_value_os_t = default_out_dir())]
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "cmd", rename_all = "lowercase")]
pub enum Plan {
    Link(LinkPlan),
    Flowlink(FlowlinkPlan),
    Lkomega(LkOmegaPlan),
    Certify(CertifyPlan),
    Reconstruct(ReconstructPlan),
    Ulam(UlamPlan),
    Lpmin(LpminPlan),
    Fibers(FibersPlan),
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(out_of_range(msg()))
    }
}

fn check_horizon(name: &str, h: f64) -> Result<(), ConfigError> {
    check((MIN_HORIZON..=1e5).contains(&h), || format!("{name} = {h} outside [{MIN_HORIZON}, 1e5]"))
}

fn check_tol(tol: f64) -> Result<(), ConfigError> {
    check((1e-12..=1e-4).contains(&tol), || format!("tol = {tol} outside [1e-12, 1e-4]"))
}

impl Plan {
    pub fn name(&self) -> &'static str {
        match self {
            Plan::Link(_) => "link",
            Plan::Flowlink(_) => "flowlink",
            Plan::Lkomega(_) => "lkomega",
            Plan::Certify(_) => "certify",
            Plan::Reconstruct(_) => "reconstruct",
            Plan::Ulam(_) => "ulam",
            Plan::Lpmin(_) => "lpmin",
            Plan::Fibers(_) => "fibers",
        }
    }

    /// Checks every parameter against the preconditions of the dispatched operation.
    pub fn validate(&self) -> Result<(), ConfigError> {
        match self {
            Plan::Link(p) => {
                check(p.curve.len() == 2, || format!("link needs 2 curves, got {}", p.curve.len()))?;
                let d = p.direction.vec3("direction")?;
                check(d.iter().all(|x| x.is_finite()) && d.iter().any(|x| *x != 0.0), || {
                    "direction must be a nonzero finite vector".into()
                })
            }
            Plan::Flowlink(p) => {
                parse_field(&p.field)?;
                p.p.point("p")?;
                p.q.point("q")?;
                check(!p.horizon.is_empty(), || "at least one horizon".into())?;
                for &h in &p.horizon {
                    check_horizon("horizon", h)?;
                }
                if let Some(t) = p.t_horizon {
                    check_horizon("t_horizon", t)?;
                }
                check(p.delta > 0.0 && p.delta < 2.0, || format!("delta = {} outside (0, 2)", p.delta))?;
                check(p.jitter >= 0.0 && p.jitter.is_finite(), || format!("jitter = {} is negative", p.jitter))?;
                check_tol(p.tol)
            }
            Plan::Lkomega(p) => {
                parse_field(&p.field)?;
                p.orbit_seed.point("orbit_seed")?;
                check_tol(p.tol)?;
                match p.method {
                    LkMethod::Kernel => {
                        check_horizon("S", p.s)?;
                        check_horizon("T", p.t.unwrap_or(p.s))?;
                        check(p.n_volume >= MIN_VOLUME_SAMPLES, || {
                            format!("n_volume = {} below {MIN_VOLUME_SAMPLES}", p.n_volume)
                        })
                    }
                    LkMethod::Direct => {
                        check(p.nodes >= 1, || "nodes must be positive".into())?;
                        check(p.n_samples >= 1, || "n_samples must be positive".into())?;
                        if let Some(period) = p.period {
                            check(period > 0.0 && period <= 1e5, || format!("period = {period} outside (0, 1e5]"))?;
                        }
                        check(p.horizon > 0.0 && p.horizon <= 1e5, || {
                            format!("horizon = {} outside (0, 1e5]", p.horizon)
                        })
                    }
                }
            }
            Plan::Certify(p) => {
                parse_field(&p.field)?;
                for (i, o) in p.orbit.iter().enumerate() {
                    o.point(&format!("orbit {i}"))?;
                }
                check(!p.orbit.is_empty() || p.volume_samples > 0, || "empty measure family".into())?;
                check(p.nodes >= 1 && p.volume_nodes >= 1, || "nodes must be positive".into())?;
                check(p.tolerance >= 0.0 && p.tolerance.is_finite(), || {
                    format!("tolerance = {} is negative", p.tolerance)
                })?;
                check_tol(p.tol)
            }
            Plan::Reconstruct(p) => {
                parse_field(&p.field)?;
                if let Some(at) = &p.at {
                    at.point("at")?;
                }
                check(p.samples >= 1, || "samples must be positive".into())
            }
            Plan::Ulam(p) => {
                parse_field(&p.field)?;
                check(p.res.len() == 3 && !p.res.contains(&0), || {
                    format!("res needs three positive entries, got {:?}", p.res)
                })?;
                let cells = p.res.iter().try_fold(1usize, |a, &r| a.checked_mul(r));
                check(cells.is_some_and(|n| n <= MAX_CELLS), || format!("res {:?} exceeds {MAX_CELLS} cells", p.res))?;
                check(p.tau >= TAU_RANGE.0 && p.tau <= TAU_RANGE.1, || {
                    format!("tau = {} outside [{}, {}]", p.tau, TAU_RANGE.0, TAU_RANGE.1)
                })?;
                check(p.spc >= MIN_SAMPLES_PER_CELL, || {
                    format!("spc = {} below {MIN_SAMPLES_PER_CELL}", p.spc)
                })
            }
            Plan::Lpmin(_) => Ok(()),
            Plan::Fibers(p) => {
                check(p.n >= 3, || format!("n = {} below 3", p.n))?;
                check((1..=26).contains(&p.count), || format!("count = {} outside [1, 26]", p.count))?;
                check(p.q >= 1, || "q must be positive".into())
            }
        }
    }
}

/// Output options, settable in a config file as well as on the command line.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OutputOptions {
    /// Result path; standard output when absent.
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
    #[serde(default)]
    pub csv: bool,
}

#[derive(Deserialize)]
struct ConfigFile {
    #[serde(flatten)]
    output: OutputOptions,
    #[serde(flatten)]
    plan: Plan,
}

/// Parses and validates a JSON config. Keys outside the command's parameters and
/// the output options are rejected.
pub fn parse_config(text: &str) -> Result<(Plan, OutputOptions), ConfigError> {
    let file: ConfigFile = serde_json::from_str(text).map_err(|e| {
        let message = e.to_string();
        let bare = message.split(" at line ").next().unwrap_or(&message).to_string();
        match bare.strip_prefix("unknown field ") {
            Some(rest) => ConfigError::UnknownKey(rest.split(',').next().unwrap_or(rest).trim_matches('`').into()),
            None => ConfigError::MalformedConfig {
                line: e.line(),
                column: e.column(),
                message: bare,
            },
        }
    })?;
    file.plan.validate()?;
    Ok((file.plan, file.output))
}
