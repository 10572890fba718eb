//! Ulam discretization of a flow on S³ in Hopf coordinates and a linear program for
//! the extreme values of `∫ν(X) dμ` over the stationary distributions of the chain.
//!
//! Cells are boxes in `(η, ξ₁, ξ₂) ∈ [0, π/2] × [0, 2π)²` with
//! `x = (cos η cos ξ₁, cos η sin ξ₁, sin η cos ξ₂, sin η sin ξ₂)`; the round volume
//! element is `sin η cos η dη dξ₁ dξ₂`. This module works in `f64` only.

use std::f64::consts::{FRAC_PI_2, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fields::{FieldError, FieldSpec, Primitive};
use crate::flow::{self, FlowError, DEFAULT_TOL};
use crate::geometry::PointS3;

pub const MAX_CELLS: usize = 100_000;
pub const MIN_SAMPLES_PER_CELL: usize = 8;
pub const TAU_RANGE: (f64, f64) = (0.01, 1.0);
/// Slack of the stationarity inequalities in the LP.
pub const STATIONARITY_SLACK: f64 = 1e-9;
/// Largest accepted residual of a returned optimizer.
pub const MAX_RESIDUAL: f64 = 1e-7;
const ROW_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UlamError {
    #[error("{0} cells exceed the limit of 100000")]
    ResolutionTooLarge(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid chain: {0}")]
    InvalidChain(String),
    #[error("linear program infeasible, which a stochastic matrix rules out")]
    Infeasible,
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Hopf coordinates `(η, ξ₁, ξ₂)` of a point, with the angles in `[0, 2π)`.
pub fn hopf_coordinates(p: &PointS3<f64>) -> [f64; 3] {
    let x = p.coords();
    let eta = (x[2].hypot(x[3])).atan2(x[0].hypot(x[1]));
    let angle = |a: f64, b: f64| {
        let t = b.atan2(a);
        if t < 0.0 {
            t + TAU
        } else {
            t
        }
    };
    [eta, angle(x[0], x[1]), angle(x[2], x[3])]
}

pub fn from_hopf_coordinates(c: [f64; 3]) -> PointS3<f64> {
    let [eta, xi1, xi2] = c;
    let (se, ce) = eta.sin_cos();
    PointS3::new([ce * xi1.cos(), ce * xi1.sin(), se * xi2.cos(), se * xi2.sin()]).expect("unit point")
}

/// A box of the Hopf-coordinate grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub index: [usize; 3],
    pub eta: [f64; 2],
    pub xi1: [f64; 2],
    pub xi2: [f64; 2],
}

impl Cell {
    /// Share of the round volume of S³ in this cell.
    pub fn round_volume(&self) -> f64 {
        let s = |t: f64| t.sin().powi(2);
        (s(self.eta[1]) - s(self.eta[0])) * (self.xi1[1] - self.xi1[0]) * (self.xi2[1] - self.xi2[0]) / (TAU * TAU)
    }

    /// A round-uniform random point of the cell.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> PointS3<f64> {
        let (lo, hi) = (self.eta[0].sin().powi(2), self.eta[1].sin().powi(2));
        let eta = rng.random_range(lo..=hi).sqrt().asin();
        let xi1 = rng.random_range(self.xi1[0]..self.xi1[1]);
        let xi2 = rng.random_range(self.xi2[0]..self.xi2[1]);
        from_hopf_coordinates([eta, xi1, xi2])
    }
}

/// The `(n_η, n_ξ₁, n_ξ₂)` grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    pub resolution: [usize; 3],
}

impl Grid {
    pub fn new(resolution: [usize; 3]) -> Result<Self, UlamError> {
        if resolution.contains(&0) {
            return Err(UlamError::InvalidParameter(format!("resolution {resolution:?} has a zero entry")));
        }
        let n = resolution.iter().try_fold(1usize, |a, &r| a.checked_mul(r));
        match n {
            Some(n) if n <= MAX_CELLS => Ok(Self { resolution }),
            Some(n) => Err(UlamError::ResolutionTooLarge(n)),
            None => Err(UlamError::ResolutionTooLarge(usize::MAX)),
        }
    }

    pub fn len(&self) -> usize {
        self.resolution.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn flat(&self, [i, j, k]: [usize; 3]) -> usize {
        let [_, n1, n2] = self.resolution;
        (i * n1 + j) * n2 + k
    }

    pub fn unflat(&self, idx: usize) -> [usize; 3] {
        let [_, n1, n2] = self.resolution;
        [idx / (n1 * n2), (idx / n2) % n1, idx % n2]
    }

    pub fn cell(&self, idx: usize) -> Cell {
        let [ne, n1, n2] = self.resolution;
        let [i, j, k] = self.unflat(idx);
        let span = |a: usize, n: usize, len: f64| [len * a as f64 / n as f64, len * (a + 1) as f64 / n as f64];
        Cell {
            index: [i, j, k],
            eta: span(i, ne, FRAC_PI_2),
            xi1: span(j, n1, TAU),
            xi2: span(k, n2, TAU),
        }
    }

    /// The cell containing `p`; points on a shared face go to the upper cell.
    pub fn locate(&self, p: &PointS3<f64>) -> usize {
        let [ne, n1, n2] = self.resolution;
        let [eta, xi1, xi2] = hopf_coordinates(p);
        let bin = |t: f64, len: f64, n: usize| ((t / len * n as f64).floor().max(0.0) as usize).min(n - 1);
        self.flat([bin(eta, FRAC_PI_2, ne), bin(xi1, TAU, n1), bin(xi2, TAU, n2)])
    }
}

/// Row-stochastic sparse matrix in compressed-row form.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl StochasticMatrix {
    /// Builds from per-row `(column, probability)` lists, checking stochasticity.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Result<Self, UlamError> {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let (mut cols, mut vals) = (Vec::new(), Vec::new());
        row_ptr.push(0);
        for (i, mut row) in rows.into_iter().enumerate() {
            row.sort_by_key(|e| e.0);
            let mut sum = 0.0;
            for (c, v) in row {
                if c >= n || !(v >= 0.0 && v.is_finite()) {
                    return Err(UlamError::InvalidChain(format!("row {i} has entry ({c}, {v})")));
                }
                if v > 0.0 {
                    cols.push(c);
                    vals.push(v);
                    sum += v;
                }
            }
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(UlamError::InvalidChain(format!("row {i} sums to {sum}")));
            }
            row_ptr.push(cols.len());
        }
        Ok(Self { row_ptr, cols, vals })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            row_ptr: (0..=n).collect(),
            cols: (0..n).collect(),
            vals: vec![1.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|e| e.0 == j).map_or(0.0, |e| e.1)
    }

    /// `μ P`
    pub fn left_multiply(&self, mu: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for (i, &m) in mu.iter().enumerate() {
            for (j, p) in self.row(i) {
                out[j] += m * p;
            }
        }
        out
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.len();
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for (j, p) in self.row(i) {
                d[i * n + j] = p;
            }
        }
        d
    }

    pub fn from_dense(n: usize, dense: &[f64]) -> Result<Self, UlamError> {
        if dense.len() != n * n {
            return Err(UlamError::InvalidChain(format!(
                "dense transition has {} entries, expected {}",
                dense.len(),
                n * n
            )));
        }
        let rows = dense
            .chunks(n)
            .map(|r| r.iter().copied().enumerate().filter(|e| e.1 != 0.0).collect())
            .collect();
        Self::from_rows(rows)
    }
}

/// A Markov chain on the cells approximating the time-τ flow map.
#[derive(Debug, Clone, PartialEq)]
pub struct UlamChain {
    pub field: String,
    pub grid: Grid,
    pub tau: f64,
    pub samples_per_cell: usize,
    pub seed: u64,
    pub transition: StochasticMatrix,
    /// Mean of `ν(X)` over each cell's samples.
    pub objective: Vec<f64>,
    /// Invariant-volume mass of each cell, summing to 1.
    pub volume: Vec<f64>,
}

/// JSON layout: cells, dense row-major transition, objective.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChainRecord {
    field: String,
    resolution: [usize; 3],
    tau: f64,
    samples_per_cell: usize,
    seed: u64,
    cells: Vec<Cell>,
    transition: Vec<f64>,
    objective: Vec<f64>,
    volume: Vec<f64>,
}

impl UlamChain {
    pub fn len(&self) -> usize {
        self.objective.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objective.is_empty()
    }

    /// `‖μP − μ‖₁`
    pub fn stationarity_residual(&self, mu: &[f64]) -> f64 {
        self.transition
            .left_multiply(mu)
            .iter()
            .zip(mu)
            .map(|(a, b)| (a - b).abs())
            .sum()
    }

    pub fn to_json(&self) -> String {
        let record = ChainRecord {
            field: self.field.clone(),
            resolution: self.grid.resolution,
            tau: self.tau,
            samples_per_cell: self.samples_per_cell,
            seed: self.seed,
            cells: (0..self.grid.len()).map(|i| self.grid.cell(i)).collect(),
            transition: self.transition.to_dense(),
            objective: self.objective.clone(),
            volume: self.volume.clone(),
        };
        serde_json::to_string(&record).expect("chain serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, UlamError> {
        let r: ChainRecord = serde_json::from_str(text).map_err(|e| UlamError::InvalidChain(e.to_string()))?;
        let grid = Grid::new(r.resolution)?;
        let n = grid.len();
        if r.objective.len() != n || r.volume.len() != n || r.cells.len() != n {
            return Err(UlamError::InvalidChain(format!("expected {n} cells")));
        }
        Ok(Self {
            field: r.field,
            grid,
            tau: r.tau,
            samples_per_cell: r.samples_per_cell,
            seed: r.seed,
            transition: StochasticMatrix::from_dense(n, &r.transition)?,
            objective: r.objective,
            volume: r.volume,
        })
    }
}

/// Estimates the transition matrix of the time-`tau` flow map from
/// `samples_per_cell` round-uniform starts per cell. Each cell draws from its own
/// ChaCha8 stream, so the chain does not depend on thread scheduling.
pub fn build_chain(
    spec: &FieldSpec<f64>,
    resolution: [usize; 3],
    tau: f64,
    samples_per_cell: usize,
    seed: u64,
) -> Result<UlamChain, UlamError> {
    let grid = Grid::new(resolution)?;
    if !(tau >= TAU_RANGE.0 && tau <= TAU_RANGE.1) {
        return Err(UlamError::InvalidParameter(format!("tau = {tau} outside [0.01, 1]")));
    }
    if samples_per_cell < MIN_SAMPLES_PER_CELL {
        return Err(UlamError::InvalidParameter(format!(
            "samples_per_cell = {samples_per_cell} below {MIN_SAMPLES_PER_CELL}"
        )));
    }
    let nu = spec.primitive()?;
    let per_cell: Vec<Result<(Vec<(usize, f64)>, f64, f64), UlamError>> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let cell = grid.cell(idx);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(idx as u64);
            let mut counts: Vec<(usize, f64)> = Vec::new();
            let (mut objective, mut density) = (0.0, 0.0);
            let weight = 1.0 / samples_per_cell as f64;
            for _ in 0..samples_per_cell {
                let p = cell.sample(&mut rng);
                let x = p.coords();
                objective += nu.pair(&x, &spec.eval_raw(&x));
                density += spec.density(&p);
                let dest = grid.locate(&flow::flow_map(spec, &p, tau, DEFAULT_TOL)?);
                match counts.iter_mut().find(|e| e.0 == dest) {
                    Some(e) => e.1 += weight,
                    None => counts.push((dest, weight)),
                }
            }
            // Renormalize so that rounding in the increments cannot break stochasticity.
            let sum: f64 = counts.iter().map(|e| e.1).sum();
            counts.iter_mut().for_each(|e| e.1 /= sum);
            Ok((counts, objective * weight, density * weight * cell.round_volume()))
        })
        .collect();
    let mut rows = Vec::with_capacity(grid.len());
    let mut objective = Vec::with_capacity(grid.len());
    let mut volume = Vec::with_capacity(grid.len());
    for r in per_cell {
        let (row, obj, vol) = r?;
        rows.push(row);
        objective.push(obj);
        volume.push(vol);
    }
    let total: f64 = volume.iter().sum();
    volume.iter_mut().for_each(|v| *v /= total);
    Ok(UlamChain {
        field: spec.to_string(),
        grid,
        tau,
        samples_per_cell,
        seed,
        transition: StochasticMatrix::from_rows(rows)?,
        objective,
        volume,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    Minimize,
    Maximize,
}

/// Optimum of `Σ objective · μ` over approximately stationary distributions `μ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpResult {
    pub sense: Sense,
    pub value: f64,
    pub weights: Vec<f64>,
    /// `max_j |(μP − μ)_j| + |Σμ − 1| + max_i max(−μ_i, 0)` at the returned optimizer,
    /// measured in the same componentwise sense as the LP constraints.
    pub feasibility_residual: f64,
}

/// Minimizes `Σ objective_i μ_i` subject to `μ ≥ 0`, `Σμ = 1` and `|μP − μ| ≤ 1e-9`
/// componentwise.
pub fn min_invariant_linking(chain: &UlamChain) -> Result<LpResult, UlamError> {
    solve_lp(chain, Sense::Minimize)
}

pub fn max_invariant_linking(chain: &UlamChain) -> Result<LpResult, UlamError> {
    solve_lp(chain, Sense::Maximize)
}

fn solve_lp(chain: &UlamChain, sense: Sense) -> Result<LpResult, UlamError> {
    use microlp::{ComparisonOp, OptimizationDirection, Problem};

    let n = chain.len();
    if n == 0 || chain.transition.len() != n {
        return Err(UlamError::InvalidChain("objective and transition sizes differ".into()));
    }
    let direction = match sense {
        Sense::Minimize => OptimizationDirection::Minimize,
        Sense::Maximize => OptimizationDirection::Maximize,
    };
    let mut lp = Problem::new(direction);
    let vars: Vec<_> = chain.objective.iter().map(|&c| lp.add_var(c, (0.0, f64::INFINITY))).collect();
    lp.add_constraint(vars.iter().map(|&v| (v, 1.0)), ComparisonOp::Eq, 1.0);
    // Column j of P − I gives the j-th stationarity row.
    let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for i in 0..n {
        for (j, p) in chain.transition.row(i) {
            columns[j].push((i, p));
        }
    }
    for (j, col) in columns.iter().enumerate() {
        let mut terms: Vec<(microlp::Variable, f64)> = Vec::with_capacity(col.len() + 1);
        let mut diag = -1.0;
        for &(i, p) in col {
            if i == j {
                diag += p;
            } else {
                terms.push((vars[i], p));
            }
        }
        if diag != 0.0 {
            terms.push((vars[j], diag));
        }
        if terms.is_empty() {
            continue;
        }
        lp.add_constraint(terms.clone(), ComparisonOp::Le, STATIONARITY_SLACK);
        lp.add_constraint(terms, ComparisonOp::Ge, -STATIONARITY_SLACK);
    }
    let outcome = lp.solve().map_err(|e| match e {
        microlp::Error::Infeasible => UlamError::Infeasible,
        other => UlamError::NumericalFailure(other.to_string()),
    })?;
    let solution = outcome
        .solution()
        .ok_or_else(|| UlamError::NumericalFailure("solver stopped without a solution".into()))?;
    let weights: Vec<f64> = vars.iter().map(|&v| solution.var_value(v)).collect();
    let value = weights.iter().zip(&chain.objective).map(|(m, c)| m * c).sum();
    let negative = weights.iter().map(|m| (-m).max(0.0)).fold(0.0, f64::max);
    let drift = chain
        .transition
        .left_multiply(&weights)
        .iter()
        .zip(&weights)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let residual = drift + (weights.iter().sum::<f64>() - 1.0).abs() + negative;
    if residual > MAX_RESIDUAL {
        return Err(UlamError::NumericalFailure(format!("optimizer residual {residual:.3e}")));
    }
    Ok(LpResult {
        sense,
        value,
        weights,
        feasibility_residual: residual,
    })
}
