//! Monte Carlo harness: mean-square error tables, second-moment traces,
//! tolerance sweeps and bound comparisons over independent realizations.
//!
//! Realizations run in parallel, each with its own random substreams, and are
//! reduced in realization order, so every table is a pure function of the
//! configuration and master seed.

mod output;

use rayon::prelude::*;

pub use output::{
    write_bounds, write_comparison, write_constants, write_csv, write_ehat, write_error_table,
    write_moments, write_sweep,
};

use crate::bounds::{BoundCurve, BoundKind, BoundValue};
use crate::engine::{converged_at, sparareal_solve, IterationHistory, RunConfig};
use crate::perturbations::{
    analytic_second_moment, track_xi_moments, MomentTrace, PerturbationModel,
};
use crate::problems::{norm_inf, serial_fine_solve, IvProblem, State};
use crate::stats::mean_stderr;
use crate::{Error, Result};

/// Default number of realizations.
pub const DEFAULT_REALIZATIONS: usize = 500;

#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    /// Template run; its seed is the master seed and its realization index
    /// is replaced per run.
    pub run: RunConfig,
    pub realizations: usize,
    /// Tolerances for sweeps, strictly decreasing.
    pub eps_grid: Vec<f64>,
    /// Drop realizations that abort instead of failing the whole experiment.
    pub skip_failures: bool,
}

impl McConfig {
    pub fn new(run: RunConfig, realizations: usize) -> Self {
        Self {
            run,
            realizations,
            eps_grid: Vec::new(),
            skip_failures: false,
        }
    }

    pub fn with_eps_grid(mut self, eps_grid: Vec<f64>) -> Self {
        self.eps_grid = eps_grid;
        self
    }

    pub fn with_model(&self, model: PerturbationModel) -> Self {
        let mut mc = self.clone();
        mc.run.perturbation = model;
        mc
    }

    fn validate(&self) -> Result<()> {
        if self.realizations == 0 {
            return Err(Error::InvalidConfig("need at least one realization".into()));
        }
        if self
            .eps_grid
            .windows(2)
            .any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Greater))
        {
            return Err(Error::InvalidConfig(
                "eps_grid must be strictly decreasing".into(),
            ));
        }
        Ok(())
    }

    /// Run every realization to `K_max` and summarise each with `f`.
    fn realize<T, F>(&self, problem: &IvProblem, record_xi: bool, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(&IterationHistory) -> T + Sync + Send,
    {
        self.validate()?;
        let mut run = self.run.clone().to_k_max();
        run.record_xi_moments = record_xi;
        let master_seed = run.seed;
        let results: Vec<Result<T>> = (0..self.realizations as u64)
            .into_par_iter()
            .map(|r| {
                sparareal_solve(problem, &run.clone().with_realization(r))
                    .map(|h| f(&h))
                    .map_err(|e| Error::Realization {
                        realization: r,
                        master_seed,
                        source: Box::new(e),
                    })
            })
            .collect();
        let mut kept = Vec::with_capacity(results.len());
        for result in results {
            match result {
                Ok(v) => kept.push(v),
                Err(_) if self.skip_failures => {}
                Err(e) => return Err(e),
            }
        }
        if kept.is_empty() {
            return Err(Error::InvalidConfig("every realization failed".into()));
        }
        Ok(kept)
    }
}

/// Empirical `e^k_n = E|u(t_n) - U^k_n|^2` over the `(k, n)` lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorTable {
    /// Realizations averaged.
    pub realizations: usize,
    /// `mse[k][n]`, exactly zero for `n <= k`.
    pub mse: Vec<Vec<f64>>,
    pub stderr: Vec<Vec<f64>>,
    /// The sample mean before zeroing the resolved nodes.
    pub raw_mse: Vec<Vec<f64>>,
    /// `ehat[k] = max_n mse[k][n]`.
    pub ehat: Vec<f64>,
    /// Standard error of the cell attaining the maximum.
    pub ehat_stderr: Vec<f64>,
    pub ehat_argmax: Vec<usize>,
}

impl ErrorTable {
    pub fn k_max(&self) -> usize {
        self.mse.len() - 1
    }

    pub fn slices(&self) -> usize {
        self.mse[0].len() - 1
    }

    /// `(e0_row, e1_row)`.
    pub fn first_rows(&self) -> (&[f64], &[f64]) {
        (&self.mse[0], &self.mse[1])
    }
}

fn squared_errors(history: &IterationHistory, reference: &[State]) -> Vec<Vec<f64>> {
    history
        .states()
        .iter()
        .map(|row| {
            row.iter()
                .zip(reference)
                .map(|(u, r)| norm_inf(&(u - r)).powi(2))
                .collect()
        })
        .collect()
}

pub fn mc_error_table(problem: &IvProblem, mc: &McConfig) -> Result<ErrorTable> {
    let reference = serial_fine_solve(problem)?;
    let samples = mc.realize(problem, false, |h| squared_errors(h, &reference))?;
    let rows = samples[0].len();
    let cols = samples[0][0].len();
    let mut table = ErrorTable {
        realizations: samples.len(),
        mse: vec![vec![0.0; cols]; rows],
        stderr: vec![vec![0.0; cols]; rows],
        raw_mse: vec![vec![0.0; cols]; rows],
        ehat: vec![0.0; rows],
        ehat_stderr: vec![0.0; rows],
        ehat_argmax: vec![0; rows],
    };
    let mut column = Vec::with_capacity(samples.len());
    for k in 0..rows {
        for n in 0..cols {
            column.clear();
            column.extend(samples.iter().map(|s| s[k][n]));
            let (mean, se) = mean_stderr(&column);
            table.raw_mse[k][n] = mean;
            if n > k {
                table.mse[k][n] = mean;
                table.stderr[k][n] = se;
                if mean > table.ehat[k] {
                    table.ehat[k] = mean;
                    table.ehat_stderr[k] = se;
                    table.ehat_argmax[k] = n;
                }
            }
        }
    }
    Ok(table)
}

/// `max_n E|xi^k_n|^2` per iteration; for sampling rules `xi` is the
/// equivalent additive perturbation of the drawn state.
pub fn mc_moments(problem: &IvProblem, mc: &McConfig) -> Result<MomentTrace> {
    let samples = mc.realize(problem, true, |h| {
        h.xi_sq().expect("recording enabled").to_vec()
    })?;
    Ok(track_xi_moments(&samples))
}

/// Closed-form `E|xi|^2` of a state-independent model.
pub fn analytic_level(problem: &IvProblem, model: &PerturbationModel) -> Option<f64> {
    match *model {
        PerturbationModel::StateIndependent { family, q } => Some(analytic_second_moment(
            family,
            q,
            problem.dt(),
            problem.dim(),
        )),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub eps: f64,
    pub mean_k: f64,
    pub stderr: f64,
}

/// Iteration at which a run with the recorded `increments` stops for `eps`;
/// a run that never meets the tolerance counts as `k_max`.
pub fn stopping_iteration(increments: &[f64], eps: f64) -> usize {
    (1..=increments.len())
        .find(|&k| converged_at(increments, k, eps))
        .unwrap_or(increments.len())
}

/// `E[k]` for each tolerance in the grid. Each realization runs once to
/// `K_max` and is thresholded offline, which gives the same stopping index
/// as separate runs since every draw is addressed by `(k, n)`.
pub fn mc_tolerance_sweep(problem: &IvProblem, mc: &McConfig) -> Result<Vec<SweepPoint>> {
    if mc.eps_grid.is_empty() {
        return Err(Error::InvalidConfig(
            "tolerance sweep needs a non-empty eps_grid".into(),
        ));
    }
    let increments = mc.realize(problem, false, |h| h.increments().to_vec())?;
    Ok(mc
        .eps_grid
        .iter()
        .map(|&eps| {
            let ks: Vec<f64> = increments
                .iter()
                .map(|inc| stopping_iteration(inc, eps) as f64)
                .collect();
            let (mean_k, stderr) = mean_stderr(&ks);
            SweepPoint {
                eps,
                mean_k,
                stderr,
            }
        })
        .collect())
}

/// Squared round-off level of a trajectory, below which empirical errors are
/// indistinguishable from zero.
pub fn roundoff_floor(problem: &IvProblem) -> Result<f64> {
    let reference = serial_fine_solve(problem)?;
    let scale = reference.iter().map(norm_inf).fold(0.0, f64::max);
    Ok((1e-13 * scale).powi(2))
}

/// One bound checked against the empirical error at iteration `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub k: usize,
    /// `ehat[k]`.
    pub empirical: f64,
    pub stderr: f64,
    pub kind: BoundKind,
    /// The bound at `k` (maximum over `n` for lattice bounds).
    pub bound: BoundValue,
    /// `None` when the bound is inapplicable. Lattice bounds must dominate at
    /// every `n > k`.
    pub dominated: Option<bool>,
}

/// Compare `table` against `curves` for `k` in `ks`. A cell counts as
/// dominated when `mse - slack * stderr <= bound + floor`.
pub fn compare_bounds(
    table: &ErrorTable,
    curves: &[BoundCurve],
    ks: impl IntoIterator<Item = usize> + Clone,
    slack: f64,
    floor: f64,
) -> Vec<ComparisonRow> {
    let ok = |mean: f64, se: f64, bound: f64| mean - slack * se <= bound + floor;
    let mut rows = Vec::new();
    for curve in curves {
        for k in ks.clone() {
            if k > table.k_max() {
                continue;
            }
            let Some(bound) = curve.at_k(k) else {
                continue;
            };
            let dominated = match bound {
                BoundValue::Inapplicable => None,
                BoundValue::Value(b) if !curve.kind.is_lattice() && curve.kind != BoundKind::K1 => {
                    Some(ok(table.ehat[k], table.ehat_stderr[k], b))
                }
                BoundValue::Value(_) => Some(curve.points.iter().filter(|p| p.k == k).all(|p| {
                    let n = p.n.expect("lattice point");
                    match p.value {
                        BoundValue::Value(b) => ok(table.mse[k][n], table.stderr[k][n], b),
                        BoundValue::Inapplicable => false,
                    }
                })),
            };
            rows.push(ComparisonRow {
                k,
                empirical: table.ehat[k],
                stderr: table.ehat_stderr[k],
                kind: curve.kind,
                bound,
                dominated,
            });
        }
    }
    rows
}

#[cfg(test)]
mod tests;
