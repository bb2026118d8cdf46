//! Parareal and stochastic parareal iterations over the `(k, n)` lattice.
//!
//! Iteration zero is a serial coarse sweep. Each later iteration propagates
//! every node of the previous iterate with the fine solver (in parallel), then
//! runs the serial predictor-corrector sweep
//! `U^{k+1}_{n+1} = G(U^{k+1}_n) + F(U^k_n) - G(U^k_n) + xi^k_n`.

use rayon::prelude::*;

use crate::perturbations::{
    draw_state_independent, sample_alpha, sigma_kn, PerturbationModel, RngStream,
};
use crate::problems::{norm_inf, IvProblem, State};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Iteration cap.
    pub k_max: usize,
    /// Stopping tolerance in the infinity norm; `f64::INFINITY` stops after
    /// the first comparison.
    pub eps: f64,
    pub perturbation: PerturbationModel,
    pub seed: u64,
    /// Monte Carlo realization index mixed into the random substreams.
    pub realization: u64,
    /// Record `|xi^k_n|^2` for every perturbed update.
    pub record_xi_moments: bool,
    /// Keep iterating to `k_max` after the tolerance is met.
    pub run_to_k_max: bool,
    /// Evaluate the fine propagations of one iteration concurrently.
    pub fine_parallel: bool,
}

impl RunConfig {
    /// Defaults: cap `slices`, tolerance `1e-8`, no perturbation, seed 0.
    pub fn new(slices: usize) -> Self {
        Self {
            k_max: slices,
            eps: 1e-8,
            perturbation: PerturbationModel::None,
            seed: 0,
            realization: 0,
            record_xi_moments: false,
            run_to_k_max: false,
            fine_parallel: true,
        }
    }

    pub fn with_perturbation(mut self, perturbation: PerturbationModel) -> Self {
        self.perturbation = perturbation;
        self
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }

    pub fn with_k_max(mut self, k_max: usize) -> Self {
        self.k_max = k_max;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_realization(mut self, realization: u64) -> Self {
        self.realization = realization;
        self
    }

    pub fn recording_xi(mut self) -> Self {
        self.record_xi_moments = true;
        self
    }

    pub fn to_k_max(mut self) -> Self {
        self.run_to_k_max = true;
        self
    }

    pub fn serial(mut self) -> Self {
        self.fine_parallel = false;
        self
    }

    pub fn stream(&self) -> RngStream {
        RngStream::new(self.seed).with_realization(self.realization)
    }

    fn validate(&self, slices: usize) -> Result<()> {
        if self.k_max == 0 || self.k_max > slices {
            return Err(Error::InvalidConfig(format!(
                "K_max must lie in 1..={slices}, got {}",
                self.k_max
            )));
        }
        if self.eps.is_nan() || self.eps < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "eps must be non-negative, got {}",
                self.eps
            )));
        }
        self.perturbation.validate()
    }
}

/// All iterates `U^k_n` of one run together with the fine and coarse
/// propagations the engine evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationHistory {
    states: Vec<Vec<State>>,
    fine: Vec<Vec<State>>,
    coarse: Vec<Vec<State>>,
    increments: Vec<f64>,
    converged_k: Option<usize>,
    eps: f64,
    xi_sq: Option<Vec<Vec<f64>>>,
}

impl IterationHistory {
    fn start(problem: &IvProblem, eps: f64, record_xi: bool) -> Self {
        let slices = problem.mesh().slices();
        let mut row = Vec::with_capacity(slices + 1);
        let mut coarse = Vec::with_capacity(slices);
        row.push(problem.u0().clone());
        for n in 0..slices {
            let g = problem.coarse(&row[n]);
            row.push(g.clone());
            coarse.push(g);
        }
        Self {
            states: vec![row],
            fine: Vec::new(),
            coarse: vec![coarse],
            increments: Vec::new(),
            converged_k: None,
            eps,
            xi_sq: record_xi.then(Vec::new),
        }
    }

    /// Highest iteration stored.
    pub fn iterations(&self) -> usize {
        self.states.len() - 1
    }

    pub fn slices(&self) -> usize {
        self.states[0].len() - 1
    }

    /// `U^k_n`.
    pub fn state(&self, k: usize, n: usize) -> &State {
        &self.states[k][n]
    }

    /// `U^k_0, ..., U^k_N`.
    pub fn row(&self, k: usize) -> &[State] {
        &self.states[k]
    }

    pub fn states(&self) -> &[Vec<State>] {
        &self.states
    }

    /// `F(U^k_n)` for `n < N`, available for `k < iterations()`.
    pub fn fine_state(&self, k: usize, n: usize) -> &State {
        &self.fine[k][n]
    }

    /// `G(U^k_n)` for `n < N`.
    pub fn coarse_state(&self, k: usize, n: usize) -> &State {
        &self.coarse[k][n]
    }

    /// Entry `k - 1` is `max_n |U^k_n - U^{k-1}_n|`.
    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    /// First iteration at which every node met the tolerance.
    pub fn converged_k(&self) -> Option<usize> {
        self.converged_k
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// `xi_sq[k][n] = |xi^k_n|^2` for the update producing iteration `k + 1`,
    /// when recording was requested. Unperturbed nodes hold zero.
    pub fn xi_sq(&self) -> Option<&[Vec<f64>]> {
        self.xi_sq.as_deref()
    }

    fn push_row(&mut self, row: Vec<State>, coarse: Vec<State>) {
        let prev = self.states.last().expect("history has a zeroth row");
        let inc = row
            .iter()
            .zip(prev)
            .map(|(a, b)| norm_inf(&(a - b)))
            .fold(0.0, f64::max);
        self.increments.push(inc);
        self.states.push(row);
        self.coarse.push(coarse);
    }
}

/// `g_new + f_old - g_old (+ xi)`, summed left to right.
pub fn pc_update(g_new: &State, f_old: &State, g_old: &State, xi: Option<&State>) -> State {
    let mut out = g_new + f_old;
    out -= g_old;
    if let Some(xi) = xi {
        out += xi;
    }
    out
}

fn meets(diff: f64, eps: f64) -> bool {
    diff < eps || diff == 0.0
}

/// Largest `I` such that `|U^k_n - U^{k-1}_n| < eps` for every `n <= I`.
/// Identical nodes count as converged, so `eps = 0` is meaningful. The run
/// has converged at `k` when this returns `N`.
pub fn check_convergence(history: &IterationHistory, k: usize, eps: f64) -> usize {
    assert!(
        k >= 1 && k <= history.iterations(),
        "iteration {k} not in history"
    );
    let current = history.row(k);
    let previous = history.row(k - 1);
    let mut last = 0;
    for n in 1..current.len() {
        if !meets(norm_inf(&(&current[n] - &previous[n])), eps) {
            break;
        }
        last = n;
    }
    last
}

/// Whether the run would have stopped at iteration `k` for tolerance `eps`,
/// judged from the recorded increments.
pub fn converged_at(increments: &[f64], k: usize, eps: f64) -> bool {
    k >= 1 && meets(increments[k - 1], eps)
}

fn map_nodes<F>(parallel: bool, len: usize, f: F) -> Vec<State>
where
    F: Fn(usize) -> State + Sync + Send,
{
    if parallel {
        (0..len).into_par_iter().map(f).collect()
    } else {
        (0..len).map(f).collect()
    }
}

fn check_finite(u: &State, k: usize, n: usize) -> Result<()> {
    if u.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFiniteState { k, n })
    }
}

/// Deterministic parareal.
pub fn parareal_solve(problem: &IvProblem, config: &RunConfig) -> Result<IterationHistory> {
    let slices = problem.mesh().slices();
    config.validate(slices)?;
    let mut history = IterationHistory::start(problem, config.eps, false);
    for n in 1..=slices {
        check_finite(history.state(0, n), 0, n)?;
    }
    for k in 0..config.k_max {
        let fine: Vec<State> = (0..slices)
            .map(|n| problem.fine(history.state(k, n)))
            .collect();
        let mut row = vec![problem.u0().clone()];
        let mut coarse = Vec::with_capacity(slices);
        for n in 0..slices {
            let g_new = problem.coarse(&row[n]);
            let next = pc_update(&g_new, &fine[n], history.coarse_state(k, n), None);
            check_finite(&next, k + 1, n + 1)?;
            coarse.push(g_new);
            row.push(next);
        }
        history.fine.push(fine);
        history.push_row(row, coarse);
        if converged_at(&history.increments, k + 1, config.eps) {
            history.converged_k.get_or_insert(k + 1);
            if !config.run_to_k_max {
                break;
            }
        }
    }
    Ok(history)
}

/// Per-node correction `F(.) - G(.)` pair used by one sweep, plus an
/// optional additive perturbation.
struct Correction {
    fine: Vec<State>,
    coarse: Vec<State>,
    xi: Vec<Option<State>>,
}

/// Stochastic parareal with the configured perturbation model. With
/// `PerturbationModel::None` the output equals [`parareal_solve`] exactly.
/// Fine and coarse values entering the update, plus optional additive noise.
type PcInputs<'a> = (&'a [State], &'a [State], Option<&'a [Option<State>]>);

pub fn sparareal_solve(problem: &IvProblem, config: &RunConfig) -> Result<IterationHistory> {
    let slices = problem.mesh().slices();
    config.validate(slices)?;
    let stream = config.stream();
    let dt = problem.dt();
    let dim = problem.dim();
    let parallel = config.fine_parallel;
    let mut history = IterationHistory::start(problem, config.eps, config.record_xi_moments);
    for n in 1..=slices {
        check_finite(history.state(0, n), 0, n)?;
    }

    for k in 0..config.k_max {
        let fine = map_nodes(parallel, slices, |n| problem.fine(history.state(k, n)));
        history.fine.push(fine);

        let correction = match config.perturbation {
            PerturbationModel::None => None,
            _ if k == 0 => None,
            PerturbationModel::StateIndependent { family, q } => {
                let xi = (0..slices)
                    .map(|n| {
                        (n > k).then(|| draw_state_independent(family, q, &stream, k, n, dt, dim))
                    })
                    .collect();
                Some(Correction {
                    fine: history.fine[k].clone(),
                    coarse: history.coarse[k].clone(),
                    xi,
                })
            }
            PerturbationModel::SamplingRule(rule) => {
                let alphas: Vec<Option<State>> = (0..slices)
                    .map(|n| {
                        if n <= k {
                            return Ok(None);
                        }
                        let sigma = sigma_kn(&history, k, n);
                        sample_alpha(rule, &history, k, n, &sigma, &stream).map(Some)
                    })
                    .collect::<Result<_>>()?;
                let prop = |n: usize, f: &dyn Fn(&State) -> State, stored: &State| match &alphas[n]
                {
                    Some(a) => f(a),
                    None => stored.clone(),
                };
                let fine = map_nodes(parallel, slices, |n| {
                    prop(n, &|u| problem.fine(u), history.fine_state(k, n))
                });
                let coarse = map_nodes(parallel, slices, |n| {
                    prop(n, &|u| problem.coarse(u), history.coarse_state(k, n))
                });
                Some(Correction {
                    fine,
                    coarse,
                    xi: vec![None; slices],
                })
            }
        };

        if let Some(record) = history.xi_sq.as_mut() {
            let row = (0..slices)
                .map(|n| match &correction {
                    None => 0.0,
                    Some(c) => match &c.xi[n] {
                        Some(xi) => norm_inf(xi).powi(2),
                        None => {
                            let perturbed = &c.fine[n] - &c.coarse[n];
                            let plain = &history.fine[k][n] - &history.coarse[k][n];
                            norm_inf(&(perturbed - plain)).powi(2)
                        }
                    },
                })
                .collect();
            record.push(row);
        }

        let (f_old, g_old, xi): PcInputs<'_> = match &correction {
            None => (&history.fine[k], &history.coarse[k], None),
            Some(c) => (&c.fine, &c.coarse, Some(&c.xi)),
        };
        let mut row = Vec::with_capacity(slices + 1);
        let mut coarse = Vec::with_capacity(slices);
        row.push(problem.u0().clone());
        for n in 0..slices {
            let g_new = problem.coarse(&row[n]);
            let noise = xi.and_then(|x| x[n].as_ref());
            let next = pc_update(&g_new, &f_old[n], &g_old[n], noise);
            check_finite(&next, k + 1, n + 1)?;
            coarse.push(g_new);
            row.push(next);
        }
        history.push_row(row, coarse);

        if converged_at(&history.increments, k + 1, config.eps) {
            history.converged_k.get_or_insert(k + 1);
            if !config.run_to_k_max {
                break;
            }
        }
    }
    Ok(history)
}

#[cfg(test)]
mod tests;
