use std::path::PathBuf;

use super::config::{ConfigError, Quantity, RunFile};
use super::Failure;
use crate::bounds::{all_curves, constants_for};
use crate::engine::sparareal_solve;
use crate::experiments::{
    analytic_level, compare_bounds, mc_error_table, mc_moments, mc_tolerance_sweep, roundoff_floor,
    McConfig,
};
use crate::experiments::{
    write_bounds, write_comparison, write_constants, write_csv, write_ehat, write_error_table,
    write_moments, write_sweep,
};
use crate::perturbations::{MomentTrace, PerturbationModel};
use crate::problems::serial_fine_solve;

const SLACK: f64 = 3.0;

/// How a successful command ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Completion {
    Done,
    CapReached,
}

pub fn solve(run: &RunFile) -> Result<(Completion, Vec<PathBuf>), Failure> {
    let seed = match run.model {
        PerturbationModel::None => run.seed.unwrap_or(0),
        _ => run.require_seed()?,
    };
    let problem = run.problem.build()?;
    let history = sparareal_solve(&problem, &run.run_config(run.model, seed))?;
    let mesh = problem.mesh();

    let mut rows = Vec::new();
    for (k, row) in history.states().iter().enumerate() {
        for (n, u) in row.iter().enumerate() {
            for (i, x) in u.iter().enumerate() {
                rows.push([
                    k.to_string(),
                    n.to_string(),
                    format!("{:e}", mesh.nodes()[n]),
                    i.to_string(),
                    format!("{x:e}"),
                ]);
            }
        }
    }
    let states = run.output_path("states.csv");
    write_csv(&states, &["k", "n", "t", "i", "value"], rows)?;

    let reference = serial_fine_solve(&problem)?;
    let rows = reference.iter().enumerate().flat_map(|(n, u)| {
        u.iter()
            .enumerate()
            .map(move |(i, x)| {
                [
                    n.to_string(),
                    format!("{:e}", mesh.nodes()[n]),
                    i.to_string(),
                    format!("{x:e}"),
                ]
            })
            .collect::<Vec<_>>()
    });
    let fine = run.output_path("fine.csv");
    write_csv(&fine, &["n", "t", "i", "value"], rows)?;

    let completion = match history.converged_k() {
        Some(k) => {
            println!("converged at k = {k}");
            Completion::Done
        }
        None => {
            println!(
                "iteration cap K_max = {} reached without convergence",
                run.k_max
            );
            Completion::CapReached
        }
    };
    Ok((completion, vec![states, fine]))
}

pub fn experiment(run: &RunFile) -> Result<Vec<PathBuf>, Failure> {
    if run.quantities.is_empty() {
        return Err(ConfigError {
            line: None,
            message: "mc.quantities lists nothing to compute".into(),
        }
        .into());
    }
    let seed = run.require_seed()?;
    let problem = run.problem.build()?;
    let wants = |q| run.quantities.contains(&q);
    let single = run.models.len() == 1;
    let name = |stem: &str, model: &PerturbationModel| {
        if single {
            format!("{stem}.csv")
        } else {
            format!("{stem}.{model}.csv")
        }
    };
    let floor = if wants(Quantity::Comparison) {
        roundoff_floor(&problem)?
    } else {
        0.0
    };

    let mut written = Vec::new();
    let mut traces: Vec<(String, MomentTrace)> = Vec::new();
    let mut sweeps = Vec::new();
    for model in &run.models {
        let mc = McConfig::new(run.run_config(*model, seed), run.realizations)
            .with_eps_grid(run.eps_grid.clone());
        let table = if wants(Quantity::ErrorTable) || wants(Quantity::Comparison) {
            Some(mc_error_table(&problem, &mc)?)
        } else {
            None
        };
        if let (true, Some(t)) = (wants(Quantity::ErrorTable), &table) {
            let path = run.output_path(&name("error_table", model));
            write_error_table(&path, t)?;
            written.push(path);
            let path = run.output_path(&name("ehat", model));
            write_ehat(&path, t)?;
            written.push(path);
        }
        if wants(Quantity::Bounds) || wants(Quantity::Comparison) {
            let report = constants_for(&problem, model, run.centred)?;
            let rows = table.as_ref().map(|t| t.first_rows());
            let curves = all_curves(&report.constants, run.k_max, run.problem.slices(), rows);
            if wants(Quantity::Bounds) {
                let path = run.output_path(&name("bounds", model));
                write_bounds(&path, &curves, &report.constants.fingerprint())?;
                written.push(path);
                let path = run.output_path(&name("constants", model));
                write_constants(&path, &report)?;
                written.push(path);
            }
            if let (true, Some(t)) = (wants(Quantity::Comparison), &table) {
                let rows = compare_bounds(t, &curves, 2..=run.k_max, SLACK, floor);
                let path = run.output_path(&name("comparison", model));
                write_comparison(&path, &rows)?;
                written.push(path);
            }
        }
        if wants(Quantity::Moments) {
            let trace = mc_moments(&problem, &mc)?;
            if let Some(level) = analytic_level(&problem, model) {
                let flat = MomentTrace {
                    k: trace.k.clone(),
                    max_second_moment: vec![level; trace.k.len()],
                    stderr: vec![0.0; trace.k.len()],
                    argmax_n: trace.argmax_n.clone(),
                };
                traces.push((model.to_string(), trace));
                traces.push((format!("{model}_analytic"), flat));
            } else {
                traces.push((model.to_string(), trace));
            }
        }
        if wants(Quantity::ToleranceSweep) {
            sweeps.push((model.to_string(), mc_tolerance_sweep(&problem, &mc)?));
        }
    }
    if wants(Quantity::Moments) {
        let path = run.output_path("moments.csv");
        write_moments(&path, &traces)?;
        written.push(path);
    }
    if wants(Quantity::ToleranceSweep) {
        let path = run.output_path("sweep.csv");
        write_sweep(&path, &sweeps)?;
        written.push(path);
    }
    Ok(written)
}

pub fn bounds(run: &RunFile) -> Result<Vec<PathBuf>, Failure> {
    let problem = run.problem.build()?;
    let report = constants_for(&problem, &run.model, run.centred)?;
    let curves = all_curves(&report.constants, run.k_max, run.problem.slices(), None);
    let bounds = run.output_path("bounds.csv");
    write_bounds(&bounds, &curves, &report.constants.fingerprint())?;
    let constants = run.output_path("constants.csv");
    write_constants(&constants, &report)?;
    println!("B = {:e}", report.constants.b());
    Ok(vec![bounds, constants])
}
