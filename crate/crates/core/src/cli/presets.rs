//! Run files reproducing each figure's data set.

const LINEAR_CONTRACTIVE: &str = "
problem.kind = linear
problem.d = 100
problem.mode = contractive
problem.seed = 2024
problem.t0 = 0
problem.T = 8
problem.N = 20
";

const LINEAR_EXPANSIVE: &str = "
problem.kind = linear
problem.d = 100
problem.mode = expansive
problem.seed = 2024
problem.t0 = 0
problem.T = 8
problem.N = 20
";

const SCALAR: &str = "
problem.kind = scalar
problem.t0 = -1
problem.T = 1
problem.N = 20
";

const SOLVER: &str = "
solver.K_max = 20
solver.eps = 1e-8
solver.seed = 20240601
";

const BOUND_SET: &str = "mc.quantities = error_table, bounds, comparison\n";
const SWEEP_GRID: &str =
    "mc.eps_grid = 1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9, 1e-10, 1e-11, 1e-12\n";

pub const NAMES: &[&str] = &[
    "fig2a", "fig2b", "fig2c", "fig3a", "fig3b", "fig3c", "fig4", "fig5a", "fig5b", "fig6", "fig7",
    "fig8", "fig9",
];

/// The run-file text of preset `name`.
pub fn preset(name: &str) -> Option<String> {
    let (problem, models, quantities): (&str, &str, String) = match name {
        "fig2a" => (LINEAR_CONTRACTIVE, "gauss_q0", BOUND_SET.into()),
        "fig2b" => (LINEAR_CONTRACTIVE, "gauss_q5", BOUND_SET.into()),
        "fig2c" => (LINEAR_CONTRACTIVE, "gauss_q10", BOUND_SET.into()),
        "fig3a" => (LINEAR_EXPANSIVE, "gauss_q0", BOUND_SET.into()),
        "fig3b" => (LINEAR_EXPANSIVE, "gauss_q5", BOUND_SET.into()),
        "fig3c" => (LINEAR_EXPANSIVE, "gauss_q10", BOUND_SET.into()),
        "fig4" => (
            LINEAR_CONTRACTIVE,
            "rule1, rule2, rule3, rule4, gauss_q0, gauss_q5, gauss_q10",
            "mc.quantities = moments\n".into(),
        ),
        "fig5a" => (LINEAR_CONTRACTIVE, "rule2, rule4", BOUND_SET.into()),
        "fig5b" => (LINEAR_CONTRACTIVE, "rule1, rule3", BOUND_SET.into()),
        "fig6" => (
            LINEAR_CONTRACTIVE,
            "rule1, rule2, rule3, rule4, gauss_q0, gauss_q5, gauss_q10, gauss_q25",
            format!("mc.quantities = tolerance_sweep\n{SWEEP_GRID}"),
        ),
        "fig7" => (SCALAR, "gauss_q1, gauss_q5, gauss_q10", BOUND_SET.into()),
        "fig8" => (SCALAR, "rule1, rule2, rule3, rule4", BOUND_SET.into()),
        "fig9" => (
            SCALAR,
            "rule1, rule2, rule3, rule4, gauss_q0, gauss_q5, gauss_q10, gauss_q25",
            format!("mc.quantities = tolerance_sweep\n{SWEEP_GRID}"),
        ),
        _ => return None,
    };
    let first = models.split(',').next().unwrap_or_default().trim();
    Some(format!(
        "{problem}\nperturbation.model = {first}\n{SOLVER}\nmc.R = 500\nmc.models = {models}\n{quantities}"
    ))
}
