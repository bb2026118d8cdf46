use std::f64::consts::SQRT_2;

use super::{IvProblem, Mesh, ProblemKind, State};

pub(super) fn field(u: f64) -> f64 {
    (u * u + 2.0).sqrt()
}

/// `sqrt(2) sinh(dt + asinh(u / sqrt(2)))`.
pub(super) fn exact_flow(u: f64, dt: f64) -> f64 {
    SQRT_2 * (dt + (u / SQRT_2).asinh()).sinh()
}

pub(super) fn euler_step(u: f64, h: f64) -> f64 {
    u + h * field(u)
}

/// `du/dt = sqrt(u^2 + 2)` on `[-1, 1]` with `u(-1) = 5`, twenty slices.
pub fn make_scalar_problem() -> IvProblem {
    let mesh = Mesh::new(-1.0, 1.0, 20).expect("fixed mesh is valid");
    IvProblem::new(
        ProblemKind::ScalarNonlinear,
        State::from_element(1, 5.0),
        mesh,
    )
    .expect("fixed problem is valid")
}
