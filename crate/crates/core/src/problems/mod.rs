//! Benchmark initial value problems `du/dt = f(u)` together with the exact
//! flow `F` (the "fine" solver) and the forward-Euler coarse flow `G`.

mod expm;
mod linear;
mod lipschitz;
mod mesh;
mod scalar;

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

pub use expm::{expm_dense, matrix_exponential};
pub use linear::{make_linear_problem, LinearSystem, Regime, Structure};
pub use lipschitz::{
    estimate_lipschitz, lipschitz_constants, sample_pairs as lipschitz_sample_pairs, Lipschitz,
    ESTIMATE_INFLATION,
};
pub use mesh::Mesh;
pub use scalar::make_scalar_problem;

use crate::{Error, Result};

/// A point in the solution space `R^d`.
pub type State = DVector<f64>;

/// Uniform (infinity) norm `max_i |u_i|`, the only norm used in this crate.
pub fn norm_inf(u: &State) -> f64 {
    u.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `B = L_G^2 (1 + 2 dt)`; the linear and sampling-rule bounds need `B < 1`.
pub fn regime_b(l_g: f64, dt: f64) -> f64 {
    l_g * l_g * (1.0 + 2.0 * dt)
}

/// A user-supplied autonomous vector field with a known exact flow.
pub trait VectorField: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;
    fn eval(&self, u: &State) -> State;
    fn exact_flow(&self, u: &State, dt: f64) -> State;
}

#[derive(Debug, Clone)]
pub enum ProblemKind {
    Linear(LinearSystem),
    /// `du/dt = sqrt(u^2 + 2)`.
    ScalarNonlinear,
    Custom(Arc<dyn VectorField>),
}

impl ProblemKind {
    pub fn name(&self) -> &'static str {
        match self {
            ProblemKind::Linear(_) => "linear",
            ProblemKind::ScalarNonlinear => "scalar",
            ProblemKind::Custom(_) => "custom",
        }
    }
}

/// An initial value problem on a fixed mesh. Immutable once built.
#[derive(Debug, Clone)]
pub struct IvProblem {
    kind: ProblemKind,
    u0: State,
    mesh: Mesh,
    coarse_substeps: usize,
    domain_box: Vec<(f64, f64)>,
    propagators: Option<Propagators>,
}

/// Linear propagators at the mesh step, computed once.
#[derive(Debug, Clone)]
enum Propagators {
    Diagonal {
        fine: Vec<f64>,
        coarse: Vec<f64>,
    },
    Dense {
        fine: DMatrix<f64>,
        coarse: DMatrix<f64>,
    },
}

impl IvProblem {
    pub fn new(kind: ProblemKind, u0: State, mesh: Mesh) -> Result<Self> {
        let dim = match &kind {
            ProblemKind::Linear(sys) => sys.dim(),
            ProblemKind::ScalarNonlinear => 1,
            ProblemKind::Custom(field) => field.dim(),
        };
        if dim == 0 {
            return Err(Error::InvalidProblem("dimension must be positive".into()));
        }
        if u0.len() != dim {
            return Err(Error::InvalidProblem(format!(
                "initial condition has length {}, expected {dim}",
                u0.len()
            )));
        }
        if u0.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("initial condition"));
        }
        let mut problem = Self {
            kind,
            u0,
            mesh,
            coarse_substeps: 1,
            domain_box: Vec::new(),
            propagators: None,
        };
        problem.refresh()?;
        Ok(problem)
    }

    /// Use `substeps` forward-Euler steps of size `dt / substeps` per coarse slice.
    pub fn with_coarse_substeps(mut self, substeps: usize) -> Result<Self> {
        if substeps == 0 {
            return Err(Error::InvalidProblem(
                "coarse substeps must be positive".into(),
            ));
        }
        self.coarse_substeps = substeps;
        self.refresh()?;
        Ok(self)
    }

    /// Override the box used by the empirical constant estimators.
    pub fn with_domain_box(mut self, domain_box: Vec<(f64, f64)>) -> Result<Self> {
        if domain_box.len() != self.dim() {
            return Err(Error::InvalidProblem(
                "domain box dimension mismatch".into(),
            ));
        }
        self.domain_box = domain_box;
        Ok(self)
    }

    fn refresh(&mut self) -> Result<()> {
        self.propagators = match &self.kind {
            ProblemKind::Linear(sys) => {
                Some(sys.propagators(self.mesh.dt(), self.coarse_substeps)?)
            }
            _ => None,
        };
        let trajectory = serial_fine_solve(self)?;
        self.domain_box = inflated_box(&trajectory);
        Ok(())
    }

    pub fn kind(&self) -> &ProblemKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.u0.len()
    }

    pub fn u0(&self) -> &State {
        &self.u0
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn dt(&self) -> f64 {
        self.mesh.dt()
    }

    pub fn coarse_substeps(&self) -> usize {
        self.coarse_substeps
    }

    pub fn domain_box(&self) -> &[(f64, f64)] {
        &self.domain_box
    }

    /// Right-hand side `f(u)`.
    pub fn field(&self, u: &State) -> State {
        match &self.kind {
            ProblemKind::Linear(sys) => sys.q() * u,
            ProblemKind::ScalarNonlinear => u.map(scalar::field),
            ProblemKind::Custom(field) => field.eval(u),
        }
    }

    /// Exact flow over a step of length `dt`.
    pub fn exact_flow(&self, u: &State, dt: f64) -> State {
        if dt == 0.0 {
            return u.clone();
        }
        match &self.kind {
            ProblemKind::Linear(sys) => sys.exact_flow(u, dt),
            ProblemKind::ScalarNonlinear => u.map(|x| scalar::exact_flow(x, dt)),
            ProblemKind::Custom(field) => field.exact_flow(u, dt),
        }
    }

    /// Forward-Euler coarse flow over a step of length `dt`.
    pub fn coarse_flow(&self, u: &State, dt: f64) -> State {
        if dt == 0.0 {
            return u.clone();
        }
        let h = dt / self.coarse_substeps as f64;
        let mut v = u.clone();
        for _ in 0..self.coarse_substeps {
            v = match &self.kind {
                ProblemKind::Linear(sys) => sys.euler_step(&v, h),
                ProblemKind::ScalarNonlinear => v.map(|x| scalar::euler_step(x, h)),
                ProblemKind::Custom(field) => {
                    let f = field.eval(&v);
                    &v + f * h
                }
            };
        }
        v
    }

    /// `F_dt(u)` at the mesh step.
    pub fn fine(&self, u: &State) -> State {
        match &self.propagators {
            Some(Propagators::Diagonal { fine, .. }) => {
                State::from_iterator(u.len(), u.iter().zip(fine).map(|(x, f)| f * x))
            }
            Some(Propagators::Dense { fine, .. }) => fine * u,
            None => self.exact_flow(u, self.dt()),
        }
    }

    /// `G_dt(u)` at the mesh step.
    pub fn coarse(&self, u: &State) -> State {
        match &self.propagators {
            Some(Propagators::Diagonal { coarse, .. }) => {
                State::from_iterator(u.len(), u.iter().zip(coarse).map(|(x, g)| g * x))
            }
            Some(Propagators::Dense { coarse, .. }) => coarse * u,
            None => self.coarse_flow(u, self.dt()),
        }
    }
}

/// Reference trajectory `U_{n+1} = F(U_n)`, `U_0 = u0`.
pub fn serial_fine_solve(problem: &IvProblem) -> Result<Vec<State>> {
    let slices = problem.mesh().slices();
    let mut trajectory = Vec::with_capacity(slices + 1);
    trajectory.push(problem.u0().clone());
    for n in 0..slices {
        let next = problem.fine(&trajectory[n]);
        if next.iter().any(|x| !x.is_finite()) {
            return Err(Error::FineSweepDiverged { node: n + 1 });
        }
        trajectory.push(next);
    }
    Ok(trajectory)
}

/// Componentwise min/max of `trajectory`, widened to 1.5x about the centre.
fn inflated_box(trajectory: &[State]) -> Vec<(f64, f64)> {
    let dim = trajectory[0].len();
    (0..dim)
        .map(|i| {
            let (lo, hi) = trajectory
                .iter()
                .map(|u| u[i])
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
                    (lo.min(x), hi.max(x))
                });
            let centre = 0.5 * (lo + hi);
            let half = 0.75 * (hi - lo);
            (centre - half, centre + half)
        })
        .collect()
}
