//! Parallel-in-time ODE laboratory: parareal and stochastic parareal
//! engines, the perturbation models that drive the stochastic variant,
//! closed-form and recursive mean-square error bounds, and a Monte Carlo
//! harness that measures the errors those bounds are meant to dominate.
//!
//! The crate is organised bottom-up:
//!
//! - [`problems`]: benchmark initial value problems, their exact and coarse
//!   flow maps, and Lipschitz constants.
//! - [`engine`]: the iteration lattice `U^k_n` and the two solvers.
//! - [`perturbations`]: noise models, counter-based random substreams and
//!   second-moment tracking.
//! - [`bounds`]: bound constants, closed-form bounds, numeric recursions and
//!   constant estimators.
//! - [`experiments`]: realization-parallel Monte Carlo studies and CSV output.
//! - [`cli`]: run-file parsing, figure presets and the subcommands.

#![allow(clippy::needless_range_loop)]

pub mod bounds;
pub mod cli;
pub mod engine;
pub mod error;
pub mod experiments;
pub mod perturbations;
pub mod problems;
pub mod stats;

pub use error::{Error, Result};
pub use problems::State;
