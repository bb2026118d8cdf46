use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("{mode} regime unattainable for dt = {dt}: achieved B = {achieved_b}")]
    RegimeUnattainable {
        mode: &'static str,
        dt: f64,
        achieved_b: f64,
    },

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("serial fine sweep produced a non-finite state at node {node}")]
    FineSweepDiverged { node: usize },

    #[error("non-finite state at iteration {k}, node {n}")]
    NonFiniteState { k: usize, n: usize },

    #[error("closed-form constants unavailable for {0} problems")]
    Unsupported(&'static str),

    #[error("invalid run configuration: {0}")]
    InvalidConfig(String),

    #[error("bound evaluated outside its domain: {0}")]
    Domain(String),

    #[error("domain box has zero volume")]
    DegenerateDomain,

    #[error("sampling rule requested at iteration 0")]
    RuleAtIterationZero,

    #[error("realization {realization} (master seed {master_seed}) failed: {source}")]
    Realization {
        realization: u64,
        master_seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
