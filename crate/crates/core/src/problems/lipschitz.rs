use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::linear::matrix_norm_inf;
use super::{norm_inf, IvProblem, ProblemKind, State};
use crate::{Error, Result};

/// Multiplicative safety margin applied to sampled (not closed-form) constants.
pub const ESTIMATE_INFLATION: f64 = 1.1;

/// Lipschitz constants of the coarse and fine flows at the mesh step, in the
/// infinity norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lipschitz {
    pub coarse: f64,
    pub fine: f64,
}

/// Closed-form `L_G` and `L_F` for the built-in problems.
///
/// The scalar field `sqrt(u^2 + 2)` has derivative bounded by one, so one
/// Euler step of size `h` is `(1 + h)`-Lipschitz and the exact flow over
/// `dt` is `e^dt`-Lipschitz.
pub fn lipschitz_constants(problem: &IvProblem) -> Result<Lipschitz> {
    let dt = problem.dt();
    let m = problem.coarse_substeps();
    match problem.kind() {
        ProblemKind::Linear(sys) => Ok(Lipschitz {
            coarse: matrix_norm_inf(&sys.coarse_matrix(dt, m)),
            fine: matrix_norm_inf(&sys.fine_matrix(dt)?),
        }),
        ProblemKind::ScalarNonlinear => Ok(Lipschitz {
            coarse: (1.0 + dt / m as f64).powi(m as i32),
            fine: dt.exp(),
        }),
        ProblemKind::Custom(_) => Err(Error::Unsupported("custom")),
    }
}

/// Sampled Lipschitz constants: the largest difference quotient over
/// `samples` seeded pairs in the problem's domain box, inflated by 10%.
pub fn estimate_lipschitz(problem: &IvProblem, samples: usize, seed: u64) -> Result<Lipschitz> {
    let mut coarse: f64 = 0.0;
    let mut fine: f64 = 0.0;
    for (u, v) in sample_pairs(problem, samples, seed)? {
        let gap = norm_inf(&(&u - &v));
        if gap == 0.0 {
            continue;
        }
        coarse = coarse.max(norm_inf(&(problem.coarse(&u) - problem.coarse(&v))) / gap);
        fine = fine.max(norm_inf(&(problem.fine(&u) - problem.fine(&v))) / gap);
    }
    Ok(Lipschitz {
        coarse: coarse * ESTIMATE_INFLATION,
        fine: fine * ESTIMATE_INFLATION,
    })
}

/// Seeded pairs drawn uniformly from the domain box.
pub fn sample_pairs(
    problem: &IvProblem,
    samples: usize,
    seed: u64,
) -> Result<impl Iterator<Item = (State, State)> + '_> {
    let domain = problem.domain_box();
    if domain
        .iter()
        .any(|(lo, hi)| hi.partial_cmp(lo) != Some(std::cmp::Ordering::Greater))
    {
        return Err(Error::DegenerateDomain);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = problem.dim();
    Ok((0..samples).map(move |_| {
        let mut draw =
            || State::from_iterator(dim, domain.iter().map(|&(lo, hi)| rng.random_range(lo..hi)));
        let u = draw();
        let v = draw();
        (u, v)
    }))
}
