use std::fmt;

use super::BoundConstants;
use crate::engine::{parareal_solve, RunConfig};
use crate::perturbations::{moment_constant, NoiseFamily, PerturbationModel};
use crate::problems::lipschitz_sample_pairs as sample_pairs;
use crate::problems::{
    estimate_lipschitz, lipschitz_constants, norm_inf, serial_fine_solve, IvProblem, ProblemKind,
    State, ESTIMATE_INFLATION,
};
use crate::Result;

/// Pairs sampled by the empirical `C1` and Lipschitz estimators.
pub const C1_SAMPLES: usize = 10_000;
const C1_SEED: u64 = 0x00c1_5eed;
const COARSE_ORDER: u32 = 1;

/// Where a constant came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// Closed form.
    Exact,
    /// Sampled, with a safety margin.
    Estimated,
    /// Computed from other constants.
    Derived,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Exact => "exact",
            Self::Estimated => "estimated",
            Self::Derived => "derived",
        })
    }
}

/// Local truncation constant `C1` with
/// `|(F-G)(u) - (F-G)(v)| <= C1 dt^(p+1) |u - v|`.
///
/// Linear problems use the operator norm of `exp(Q dt) - I - Q dt`; anything
/// else takes the largest sampled difference quotient over the domain box,
/// inflated by 10%.
pub fn estimate_c1(problem: &IvProblem, samples: usize, seed: u64) -> Result<(f64, Provenance)> {
    let dt = problem.dt();
    let scale = dt.powi(COARSE_ORDER as i32 + 1);
    if let ProblemKind::Linear(sys) = problem.kind() {
        let diff = sys.fine_matrix(dt)? - sys.coarse_matrix(dt, problem.coarse_substeps());
        let norm = diff
            .row_iter()
            .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        return Ok((norm / scale, Provenance::Exact));
    }
    let gap = |u: &State| problem.fine(u) - problem.coarse(u);
    let mut best: f64 = 0.0;
    for (u, v) in sample_pairs(problem, samples, seed)? {
        let dist = norm_inf(&(&u - &v));
        if dist > 0.0 {
            best = best.max(norm_inf(&(gap(&u) - gap(&v))) / (scale * dist));
        }
    }
    Ok((best * ESTIMATE_INFLATION, Provenance::Estimated))
}

/// Squared errors of the deterministic zeroth and first iterates against the
/// fine reference, per node and maximised over nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct EHats {
    pub e0_hat: f64,
    pub e1_hat: f64,
    pub e0_row: Vec<f64>,
    pub e1_row: Vec<f64>,
}

pub fn empirical_e_hats(problem: &IvProblem) -> Result<EHats> {
    let reference = serial_fine_solve(problem)?;
    let cfg = RunConfig::new(problem.mesh().slices())
        .with_k_max(1)
        .with_eps(0.0);
    let history = parareal_solve(problem, &cfg)?;
    let row = |k: usize| -> Vec<f64> {
        history
            .row(k)
            .iter()
            .zip(&reference)
            .map(|(u, r)| norm_inf(&(u - r)).powi(2))
            .collect()
    };
    let mut e0_row = row(0);
    let mut e1_row = row(1);
    e0_row[0] = 0.0;
    e1_row[0] = 0.0;
    e1_row[1] = 0.0;
    let max = |r: &[f64]| r.iter().copied().fold(0.0, f64::max);
    Ok(EHats {
        e0_hat: max(&e0_row),
        e1_hat: max(&e1_row),
        e0_row,
        e1_row,
    })
}

/// Bound constants for one problem and perturbation model, with the origin
/// of each value.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantsReport {
    pub constants: BoundConstants,
    pub e_hats: EHats,
    pub c1: Provenance,
    pub c2: Provenance,
    pub lipschitz: Provenance,
}

impl ConstantsReport {
    /// `(name, value, provenance)` rows in a fixed order.
    pub fn rows(&self) -> Vec<(&'static str, f64, Provenance)> {
        use super::RuleVariant::{Rule13, Rule24};
        use Provenance::{Derived, Exact};
        let c = &self.constants;
        vec![
            ("C1", c.c1, self.c1),
            ("C2", c.c2, self.c2),
            ("L_G", c.l_g, self.lipschitz),
            ("L_F", c.l_f, self.lipschitz),
            ("p", f64::from(c.p), Exact),
            ("q", c.q, Exact),
            ("dt", c.dt, Exact),
            ("e0_hat", c.e0_hat, Derived),
            ("e1_hat", c.e1_hat, Derived),
            ("A", c.a(), Derived),
            ("B", c.b(), Derived),
            ("Lambda", c.lambda(), Derived),
            ("D", c.d(), Derived),
            ("Lambda1_rule24", c.lambda1(Rule24), Derived),
            ("Lambda2_rule24", c.lambda2(Rule24), Derived),
            ("Lambda1_rule13", c.lambda1(Rule13), Derived),
            ("Lambda2_rule13", c.lambda2(Rule13), Derived),
            ("Lambda3", c.lambda3(), Derived),
        ]
    }
}

/// Assemble constants for `problem` under `model`. Models without additive
/// noise get `C2 = 0`, hence `Lambda = 0`.
pub fn constants_for(
    problem: &IvProblem,
    model: &PerturbationModel,
    centred: bool,
) -> Result<ConstantsReport> {
    let (lip, lipschitz) = match lipschitz_constants(problem) {
        Ok(l) => (l, Provenance::Exact),
        Err(_) => (
            estimate_lipschitz(problem, C1_SAMPLES, C1_SEED)?,
            Provenance::Estimated,
        ),
    };
    let (c1, c1_prov) = estimate_c1(problem, C1_SAMPLES, C1_SEED)?;
    let (c2, q, c2_prov) = match *model {
        PerturbationModel::StateIndependent { family, q } => {
            let prov = match family {
                NoiseFamily::Gaussian => Provenance::Estimated,
                NoiseFamily::Uniform => Provenance::Exact,
            };
            (moment_constant(family, problem.dim()), q, prov)
        }
        _ => (0.0, f64::INFINITY, Provenance::Exact),
    };
    let e_hats = empirical_e_hats(problem)?;
    Ok(ConstantsReport {
        constants: BoundConstants {
            c1,
            c2,
            l_g: lip.coarse,
            l_f: lip.fine,
            p: COARSE_ORDER,
            q,
            dt: problem.dt(),
            e0_hat: e_hats.e0_hat,
            e1_hat: e_hats.e1_hat,
            centred,
        },
        e_hats,
        c1: c1_prov,
        c2: c2_prov,
        lipschitz,
    })
}
