//! Perturbation models for stochastic parareal.
//!
//! State-independent models add a draw `xi^k_n` whose law depends only on
//! `(dt, q)`. The four sampling rules instead draw a perturbed state
//! `alpha^k_n` around either `F(U^{k-1}_{n-1})` (rules 1, 3) or `U^k_n`
//! (rules 2, 4), with marginal standard deviation
//! `sigma^k_n = |G(U^k_{n-1}) - G(U^{k-1}_{n-1})|`. Rules 1 and 2 are
//! Gaussian, 3 and 4 uniform with matched variance.

mod moments;
mod rng;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;

pub use moments::{
    analytic_second_moment, estimate_max_moments, moment_constant, track_xi_moments, MaxMoments,
    MomentTrace, C2_SAMPLES,
};
pub use rng::{DrawKind, RngStream};

use crate::engine::IterationHistory;
use crate::problems::{IvProblem, State};
use crate::{Error, Result};

const SQRT_3: f64 = 1.732_050_807_568_877_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NoiseFamily {
    Gaussian,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SamplingRule {
    One,
    Two,
    Three,
    Four,
}

impl SamplingRule {
    pub const ALL: [SamplingRule; 4] = [Self::One, Self::Two, Self::Three, Self::Four];

    pub fn from_index(index: u8) -> Option<Self> {
        Self::ALL.get(usize::from(index).wrapping_sub(1)).copied()
    }

    pub fn index(self) -> u8 {
        match self {
            Self::One => 1,
            Self::Two => 2,
            Self::Three => 3,
            Self::Four => 4,
        }
    }

    /// Rules 1 and 3 centre on the previous fine propagation.
    pub fn centred_on_fine(self) -> bool {
        matches!(self, Self::One | Self::Three)
    }

    pub fn family(self) -> NoiseFamily {
        match self {
            Self::One | Self::Two => NoiseFamily::Gaussian,
            Self::Three | Self::Four => NoiseFamily::Uniform,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PerturbationModel {
    None,
    StateIndependent { family: NoiseFamily, q: f64 },
    SamplingRule(SamplingRule),
}

impl PerturbationModel {
    pub fn gaussian(q: f64) -> Self {
        Self::StateIndependent {
            family: NoiseFamily::Gaussian,
            q,
        }
    }

    pub fn uniform(q: f64) -> Self {
        Self::StateIndependent {
            family: NoiseFamily::Uniform,
            q,
        }
    }

    pub fn rule(index: u8) -> Option<Self> {
        SamplingRule::from_index(index).map(Self::SamplingRule)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::StateIndependent { q, .. } if !q.is_finite() => Err(Error::InvalidConfig(
                format!("noise exponent q must be finite, got {q}"),
            )),
            _ => Ok(()),
        }
    }
}

/// Short labels used in config files and CSV output: `none`, `gauss_q5`,
/// `unif_q0.5`, `rule3`.
impl fmt::Display for PerturbationModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::None => f.write_str("none"),
            Self::StateIndependent {
                family: NoiseFamily::Gaussian,
                q,
            } => write!(f, "gauss_q{q}"),
            Self::StateIndependent {
                family: NoiseFamily::Uniform,
                q,
            } => write!(f, "unif_q{q}"),
            Self::SamplingRule(rule) => write!(f, "rule{}", rule.index()),
        }
    }
}

impl FromStr for PerturbationModel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let bad = || {
            format!("unknown perturbation model `{s}` (expected none, gauss_q<q>, unif_q<q> or rule<1-4>)")
        };
        if s == "none" {
            return Ok(Self::None);
        }
        if let Some(idx) = s.strip_prefix("rule") {
            return idx.parse::<u8>().ok().and_then(Self::rule).ok_or_else(bad);
        }
        let (family, q) = if let Some(q) = s.strip_prefix("gauss_q") {
            (NoiseFamily::Gaussian, q)
        } else if let Some(q) = s.strip_prefix("unif_q") {
            (NoiseFamily::Uniform, q)
        } else {
            return Err(bad());
        };
        let q: f64 = q.parse().map_err(|_| bad())?;
        if !q.is_finite() {
            return Err(bad());
        }
        Ok(Self::StateIndependent { family, q })
    }
}

/// Standard deviation of one component of a state-independent draw,
/// `dt^(q + 1/2)`.
pub fn noise_scale(dt: f64, q: f64) -> f64 {
    dt.powf(q + 0.5)
}

/// The draw `xi^k_n` for a state-independent model: i.i.d. components with
/// mean zero and variance `dt^(2q+1)`.
pub fn draw_state_independent(
    family: NoiseFamily,
    q: f64,
    stream: &RngStream,
    k: usize,
    n: usize,
    dt: f64,
    dim: usize,
) -> State {
    let mut rng = stream.substream(k, n, DrawKind::StateIndependent);
    let scale = noise_scale(dt, q);
    match family {
        NoiseFamily::Gaussian => State::from_iterator(
            dim,
            (0..dim).map(|_| scale * rng.sample::<f64, _>(StandardNormal)),
        ),
        NoiseFamily::Uniform => State::from_iterator(
            dim,
            (0..dim).map(|_| SQRT_3 * scale * (2.0 * rng.random::<f64>() - 1.0)),
        ),
    }
}

/// `sigma^k_n = |G(U^k_{n-1}) - G(U^{k-1}_{n-1})|`, componentwise, from the
/// coarse propagations stored in `history`.
pub fn sigma_kn(history: &IterationHistory, k: usize, n: usize) -> State {
    assert!(k >= 1 && n >= 1, "sigma^k_n needs k >= 1 and n >= 1");
    abs_diff(
        history.coarse_state(k, n - 1),
        history.coarse_state(k - 1, n - 1),
    )
}

/// Componentwise `|a - b|`.
pub fn abs_diff(a: &State, b: &State) -> State {
    State::from_iterator(a.len(), a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()))
}

/// Draw the perturbed state `alpha^k_n` for a sampling rule.
///
/// `history` must already hold iterations `k - 1` and `k` (states and the
/// fine propagations of iteration `k - 1`). Nodes `n <= k` are never
/// perturbed, so `U^k_n` is returned unchanged there.
pub fn sample_alpha(
    rule: SamplingRule,
    history: &IterationHistory,
    k: usize,
    n: usize,
    sigma: &State,
    stream: &RngStream,
) -> Result<State> {
    if k == 0 {
        return Err(Error::RuleAtIterationZero);
    }
    let u_kn = history.state(k, n);
    if n <= k {
        return Ok(u_kn.clone());
    }
    let mean = if rule.centred_on_fine() {
        history.fine_state(k - 1, n - 1)
    } else {
        u_kn
    };
    let dim = mean.len();
    let noise: Vec<f64> = match rule.family() {
        NoiseFamily::Gaussian => {
            let mut rng = stream.substream(k, n, DrawKind::RuleGaussian);
            (0..dim).map(|_| rng.sample(StandardNormal)).collect()
        }
        NoiseFamily::Uniform => {
            let mut rng = stream.substream(k, n, DrawKind::RuleUniform);
            (0..dim)
                .map(|_| SQRT_3 * (2.0 * rng.random::<f64>() - 1.0))
                .collect()
        }
    };
    Ok(State::from_iterator(
        dim,
        mean.iter()
            .zip(sigma.iter())
            .zip(noise)
            .map(|((m, s), z)| m + s * z),
    ))
}

/// The additive perturbation equivalent to propagating `alpha` instead of
/// `u_kn` in the correction term:
/// `(F(alpha) - G(alpha)) - (F(u_kn) - G(u_kn))`.
pub fn xi_from_alpha(problem: &IvProblem, alpha: &State, u_kn: &State) -> State {
    let perturbed = problem.fine(alpha) - problem.coarse(alpha);
    let unperturbed = problem.fine(u_kn) - problem.coarse(u_kn);
    perturbed - unperturbed
}
