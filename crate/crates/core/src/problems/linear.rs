use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::expm::{is_diagonal, matrix_exponential};
use super::{regime_b, IvProblem, Mesh, ProblemKind, Propagators, State};
use crate::{Error, Result};

/// Initial conditions are drawn from `[-U0_RANGE, U0_RANGE]^d`.
const U0_RANGE: f64 = 5.0;
/// Raw decay rates are drawn from this interval before rescaling. A narrow
/// spread keeps every component close to the slowest one.
const RATE_RANGE: (f64, f64) = (0.9, 1.0);
/// Target `L_G = margin / sqrt(1 + 2 dt)`, i.e. `B = margin^2`.
const CONTRACTIVE_MARGIN: f64 = 0.9;
const EXPANSIVE_MARGIN: f64 = 1.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Structure {
    Diagonal,
    Dense,
}

/// Which side of `B = 1` a generated linear problem lands on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `B < 1`.
    Contractive,
    /// `B >= 1`.
    Expansive,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Contractive => "contractive",
            Regime::Expansive => "expansive",
        })
    }
}

impl FromStr for Regime {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "contractive" => Ok(Regime::Contractive),
            "expansive" => Ok(Regime::Expansive),
            other => Err(format!(
                "unknown mode `{other}` (expected contractive or expansive)"
            )),
        }
    }
}

/// `du/dt = Q u`.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    q: DMatrix<f64>,
    structure: Structure,
}

impl LinearSystem {
    pub fn diagonal(entries: &[f64]) -> Self {
        Self {
            q: DMatrix::from_diagonal(&DVector::from_column_slice(entries)),
            structure: Structure::Diagonal,
        }
    }

    /// Dense coefficient matrix. Falls back to the diagonal fast path when
    /// every off-diagonal entry is zero.
    pub fn dense(q: DMatrix<f64>) -> Result<Self> {
        if !q.is_square() || q.nrows() == 0 {
            return Err(Error::InvalidProblem(
                "Q must be a non-empty square matrix".into(),
            ));
        }
        if q.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("coefficient matrix"));
        }
        let structure = if is_diagonal(&q) {
            Structure::Diagonal
        } else {
            Structure::Dense
        };
        Ok(Self { q, structure })
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn structure(&self) -> Structure {
        self.structure
    }

    pub fn dim(&self) -> usize {
        self.q.nrows()
    }

    pub(super) fn exact_flow(&self, u: &State, dt: f64) -> State {
        match self.structure {
            Structure::Diagonal => State::from_iterator(
                u.len(),
                u.iter()
                    .enumerate()
                    .map(|(i, x)| (self.q[(i, i)] * dt).exp() * x),
            ),
            Structure::Dense => {
                let prop = matrix_exponential(&self.q, dt)
                    .expect("coefficient matrix was validated as finite");
                prop * u
            }
        }
    }

    pub(super) fn euler_step(&self, u: &State, h: f64) -> State {
        match self.structure {
            Structure::Diagonal => State::from_iterator(
                u.len(),
                u.iter()
                    .enumerate()
                    .map(|(i, x)| (1.0 + self.q[(i, i)] * h) * x),
            ),
            Structure::Dense => u + (&self.q * u) * h,
        }
    }

    /// Propagator matrix of the exact flow, `exp(Q dt)`.
    pub fn fine_matrix(&self, dt: f64) -> Result<DMatrix<f64>> {
        matrix_exponential(&self.q, dt)
    }

    /// Propagator matrix of the coarse flow, `(I + Q dt / m)^m`.
    pub fn coarse_matrix(&self, dt: f64, substeps: usize) -> DMatrix<f64> {
        let dim = self.dim();
        let step = DMatrix::<f64>::identity(dim, dim) + &self.q * (dt / substeps as f64);
        let mut acc = DMatrix::<f64>::identity(dim, dim);
        for _ in 0..substeps {
            acc = &step * acc;
        }
        acc
    }

    pub(super) fn propagators(&self, dt: f64, substeps: usize) -> Result<Propagators> {
        Ok(match self.structure {
            Structure::Diagonal => {
                let diag = |m: DMatrix<f64>| (0..self.dim()).map(|i| m[(i, i)]).collect();
                Propagators::Diagonal {
                    fine: diag(self.fine_matrix(dt)?),
                    coarse: diag(self.coarse_matrix(dt, substeps)),
                }
            }
            Structure::Dense => Propagators::Dense {
                fine: self.fine_matrix(dt)?,
                coarse: self.coarse_matrix(dt, substeps),
            },
        })
    }
}

/// Infinity norm of a matrix: maximum absolute row sum.
pub(crate) fn matrix_norm_inf(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Seeded diagonal linear test problem on `[t0, t_end]` with `slices` slices.
///
/// Decay rates are drawn uniformly from a narrow band and then rescaled so
/// that the coarse Lipschitz constant `L_G = max_i |1 + Q_ii dt|` lands at
/// `margin / sqrt(1 + 2 dt)`, giving `B = 0.81` for the contractive mode and
/// `B = 1.21` for the expansive one. When the expansive target exceeds one
/// the rates are made positive instead (growing modes).
pub fn make_linear_problem(
    d: usize,
    mode: Regime,
    seed: u64,
    t0: f64,
    t_end: f64,
    slices: usize,
) -> Result<IvProblem> {
    if d == 0 {
        return Err(Error::InvalidProblem(
            "dimension d must be at least 1".into(),
        ));
    }
    if slices < 2 {
        return Err(Error::InvalidProblem("need at least N = 2 slices".into()));
    }
    let mesh = Mesh::new(t0, t_end, slices)?;
    let dt = mesh.dt();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rates: Vec<f64> = (0..d)
        .map(|_| rng.random_range(RATE_RANGE.0..=RATE_RANGE.1))
        .collect();
    let u0 = State::from_iterator(d, (0..d).map(|_| rng.random_range(-U0_RANGE..=U0_RANGE)));

    let margin = match mode {
        Regime::Contractive => CONTRACTIVE_MARGIN,
        Regime::Expansive => EXPANSIVE_MARGIN,
    };
    let target = margin / (1.0 + 2.0 * dt).sqrt();
    let r_min = rates.iter().cloned().fold(f64::INFINITY, f64::min);
    let r_max = rates.iter().cloned().fold(0.0, f64::max);
    let diagonal: Vec<f64> = if target < 1.0 {
        let scale = (1.0 - target) / (r_min * dt);
        rates.iter().map(|r| -scale * r).collect()
    } else {
        let scale = (target - 1.0) / (r_max * dt);
        rates.iter().map(|r| scale * r).collect()
    };

    let l_g = diagonal
        .iter()
        .map(|q| (1.0 + q * dt).abs())
        .fold(0.0, f64::max);
    let achieved_b = regime_b(l_g, dt);
    let ok = match mode {
        Regime::Contractive => achieved_b < 1.0,
        Regime::Expansive => achieved_b >= 1.0,
    };
    if !ok || !achieved_b.is_finite() {
        return Err(Error::RegimeUnattainable {
            mode: match mode {
                Regime::Contractive => "contractive",
                Regime::Expansive => "expansive",
            },
            dt,
            achieved_b,
        });
    }

    IvProblem::new(
        ProblemKind::Linear(LinearSystem::diagonal(&diagonal)),
        u0,
        mesh,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::lipschitz_constants;

    #[test]
    fn b_for_unit_decay() {
        // L_G = |1 - 0.1| = 0.9, B = 0.81 * 1.2
        let sys = LinearSystem::diagonal(&[-1.0]);
        let p = IvProblem::new(
            ProblemKind::Linear(sys),
            State::from_element(1, 1.0),
            Mesh::new(0.0, 2.0, 20).unwrap(),
        )
        .unwrap();
        let lip = lipschitz_constants(&p).unwrap();
        assert!((lip.coarse - 0.9).abs() < 1e-15);
        assert!((regime_b(lip.coarse, p.dt()) - 0.972).abs() < 1e-12);
    }

    #[test]
    fn contractive_mode_over_many_seeds() {
        for seed in 0..100 {
            let p = make_linear_problem(10, Regime::Contractive, seed, 0.0, 2.0, 20).unwrap();
            let lip = lipschitz_constants(&p).unwrap();
            assert!(regime_b(lip.coarse, p.dt()) < 1.0, "seed {seed}");
            assert!(p.u0().iter().all(|x| x.abs() <= U0_RANGE));
        }
    }

    #[test]
    fn expansive_mode_over_many_seeds() {
        for (t_end, seed) in [(2.0, 1), (8.0, 2), (2.0, 3), (8.0, 4)] {
            let p = make_linear_problem(10, Regime::Expansive, seed, 0.0, t_end, 20).unwrap();
            let lip = lipschitz_constants(&p).unwrap();
            assert!(regime_b(lip.coarse, p.dt()) >= 1.0);
        }
    }

    #[test]
    fn generation_is_seeded() {
        let a = make_linear_problem(7, Regime::Contractive, 42, 0.0, 8.0, 20).unwrap();
        let b = make_linear_problem(7, Regime::Contractive, 42, 0.0, 8.0, 20).unwrap();
        let c = make_linear_problem(7, Regime::Contractive, 43, 0.0, 8.0, 20).unwrap();
        assert_eq!(a.u0(), b.u0());
        assert_ne!(a.u0(), c.u0());
    }

    #[test]
    fn rejects_bad_sizes_and_unreachable_regimes() {
        assert!(make_linear_problem(0, Regime::Contractive, 1, 0.0, 2.0, 20).is_err());
        assert!(make_linear_problem(3, Regime::Contractive, 1, 0.0, 2.0, 0).is_err());
        assert!(make_linear_problem(3, Regime::Contractive, 1, 0.0, 2.0, 1).is_err());
        // the rescaled rates underflow, so L_G cannot be pushed below one
        match make_linear_problem(5, Regime::Contractive, 1, 0.0, f64::MAX, 2) {
            Err(Error::RegimeUnattainable { achieved_b, .. }) => assert!(achieved_b >= 1.0),
            other => panic!("expected regime failure, got {other:?}"),
        }
    }

    #[test]
    fn dense_constructor_detects_diagonal() {
        let q = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, -2.0]));
        assert_eq!(
            LinearSystem::dense(q).unwrap().structure(),
            Structure::Diagonal
        );
        let q = DMatrix::from_row_slice(2, 2, &[-1.0, 0.5, 0.0, -2.0]);
        assert_eq!(
            LinearSystem::dense(q).unwrap().structure(),
            Structure::Dense
        );
    }

    #[test]
    fn dense_flows_match_diagonalised_system() {
        // Q = P D P^-1 with P = [[1, 1], [0, 1]]
        let d = [-1.0, -0.25];
        let q = DMatrix::from_row_slice(2, 2, &[d[0], d[1] - d[0], 0.0, d[1]]);
        let sys = LinearSystem::dense(q).unwrap();
        let p = IvProblem::new(
            ProblemKind::Linear(sys),
            State::from_vec(vec![1.0, 2.0]),
            Mesh::new(0.0, 1.0, 10).unwrap(),
        )
        .unwrap();
        let u = p.u0().clone();
        let fine = p.fine(&u);
        // y = P^-1 u = (u0 - u1, u1); evolve and map back
        let y = [
            (u[0] - u[1]) * (d[0] * 0.1).exp(),
            u[1] * (d[1] * 0.1).exp(),
        ];
        assert!((fine[0] - (y[0] + y[1])).abs() < 1e-13);
        assert!((fine[1] - y[1]).abs() < 1e-13);
    }
}
