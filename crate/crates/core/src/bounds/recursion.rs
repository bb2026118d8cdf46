use super::{k1_bound, BoundConstants, RuleVariant};
use crate::{Error, Result};

/// How the first row of the superlinear recursion is seeded.
#[derive(Debug, Clone, PartialEq)]
pub enum Seeding {
    /// `e^1_{n+1} = D + B e^1_n` from `e^1_0 = 0`, with no further
    /// zeroing. This is the recursion whose solution is exactly the closed
    /// form.
    Generating,
    /// First row from the `k = 1` bound; entries `n <= k` are zero.
    K1Bound,
    /// First row given (length `N + 1`); entries `n <= k` are zero.
    Row(Vec<f64>),
}

/// Iterate `e^{k+1}_{n+1} = A e^k_n + B e^{k+1}_n + Lambda` with equality.
///
/// Returns rows `k = 0..=k_max`, each of length `n_max + 1`. Row zero is
/// unused by the recursion and holds zeros.
pub fn solve_recursion_superlinear(
    c: &BoundConstants,
    k_max: usize,
    n_max: usize,
    seeding: &Seeding,
) -> Result<Vec<Vec<f64>>> {
    let (a, b, lambda) = (c.a(), c.b(), c.lambda());
    let mut rows = vec![vec![0.0; n_max + 1]; k_max.max(1) + 1];
    let exact = !matches!(seeding, Seeding::Generating);
    match seeding {
        Seeding::Generating => {
            let d = c.d();
            for n in 0..n_max {
                rows[1][n + 1] = d + b * rows[1][n];
            }
        }
        Seeding::K1Bound => {
            for n in 1..=n_max {
                rows[1][n] = k1_bound(c, n)?;
            }
        }
        Seeding::Row(row) => {
            check_row(row, n_max)?;
            rows[1].copy_from_slice(row);
            rows[1][0] = 0.0;
            if n_max >= 1 {
                rows[1][1] = 0.0;
            }
        }
    }
    for k in 1..k_max {
        for n in 0..n_max {
            rows[k + 1][n + 1] = if exact && n < k + 1 {
                0.0
            } else {
                a * rows[k][n] + b * rows[k + 1][n] + lambda
            };
        }
    }
    rows.truncate(k_max + 1);
    Ok(rows)
}

fn check_row(row: &[f64], n_max: usize) -> Result<()> {
    if row.len() != n_max + 1 {
        return Err(Error::Domain(format!(
            "seed row has length {}, expected {}",
            row.len(),
            n_max + 1
        )));
    }
    if row.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::Domain(
            "seed rows must be finite and non-negative".into(),
        ));
    }
    Ok(())
}

/// Coefficients of the sampling-rule recursion
/// `e^{k+1}_{n+1} = a e^k_n + b e^{k+1}_n + lambda1 e^k_{n-1} + lambda2 e^{k-1}_{n-1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RuleCoefficients {
    pub a: f64,
    pub b: f64,
    pub lambda1: f64,
    pub lambda2: f64,
}

impl RuleCoefficients {
    /// `a = A` for rules 2/4 and `A + Lambda3` for rules 1/3.
    pub fn new(c: &BoundConstants, variant: RuleVariant) -> Self {
        Self {
            a: c.rule_a(variant),
            b: c.b(),
            lambda1: c.lambda1(variant),
            lambda2: c.lambda2(variant),
        }
    }

    /// Iterate with equality from the `k = 0` and `k = 1` rows. Entries
    /// `n <= k` are zero. Returns rows `k = 0..=k_max`.
    pub fn iterate(
        &self,
        e0_row: &[f64],
        e1_row: &[f64],
        k_max: usize,
        n_max: usize,
    ) -> Result<Vec<Vec<f64>>> {
        check_row(e0_row, n_max)?;
        check_row(e1_row, n_max)?;
        let mut rows = vec![vec![0.0; n_max + 1]; k_max.max(1) + 1];
        rows[0].copy_from_slice(e0_row);
        rows[0][0] = 0.0;
        rows[1].copy_from_slice(e1_row);
        rows[1][0] = 0.0;
        if n_max >= 1 {
            rows[1][1] = 0.0;
        }
        for k in 1..k_max {
            for n in k + 1..n_max {
                rows[k + 1][n + 1] = self.a * rows[k][n]
                    + self.b * rows[k + 1][n]
                    + self.lambda1 * rows[k][n - 1]
                    + self.lambda2 * rows[k - 1][n - 1];
            }
        }
        rows.truncate(k_max + 1);
        Ok(rows)
    }
}

/// The numeric sampling-rule recursion for `variant`, seeded by empirical
/// (or bounded) `k = 0` and `k = 1` error rows.
pub fn solve_recursion_rules(
    c: &BoundConstants,
    variant: RuleVariant,
    e0_row: &[f64],
    e1_row: &[f64],
    k_max: usize,
    n_max: usize,
) -> Result<Vec<Vec<f64>>> {
    RuleCoefficients::new(c, variant).iterate(e0_row, e1_row, k_max, n_max)
}
