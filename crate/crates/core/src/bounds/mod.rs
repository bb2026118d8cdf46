//! Mean-square error bounds for stochastic parareal and the constants they
//! depend on.
//!
//! Every bound is stated for `e^k_n = E|u(t_n) - U^k_n|^2` in the infinity
//! norm. The state-independent bounds use
//!
//! * `A = C1^2 dt^(2p+2) (2 + 1/dt)`
//! * `B = L_G^2 (1 + 2 dt)`
//! * `Lambda = C2^2 dt^(2q+1) (2 + 1/dt)`
//! * `D = A e0_hat`
//!
//! and the centred-noise variant replaces these with `(1 + 1/dt)`,
//! `(1 + dt)` and `C2^2 dt^(2q+1)`. The sampling-rule bounds add `Lambda1`,
//! `Lambda2` and (rules 1 and 3) `Lambda3`.

mod estimate;
mod recursion;

use std::fmt;

use sha2::{Digest, Sha256};

pub use estimate::{
    constants_for, empirical_e_hats, estimate_c1, ConstantsReport, EHats, Provenance, C1_SAMPLES,
};
pub use recursion::{
    solve_recursion_rules, solve_recursion_superlinear, RuleCoefficients, Seeding,
};

use crate::perturbations::SamplingRule;
use crate::stats::pairwise_sum;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundConstants {
    pub c1: f64,
    pub c2: f64,
    pub l_g: f64,
    pub l_f: f64,
    /// Order of the coarse solver.
    pub p: u32,
    /// Noise exponent.
    pub q: f64,
    pub dt: f64,
    pub e0_hat: f64,
    pub e1_hat: f64,
    pub centred: bool,
}

/// Which sampling-rule bound applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RuleVariant {
    /// Rules 2 and 4, centred on the current iterate.
    Rule24,
    /// Rules 1 and 3, centred on the previous fine propagation.
    Rule13,
}

impl From<SamplingRule> for RuleVariant {
    fn from(rule: SamplingRule) -> Self {
        if rule.centred_on_fine() {
            Self::Rule13
        } else {
            Self::Rule24
        }
    }
}

impl BoundConstants {
    fn truncation(&self) -> f64 {
        self.c1 * self.c1 * self.dt.powi(2 * self.p as i32 + 2)
    }

    pub fn a(&self) -> f64 {
        let weight = if self.centred { 1.0 } else { 2.0 };
        self.truncation() * (weight + 1.0 / self.dt)
    }

    pub fn b(&self) -> f64 {
        let weight = if self.centred { 1.0 } else { 2.0 };
        self.l_g * self.l_g * (1.0 + weight * self.dt)
    }

    /// Noise contribution; zero when `C2 = 0`.
    pub fn lambda(&self) -> f64 {
        if self.c2 == 0.0 {
            return 0.0;
        }
        let base = self.c2 * self.c2 * self.dt.powf(2.0 * self.q + 1.0);
        if self.centred {
            base
        } else {
            base * (2.0 + 1.0 / self.dt)
        }
    }

    pub fn d(&self) -> f64 {
        self.a() * self.e0_hat
    }

    pub fn lambda1(&self, variant: RuleVariant) -> f64 {
        let base = self.truncation() * self.l_g * self.l_g * (1.0 + 1.0 / self.dt);
        match variant {
            RuleVariant::Rule24 => base,
            RuleVariant::Rule13 => 2.0 * base,
        }
    }

    pub fn lambda2(&self, variant: RuleVariant) -> f64 {
        let t = self.truncation();
        match variant {
            RuleVariant::Rule24 => t * self.l_g * self.l_g * (1.0 + self.dt),
            RuleVariant::Rule13 => {
                2.0 * t * (self.l_g * self.l_g * (1.0 + self.dt) + 2.0 * self.l_f * self.l_f)
            }
        }
    }

    pub fn lambda3(&self) -> f64 {
        4.0 * self.truncation()
    }

    /// Coefficient of `e^k_n` in the sampling-rule recursion.
    pub fn rule_a(&self, variant: RuleVariant) -> f64 {
        match variant {
            RuleVariant::Rule24 => self.a(),
            RuleVariant::Rule13 => self.a() + self.lambda3(),
        }
    }

    /// The same constants without noise.
    pub fn noise_free(&self) -> Self {
        Self { c2: 0.0, ..*self }
    }

    pub fn with_q(&self, q: f64) -> Self {
        Self { q, ..*self }
    }

    /// Short hex digest of every field, for tagging output rows.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        for x in [
            self.c1,
            self.c2,
            self.l_g,
            self.l_f,
            self.q,
            self.dt,
            self.e0_hat,
            self.e1_hat,
        ] {
            hasher.update(x.to_bits().to_le_bytes());
        }
        hasher.update(self.p.to_le_bytes());
        hasher.update([u8::from(self.centred)]);
        hasher.finalize()[..8]
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// A bound value, or the marker for a bound whose hypotheses fail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundValue {
    Value(f64),
    Inapplicable,
}

impl BoundValue {
    pub fn value(self) -> Option<f64> {
        match self {
            Self::Value(v) => Some(v),
            Self::Inapplicable => None,
        }
    }
}

impl fmt::Display for BoundValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Value(v) => write!(f, "{v:e}"),
            Self::Inapplicable => f.write_str("inapplicable"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundKind {
    Superlinear,
    Linear,
    Rule24,
    Rule13,
    NumericRecursion24,
    NumericRecursion13,
    K1,
}

impl BoundKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Superlinear => "superlinear",
            Self::Linear => "linear",
            Self::Rule24 => "rule24",
            Self::Rule13 => "rule13",
            Self::NumericRecursion24 => "numeric_recursion_24",
            Self::NumericRecursion13 => "numeric_recursion_13",
            Self::K1 => "k1",
        }
    }

    /// Whether the curve varies over `n` as well as `k`.
    pub fn is_lattice(self) -> bool {
        matches!(
            self,
            Self::Superlinear | Self::NumericRecursion24 | Self::NumericRecursion13
        )
    }

    pub fn numeric(variant: RuleVariant) -> Self {
        match variant {
            RuleVariant::Rule24 => Self::NumericRecursion24,
            RuleVariant::Rule13 => Self::NumericRecursion13,
        }
    }

    pub fn closed_rule(variant: RuleVariant) -> Self {
        match variant {
            RuleVariant::Rule24 => Self::Rule24,
            RuleVariant::Rule13 => Self::Rule13,
        }
    }
}

impl fmt::Display for BoundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundPoint {
    pub k: usize,
    /// Node index, `None` for bounds that depend on `k` alone. The `k1`
    /// curve is indexed by `n` with `k = 1`.
    pub n: Option<usize>,
    pub value: BoundValue,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundCurve {
    pub kind: BoundKind,
    pub points: Vec<BoundPoint>,
}

impl BoundCurve {
    /// Value at iteration `k`: the point itself for `k`-only curves, the
    /// maximum over `n` for lattice curves.
    pub fn at_k(&self, k: usize) -> Option<BoundValue> {
        let mut found = None;
        for p in self.points.iter().filter(|p| p.k == k) {
            found = Some(match (found, p.value) {
                (None, v) => v,
                (Some(BoundValue::Value(a)), BoundValue::Value(b)) => BoundValue::Value(a.max(b)),
                _ => BoundValue::Inapplicable,
            });
        }
        found
    }

    pub fn at(&self, k: usize, n: usize) -> Option<BoundValue> {
        self.points
            .iter()
            .find(|p| p.k == k && p.n == Some(n))
            .map(|p| p.value)
    }
}

/// `x^e` with `0^0 = 1`, as a natural log.
fn ln_pow(x: f64, e: usize) -> f64 {
    if e == 0 {
        0.0
    } else {
        e as f64 * x.ln()
    }
}

/// `sum_{l=0}^{len} C(l + j, l) a^j b^l`, with the binomial coefficient
/// accumulated in log space.
fn binomial_series(j: usize, len: usize, a: f64, b: f64) -> f64 {
    let ln_a = ln_pow(a, j);
    let mut ln_binom = 0.0;
    let terms: Vec<f64> = (0..=len)
        .map(|l| {
            if l > 0 {
                ln_binom += ((l + j) as f64).ln() - (l as f64).ln();
            }
            (ln_binom + ln_a + ln_pow(b, l)).exp()
        })
        .collect();
    pairwise_sum(&terms)
}

/// Superlinear bound for state-independent perturbations at `2 <= k < n`:
///
/// `D A^(k-1) sum_{l=0}^{n-k} C(l+k-1, l) B^l
///   + Lambda sum_{j=0}^{k-2} sum_{l=0}^{n-j-1} C(l+j, l) A^j B^l`.
pub fn superlinear_bound(c: &BoundConstants, k: usize, n: usize) -> Result<f64> {
    if k < 2 || n <= k {
        return Err(Error::Domain(format!(
            "superlinear bound needs 2 <= k < n, got k={k}, n={n}"
        )));
    }
    let (a, b, lambda, d) = (c.a(), c.b(), c.lambda(), c.d());
    let head = if d == 0.0 {
        0.0
    } else {
        d * binomial_series(k - 1, n - k, a, b)
    };
    let tail = if lambda == 0.0 {
        0.0
    } else {
        let inner: Vec<f64> = (0..=k - 2)
            .map(|j| binomial_series(j, n - j - 1, a, b))
            .collect();
        lambda * pairwise_sum(&inner)
    };
    Ok(head + tail)
}

/// Linear bound for state-independent perturbations, valid when `B < 1`:
/// `e1_hat (A/(1-B))^(k-1) + Lambda/(1-B) sum_{j=0}^{k-2} (A/(1-B))^j`.
pub fn linear_bound(c: &BoundConstants, k: usize) -> Result<BoundValue> {
    if k < 2 {
        return Err(Error::Domain(format!(
            "linear bound needs k >= 2, got k={k}"
        )));
    }
    let b = c.b();
    if b >= 1.0 {
        return Ok(BoundValue::Inapplicable);
    }
    let rate = c.a() / (1.0 - b);
    let geometric: Vec<f64> = (0..=k - 2).map(|j| rate.powi(j as i32)).collect();
    Ok(BoundValue::Value(
        c.e1_hat * rate.powi(k as i32 - 1) + c.lambda() / (1.0 - b) * pairwise_sum(&geometric),
    ))
}

/// Bound on `e^1_n`: `e0_hat A sum_{i=0}^{n-2} B^i`, zero at `n = 1`.
pub fn k1_bound(c: &BoundConstants, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("k1 bound needs n >= 1".into()));
    }
    let powers: Vec<f64> = (0..n - 1).map(|i| c.b().powi(i as i32)).collect();
    Ok(c.e0_hat * c.a() * pairwise_sum(&powers))
}

/// Dominant root of `x^2 = a x + b`, the growth rate of
/// `e^{k+1} = a e^k + b e^{k-1}`.
pub fn two_term_rate(a: f64, b: f64) -> f64 {
    0.5 * (a + (a * a + 4.0 * b).sqrt())
}

/// Sampling-rule bound `e0_hat lambda1^k`, valid when `B < 1`.
pub fn rule_bound(c: &BoundConstants, variant: RuleVariant, k: usize) -> Result<BoundValue> {
    if k < 2 {
        return Err(Error::Domain(format!("rule bound needs k >= 2, got k={k}")));
    }
    match rule_rate(c, variant) {
        Some(rate) => Ok(BoundValue::Value(c.e0_hat * rate.powi(k as i32))),
        None => Ok(BoundValue::Inapplicable),
    }
}

/// `lambda1` of the sampling-rule bound, `None` when `B >= 1`.
pub fn rule_rate(c: &BoundConstants, variant: RuleVariant) -> Option<f64> {
    let b = c.b();
    if b >= 1.0 {
        return None;
    }
    let s = c.rule_a(variant) + c.lambda1(variant);
    Some(two_term_rate(s / (1.0 - b), c.lambda2(variant) / (1.0 - b)))
}

/// Superlinear bound over `2 <= k <= k_max`, `k < n <= n_max`.
pub fn superlinear_curve(c: &BoundConstants, k_max: usize, n_max: usize) -> BoundCurve {
    let mut points = Vec::new();
    for k in 2..=k_max {
        for n in k + 1..=n_max {
            let v = superlinear_bound(c, k, n).expect("indices are in range");
            points.push(BoundPoint {
                k,
                n: Some(n),
                value: BoundValue::Value(v),
            });
        }
    }
    BoundCurve {
        kind: BoundKind::Superlinear,
        points,
    }
}

fn k_curve(kind: BoundKind, k_max: usize, f: impl Fn(usize) -> Result<BoundValue>) -> BoundCurve {
    let points = (2..=k_max)
        .map(|k| BoundPoint {
            k,
            n: None,
            value: f(k).expect("k >= 2"),
        })
        .collect();
    BoundCurve { kind, points }
}

pub fn linear_curve(c: &BoundConstants, k_max: usize) -> BoundCurve {
    k_curve(BoundKind::Linear, k_max, |k| linear_bound(c, k))
}

pub fn rule_curve(c: &BoundConstants, variant: RuleVariant, k_max: usize) -> BoundCurve {
    k_curve(BoundKind::closed_rule(variant), k_max, |k| {
        rule_bound(c, variant, k)
    })
}

pub fn k1_curve(c: &BoundConstants, n_max: usize) -> BoundCurve {
    let points = (1..=n_max)
        .map(|n| BoundPoint {
            k: 1,
            n: Some(n),
            value: BoundValue::Value(k1_bound(c, n).expect("n >= 1")),
        })
        .collect();
    BoundCurve {
        kind: BoundKind::K1,
        points,
    }
}

/// A numeric recursion lattice as a curve over `2 <= k <= k_max`, `n > k`.
pub fn lattice_curve(kind: BoundKind, lattice: &[Vec<f64>], k_max: usize) -> BoundCurve {
    let mut points = Vec::new();
    for (k, row) in lattice.iter().enumerate().take(k_max + 1).skip(2) {
        for (n, &v) in row.iter().enumerate().skip(k + 1) {
            points.push(BoundPoint {
                k,
                n: Some(n),
                value: BoundValue::Value(v),
            });
        }
    }
    BoundCurve { kind, points }
}

/// Every bound: the closed forms plus, when empirical `k = 0, 1` rows are
/// supplied, both numeric sampling-rule recursions.
pub fn all_curves(
    c: &BoundConstants,
    k_max: usize,
    n_max: usize,
    rows: Option<(&[f64], &[f64])>,
) -> Vec<BoundCurve> {
    let mut curves = vec![
        superlinear_curve(c, k_max, n_max),
        linear_curve(c, k_max),
        rule_curve(c, RuleVariant::Rule24, k_max),
        rule_curve(c, RuleVariant::Rule13, k_max),
    ];
    if let Some((e0_row, e1_row)) = rows {
        for variant in [RuleVariant::Rule24, RuleVariant::Rule13] {
            let lattice = solve_recursion_rules(c, variant, e0_row, e1_row, k_max, n_max)
                .expect("rows sized to the mesh");
            curves.push(lattice_curve(BoundKind::numeric(variant), &lattice, k_max));
        }
    }
    curves.push(k1_curve(c, n_max));
    curves
}
