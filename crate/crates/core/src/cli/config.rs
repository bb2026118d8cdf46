//! Flat `section.key = value` run files.
//!
//! Blank lines and lines starting with `#` are ignored. Unknown keys,
//! duplicate keys and malformed values are rejected with the offending line.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::engine::RunConfig;
use crate::perturbations::PerturbationModel;
use crate::problems::{
    make_linear_problem, make_scalar_problem, IvProblem, Mesh, ProblemKind, Regime,
};

const KEYS: &[&str] = &[
    "problem.kind",
    "problem.d",
    "problem.mode",
    "problem.seed",
    "problem.t0",
    "problem.T",
    "problem.N",
    "perturbation.model",
    "perturbation.centred",
    "solver.K_max",
    "solver.eps",
    "solver.seed",
    "mc.R",
    "mc.eps_grid",
    "mc.quantities",
    "mc.models",
    "output.directory",
    "output.prefix",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        Self {
            line: Some(line),
            message: message.into(),
        }
    }

    fn global(message: impl Into<String>) -> Self {
        Self {
            line: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self {
                line: Some(l),
                message,
            } => write!(f, "line {l}: {message}"),
            Self {
                line: None,
                message,
            } => f.write_str(message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: usize,
}

/// Parsed but untyped key-value pairs.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, Entry>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let Some((key, value)) = trimmed.split_once('=') else {
                return Err(ConfigError::at(
                    line,
                    format!("expected `key = value`, found `{trimmed}`"),
                ));
            };
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(ConfigError::at(line, format!("unknown key `{key}`")));
            }
            if value.is_empty() {
                return Err(ConfigError::at(line, format!("`{key}` has no value")));
            }
            if let Some(prev) = entries.insert(
                key.to_string(),
                Entry {
                    value: value.to_string(),
                    line,
                },
            ) {
                return Err(ConfigError::at(
                    line,
                    format!("`{key}` already set on line {}", prev.line),
                ));
            }
        }
        Ok(Self { entries })
    }

    /// Entries of `other` replace those of `self`, block by block: a section
    /// present in `other` drops every key of that section from `self`.
    pub fn overridden_by(mut self, other: &RawConfig) -> Self {
        let section = |k: &str| k.split('.').next().unwrap_or_default().to_string();
        let sections: Vec<String> = other.entries.keys().map(|k| section(k)).collect();
        self.entries.retain(|k, _| !sections.contains(&section(k)));
        self.entries
            .extend(other.entries.iter().map(|(k, v)| (k.clone(), v.clone())));
        self
    }

    fn has_section(&self, section: &str) -> bool {
        self.entries
            .keys()
            .any(|k| k.starts_with(&format!("{section}.")))
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        self.entries
            .get(key)
            .map(|e| {
                e.value
                    .parse()
                    .map_err(|err| ConfigError::at(e.line, format!("bad value for `{key}`: {err}")))
            })
            .transpose()
    }

    fn require<T: FromStr>(&self, key: &str) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        self.get(key)?
            .ok_or_else(|| ConfigError::global(format!("missing required key `{key}`")))
    }

    fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        let Some(e) = self.entries.get(key) else {
            return Ok(None);
        };
        e.value
            .split(',')
            .map(|item| {
                let item = item.trim();
                item.parse().map_err(|err| {
                    ConfigError::at(e.line, format!("bad entry `{item}` in `{key}`: {err}"))
                })
            })
            .collect::<Result<Vec<T>, _>>()
            .map(Some)
    }

    fn line(&self, key: &str) -> Option<usize> {
        self.entries.get(key).map(|e| e.line)
    }

    fn fail(&self, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError {
            line: self.line(key),
            message: message.into(),
        }
    }
}

/// A tolerance that also accepts `inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Tolerance(f64);

impl FromStr for Tolerance {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let v: f64 = match s {
            "inf" | "+inf" | "infinity" => f64::INFINITY,
            _ => s.parse().map_err(|e| format!("{e}"))?,
        };
        if v.is_nan() || v < 0.0 {
            return Err(format!("tolerance must be non-negative, got {s}"));
        }
        Ok(Tolerance(v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Quantity {
    ErrorTable,
    Moments,
    ToleranceSweep,
    Bounds,
    Comparison,
}

impl FromStr for Quantity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "error_table" => Quantity::ErrorTable,
            "moments" => Quantity::Moments,
            "tolerance_sweep" => Quantity::ToleranceSweep,
            "bounds" => Quantity::Bounds,
            "comparison" => Quantity::Comparison,
            other => return Err(format!("unknown quantity `{other}`")),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSpec {
    Linear {
        d: usize,
        mode: Regime,
        seed: u64,
        t0: f64,
        t_end: f64,
        slices: usize,
    },
    Scalar {
        t0: f64,
        t_end: f64,
        slices: usize,
    },
}

impl ProblemSpec {
    pub fn slices(&self) -> usize {
        match *self {
            ProblemSpec::Linear { slices, .. } | ProblemSpec::Scalar { slices, .. } => slices,
        }
    }

    pub fn build(&self) -> crate::Result<IvProblem> {
        match *self {
            ProblemSpec::Linear {
                d,
                mode,
                seed,
                t0,
                t_end,
                slices,
            } => make_linear_problem(d, mode, seed, t0, t_end, slices),
            ProblemSpec::Scalar { t0, t_end, slices } => {
                let base = make_scalar_problem();
                IvProblem::new(
                    ProblemKind::ScalarNonlinear,
                    base.u0().clone(),
                    Mesh::new(t0, t_end, slices)?,
                )
            }
        }
    }
}

/// A validated run file.
#[derive(Debug, Clone, PartialEq)]
pub struct RunFile {
    pub problem: ProblemSpec,
    pub model: PerturbationModel,
    pub centred: bool,
    pub k_max: usize,
    pub eps: f64,
    pub seed: Option<u64>,
    pub realizations: usize,
    pub eps_grid: Vec<f64>,
    pub quantities: Vec<Quantity>,
    pub models: Vec<PerturbationModel>,
    pub directory: PathBuf,
    pub prefix: String,
}

impl RunFile {
    pub fn from_raw(raw: &RawConfig) -> Result<Self, ConfigError> {
        if !raw.has_section("problem") {
            return Err(ConfigError::global("missing problem block"));
        }
        let kind: String = raw.require("problem.kind")?;
        let problem = match kind.as_str() {
            "linear" => ProblemSpec::Linear {
                d: raw.require("problem.d")?,
                mode: raw.require("problem.mode")?,
                seed: raw.require("problem.seed")?,
                t0: raw.require("problem.t0")?,
                t_end: raw.require("problem.T")?,
                slices: raw.require("problem.N")?,
            },
            "scalar" => {
                for key in ["problem.d", "problem.mode", "problem.seed"] {
                    if raw.line(key).is_some() {
                        return Err(
                            raw.fail(key, format!("`{key}` does not apply to the scalar problem"))
                        );
                    }
                }
                ProblemSpec::Scalar {
                    t0: raw.get("problem.t0")?.unwrap_or(-1.0),
                    t_end: raw.get("problem.T")?.unwrap_or(1.0),
                    slices: raw.get("problem.N")?.unwrap_or(20),
                }
            }
            other => {
                return Err(raw.fail(
                    "problem.kind",
                    format!("unknown problem kind `{other}` (expected linear or scalar)"),
                ))
            }
        };
        let slices = problem.slices();

        let model: PerturbationModel = raw
            .get("perturbation.model")?
            .unwrap_or(PerturbationModel::None);
        model
            .validate()
            .map_err(|e| raw.fail("perturbation.model", e.to_string()))?;
        let centred = raw.get("perturbation.centred")?.unwrap_or(false);

        let k_max = raw.get("solver.K_max")?.unwrap_or(slices);
        if k_max == 0 || k_max > slices {
            return Err(raw.fail("solver.K_max", format!("K_max must lie in 1..={slices}")));
        }
        let eps = raw.get::<Tolerance>("solver.eps")?.map_or(1e-8, |t| t.0);
        let seed = raw.get("solver.seed")?;

        let realizations = raw
            .get("mc.R")?
            .unwrap_or(crate::experiments::DEFAULT_REALIZATIONS);
        if realizations == 0 {
            return Err(raw.fail("mc.R", "R must be at least 1"));
        }
        let eps_grid: Vec<f64> = raw
            .list::<Tolerance>("mc.eps_grid")?
            .map(|v| v.into_iter().map(|t| t.0).collect())
            .unwrap_or_default();
        if eps_grid.windows(2).any(|w| w[1] >= w[0]) {
            return Err(raw.fail("mc.eps_grid", "eps_grid must be strictly decreasing"));
        }
        let mut quantities: Vec<Quantity> = raw.list("mc.quantities")?.unwrap_or_default();
        quantities.sort();
        quantities.dedup();
        if quantities.contains(&Quantity::ToleranceSweep) && eps_grid.is_empty() {
            return Err(raw.fail(
                "mc.quantities",
                "tolerance_sweep needs a non-empty mc.eps_grid",
            ));
        }
        let models: Vec<PerturbationModel> = raw.list("mc.models")?.unwrap_or_else(|| vec![model]);
        for m in &models {
            m.validate()
                .map_err(|e| raw.fail("mc.models", e.to_string()))?;
        }

        Ok(Self {
            problem,
            model,
            centred,
            k_max,
            eps,
            seed,
            realizations,
            eps_grid,
            quantities,
            models,
            directory: raw
                .get("output.directory")?
                .unwrap_or_else(|| PathBuf::from(".")),
            prefix: raw.get("output.prefix")?.unwrap_or_default(),
        })
    }

    /// The solver seed, which must be given explicitly.
    pub fn require_seed(&self) -> Result<u64, ConfigError> {
        self.seed
            .ok_or_else(|| ConfigError::global("missing required key `solver.seed`"))
    }

    pub fn run_config(&self, model: PerturbationModel, seed: u64) -> RunConfig {
        RunConfig::new(self.problem.slices())
            .with_k_max(self.k_max)
            .with_eps(self.eps)
            .with_perturbation(model)
            .with_seed(seed)
    }

    pub fn output_path(&self, name: &str) -> PathBuf {
        self.directory.join(format!("{}{name}", self.prefix))
    }
}
