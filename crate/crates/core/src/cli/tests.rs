use super::*;
use crate::perturbations::PerturbationModel;
use crate::problems::Regime;

const LINEAR: &str = "
# linear run
problem.kind = linear
problem.d = 4
problem.mode = contractive
problem.seed = 3
problem.t0 = 0
problem.T = 8
problem.N = 20
perturbation.model = rule2
solver.eps = 1e-6
solver.seed = 9
mc.R = 8
mc.eps_grid = 1e-2, 1e-4
mc.quantities = tolerance_sweep, error_table
";

fn parse(text: &str) -> Result<RunFile, ConfigError> {
    RunFile::from_raw(&RawConfig::parse(text)?)
}

#[test]
fn linear_file_round_trip() {
    let run = parse(LINEAR).unwrap();
    assert_eq!(
        run.problem,
        ProblemSpec::Linear {
            d: 4,
            mode: Regime::Contractive,
            seed: 3,
            t0: 0.0,
            t_end: 8.0,
            slices: 20
        }
    );
    assert_eq!(run.model, PerturbationModel::rule(2).unwrap());
    assert_eq!(run.k_max, 20);
    assert_eq!(run.eps, 1e-6);
    assert_eq!(run.seed, Some(9));
    assert_eq!(run.realizations, 8);
    assert_eq!(run.eps_grid, vec![1e-2, 1e-4]);
    assert_eq!(
        run.quantities,
        vec![Quantity::ErrorTable, Quantity::ToleranceSweep]
    );
    assert_eq!(run.models, vec![run.model]);
}

#[test]
fn scalar_defaults_to_the_fixed_mesh() {
    let run = parse("problem.kind = scalar\n").unwrap();
    assert_eq!(
        run.problem,
        ProblemSpec::Scalar {
            t0: -1.0,
            t_end: 1.0,
            slices: 20
        }
    );
    assert_eq!(run.model, PerturbationModel::None);
    assert_eq!(run.eps, 1e-8);
    assert_eq!(run.seed, None);
    assert_eq!(run.directory, std::path::PathBuf::from("."));
}

#[test]
fn infinite_tolerance() {
    let run = parse("problem.kind = scalar\nsolver.eps = inf\n").unwrap();
    assert_eq!(run.eps, f64::INFINITY);
}

#[test]
fn errors_carry_the_line() {
    let cases = [
        (
            "problem.kind = scalar\nproblem.colour = red\n",
            2,
            "unknown key",
        ),
        (
            "problem.kind = scalar\nsolver.eps -1\n",
            2,
            "expected `key = value`",
        ),
        (
            "problem.kind = scalar\n\nproblem.kind = linear\n",
            3,
            "already set",
        ),
        (
            "problem.kind = scalar\nsolver.K_max = many\n",
            2,
            "bad value",
        ),
        ("problem.kind = scalar\nsolver.K_max = 21\n", 2, "K_max"),
        (
            "problem.kind = scalar\nsolver.eps = -1\n",
            2,
            "non-negative",
        ),
        (
            "problem.kind = scalar\nperturbation.model = rule7\n",
            2,
            "unknown perturbation model",
        ),
        (
            "problem.kind = scalar\nmc.eps_grid = 1e-4, 1e-2\n",
            2,
            "strictly decreasing",
        ),
        (
            "problem.kind = scalar\nmc.quantities = error_table, plots\n",
            2,
            "unknown quantity",
        ),
        ("problem.kind = cubic\n", 1, "unknown problem kind"),
        (
            "problem.kind = scalar\nproblem.seed = 4\n",
            2,
            "does not apply",
        ),
        (
            "problem.kind = scalar\nperturbation.model = gauss_qinf\n",
            2,
            "gauss_qinf",
        ),
    ];
    for (text, line, fragment) in cases {
        let err = parse(text).unwrap_err();
        assert_eq!(err.line, Some(line), "{text:?}: {err}");
        assert!(err.to_string().contains(fragment), "{text:?}: {err}");
        assert!(err.to_string().starts_with(&format!("line {line}:")));
    }
}

#[test]
fn missing_blocks_and_keys() {
    let err = parse("solver.eps = 1e-3\n").unwrap_err();
    assert!(err.message.contains("missing problem block"));
    let err = parse("problem.kind = linear\nproblem.d = 3\n").unwrap_err();
    assert!(err.message.contains("problem.mode"));
    let err = parse("problem.kind = scalar\nmc.quantities = tolerance_sweep\n").unwrap_err();
    assert!(err.message.contains("eps_grid"));
}

#[test]
fn every_preset_is_valid() {
    for name in PRESETS {
        let run = load(None, Some(name), None).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(run.realizations, 500, "{name}");
        assert_eq!(run.problem.slices(), 20);
        assert!(run.seed.is_some());
        assert!(!run.quantities.is_empty());
    }
    assert!(preset("fig99").is_none());
}

#[test]
fn preset_replaces_blocks_but_keeps_output() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.cfg");
    std::fs::write(
        &path,
        "problem.kind = scalar\nmc.R = 3\noutput.prefix = x_\n",
    )
    .unwrap();
    let run = load(Some(&path), Some("fig5a"), None).unwrap();
    assert!(matches!(run.problem, ProblemSpec::Linear { d: 100, .. }));
    assert_eq!(run.realizations, 500);
    assert_eq!(run.prefix, "x_");
    assert_eq!(
        run.models,
        vec![
            PerturbationModel::rule(2).unwrap(),
            PerturbationModel::rule(4).unwrap()
        ]
    );
}

#[test]
fn exit_codes() {
    assert_eq!(
        Failure::Config(ConfigError {
            line: None,
            message: String::new()
        })
        .exit_code(),
        EXIT_CONFIG
    );
    assert_eq!(
        Failure::Run(Error::NonFiniteState { k: 1, n: 2 }).exit_code(),
        EXIT_NUMERIC
    );
    let wrapped = Error::Realization {
        realization: 3,
        master_seed: 1,
        source: Box::new(Error::FineSweepDiverged { node: 2 }),
    };
    assert_eq!(Failure::Run(wrapped).exit_code(), EXIT_NUMERIC);
    assert_eq!(
        Failure::Run(Error::InvalidConfig("x".into())).exit_code(),
        EXIT_CONFIG
    );
}
