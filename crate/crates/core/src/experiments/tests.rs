use std::sync::Arc;

use super::*;
use crate::bounds::{constants_for, superlinear_curve};
use crate::engine::parareal_solve;
use crate::problems::{
    make_linear_problem, make_scalar_problem, Mesh, ProblemKind, Regime, VectorField,
};

fn linear() -> IvProblem {
    make_linear_problem(10, Regime::Contractive, 4, 0.0, 8.0, 20).unwrap()
}

fn mc(model: PerturbationModel, realizations: usize) -> McConfig {
    McConfig::new(
        RunConfig::new(20).with_perturbation(model).with_seed(17),
        realizations,
    )
}

#[test]
fn deterministic_table_is_parareal() {
    let p = linear();
    let table = mc_error_table(&p, &mc(PerturbationModel::None, 1)).unwrap();
    let reference = serial_fine_solve(&p).unwrap();
    let h = parareal_solve(&p, &RunConfig::new(20).with_eps(0.0).to_k_max()).unwrap();
    assert_eq!(table.k_max(), 20);
    assert_eq!(table.slices(), 20);
    for k in 0..=20 {
        for n in 0..=20 {
            let sq = norm_inf(&(h.state(k, n) - &reference[n])).powi(2);
            assert_eq!(table.raw_mse[k][n], sq);
            if n <= k {
                assert_eq!(table.mse[k][n], 0.0);
                assert!(sq <= 1e-18);
            } else {
                assert_eq!(table.mse[k][n], sq);
            }
            assert_eq!(table.stderr[k][n], 0.0);
        }
    }
    let three = mc_error_table(&p, &mc(PerturbationModel::None, 3)).unwrap();
    assert_eq!(three.mse, table.mse);
    assert_eq!(three.realizations, 3);
}

#[test]
fn tables_ignore_thread_count() {
    let p = linear();
    let cfg = mc(PerturbationModel::rule(1).unwrap(), 16);
    let one = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let four = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap();
    let a = one.install(|| mc_error_table(&p, &cfg)).unwrap();
    let b = four.install(|| mc_error_table(&p, &cfg)).unwrap();
    assert_eq!(a, b);
    let cfg = cfg
        .with_model(PerturbationModel::gaussian(0.0))
        .with_eps_grid(vec![1e-2, 1e-6]);
    assert_eq!(
        one.install(|| mc_moments(&p, &cfg)).unwrap(),
        four.install(|| mc_moments(&p, &cfg)).unwrap()
    );
    assert_eq!(
        one.install(|| mc_tolerance_sweep(&p, &cfg)).unwrap(),
        four.install(|| mc_tolerance_sweep(&p, &cfg)).unwrap()
    );
}

#[test]
fn ehat_is_the_row_maximum() {
    let table = mc_error_table(&linear(), &mc(PerturbationModel::gaussian(0.0), 20)).unwrap();
    for k in 0..20 {
        let (n, max) =
            table.mse[k].iter().enumerate().fold(
                (0, 0.0),
                |best, (n, &v)| if v > best.1 { (n, v) } else { best },
            );
        assert_eq!(table.ehat[k], max);
        assert_eq!(table.ehat_argmax[k], n);
        assert_eq!(table.ehat_stderr[k], table.stderr[k][n]);
    }
    assert_eq!(table.ehat[20], 0.0);
}

#[test]
fn doubling_realizations_is_consistent() {
    let p = linear();
    let small = mc_error_table(&p, &mc(PerturbationModel::gaussian(5.0), 100)).unwrap();
    let large = mc_error_table(&p, &mc(PerturbationModel::gaussian(5.0), 200)).unwrap();
    for k in 2..=10 {
        let pooled = (small.ehat_stderr[k].powi(2) + large.ehat_stderr[k].powi(2)).sqrt();
        assert!(
            (small.ehat[k] - large.ehat[k]).abs() < 3.0 * pooled,
            "k={k}"
        );
    }
}

#[test]
fn stopping_indices() {
    let inc = [1.0, 1e-3, 1e-9, 0.0];
    assert_eq!(stopping_iteration(&inc, 10.0), 1);
    assert_eq!(stopping_iteration(&inc, 1e-2), 2);
    assert_eq!(stopping_iteration(&inc, 1e-8), 3);
    assert_eq!(stopping_iteration(&inc, 0.0), 4);
    assert_eq!(stopping_iteration(&[1.0, 1.0], 0.5), 2);
}

#[test]
fn sweep_shapes() {
    let p = make_scalar_problem();
    let grid = vec![1e6, 1e-2, 1e-5, 1e-8, 1e-11];
    for model in [
        PerturbationModel::None,
        PerturbationModel::gaussian(1.0),
        PerturbationModel::rule(3).unwrap(),
    ] {
        let sweep = mc_tolerance_sweep(&p, &mc(model, 50).with_eps_grid(grid.clone())).unwrap();
        assert_eq!(sweep.len(), grid.len());
        assert_eq!(sweep[0].mean_k, 1.0);
        assert_eq!(sweep[0].stderr, 0.0);
        for w in sweep.windows(2) {
            assert!(w[1].mean_k >= w[0].mean_k, "{model}");
        }
    }
    assert!(mc_tolerance_sweep(&p, &mc(PerturbationModel::None, 5)).is_err());
    let unsorted = mc(PerturbationModel::None, 5).with_eps_grid(vec![1e-3, 1e-2]);
    assert!(matches!(
        mc_tolerance_sweep(&p, &unsorted),
        Err(Error::InvalidConfig(_))
    ));
    assert!(mc_error_table(&p, &mc(PerturbationModel::None, 0)).is_err());
}

#[test]
fn moment_traces() {
    let p = linear();
    let none = mc_moments(&p, &mc(PerturbationModel::None, 4)).unwrap();
    assert!(none.max_second_moment.iter().all(|&v| v == 0.0));

    let r2 = mc_moments(&p, &mc(PerturbationModel::rule(2).unwrap(), 300)).unwrap();
    let r4 = mc_moments(&p, &mc(PerturbationModel::rule(4).unwrap(), 300)).unwrap();
    assert_eq!(r2.k, (1..20).collect::<Vec<_>>());
    assert_eq!(*r2.max_second_moment.last().unwrap(), 0.0);
    for i in 0..r2.k.len() {
        let pooled = (r2.stderr[i].powi(2) + r4.stderr[i].powi(2)).sqrt();
        let gap = (r2.max_second_moment[i] - r4.max_second_moment[i]).abs();
        assert!(gap <= 3.0 * pooled, "k={}", r2.k[i]);
    }

    let model = PerturbationModel::gaussian(5.0);
    let level = analytic_level(&p, &model).unwrap();
    let trace = mc_moments(&p, &mc(model, 300)).unwrap();
    for i in 0..10 {
        assert!((trace.max_second_moment[i] / level - 1.0).abs() < 0.2);
    }
    assert_eq!(
        analytic_level(&p, &PerturbationModel::rule(1).unwrap()),
        None
    );
}

#[test]
fn noise_free_errors_obey_the_superlinear_bound() {
    let p = linear();
    let table = mc_error_table(&p, &mc(PerturbationModel::None, 1)).unwrap();
    let c = constants_for(&p, &PerturbationModel::None, false)
        .unwrap()
        .constants;
    let curve = superlinear_curve(&c, 20, 20);
    let floor = roundoff_floor(&p).unwrap();
    let rows = compare_bounds(&table, std::slice::from_ref(&curve), 2..20, 3.0, floor);
    assert_eq!(rows.len(), 18);
    assert!(rows.iter().all(|r| r.dominated == Some(true)));
    let tight = compare_bounds(&table, &[curve], 2..3, 0.0, -1.0);
    assert_eq!(tight[0].dominated, Some(false));
}

#[derive(Debug)]
struct Blowup;

impl VectorField for Blowup {
    fn dim(&self) -> usize {
        1
    }
    fn eval(&self, u: &State) -> State {
        u * 1e300
    }
    fn exact_flow(&self, u: &State, _dt: f64) -> State {
        u.clone()
    }
}

#[test]
fn failures_name_the_realization() {
    let p = IvProblem::new(
        ProblemKind::Custom(Arc::new(Blowup)),
        State::from_element(1, 1.0),
        Mesh::new(0.0, 1.0, 4).unwrap(),
    )
    .unwrap();
    let cfg = McConfig::new(RunConfig::new(4).with_seed(77), 3);
    match mc_error_table(&p, &cfg) {
        Err(Error::Realization {
            realization: 0,
            master_seed: 77,
            ..
        }) => {}
        other => panic!("{other:?}"),
    }
    let skipping = McConfig {
        skip_failures: true,
        ..cfg
    };
    assert!(matches!(
        mc_error_table(&p, &skipping),
        Err(Error::InvalidConfig(_))
    ));
}

#[test]
fn csv_files() {
    let dir = tempfile::tempdir().unwrap();
    let p = make_scalar_problem();
    let table = mc_error_table(
        &p,
        &mc(PerturbationModel::gaussian(1.0), 4).with_eps_grid(vec![]),
    )
    .unwrap();
    let path = dir.path().join("error_table.csv");
    write_error_table(&path, &table).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "k,n,mse,stderr,R,raw_mse");
    assert_eq!(lines.len(), 1 + 21 * 21);
    let cells: Vec<&str> = lines[1 + 3 * 21 + 7].split(',').collect();
    assert_eq!(cells[0], "3");
    assert_eq!(cells[1], "7");
    assert_eq!(cells[2].parse::<f64>().unwrap(), table.mse[3][7]);
    assert_eq!(cells[4], "4");

    write_ehat(&dir.path().join("ehat.csv"), &table).unwrap();
    let ehat = std::fs::read_to_string(dir.path().join("ehat.csv")).unwrap();
    assert_eq!(ehat.lines().count(), 22);

    let before = text.clone();
    write_error_table(&path, &table).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), before);
    let leftovers = std::fs::read_dir(dir.path()).unwrap().count();
    assert_eq!(leftovers, 2);
}
