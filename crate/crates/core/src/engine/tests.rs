use std::sync::Arc;

use super::*;
use crate::perturbations::NoiseFamily;
use crate::problems::{
    make_linear_problem, make_scalar_problem, serial_fine_solve, LinearSystem, Mesh, ProblemKind,
    Regime, VectorField,
};

fn scalar() -> IvProblem {
    make_scalar_problem()
}

fn linear() -> IvProblem {
    make_linear_problem(10, Regime::Contractive, 7, 0.0, 2.0, 20).unwrap()
}

fn all_models() -> Vec<PerturbationModel> {
    let mut models = vec![
        PerturbationModel::None,
        PerturbationModel::gaussian(0.0),
        PerturbationModel::gaussian(5.0),
        PerturbationModel::uniform(1.0),
    ];
    models.extend((1..=4).map(|r| PerturbationModel::rule(r).unwrap()));
    models
}

fn rel_err(a: &State, b: &State) -> f64 {
    norm_inf(&(a - b)) / (1.0 + norm_inf(b))
}

#[test]
fn pc_update_examples() {
    let s = |x: f64| State::from_element(1, x);
    assert_eq!(pc_update(&s(1.0), &s(2.0), &s(3.0), Some(&s(0.0))), s(0.0));
    assert_eq!(pc_update(&s(0.0), &s(0.0), &s(0.0), Some(&s(5.0))), s(5.0));
    let f = State::from_vec(vec![0.3, -1.7]);
    let g = State::from_vec(vec![2.1, 4.4]);
    let fixed = pc_update(&g, &f, &g, None);
    for (a, b) in fixed.iter().zip(f.iter()) {
        assert!((a - b).abs() <= 4.0 * f64::EPSILON * g.amax());
    }
}

#[test]
fn infinite_tolerance_stops_after_one_iteration() {
    for p in [scalar(), linear()] {
        let cfg = RunConfig::new(20).with_eps(f64::INFINITY);
        let h = parareal_solve(&p, &cfg).unwrap();
        assert_eq!(h.converged_k(), Some(1));
        assert_eq!(h.iterations(), 1);
        let h = sparareal_solve(
            &p,
            &cfg.with_perturbation(PerturbationModel::rule(2).unwrap()),
        )
        .unwrap();
        assert_eq!(h.converged_k(), Some(1));
    }
}

#[test]
fn n_iterations_reproduce_the_fine_solution() {
    for p in [scalar(), linear()] {
        let reference = serial_fine_solve(&p).unwrap();
        let cfg = RunConfig::new(20).with_eps(0.0).to_k_max();
        let h = parareal_solve(&p, &cfg).unwrap();
        assert_eq!(h.iterations(), 20);
        for (u, r) in h.row(20).iter().zip(&reference) {
            assert!(rel_err(u, r) <= 1e-10);
        }
    }
}

#[test]
fn zero_field_is_fixed_from_the_start() {
    let sys = LinearSystem::diagonal(&[0.0; 3]);
    let u0 = State::from_vec(vec![1.0, -2.0, 0.5]);
    let p = IvProblem::new(
        ProblemKind::Linear(sys),
        u0.clone(),
        Mesh::new(0.0, 1.0, 8).unwrap(),
    )
    .unwrap();
    let h = parareal_solve(&p, &RunConfig::new(8).with_eps(1e-12)).unwrap();
    assert_eq!(h.converged_k(), Some(1));
    assert!(h.states().iter().flatten().all(|u| *u == u0));
}

#[test]
fn unperturbed_stochastic_run_is_parareal() {
    for p in [scalar(), linear()] {
        let cfg = RunConfig::new(20).with_eps(1e-10).with_seed(99);
        assert_eq!(
            parareal_solve(&p, &cfg).unwrap(),
            sparareal_solve(&p, &cfg).unwrap()
        );
        let cfg = cfg.with_eps(0.0);
        assert_eq!(
            parareal_solve(&p, &cfg).unwrap(),
            sparareal_solve(&p, &cfg).unwrap()
        );
    }
}

#[test]
fn tiny_noise_is_practically_deterministic() {
    for p in [scalar(), linear()] {
        let base = RunConfig::new(20).with_eps(0.0).to_k_max();
        let det = parareal_solve(&p, &base).unwrap();
        let noisy = sparareal_solve(
            &p,
            &base.with_perturbation(PerturbationModel::gaussian(25.0)),
        )
        .unwrap();
        for k in 0..=20 {
            for n in 0..=20 {
                assert!(norm_inf(&(det.state(k, n) - noisy.state(k, n))) <= 1e-10);
            }
        }
    }
}

#[test]
fn exactness_ladder_for_every_model() {
    for p in [scalar(), linear()] {
        let reference = serial_fine_solve(&p).unwrap();
        for model in all_models() {
            for seed in 0..3 {
                let cfg = RunConfig::new(20)
                    .with_eps(0.0)
                    .with_perturbation(model)
                    .with_seed(seed);
                let h = sparareal_solve(&p, &cfg).unwrap();
                for k in 0..=h.iterations() {
                    assert_eq!(h.state(k, 0), p.u0());
                    for n in 0..=k.min(20) {
                        assert!(
                            rel_err(h.state(k, n), &reference[n]) <= 1e-10,
                            "{model} k={k} n={n}"
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn replay_is_independent_of_parallelism() {
    let p = linear();
    for model in all_models() {
        let cfg = RunConfig::new(20)
            .with_perturbation(model)
            .with_seed(5)
            .with_realization(3)
            .recording_xi()
            .to_k_max();
        let a = sparareal_solve(&p, &cfg).unwrap();
        let b = sparareal_solve(&p, &cfg.clone().serial()).unwrap();
        let c = sparareal_solve(&p, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
    }
}

#[test]
fn realizations_differ() {
    let p = linear();
    let cfg = RunConfig::new(20)
        .with_perturbation(PerturbationModel::gaussian(0.0))
        .to_k_max();
    let a = sparareal_solve(&p, &cfg).unwrap();
    let b = sparareal_solve(&p, &cfg.clone().with_realization(1)).unwrap();
    assert_eq!(a.row(1), b.row(1));
    assert_ne!(a.row(2), b.row(2));
}

#[test]
fn convergence_index() {
    let p = linear();
    let h = parareal_solve(&p, &RunConfig::new(20).with_eps(0.0).with_k_max(4)).unwrap();
    let mut same = h.clone();
    same.states[2] = same.states[1].clone();
    assert_eq!(check_convergence(&same, 2, 1e-30), 20);

    let mut broken = h.clone();
    let bump = State::from_element(p.dim(), 1.0);
    broken.states[2] = broken.states[1].clone();
    broken.states[2][3] += &bump;
    broken.states[2][7] += &bump;
    assert_eq!(check_convergence(&broken, 2, 0.5), 2);
}

#[test]
fn zero_tolerance_index_reaches_previous_exact_node() {
    for p in [scalar(), linear()] {
        for model in all_models() {
            let cfg = RunConfig::new(20).with_eps(0.0).with_perturbation(model);
            let h = sparareal_solve(&p, &cfg).unwrap();
            for k in 1..=h.iterations() {
                assert!(check_convergence(&h, k, 0.0) >= k - 1);
            }
        }
    }
}

#[test]
fn zero_tolerance_stops_only_on_a_repeated_iterate() {
    for p in [scalar(), linear()] {
        let reference = serial_fine_solve(&p).unwrap();
        let h = parareal_solve(&p, &RunConfig::new(20).with_eps(0.0)).unwrap();
        match h.converged_k() {
            Some(k) => {
                assert_eq!(h.row(k), h.row(k - 1));
                assert_eq!(h.iterations(), k);
            }
            None => assert_eq!(h.iterations(), 20),
        }
        let last = h.row(h.iterations());
        for (u, r) in last.iter().zip(&reference) {
            assert!(rel_err(u, r) <= 1e-10);
        }
    }
}

#[test]
fn increments_drive_the_stopping_rule() {
    let p = scalar();
    let h = parareal_solve(&p, &RunConfig::new(20).with_eps(1e-8)).unwrap();
    let k = h.converged_k().unwrap();
    assert!(h.increments()[k - 1] < 1e-8);
    assert!(h.increments()[..k - 1].iter().all(|&d| d >= 1e-8));
    assert_eq!(check_convergence(&h, k, 1e-8), 20);
    let full = parareal_solve(&p, &RunConfig::new(20).with_eps(1e-8).to_k_max()).unwrap();
    assert_eq!(full.iterations(), 20);
    assert_eq!(full.converged_k(), Some(k));
    assert_eq!(&full.states()[..=k], h.states());
}

#[test]
fn recorded_moments() {
    let p = linear();
    let base = RunConfig::new(20).recording_xi().to_k_max();
    let none = sparareal_solve(&p, &base).unwrap();
    assert!(none.xi_sq().unwrap().iter().flatten().all(|&v| v == 0.0));

    let gauss = sparareal_solve(
        &p,
        &base
            .clone()
            .with_perturbation(PerturbationModel::gaussian(0.0)),
    )
    .unwrap();
    let xi = gauss.xi_sq().unwrap();
    assert_eq!(xi.len(), 20);
    for (k, row) in xi.iter().enumerate() {
        for (n, v) in row.iter().enumerate() {
            assert_eq!(*v == 0.0, k == 0 || n <= k, "k={k} n={n}");
        }
    }

    let uniform = PerturbationModel::StateIndependent {
        family: NoiseFamily::Uniform,
        q: 0.0,
    };
    let h = sparareal_solve(&p, &base.clone().with_perturbation(uniform)).unwrap();
    let bound = 3.0 * p.dt();
    assert!(h.xi_sq().unwrap().iter().flatten().all(|&v| v <= bound));

    let rule = sparareal_solve(
        &p,
        &base.with_perturbation(PerturbationModel::rule(4).unwrap()),
    )
    .unwrap();
    assert!(rule.xi_sq().unwrap()[1][5] > 0.0);
    assert_eq!(rule.xi_sq().unwrap()[3][3], 0.0);
}

#[derive(Debug)]
struct Explosive;

impl VectorField for Explosive {
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
fn non_finite_states_are_located() {
    let p = IvProblem::new(
        ProblemKind::Custom(Arc::new(Explosive)),
        State::from_element(1, 1.0),
        Mesh::new(0.0, 1.0, 4).unwrap(),
    )
    .unwrap();
    let err = parareal_solve(&p, &RunConfig::new(4)).unwrap_err();
    assert!(
        matches!(err, Error::NonFiniteState { k: 0, n: 2 }),
        "{err:?}"
    );
    let err = sparareal_solve(&p, &RunConfig::new(4)).unwrap_err();
    assert!(
        matches!(err, Error::NonFiniteState { k: 0, n: 2 }),
        "{err:?}"
    );
}

#[test]
fn invalid_configs_are_rejected() {
    let p = scalar();
    for cfg in [
        RunConfig::new(20).with_k_max(0),
        RunConfig::new(20).with_k_max(21),
        RunConfig::new(20).with_eps(-1.0),
        RunConfig::new(20).with_eps(f64::NAN),
        RunConfig::new(20).with_perturbation(PerturbationModel::gaussian(f64::INFINITY)),
    ] {
        assert!(matches!(
            sparareal_solve(&p, &cfg),
            Err(Error::InvalidConfig(_))
        ));
    }
}
