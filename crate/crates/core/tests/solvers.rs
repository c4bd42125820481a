use ksk::bench::generate_problem;
use ksk::matrix::{matvec, DenseMatrix, Vector};
use ksk::solvers::kernels::residual;
use ksk::{solve, KskError, Method, SolverConfig, Termination};

fn v(x: &[f64]) -> Vector {
    Vector::new(x.to_vec()).unwrap()
}

#[test]
fn mwrk_on_identity_takes_one_step_per_coordinate() {
    let a = DenseMatrix::identity(4);
    let b = v(&[4.0, 3.0, 2.0, 1.0]);
    let cfg = SolverConfig::new(Method::Mwrk).with_tol(1e-12);
    let rep = solve(&a, &b, &Vector::zeros(4), Some(&b), &cfg).unwrap();
    assert_eq!(rep.iterations, 4);
    assert_eq!(rep.termination, Termination::Converged);
    assert_eq!(rep.x.as_slice(), b.as_slice());
    assert_eq!(rep.final_res, 0.0);
}

#[test]
fn starting_at_the_solution_needs_no_steps() {
    let p = generate_problem(200, 5, 1).unwrap();
    for method in Method::ALL {
        let rep = solve(&p.a, &p.b, &p.x_star, Some(&p.x_star), &SolverConfig::new(method)).unwrap();
        assert_eq!(rep.iterations, 0, "{method}");
        assert_eq!(rep.termination, Termination::Converged);
    }
}

#[test]
fn same_seed_same_iterates() {
    let p = generate_problem(800, 10, 2).unwrap();
    for method in Method::ALL {
        let cfg = SolverConfig::new(method).with_seed(17);
        let r1 = solve(&p.a, &p.b, &Vector::zeros(10), Some(&p.x_star), &cfg).unwrap();
        let r2 = solve(&p.a, &p.b, &Vector::zeros(10), Some(&p.x_star), &cfg).unwrap();
        assert_eq!(r1.iterations, r2.iterations);
        assert_eq!(r1.x.as_slice(), r2.x.as_slice());
        assert_eq!(r1.res_trace, r2.res_trace);
    }
}

#[test]
fn scaling_rows_does_not_change_mwrk_path() {
    let p = generate_problem(300, 6, 3).unwrap();
    let mut a2 = p.a.clone();
    let mut b2 = p.b.clone();
    for i in (0..300).step_by(7) {
        a2.row_mut(i).iter_mut().for_each(|x| *x *= 4.0);
        b2[i] *= 4.0;
    }
    let cfg = SolverConfig::new(Method::Mwrk).with_max_iters(30).with_tol(1e-300);
    let r1 = solve(&p.a, &p.b, &Vector::zeros(6), Some(&p.x_star), &cfg).unwrap();
    let r2 = solve(&a2, &b2, &Vector::zeros(6), Some(&p.x_star), &cfg).unwrap();
    for (x, y) in r1.x.iter().zip(r2.x.iter()) {
        assert!((x - y).abs() <= 1e-10 * (1.0 + x.abs()));
    }
}

#[test]
fn csk_solution_solves_original_system() {
    let p = generate_problem(3000, 20, 4).unwrap();
    let tol = 1e-8;
    let cfg = SolverConfig::new(Method::Csk).with_tol(tol).with_seed(5);
    let rep = solve(&p.a, &p.b, &Vector::zeros(20), Some(&p.x_star), &cfg).unwrap();
    assert_eq!(rep.termination, Termination::Converged);
    let r = residual(&p.a, &p.b, &rep.x).unwrap();
    assert!(r.norm() / p.b.norm() <= 10.0 * tol.sqrt());
}

#[test]
fn greedy_traces_never_increase() {
    let p = generate_problem(1000, 15, 6).unwrap();
    for method in [Method::Mwrk, Method::Csk] {
        let rep = solve(&p.a, &p.b, &Vector::zeros(15), Some(&p.x_star), &SolverConfig::new(method)).unwrap();
        for w in rep.res_trace.windows(2) {
            assert!(w[1].1 <= w[0].1 * (1.0 + 1e-12), "{method}: {:?}", w);
        }
        assert_eq!(rep.res_trace.last().unwrap().0, rep.iterations);
        assert_eq!(rep.res_trace.last().unwrap().1, rep.final_res);
    }
}

#[test]
fn all_methods_converge_without_known_solution() {
    let p = generate_problem(1500, 10, 8).unwrap();
    for method in Method::ALL {
        let rep = solve(&p.a, &p.b, &Vector::zeros(10), None, &SolverConfig::new(method).with_tol(1e-10)).unwrap();
        assert_eq!(rep.termination, Termination::Converged, "{method}");
        assert!(rep.final_res <= 1e-10);
    }
}

#[test]
fn iteration_cap_is_reported() {
    let p = generate_problem(1000, 20, 9).unwrap();
    let cfg = SolverConfig::new(Method::Rk).with_max_iters(5);
    let rep = solve(&p.a, &p.b, &Vector::zeros(20), Some(&p.x_star), &cfg).unwrap();
    assert_eq!(rep.termination, Termination::MaxIters);
    assert_eq!(rep.iterations, 5);
}

#[test]
fn inconsistent_zero_row_stagnates() {
    let a = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0], vec![0.0, 1.0]]).unwrap();
    let b = v(&[1.0, 5.0, 2.0]);
    let rep = solve(&a, &b, &Vector::zeros(2), None, &SolverConfig::new(Method::Mwrk)).unwrap();
    assert_eq!(rep.termination, Termination::Stagnated);
}

#[test]
fn consistent_zero_rows_are_skipped() {
    let a = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0], vec![0.0, 1.0]]).unwrap();
    let b = v(&[1.0, 0.0, 2.0]);
    let x_star = v(&[1.0, 2.0]);
    for method in Method::ALL {
        if method == Method::Csk {
            continue;
        }
        let rep = solve(&a, &b, &Vector::zeros(2), Some(&x_star), &SolverConfig::new(method)).unwrap();
        assert_eq!(rep.termination, Termination::Converged, "{method}");
    }
}

#[test]
fn config_errors() {
    let a = DenseMatrix::identity(3);
    let b = v(&[1.0, 2.0, 3.0]);
    let x0 = Vector::zeros(3);
    let err = solve(&a, &b, &x0, None, &SolverConfig::new(Method::Mwrk).with_d(2)).unwrap_err();
    assert!(err.to_string().contains("d applies to csk only"));
    assert!(solve(&a, &b, &x0, None, &SolverConfig::new(Method::Csk).with_d(3)).is_err());
    assert!(solve(&a, &v(&[1.0, 2.0]), &x0, None, &SolverConfig::new(Method::Mwrk)).is_err());
    let zero = DenseMatrix::zeros(3, 3);
    assert!(matches!(solve(&zero, &b, &x0, None, &SolverConfig::new(Method::Mwrk)), Err(KskError::AllRowsMasked)));
}

#[test]
fn report_json_has_expected_fields() {
    let p = generate_problem(100, 4, 10).unwrap();
    let cfg = SolverConfig::new(Method::Csk).with_d(16).with_measure_epsilon(true);
    let rep = solve(&p.a, &p.b, &Vector::zeros(4), Some(&p.x_star), &cfg).unwrap();
    let json: serde_json::Value = serde_json::from_str(&rep.to_json().unwrap()).unwrap();
    for key in ["iterations", "final_res", "res_trace", "wall_time_s", "termination", "method", "epsilon_exact"] {
        assert!(json.get(key).is_some(), "missing {key}");
    }
    assert_eq!(json["method"], "csk");
    assert!(json["epsilon_exact"].as_f64().unwrap() >= 0.0);
    assert!(matvec(&p.a, &p.x_star).unwrap().len() == 100);
}
