use newton_mr_core::problems::{
    analytic_suite, regularized_nlls, synthetic_dataset, ConvexQuadratic, QuarticSaddle, Rosenbrock,
};
use newton_mr_core::{solve_first_order, solve_second_order, FirstOrderConfig, Problem, SecondOrderConfig, SolveStatus, Vector};

#[test]
fn first_order_reaches_convex_quadratic_optimum() {
    let p = ConvexQuadratic::new(20, 1e3, 4);
    let res = solve_first_order(&p, &Vector::from_element(20, 1.0), &FirstOrderConfig::default()).unwrap();
    assert_eq!(res.status, SolveStatus::FirstOrderOptimal);
    assert!((res.f_final - p.known_optimum().unwrap().value).abs() < 1e-10);
}

#[test]
fn first_order_solves_rosenbrock() {
    let p = Rosenbrock::new(6);
    let res = solve_first_order(&p, &Vector::zeros(6), &FirstOrderConfig::default()).unwrap();
    assert_eq!(res.status, SolveStatus::FirstOrderOptimal);
    assert!(res.f_final < 1e-12, "{}", res.f_final);
    for w in res.trace.windows(2) {
        assert!(w[1].f <= w[0].f);
    }
}

#[test]
fn second_order_leaves_the_saddle() {
    let p = QuarticSaddle::new(3);
    let res = solve_second_order(&p, &Vector::zeros(3), &SecondOrderConfig::default()).unwrap();
    assert_eq!(res.status, SolveStatus::SecondOrderOptimal);
    assert!((res.f_final + 0.25).abs() < 1e-6, "{}", res.f_final);
}

#[test]
fn first_order_stops_at_the_saddle() {
    let p = QuarticSaddle::new(3);
    let res = solve_first_order(&p, &Vector::zeros(3), &FirstOrderConfig::default()).unwrap();
    assert_eq!(res.status, SolveStatus::FirstOrderOptimal);
    assert_eq!(res.f_final, 0.0);
}

#[test]
fn regularized_nlls_decreases_monotonically() {
    let p = regularized_nlls(synthetic_dataset(200, 10, 1).unwrap(), 1e-3).unwrap();
    let x0 = Vector::from_element(10, 0.1);
    let f0 = p.value(&x0);
    let res = solve_first_order(&p, &x0, &FirstOrderConfig::default()).unwrap();
    assert!(res.status.converged(), "{:?}", res.status);
    assert!(res.f_final < f0);
    assert!(res.grad_norm_final <= 1e-8);
}

#[test]
fn suite_is_deterministic() {
    for p in analytic_suite() {
        let x0 = Vector::from_element(p.dim(), 0.3);
        let a = solve_first_order(p.as_ref(), &x0, &FirstOrderConfig::default()).unwrap();
        let b = solve_first_order(p.as_ref(), &x0, &FirstOrderConfig::default()).unwrap();
        assert_eq!(a.x_final, b.x_final, "{}", p.name());
        assert_eq!(a.iterations, b.iterations);
    }
}
