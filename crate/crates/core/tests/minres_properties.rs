use proptest::prelude::*;

use newton_mr_core::minres::{run_minres, DirectionType, MinresConfig, Termination};
use newton_mr_core::problems::{planted_with_rotation, Rotation};
use newton_mr_core::Vector;

fn spectrum() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    proptest::collection::vec((0.2..5.0f64, any::<bool>(), 0.1..1.0f64), 1..8).prop_map(|v| {
        let eig = v.iter().enumerate().map(|(i, &(m, neg, _))| {
            let m = m + 1e-2 * i as f64;
            if neg { -m } else { m }
        });
        (eig.collect(), v.iter().map(|x| x.2).collect())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn residual_norms_never_increase((eig, w) in spectrum(), seed in 0u64..1000) {
        let inst = planted_with_rotation(&eig, &w, 12, seed, Rotation::Random).unwrap();
        let cfg = MinresConfig { disable_sol_test: true, disable_npc_test: true, ..MinresConfig::default() };
        let res = run_minres(&inst.matrix.to_operator(), &inst.g, &cfg).unwrap();
        let gn = inst.g.norm();
        for w in res.trace.windows(2) {
            prop_assert!(w[1].residual_norm <= w[0].residual_norm + 1e-12 * gn);
        }
    }

    #[test]
    fn npc_fires_exactly_on_indefinite_spectra((eig, w) in spectrum(), seed in 0u64..1000) {
        let inst = planted_with_rotation(&eig, &w, 12, seed, Rotation::Random).unwrap();
        let cfg = MinresConfig { disable_sol_test: true, ..MinresConfig::default() };
        let res = run_minres(&inst.matrix.to_operator(), &inst.g, &cfg).unwrap();
        let indefinite = eig.iter().any(|&l| l < 0.0);
        prop_assert_eq!(res.termination == Termination::NpcTest, indefinite);
        if indefinite {
            prop_assert_eq!(res.d_type, DirectionType::Npc);
            prop_assert!(res.residual_curvature <= 0.0);
        }
    }

    #[test]
    fn direction_type_and_exit_are_scale_invariant((eig, w) in spectrum(), seed in 0u64..1000, scale in 1e-3..1e3f64) {
        let inst = planted_with_rotation(&eig, &w, 12, seed, Rotation::Random).unwrap();
        let op = inst.matrix.to_operator();
        let cfg = MinresConfig::with_eta(0.1);
        let a = run_minres(&op, &inst.g, &cfg).unwrap();
        let b = run_minres(&op, &(&inst.g * scale), &cfg).unwrap();
        prop_assert_eq!((a.termination, a.iters, a.d_type), (b.termination, b.iters, b.d_type));
        let rel = (&a.direction * scale - &b.direction).norm() / b.direction.norm().max(f64::MIN_POSITIVE);
        prop_assert!(rel <= 1e-9, "relative mismatch {rel:e}");
    }
}

#[test]
fn positive_definite_system_is_solved_to_tolerance() {
    let eig: Vec<f64> = (1..=10).map(|i| i as f64).collect();
    let inst = planted_with_rotation(&eig, &vec![1.0; 10], 10, 3, Rotation::Random).unwrap();
    let cfg = MinresConfig::with_eta(1e-10);
    let res = run_minres(&inst.matrix.to_operator(), &inst.g, &cfg).unwrap();
    assert_eq!(res.termination, Termination::SolTest);
    assert_eq!(res.d_type, DirectionType::Sol);
    let r: Vector = inst.matrix.matrix() * &res.direction + &inst.g;
    assert!(r.norm() <= 1e-8 * inst.g.norm(), "{:e}", r.norm());
}

#[test]
fn zero_rhs_is_rejected() {
    let inst = planted_with_rotation(&[1.0, -1.0], &[1.0, 1.0], 4, 0, Rotation::Identity).unwrap();
    assert!(run_minres(&inst.matrix.to_operator(), &Vector::zeros(4), &MinresConfig::default()).is_err());
}
