mod common;

use proptest::prelude::*;
use scitower::linsys::{inverse_norm_stage, solve_stage};
use scitower::numerics::gram;
use scitower::spec::zoo;
use scitower::{OperatorSpec, RhsVector, C64};

fn ops() -> Vec<OperatorSpec> {
    vec![
        zoo::tridiagonal(3.0, 1.0),
        zoo::laurent_tridiagonal(3.0),
        zoo::diagonal("1 + 1/j"),
        zoo::unilateral_shift(),
        zoo::linsys_blocks(vec![2, 3, 4], None),
        zoo::diagonal("1/j"),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn delta_nondecreasing_in_n(which in 0usize..6, m in 1usize..16, extra in 0usize..10) {
        let op = ops()[which].build().unwrap();
        let a = inverse_norm_stage(&op, m, m + extra).unwrap();
        let b = inverse_norm_stage(&op, m, m + extra + 5).unwrap();
        prop_assert!(a.delta <= b.delta);
    }

    #[test]
    fn delta_brackets_gamma(which in 0usize..6, m in 1usize..16, extra in 0usize..10) {
        let op = ops()[which].build().unwrap();
        let n = m + extra;
        let r = inverse_norm_stage(&op, m, n).unwrap();
        let g = common::gamma(&op.finite_section(n, m).unwrap(), &op.adjoint_section(n, m).unwrap(), C64::new(0.0, 0.0));
        prop_assert!(g <= r.delta + 1e-9);
        prop_assert!(r.delta <= g + 1.0 / m as f64 + 1e-9);
        prop_assert!((r.inverse_norm * r.delta - 1.0).abs() < 1e-12);
    }

    /// More columns at a fixed row count never increase the residual.
    #[test]
    fn residual_nonincreasing_in_m(which in 0usize..2, m in 1usize..20, k in 1usize..6) {
        let op = ops()[which].build().unwrap();
        let b = RhsVector::parse("1/j^2").unwrap();
        let n = 40;
        let r1 = solve_stage(&op, &b, m, n).unwrap();
        let r2 = solve_stage(&op, &b, m + k, n).unwrap();
        prop_assert!(!r1.below_threshold && !r2.below_threshold);
        prop_assert!(r2.residual <= r1.residual + 1e-12);
    }

    /// Against normal equations solved by LU.
    #[test]
    fn solve_matches_oracle(which in 0usize..3, m in 1usize..15, extra in 0usize..10) {
        let op = ops()[which].build().unwrap();
        let n = m + extra;
        let b = RhsVector::parse("sin(j)").unwrap();
        let r = solve_stage(&op, &b, m, n).unwrap();
        let a = op.finite_section(n, m).unwrap();
        let rhs = a.adjoint().mul_vec(&b.truncate(n).unwrap()).unwrap();
        let x = common::solve(&gram(&a), &rhs);
        let d: Vec<C64> = x.iter().zip(&r.x).map(|(p, q)| p - q).collect();
        prop_assert!(common::l2(&d) <= 1e-10 * (1.0 + common::l2(&x)));
    }
}

#[test]
fn small_normal_matrix_gives_zero() {
    // 1/j: the m x m normal matrix has eigenvalue 1/m^2 < 1/m
    let op = zoo::diagonal("1/j").build().unwrap();
    let r = solve_stage(&op, &RhsVector::unit(1), 8, 8).unwrap();
    assert!(r.below_threshold);
    assert!(r.x.iter().all(|z| *z == C64::new(0.0, 0.0)));
    assert!(!r.stage.flags.is_empty());
}

#[test]
fn identity_solves_exactly() {
    let op = zoo::identity().build().unwrap();
    let r = solve_stage(&op, &RhsVector::parse("j").unwrap(), 5, 5).unwrap();
    assert_eq!(r.x, (1..=5).map(|j| C64::new(j as f64, 0.0)).collect::<Vec<_>>());
    assert_eq!(r.residual, 0.0);
}
