//! Property tests over randomly generated inputs.

use cheblcu::amplify::{default_rounds, grover_angle};
use cheblcu::catalog::FunctionSpec;
use cheblcu::cheb::{eval_t, monomial_cheb_coeffs, rescaled_cheb_coeffs, taylor_to_cheb, TaylorSpec};
use cheblcu::hermitian::MatrixFile;
use cheblcu::lcu::{run_lcu_operator, two_unitary_lcu, LcuPlan};
use cheblcu::random;
use cheblcu::walk::{WalkBlock, WalkOperator};
use cheblcu::{Complex64, Error};
use proptest::prelude::*;

fn shape() -> impl Strategy<Value = (usize, usize)> {
    prop::sample::select(vec![(2, 1), (2, 2), (3, 2), (4, 1), (4, 2), (4, 3), (5, 3), (6, 2)])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn monomial_coefficients_form_a_distribution(k in 0usize..=128) {
        let c = monomial_cheb_coeffs(k).unwrap();
        prop_assert_eq!(c.len(), k + 1);
        let sum: f64 = c.iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-12);
        for (j, &v) in c.iter().enumerate() {
            if (k - j) % 2 == 1 {
                prop_assert_eq!(v, 0.0);
            } else {
                prop_assert!(v > 0.0);
            }
        }
    }

    #[test]
    fn chebyshev_composition(m in 0usize..8, n in 0usize..8, x in -1.0f64..=1.0) {
        let inner = eval_t(n, x).unwrap();
        let lhs = eval_t(m, inner).unwrap();
        let rhs = eval_t(m * n, x).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-11);
    }

    #[test]
    fn taylor_and_chebyshev_forms_agree(
        alpha in prop::collection::vec(-2.0f64..2.0, 1..16),
        d in 1usize..5,
        lambda in 0.1f64..=1.0,
        t in -1.0f64..=1.0,
    ) {
        let spec = TaylorSpec::new(alpha, 1.0, lambda).unwrap();
        let beta = taylor_to_cheb(&spec).unwrap();
        prop_assert!((beta.eval(t).unwrap() - spec.eval(t)).abs() <= 1e-13 * (1.0 + spec.weight()));
        let gamma = rescaled_cheb_coeffs(&spec, d).unwrap();
        let x = t * lambda;
        prop_assert!((gamma.eval(x).unwrap() - spec.eval(x)).abs() <= 1e-13 * (1.0 + gamma.weight()));
    }

    #[test]
    fn walk_encodes_the_scaled_matrix((n, d) in shape(), seed in any::<u64>()) {
        let a = random::hermitian(&mut random::seeded(seed), n, d).unwrap();
        let walk = WalkOperator::new(&a).unwrap();
        let h = a.to_dense() / Complex64::new(d as f64, 0.0);
        prop_assert!((walk.chebyshev_block(1) - &h).norm() < 1e-12);
        let block = WalkBlock::new(&a).unwrap();
        for steps in [2usize, 5, 9] {
            let top = block.power(steps).view((0, 0), (n, n)).into_owned();
            prop_assert!((walk.chebyshev_block(steps) - top).norm() < 1e-10);
        }
    }

    #[test]
    fn polynomial_plans_are_exact(
        coeffs in prop::collection::vec(-1.0f64..1.0, 1..6),
        (n, d) in shape(),
        seed in any::<u64>(),
    ) {
        prop_assume!(coeffs.iter().any(|&c| c.abs() > 1e-3));
        let mut rng = random::seeded(seed);
        let a = random::hermitian(&mut rng, n, d).unwrap();
        let psi = random::state(&mut rng, n);
        let spec = FunctionSpec::Polynomial(coeffs);
        let spectral = a.spectral().unwrap();
        let target = spectral.apply_to(|x| spec.eval(x), &psi).norm();
        prop_assume!(target > 1e-3);
        let plan = spec.plan(None, spectral.norm_bound(), d).unwrap();
        let out = run_lcu_operator(&a, &plan, &psi, |x| spec.eval(x)).unwrap();
        prop_assert!(out.distance < 1e-9, "distance {}", out.distance);
        prop_assert!(out.probability_bound_holds());
        prop_assert!((out.success_probability - out.spectral_probability).abs() < 1e-12);
    }

    #[test]
    fn exp_output_within_normalized_bound((n, d) in shape(), seed in any::<u64>()) {
        let mut rng = random::seeded(seed);
        let a = random::hermitian(&mut rng, n, d).unwrap();
        let psi = random::state(&mut rng, n);
        let lambda = a.spectral().unwrap().norm_bound();
        let plan = FunctionSpec::Exp.plan(Some(1e-4), lambda, d).unwrap();
        let out = run_lcu_operator(&a, &plan, &psi, f64::exp).unwrap();
        prop_assert!(out.error_bound_holds());
        prop_assert!(out.probability_bound_holds());
        prop_assert!(out.operator_error <= 1e-4);
    }

    #[test]
    fn two_unitary_failure_is_bounded(
        n in 1usize..5,
        a0 in 0.01f64..10.0,
        a1 in 0.01f64..10.0,
        seed in any::<u64>(),
    ) {
        let mut rng = random::seeded(seed);
        let u0 = random::unitary(&mut rng, n);
        let u1 = random::unitary(&mut rng, n);
        let psi = random::state(&mut rng, n);
        match two_unitary_lcu(a0, &u0, a1, &u1, &psi) {
            Ok(out) => {
                prop_assert!(out.p_fail <= out.p_fail_bound + 1e-15);
                prop_assert!((out.p_fail + out.p_success - 1.0).abs() < 1e-12);
                prop_assert!((out.register.norm() - 1.0).abs() < 1e-12);
            }
            Err(Error::Degenerate { .. }) => {}
            Err(e) => prop_assert!(false, "{e}"),
        }
    }

    #[test]
    fn rounds_maximize_without_overshoot(p in 1e-6f64..=1.0) {
        let theta = grover_angle(p).unwrap();
        let r = default_rounds(p).unwrap();
        let angle = (2 * r + 1) as f64 * theta;
        prop_assert!(angle <= std::f64::consts::FRAC_PI_2 + 1e-9);
        prop_assert!(angle + 2.0 * theta > std::f64::consts::FRAC_PI_2 - 1e-9);
    }

    #[test]
    fn matrix_files_round_trip((n, d) in shape(), seed in any::<u64>()) {
        let a = random::hermitian(&mut random::seeded(seed), n, d).unwrap();
        let file = MatrixFile::from_matrix(&a);
        let text = serde_json::to_string(&file).unwrap();
        let back = MatrixFile::parse(&text).unwrap().to_matrix().unwrap();
        prop_assert_eq!(back, a);
    }

    #[test]
    fn function_names_round_trip(coeffs in prop::collection::vec(-5.0f64..5.0, 1..6), k in 0usize..20) {
        prop_assume!(coeffs.iter().any(|&c| c != 0.0));
        for spec in [FunctionSpec::Polynomial(coeffs.clone()), FunctionSpec::Monomial(k)] {
            let back: FunctionSpec = spec.to_string().parse().unwrap();
            prop_assert_eq!(back, spec);
        }
    }
}

#[test]
fn plan_weight_matches_coefficient_sum_for_nonnegative_series() {
    // With α ≥ 0 all rescaled coefficients are nonnegative, so γ = Σ (Λd)^i α_i.
    let alpha = vec![0.5, 0.0, 0.25, 0.125, 1.0];
    let spec = TaylorSpec::new(alpha.clone(), 1.0, 0.8).unwrap();
    let plan = LcuPlan::from_taylor(&spec, 3).unwrap();
    let expected: f64 = alpha.iter().enumerate().map(|(i, a)| 2.4f64.powi(i as i32) * a).sum();
    assert!((plan.weight() - expected).abs() < 1e-12 * expected);
}
