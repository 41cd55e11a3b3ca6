//! Property-based invariants over the algorithmic primitives.

use nalgebra::DVector;
use proptest::prelude::*;
use utr::accel::CubicBregman;
use utr::autr::{select_params, ParamDecision};
use utr::harness::shifted_geomean;
use utr::utr::{check_conditions, simple_strategy, ConditionOutcome, SimpleConstants};

proptest! {
    /// select_params is total: every finite input yields either a
    /// termination certificate or a step with sigma >= 0 and a strictly
    /// positive radius.
    #[test]
    fn select_params_total(
        lambda_min in -1e6f64..1e6,
        gnorm in 0.0f64..1e6,
        rho in 1e-6f64..1e3,
        eps in 1e-10f64..1.0,
    ) {
        match select_params(lambda_min, gnorm, rho, eps) {
            ParamDecision::Terminate => {
                prop_assert!(gnorm < eps);
                prop_assert!(lambda_min > -rho * eps.sqrt());
            }
            ParamDecision::Step { sigma, radius, .. } => {
                prop_assert!(sigma >= 0.0);
                prop_assert!(radius > 0.0);
            }
        }
    }

    /// The cubic Bregman divergence is nonnegative everywhere.
    #[test]
    fn bregman_divergence_nonnegative(
        a in prop::collection::vec(-10.0f64..10.0, 3),
        v in prop::collection::vec(-10.0f64..10.0, 3),
        x in prop::collection::vec(-10.0f64..10.0, 3),
    ) {
        let breg = CubicBregman::new(DVector::from_vec(a));
        let v = DVector::from_vec(v);
        let x = DVector::from_vec(x);
        prop_assert!(breg.divergence(&v, &x) >= -1e-9);
    }

    /// The fixed strategy identity M/2 r^2 + sigma r = 1/6 holds for
    /// every positive M.
    #[test]
    fn strategy_identity_everywhere(m in 1e-8f64..1e12) {
        let p = simple_strategy(m).unwrap();
        let lhs = m / 2.0 * p.r * p.r + p.sigma * p.r;
        prop_assert!((lhs - 1.0 / 6.0).abs() <= 1e-12);
    }

    /// check_conditions never accepts an increase, and an accepted
    /// outcome always implies monotonicity.
    #[test]
    fn conditions_never_accept_increase(
        f0 in -1e6f64..1e6,
        df in -1e3f64..1e3,
        g0 in 0.0f64..1e3,
        g1 in 0.0f64..1e3,
        m in 1e-6f64..1e6,
    ) {
        let c = SimpleConstants::new(m).unwrap();
        let f1 = f0 + df;
        let out = check_conditions(f0, f1, g0, g1, &c, false);
        if df > 0.0 {
            prop_assert_eq!(out, ConditionOutcome::Reject);
        }
        if matches!(out, ConditionOutcome::FDecrease | ConditionOutcome::GContract) {
            prop_assert!(f1 <= f0);
        }
    }

    /// Replacing a value in the aggregate by the (larger) sentinel never
    /// decreases the shifted geometric mean.
    #[test]
    fn sentinel_monotonicity(
        mut values in prop::collection::vec(0.0f64..1e4, 1..20),
        idx in any::<prop::sample::Index>(),
    ) {
        let before = shifted_geomean(&values, 1.0);
        let i = idx.index(values.len());
        values[i] = 20_000.0;
        let after = shifted_geomean(&values, 1.0);
        prop_assert!(after >= before - 1e-9 * before.abs().max(1.0));
    }
}
