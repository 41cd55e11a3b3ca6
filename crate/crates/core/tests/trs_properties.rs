//! Property suite for the TRS solvers against an independent
//! brute-force oracle.

mod common;

use common::{
    brute_force_trs, hard_case_instance, kkt_scale, random_instance, seeded_rng,
};
use nalgebra::{DMatrix, DVector};
use std::sync::Arc;
use utr::trs::{
    kkt_residual, solve_trs_direct, solve_trs_krylov, KrylovInexactness, SymmetricOp,
    TrsConfig, TrsProblem,
};

fn check_against_oracle(p: &TrsProblem, cfg: &TrsConfig, tag: &str) {
    let sol = solve_trs_direct(p, cfg).unwrap_or_else(|e| panic!("{tag}: solver failed: {e}"));
    let scale = kkt_scale(p);
    let res = kkt_residual(p, &sol);
    assert!(
        res.max() <= 1e-8 * scale,
        "{tag}: KKT residual {res:?} exceeds 1e-8 * {scale}"
    );
    let oracle = brute_force_trs(p);
    let m_impl = -sol.model_decrease;
    let tol = 1e-6 * oracle.model_value.abs().max(1.0);
    assert!(
        (m_impl - oracle.model_value).abs() <= tol,
        "{tag}: model value {m_impl} vs oracle {} (tol {tol})",
        oracle.model_value
    );
    // Complementarity structure: a positive multiplier means an active
    // constraint and vice versa (up to scaled roundoff).
    if sol.multiplier > 1e-8 * scale {
        assert!(sol.on_boundary, "{tag}: lambda > 0 but interior");
        assert!(
            (sol.step.norm() - p.radius).abs() <= 1e-6 * p.radius,
            "{tag}: boundary step off the sphere"
        );
    }
    if !sol.on_boundary {
        assert_eq!(sol.multiplier, 0.0, "{tag}: interior step with lambda != 0");
    }
}

#[test]
fn thousand_random_instances_certified() {
    let mut rng = seeded_rng(2024);
    let cfg = TrsConfig::default();
    // 950 random draws + 50 constructed hard cases = 1000 instances.
    for case in 0..950 {
        let p = random_instance(&mut rng, case);
        check_against_oracle(&p, &cfg, &format!("random[{case}]"));
    }
    for case in 0..50 {
        let p = hard_case_instance(&mut rng, case);
        let sol = solve_trs_direct(&p, &cfg).unwrap();
        assert!(sol.hard_case, "hard[{case}]: hard case not flagged");
        check_against_oracle(&p, &cfg, &format!("hard[{case}]"));
    }
}

#[test]
fn scaling_invariance_sigma_zero() {
    // With sigma = 0, scaling (H, g) by c > 0 scales the model but not
    // the minimizer; the multiplier scales by c.
    let mut rng = seeded_rng(7);
    let cfg = TrsConfig::default();
    let c = 7.3;
    for case in 0..30 {
        let mut p = random_instance(&mut rng, case);
        p.sigma = 0.0;
        let base = solve_trs_direct(&p, &cfg).unwrap();

        let scaled_p = TrsProblem {
            hessian: SymmetricOp::Dense(p.hessian.as_dense().unwrap() * c),
            gradient: &p.gradient * c,
            sigma: 0.0,
            radius: p.radius,
        };
        let scaled = solve_trs_direct(&scaled_p, &cfg).unwrap();
        let dtol = 1e-6 * base.step.norm().max(1.0);
        assert!(
            (&scaled.step - &base.step).norm() <= dtol,
            "case {case}: steps differ by {}",
            (&scaled.step - &base.step).norm()
        );
        assert!(
            (scaled.multiplier - c * base.multiplier).abs()
                <= 1e-6 * (c * base.multiplier).max(1.0),
            "case {case}: multiplier {} vs {}",
            scaled.multiplier,
            c * base.multiplier
        );
    }
}

#[test]
fn krylov_at_full_cap_matches_direct() {
    let mut rng = seeded_rng(99);
    let cfg = TrsConfig {
        krylov_inexactness: KrylovInexactness::Absolute(0.0),
        ..TrsConfig::default()
    };
    for case in 0..50 {
        let p = random_instance(&mut rng, case);
        if p.gradient.norm() == 0.0 {
            continue;
        }
        let direct = solve_trs_direct(&p, &TrsConfig::default()).unwrap();

        let h = p.hessian.as_dense().unwrap().clone();
        let op_p = TrsProblem {
            hessian: SymmetricOp::Operator {
                dim: h.nrows(),
                apply: Arc::new(move |v: &DVector<f64>| &h * v),
            },
            gradient: p.gradient.clone(),
            sigma: p.sigma,
            radius: p.radius,
        };
        let krylov = solve_trs_krylov(&op_p, &cfg).unwrap();
        let tol = 1e-8 * direct.model_decrease.abs().max(1.0);
        assert!(
            (krylov.model_decrease - direct.model_decrease).abs() <= tol,
            "case {case}: {} vs {}",
            krylov.model_decrease,
            direct.model_decrease
        );
    }
}

#[test]
fn oracle_agrees_on_textbook_example() {
    // Sanity-check the oracle itself on a closed form: H = I, g = e1,
    // Delta = 0.5 has lambda = 1 and model value -3/8 + 1/16 = ... check
    // numerically: d = (-0.5, 0), m(d) = -0.5 + 0.125 = -0.375.
    let p = TrsProblem {
        hessian: SymmetricOp::Dense(DMatrix::identity(2, 2)),
        gradient: DVector::from_vec(vec![1.0, 0.0]),
        sigma: 0.0,
        radius: 0.5,
    };
    let oracle = brute_force_trs(&p);
    assert!((oracle.multiplier - 1.0).abs() <= 1e-9);
    assert!((oracle.model_value - (-0.375)).abs() <= 1e-10);
    assert!(!oracle.hard_case);
}
