//! Dense trust-region subproblem solver.
//!
//! Works on the shifted matrix `Ht = H + sigma * ||g||^(1/2) * I`. An
//! interior Newton step is returned when `Ht` is positive definite and
//! the step fits inside the ball; otherwise the boundary multiplier is
//! located by safeguarded Newton iterations on the reciprocal secular
//! equation `1/||d(lambda)|| = 1/Delta`, with bisection fallback on the
//! bracket `[max(0, -lambda_min(Ht)), ||g||/Delta + ||Ht||]`. In the hard
//! case the step is completed to the boundary along the leftmost
//! eigenvector, sign chosen by model value.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::trs::eig::smallest_eigpair;
use crate::trs::{SymmetricOp, TrsConfig, TrsProblem, TrsSolution};

pub fn solve_trs_direct(p: &TrsProblem, cfg: &TrsConfig) -> Result<TrsSolution> {
    p.validate()?;
    let h = p
        .hessian
        .as_dense()
        .ok_or_else(|| Error::Contract("direct solver requires a dense Hessian".into()))?;
    check_symmetry(h)?;

    let n = h.nrows();
    let g = &p.gradient;
    let delta = p.radius;
    let shift = p.shift();

    let mut ht = h.clone();
    for i in 0..n {
        ht[(i, i)] += shift;
    }
    let ht_scale = inf_norm(&ht).max(1.0);

    // Interior attempt: positive definite shifted matrix and a Newton
    // step inside the ball.
    if let Some(chol) = Cholesky::new(ht.clone()) {
        let d = chol.solve(&(-g));
        let dnorm = d.norm();
        if dnorm <= delta {
            return Ok(finish(p, d, 0.0, dnorm >= delta * (1.0 - 1e-8), false, 0));
        }
        // Boundary solution with a convex model: lambda in (0, hi].
        return boundary_search(p, &ht, 0.0, ht_scale, cfg);
    }

    // Indefinite (or singular) shifted matrix.
    let (lmin, v) = smallest_eigpair(&SymmetricOp::Dense(ht.clone()), 1e-10)?;
    let lambda_lo = (-lmin).max(0.0);

    // Hard-case probe just above the critical multiplier.
    let mut probe_shift = 1e-12 * ht_scale;
    for _ in 0..6 {
        let mut m = ht.clone();
        for i in 0..n {
            m[(i, i)] += lambda_lo + probe_shift;
        }
        if let Some(chol) = Cholesky::new(m) {
            let d = chol.solve(&(-g));
            if d.norm() < delta {
                // Hard case: g is (numerically) orthogonal to the leftmost
                // eigenspace; complete to the boundary along it.
                let d = complete_to_boundary(p, d, &v, delta);
                return Ok(finish(p, d, lambda_lo, true, true, 0));
            }
            return boundary_search(p, &ht, lambda_lo, ht_scale, cfg);
        }
        probe_shift *= 10.0;
    }
    Err(Error::Numerical(format!(
        "factorization failed near the critical multiplier {lambda_lo:.6e} (scale {ht_scale:.3e})"
    )))
}

fn check_symmetry(h: &DMatrix<f64>) -> Result<()> {
    let scale = h.amax().max(1.0);
    for i in 0..h.nrows() {
        for j in (i + 1)..h.ncols() {
            if (h[(i, j)] - h[(j, i)]).abs() > 1e-10 * scale {
                return Err(Error::Contract(format!(
                    "non-symmetric Hessian at ({i},{j}): {} vs {}",
                    h[(i, j)],
                    h[(j, i)]
                )));
            }
        }
    }
    Ok(())
}

fn inf_norm(m: &DMatrix<f64>) -> f64 {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Safeguarded Newton on `phi(lambda) = 1/||d(lambda)|| - 1/Delta`,
/// increasing in `lambda`, rooted in `(lambda_lo, hi]`.
fn boundary_search(
    p: &TrsProblem,
    ht: &DMatrix<f64>,
    lambda_lo: f64,
    ht_scale: f64,
    cfg: &TrsConfig,
) -> Result<TrsSolution> {
    let n = ht.nrows();
    let g = &p.gradient;
    let delta = p.radius;

    let mut lo = lambda_lo;
    let mut hi = g.norm() / delta + ht_scale;
    let mut lambda = (lambda_lo + 1e-3 * ht_scale).min(0.5 * (lo + hi));
    let mut last: Option<(DVector<f64>, f64)> = None;

    for iter in 0..cfg.max_root_iters {
        let mut m = ht.clone();
        for i in 0..n {
            m[(i, i)] += lambda;
        }
        let chol = match Cholesky::new(m) {
            Some(c) => c,
            None => {
                // lambda slipped below the critical value numerically.
                lo = lambda;
                lambda = 0.5 * (lo + hi);
                continue;
            }
        };
        let d = chol.solve(&(-g));
        let dnorm = d.norm();

        if (dnorm - delta).abs() <= 1e-13 * delta.max(1e-300) {
            return Ok(finish(p, d, lambda, true, false, iter + 1));
        }
        if dnorm > delta {
            lo = lambda;
        } else {
            hi = lambda;
        }
        last = Some((d.clone(), lambda));

        // Newton step on the reciprocal secular equation:
        // lambda+ = lambda + (||d|| - Delta)/Delta * ||d||^2 / ||L^-1 d||^2.
        let w = chol.l().solve_lower_triangular(&d).ok_or_else(|| {
            Error::Numerical("triangular solve failed during dual search".into())
        })?;
        let wnorm2 = w.norm_squared();
        let mut next = lambda + (dnorm - delta) / delta * (dnorm * dnorm) / wnorm2;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - lambda).abs() <= f64::EPSILON * lambda.abs().max(1.0) {
            return Ok(finish(p, d, lambda, true, false, iter + 1));
        }
        lambda = next;
    }

    // Out of iterations: accept the best factorized point if it is close.
    if let Some((d, lambda)) = last {
        let dnorm = d.norm();
        if (dnorm - delta).abs() <= cfg.kkt_tol * delta.max(1.0) {
            return Ok(finish(p, d, lambda, true, false, cfg.max_root_iters));
        }
    }
    Err(Error::Numerical(format!(
        "dual search did not converge in {} iterations (bracket [{lo:.6e}, {hi:.6e}])",
        cfg.max_root_iters
    )))
}

/// Adds `tau * v` so that `||d + tau v|| = Delta`, picking the root with
/// the smaller model value.
fn complete_to_boundary(
    p: &TrsProblem,
    d: DVector<f64>,
    v: &DVector<f64>,
    delta: f64,
) -> DVector<f64> {
    let vd = v.dot(&d);
    let disc = (vd * vd + delta * delta - d.norm_squared()).max(0.0);
    let root = disc.sqrt();
    let tau_plus = -vd + root;
    let tau_minus = -vd - root;
    let cand_plus = &d + v * tau_plus;
    let cand_minus = &d + v * tau_minus;
    if p.model_value(&cand_plus) <= p.model_value(&cand_minus) {
        cand_plus
    } else {
        cand_minus
    }
}

fn finish(
    p: &TrsProblem,
    step: DVector<f64>,
    multiplier: f64,
    on_boundary: bool,
    hard_case: bool,
    inner_iterations: usize,
) -> TrsSolution {
    let model_decrease = -p.model_value(&step);
    TrsSolution {
        step,
        multiplier,
        model_decrease,
        on_boundary,
        hard_case,
        inner_iterations,
        truncated: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trs::kkt_residual;
    use approx::assert_relative_eq;

    fn dense_problem(h: DMatrix<f64>, g: Vec<f64>, sigma: f64, radius: f64) -> TrsProblem {
        TrsProblem {
            hessian: SymmetricOp::Dense(h),
            gradient: DVector::from_vec(g),
            sigma,
            radius,
        }
    }

    #[test]
    fn interior_newton_step() {
        let p = dense_problem(DMatrix::identity(2, 2), vec![1.0, 0.0], 0.0, 10.0);
        let s = solve_trs_direct(&p, &TrsConfig::default()).unwrap();
        assert_relative_eq!(s.step[0], -1.0, epsilon = 1e-12);
        assert_relative_eq!(s.step[1], 0.0, epsilon = 1e-12);
        assert_eq!(s.multiplier, 0.0);
        assert!(!s.on_boundary);
    }

    #[test]
    fn boundary_step_closed_form() {
        // ||d(lambda)|| = 1/(1+lambda) = Delta = 0.5 gives lambda = 1.
        let p = dense_problem(DMatrix::identity(2, 2), vec![1.0, 0.0], 0.0, 0.5);
        let s = solve_trs_direct(&p, &TrsConfig::default()).unwrap();
        assert_relative_eq!(s.step[0], -0.5, epsilon = 1e-10);
        assert_relative_eq!(s.multiplier, 1.0, epsilon = 1e-9);
        assert!(s.on_boundary);
        assert!(kkt_residual(&p, &s).max() <= 1e-8);
    }

    #[test]
    fn hard_case_completion() {
        // H = diag(-2, 1), g = (0, 1), Delta = 0.6: lambda = 2,
        // d = (+-tau, -1/3) with tau = sqrt(0.36 - 1/9).
        let h = DMatrix::from_diagonal(&DVector::from_vec(vec![-2.0, 1.0]));
        let p = dense_problem(h, vec![0.0, 1.0], 0.0, 0.6);
        let s = solve_trs_direct(&p, &TrsConfig::default()).unwrap();
        assert!(s.hard_case);
        assert_relative_eq!(s.multiplier, 2.0, epsilon = 1e-9);
        assert_relative_eq!(s.step[1], -1.0 / 3.0, epsilon = 1e-9);
        let tau = (0.36f64 - 1.0 / 9.0).sqrt();
        assert_relative_eq!(s.step[0].abs(), tau, epsilon = 1e-8);
        assert!(kkt_residual(&p, &s).max() <= 1e-8);
    }

    #[test]
    fn zero_gradient_eigen_step() {
        let h = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, 2.0]));
        let p = dense_problem(h, vec![0.0, 0.0], 0.0, 0.3);
        let s = solve_trs_direct(&p, &TrsConfig::default()).unwrap();
        assert!(s.hard_case);
        assert_relative_eq!(s.step.norm(), 0.3, epsilon = 1e-10);
        // Model decrease 1/2 * Delta^2 * |lambda_min|.
        assert_relative_eq!(s.model_decrease, 0.5 * 0.09, epsilon = 1e-10);
    }

    #[test]
    fn asymmetric_matrix_rejected() {
        let mut h = DMatrix::identity(2, 2);
        h[(0, 1)] = 0.5;
        let p = dense_problem(h, vec![1.0, 1.0], 0.0, 1.0);
        assert!(matches!(
            solve_trs_direct(&p, &TrsConfig::default()),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn sigma_shift_applied() {
        // H = 0, sigma = 1, ||g|| = 4: Ht = 2 I, Newton step -g/2.
        let p = dense_problem(DMatrix::zeros(2, 2), vec![4.0, 0.0], 1.0, 100.0);
        let s = solve_trs_direct(&p, &TrsConfig::default()).unwrap();
        assert_relative_eq!(s.step[0], -2.0, epsilon = 1e-12);
        assert_eq!(s.multiplier, 0.0);
    }
}
