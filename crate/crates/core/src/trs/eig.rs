//! Smallest eigenpair of a symmetric operator.
//!
//! Dense inputs go through a full symmetric eigendecomposition; operator
//! inputs use the Lanczos method with full reorthogonalization and a
//! handful of restarts.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::trs::SymmetricOp;

const LANCZOS_MAX_STEPS: usize = 400;
const LANCZOS_RESTARTS: usize = 4;

/// Returns `(lambda_min, v)` with `||H v - lambda_min v|| <= tol * max(1, ||H||)`.
pub fn smallest_eigpair(op: &SymmetricOp, tol: f64) -> Result<(f64, DVector<f64>)> {
    assert!(tol > 0.0, "tolerance must be positive");
    match op {
        SymmetricOp::Dense(h) => Ok(dense_smallest(h)),
        SymmetricOp::Operator { dim, .. } => lanczos_smallest(op, *dim, tol),
    }
}

fn dense_smallest(h: &DMatrix<f64>) -> (f64, DVector<f64>) {
    let eig = SymmetricEigen::new(h.clone());
    let mut idx = 0;
    for i in 1..eig.eigenvalues.len() {
        if eig.eigenvalues[i] < eig.eigenvalues[idx] {
            idx = i;
        }
    }
    let v = eig.eigenvectors.column(idx).into_owned();
    (eig.eigenvalues[idx], v)
}

fn lanczos_smallest(op: &SymmetricOp, dim: usize, tol: f64) -> Result<(f64, DVector<f64>)> {
    let steps = LANCZOS_MAX_STEPS.min(dim);
    let mut best: Option<(f64, DVector<f64>, f64)> = None;

    for restart in 0..LANCZOS_RESTARTS {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5EED + restart as u64);
        let start = DVector::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0f64));
        match lanczos_run(op, &start, steps, tol) {
            LanczosOutcome::Converged(l, v) => return Ok((l, v)),
            LanczosOutcome::Best(l, v, r) => {
                if best.as_ref().is_none_or(|(_, _, br)| r < *br) {
                    best = Some((l, v, r));
                }
            }
        }
    }
    let (best_estimate, _, residual) = best.expect("at least one restart ran");
    Err(Error::EigNonConvergence {
        best_estimate,
        residual,
    })
}

enum LanczosOutcome {
    Converged(f64, DVector<f64>),
    Best(f64, DVector<f64>, f64),
}

fn lanczos_run(op: &SymmetricOp, start: &DVector<f64>, steps: usize, tol: f64) -> LanczosOutcome {
    let dim = start.len();
    let mut basis: Vec<DVector<f64>> = vec![start / start.norm()];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut best: Option<(f64, DVector<f64>, f64)> = None;

    for j in 0..steps {
        let q = basis[j].clone();
        let mut w = op.apply(&q);
        let alpha = q.dot(&w);
        alphas.push(alpha);
        w -= &q * alpha;
        if j > 0 {
            w -= &basis[j - 1] * betas[j - 1];
        }
        // Full reorthogonalization, twice.
        for _ in 0..2 {
            for b in &basis {
                let c = b.dot(&w);
                w -= b * c;
            }
        }
        let beta = w.norm();

        let (theta, y) = tridiag_smallest(&alphas, &betas);
        let scale = alphas
            .iter()
            .map(|a| a.abs())
            .fold(theta.abs(), f64::max)
            .max(1.0);
        let resid = beta * y[y.len() - 1].abs();

        if resid <= tol * scale || beta <= f64::EPSILON * scale || j + 1 == dim {
            let mut v = DVector::zeros(dim);
            for (i, b) in basis.iter().enumerate() {
                v += b * y[i];
            }
            let vn = v.norm();
            if vn > 0.0 {
                v /= vn;
            }
            // Certify against the operator itself, not the recurrence.
            let true_resid = (op.apply(&v) - &v * theta).norm();
            if true_resid <= tol * scale || j + 1 == dim {
                return LanczosOutcome::Converged(theta, v);
            }
            best = Some((theta, v, true_resid));
            break;
        }

        if best.as_ref().is_none_or(|(_, _, br)| resid < *br) {
            let mut v = DVector::zeros(dim);
            for (i, b) in basis.iter().enumerate() {
                v += b * y[i];
            }
            let vn = v.norm();
            if vn > 0.0 {
                v /= vn;
            }
            best = Some((theta, v, resid));
        }

        betas.push(beta);
        basis.push(w / beta);
    }

    let (l, v, r) = best.expect("at least one Lanczos step ran");
    LanczosOutcome::Best(l, v, r)
}

/// Smallest Ritz pair of the tridiagonal with diagonal `alphas` and
/// off-diagonal `betas`.
fn tridiag_smallest(alphas: &[f64], betas: &[f64]) -> (f64, DVector<f64>) {
    let j = alphas.len();
    let mut t = DMatrix::zeros(j, j);
    for i in 0..j {
        t[(i, i)] = alphas[i];
        if i + 1 < j {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    dense_smallest(&t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::sync::Arc;

    #[test]
    fn diagonal_matrix() {
        let h = DMatrix::from_diagonal(&DVector::from_vec(vec![-2.0, 1.0]));
        let (l, v) = smallest_eigpair(&SymmetricOp::Dense(h), 1e-10).unwrap();
        assert_relative_eq!(l, -2.0, epsilon = 1e-12);
        assert_relative_eq!(v[0].abs(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(v[1], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn identity_matrix() {
        let (l, v) = smallest_eigpair(&SymmetricOp::Dense(DMatrix::identity(3, 3)), 1e-10).unwrap();
        assert_relative_eq!(l, 1.0, epsilon = 1e-12);
        assert_relative_eq!(v.norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn lanczos_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 30;
        let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0f64));
        let h = (&a + a.transpose()) * 0.5;

        let (dense_l, _) = smallest_eigpair(&SymmetricOp::Dense(h.clone()), 1e-10).unwrap();

        let hc = h.clone();
        let op = SymmetricOp::Operator {
            dim: n,
            apply: Arc::new(move |v: &DVector<f64>| &hc * v),
        };
        let (lanczos_l, v) = smallest_eigpair(&op, 1e-10).unwrap();
        assert_relative_eq!(lanczos_l, dense_l, epsilon = 1e-8);
        assert!((&h * &v - &v * lanczos_l).norm() <= 1e-8 * h.amax().max(1.0));
    }
}
