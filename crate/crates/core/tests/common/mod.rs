//! Shared test helpers: an independent brute-force TRS oracle and
//! seeded random instance generators.
//!
//! The oracle deliberately shares no code path with the library solver:
//! it diagonalizes the shifted Hessian and locates the multiplier by
//! bisection on the secular norm in spectral coordinates, with explicit
//! hard-case completion.

// Each integration-test binary compiles its own copy of this module and
// not every binary touches every helper.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use utr::trs::{SymmetricOp, TrsProblem};

pub struct OracleSolution {
    pub model_value: f64,
    pub multiplier: f64,
    pub hard_case: bool,
}

/// Solves the TRS by eigendecomposition plus a multiplier scan.
pub fn brute_force_trs(p: &TrsProblem) -> OracleSolution {
    let h = p.hessian.as_dense().expect("oracle needs a dense Hessian");
    let n = h.nrows();
    let shift = p.sigma * p.gradient.norm().sqrt();
    let mut ht = h.clone();
    for i in 0..n {
        ht[(i, i)] += shift;
    }
    let eig = SymmetricEigen::new(ht);
    let lam = &eig.eigenvalues;
    let q = &eig.eigenvectors;
    let b = q.transpose() * &p.gradient;
    let delta = p.radius;

    let lmin = lam.iter().cloned().fold(f64::INFINITY, f64::min);
    let lambda_lo = (-lmin).max(0.0);
    let scale = lam.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let edge_tol = 1e-10 * scale;
    let b_zero_tol = 1e-8 * (1.0 + p.gradient.norm());

    // ||d(l)||^2 in spectral coordinates; components pinned at the edge
    // count as zero when their right-hand side vanishes, infinite otherwise.
    let norm2_at = |l: f64| -> f64 {
        (0..n)
            .map(|i| {
                let den = lam[i] + l;
                if den.abs() <= edge_tol {
                    if b[i].abs() <= b_zero_tol {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                } else {
                    (b[i] / den).powi(2)
                }
            })
            .sum()
    };

    let norm_lo = norm2_at(lambda_lo).sqrt();
    let (lambda, tau, hard_case) = if norm_lo <= delta {
        if lambda_lo == 0.0 {
            (0.0, 0.0, false)
        } else {
            // Hard case: fill out to the boundary along the leftmost
            // eigenvector.
            (
                lambda_lo,
                (delta * delta - norm_lo * norm_lo).max(0.0).sqrt(),
                true,
            )
        }
    } else {
        let mut lo = lambda_lo;
        let mut hi = (p.gradient.norm() / delta + scale).max(lambda_lo + 1.0);
        while norm2_at(hi).sqrt() > delta {
            hi *= 2.0;
        }
        for _ in 0..300 {
            let mid = 0.5 * (lo + hi);
            if norm2_at(mid).sqrt() > delta {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-16 * lo.max(1.0) {
                break;
            }
        }
        (0.5 * (lo + hi), 0.0, false)
    };

    let mut y = DVector::zeros(n);
    for i in 0..n {
        let den = lam[i] + lambda;
        y[i] = if den.abs() <= edge_tol { 0.0 } else { -b[i] / den };
    }
    let mut model = f64::INFINITY;
    if tau > 0.0 {
        let idx = (0..n)
            .min_by(|&i, &j| lam[i].partial_cmp(&lam[j]).unwrap())
            .unwrap();
        for sign in [1.0, -1.0] {
            let mut ys = y.clone();
            ys[idx] += sign * tau;
            model = model.min(p.model_value(&(q * ys)));
        }
    } else {
        model = p.model_value(&(q * y));
    }
    OracleSolution {
        model_value: model,
        multiplier: lambda,
        hard_case,
    }
}

/// KKT scale of a problem: `max(1, ||g||, ||Ht||_max)`.
pub fn kkt_scale(p: &TrsProblem) -> f64 {
    let h = p.hessian.as_dense().unwrap();
    let shift = p.sigma * p.gradient.norm().sqrt();
    (h.amax() + shift).max(p.gradient.norm()).max(1.0)
}

pub fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0f64));
    (&a + a.transpose()) * 0.5
}

/// A random orthogonal matrix via QR.
pub fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0f64));
    a.qr().q()
}

/// A seeded random TRS instance; indefinite most of the time, shifted
/// toward positive definite every fourth draw.
pub fn random_instance(rng: &mut ChaCha8Rng, case: usize) -> TrsProblem {
    let n = 2 + case % 9;
    let sigma = [0.0, 0.5, 2.0][case % 3];
    let mut h = random_symmetric(rng, n);
    if case.is_multiple_of(4) {
        for i in 0..n {
            h[(i, i)] += 2.0;
        }
    }
    let gradient = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0f64));
    TrsProblem {
        hessian: SymmetricOp::Dense(h),
        gradient,
        sigma,
        radius: rng.gen_range(0.1..2.0),
    }
}

/// A constructed hard case: the gradient is exactly orthogonal to the
/// (simple) leftmost eigenspace and the radius exceeds the critical
/// pseudoinverse step.
pub fn hard_case_instance(rng: &mut ChaCha8Rng, case: usize) -> TrsProblem {
    let n = 2 + case % 9;
    let q = random_orthogonal(rng, n);
    // Distinct eigenvalues with a strictly negative, simple smallest one.
    let lam = DVector::from_fn(n, |i, _| -2.0 + 0.7 * i as f64 + rng.gen_range(0.0..0.2));
    let h = &q * DMatrix::from_diagonal(&lam) * q.transpose();
    let mut b = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0f64));
    b[0] = 0.0;
    if n > 1 && b.norm() < 0.1 {
        b[1] = 0.5;
    }
    let gradient = &q * b.clone();
    // Critical step excludes the leftmost direction; sigma = 0 keeps the
    // spectrum as constructed.
    let crit: f64 = (1..n)
        .map(|i| (b[i] / (lam[i] - lam[0])).powi(2))
        .sum::<f64>()
        .sqrt();
    TrsProblem {
        hessian: SymmetricOp::Dense(h),
        gradient,
        sigma: 0.0,
        radius: 1.3 * crit.max(0.1),
    }
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
