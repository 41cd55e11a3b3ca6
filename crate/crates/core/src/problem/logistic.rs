//! L2-penalized logistic regression oracle.
//!
//! `f(x) = (1/N) * sum_i log(1 + exp(-b_i * a_i^T x)) + (gamma/2) * ||x||^2`
//! with analytically consistent gradient and Hessian. Evaluation is
//! overflow-safe: the per-sample loss goes through `log1p` with a branch
//! on the sign of the margin `b_i * a_i^T x`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::problem::{Dataset, Objective};

/// Largest possible |d^3/dt^3 log(1 + e^-t)|, attained where the sigmoid
/// weight s(1-s)(1-2s) peaks; used for the Hessian Lipschitz hint.
pub(crate) const SIGMOID_THIRD_DERIV_BOUND: f64 = 0.0963;

#[derive(Debug, Clone)]
pub struct LogisticObjective {
    data: Dataset,
    gamma: f64,
}

impl LogisticObjective {
    /// Global Hessian Lipschitz constant `c * (1/N) * sum ||a_i||^3`.
    pub fn lipschitz_constant(&self) -> f64 {
        let n = self.data.num_samples() as f64;
        let sum: f64 = self
            .data
            .rows
            .iter()
            .map(|row| {
                let sq: f64 = row.iter().map(|(_, v)| v * v).sum();
                sq.sqrt().powi(3)
            })
            .sum();
        SIGMOID_THIRD_DERIV_BOUND * sum / n
    }
}

/// Loss of a single sample given the margin `t = b * a^T x`.
fn loss(t: f64) -> f64 {
    if t >= 0.0 {
        (-t).exp().ln_1p()
    } else {
        -t + t.exp().ln_1p()
    }
}

/// Sigmoid of `-t`, evaluated without overflow for any `t`.
fn sigmoid_neg(t: f64) -> f64 {
    if t >= 0.0 {
        let e = (-t).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + t.exp())
    }
}

fn dot_sparse(row: &[(usize, f64)], x: &DVector<f64>) -> f64 {
    row.iter().map(|&(i, v)| v * x[i]).sum()
}

impl Objective for LogisticObjective {
    fn dim(&self) -> usize {
        self.data.n
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        let n = self.data.num_samples() as f64;
        let total: f64 = self
            .data
            .rows
            .iter()
            .zip(&self.data.labels)
            .map(|(row, &b)| loss(b * dot_sparse(row, x)))
            .sum();
        total / n + 0.5 * self.gamma * x.norm_squared()
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let n = self.data.num_samples() as f64;
        let mut g = x * self.gamma;
        for (row, &b) in self.data.rows.iter().zip(&self.data.labels) {
            let s = sigmoid_neg(b * dot_sparse(row, x));
            let coeff = -b * s / n;
            for &(i, v) in row {
                g[i] += coeff * v;
            }
        }
        g
    }

    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let dim = self.data.n;
        let n = self.data.num_samples() as f64;
        let mut h = DMatrix::from_diagonal_element(dim, dim, self.gamma);
        for (row, &b) in self.data.rows.iter().zip(&self.data.labels) {
            let s = sigmoid_neg(b * dot_sparse(row, x));
            let w = s * (1.0 - s) / n;
            for &(i, vi) in row {
                for &(j, vj) in row {
                    h[(i, j)] += w * vi * vj;
                }
            }
        }
        h
    }

    fn hessian_vector(&self, x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let n = self.data.num_samples() as f64;
        let mut out = v * self.gamma;
        for (row, &b) in self.data.rows.iter().zip(&self.data.labels) {
            let s = sigmoid_neg(b * dot_sparse(row, x));
            let w = s * (1.0 - s) / n;
            let av = dot_sparse(row, v);
            for &(i, vi) in row {
                out[i] += w * av * vi;
            }
        }
        out
    }
}

pub fn logistic_oracle(data: Dataset, gamma: f64) -> Result<LogisticObjective> {
    if data.rows.is_empty() {
        return Err(Error::Config("empty dataset".into()));
    }
    if gamma < 0.0 {
        return Err(Error::Config(format!("gamma must be >= 0, got {gamma}")));
    }
    for &b in &data.labels {
        if b != -1.0 && b != 1.0 {
            return Err(Error::Data(format!("label {b} is not in {{-1,+1}}")));
        }
    }
    Ok(LogisticObjective { data, gamma })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn single(a: f64, b: f64) -> Dataset {
        Dataset {
            rows: vec![vec![(0, a)]],
            labels: vec![b],
            n: 1,
        }
    }

    #[test]
    fn value_at_zero_is_log_two() {
        let data = Dataset {
            rows: vec![vec![(0, 0.5), (2, 2.0)], vec![(1, -1.0)]],
            labels: vec![1.0, -1.0],
            n: 3,
        };
        let obj = logistic_oracle(data, 0.0).unwrap();
        let f = obj.value(&DVector::zeros(3));
        assert_relative_eq!(f, std::f64::consts::LN_2, epsilon = 1e-12);
    }

    #[test]
    fn large_margin_no_overflow() {
        // Single term log(1 + exp(-1000)): exp(-1000) underflows to zero
        // in the naive formula but log1p keeps it exact at this scale.
        let obj = logistic_oracle(single(1.0, 1.0), 0.0).unwrap();
        let f = obj.value(&DVector::from_vec(vec![1e3]));
        assert!(f.is_finite());
        assert!((f - (-1000.0f64).exp().ln_1p()).abs() <= 1e-10);

        // Mirror case where exp(+1000) would overflow outright.
        let f_neg = obj.value(&DVector::from_vec(vec![-1e3]));
        assert!(f_neg.is_finite());
        assert_relative_eq!(f_neg, 1000.0, epsilon = 1e-10);
    }

    #[test]
    fn gradient_matches_closed_form() {
        let obj = logistic_oracle(single(2.0, -1.0), 0.5).unwrap();
        let x = DVector::from_vec(vec![0.3]);
        // t = -0.6, s = sigmoid(0.6), grad = -b*s*a + gamma*x
        let s = 1.0 / (1.0 + (-0.6f64).exp());
        let expected = 1.0 * s * 2.0 + 0.5 * 0.3;
        assert_relative_eq!(obj.gradient(&x)[0], expected, epsilon = 1e-14);
    }

    #[test]
    fn hessian_vector_matches_dense() {
        let data = Dataset {
            rows: vec![vec![(0, 0.5), (1, -1.5)], vec![(1, 2.0), (2, 0.3)]],
            labels: vec![1.0, -1.0],
            n: 3,
        };
        let obj = logistic_oracle(data, 1e-8).unwrap();
        let x = DVector::from_vec(vec![0.1, -0.2, 0.7]);
        let v = DVector::from_vec(vec![1.0, 2.0, -0.5]);
        let dense = obj.hessian(&x) * &v;
        let hv = obj.hessian_vector(&x, &v);
        assert_relative_eq!((dense - hv).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn empty_dataset_rejected() {
        let data = Dataset {
            rows: vec![],
            labels: vec![],
            n: 0,
        };
        assert!(matches!(logistic_oracle(data, 0.0), Err(Error::Config(_))));
    }
}
