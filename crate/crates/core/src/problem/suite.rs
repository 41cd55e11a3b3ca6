//! Built-in desk-scale problem suite.
//!
//! Covers strongly convex, degenerate convex, nonconvex valley, and
//! saddle cases. Every `lipschitz_hint` is a Hessian Lipschitz constant
//! valid on the sublevel set of the instance's start point (third
//! derivatives of the quartics are unbounded on all of `R^n`, so the
//! hints are sublevel-set bounds, derived in the comments below).

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::problem::logistic::logistic_oracle;
use crate::problem::{Dataset, Objective, ProblemInstance};

/// The classical banana valley `sum 100(x_{i+1} - x_i^2)^2 + (1 - x_i)^2`.
pub struct Rosenbrock {
    pub n: usize,
}

impl Objective for Rosenbrock {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        (0..self.n - 1)
            .map(|i| {
                let t = x[i + 1] - x[i] * x[i];
                100.0 * t * t + (1.0 - x[i]).powi(2)
            })
            .sum()
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut g = DVector::zeros(self.n);
        for i in 0..self.n - 1 {
            let t = x[i + 1] - x[i] * x[i];
            g[i] += -400.0 * x[i] * t - 2.0 * (1.0 - x[i]);
            g[i + 1] += 200.0 * t;
        }
        g
    }

    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let mut h = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n - 1 {
            h[(i, i)] += 1200.0 * x[i] * x[i] - 400.0 * x[i + 1] + 2.0;
            h[(i + 1, i + 1)] += 200.0;
            h[(i, i + 1)] += -400.0 * x[i];
            h[(i + 1, i)] += -400.0 * x[i];
        }
        h
    }
}

/// Convex quadratic `f(x) = 1/2 x^T diag(d) x` with tunable conditioning.
pub struct DiagQuadratic {
    pub diag: DVector<f64>,
}

impl Objective for DiagQuadratic {
    fn dim(&self) -> usize {
        self.diag.len()
    }
    fn value(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.iter().zip(self.diag.iter()).map(|(xi, di)| di * xi * xi).sum::<f64>()
    }
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        x.component_mul(&self.diag)
    }
    fn hessian(&self, _x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.diag)
    }
    fn hessian_vector(&self, _x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        v.component_mul(&self.diag)
    }
}

/// `f(x) = x_1^4/4 - x_1^2/2 + 1/2 sum_{i>=2} x_i^2`: a strict saddle at
/// the origin with minimizers at `x_1 = ±1`.
pub struct QuarticSaddle {
    pub n: usize,
}

impl Objective for QuarticSaddle {
    fn dim(&self) -> usize {
        self.n
    }
    fn value(&self, x: &DVector<f64>) -> f64 {
        let x1 = x[0];
        let tail: f64 = (1..self.n).map(|i| x[i] * x[i]).sum();
        x1.powi(4) / 4.0 - x1 * x1 / 2.0 + 0.5 * tail
    }
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut g = x.clone();
        g[0] = x[0].powi(3) - x[0];
        g
    }
    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let mut h = DMatrix::identity(self.n, self.n);
        h[(0, 0)] = 3.0 * x[0] * x[0] - 1.0;
        h
    }
}

/// Separable nonconvex sum `sum_i (x_i^4/4 - x_i^2/2)`.
pub struct SeparableQuartic {
    pub n: usize,
}

impl Objective for SeparableQuartic {
    fn dim(&self) -> usize {
        self.n
    }
    fn value(&self, x: &DVector<f64>) -> f64 {
        x.iter().map(|&v| v.powi(4) / 4.0 - v * v / 2.0).sum()
    }
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        x.map(|v| v.powi(3) - v)
    }
    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_diagonal(&x.map(|v| 3.0 * v * v - 1.0))
    }
    fn hessian_vector(&self, x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        x.map(|xi| 3.0 * xi * xi - 1.0).component_mul(v)
    }
}

/// Tilted strongly convex quartic
/// `f(x) = 1/2 ||x||^2 + 1/4 sum x_i^4 - sum x_i`. The minimizer solves
/// `x + x^3 = 1` per coordinate, away from the origin, so the third
/// derivative does not vanish at the solution and Newton-type local
/// phases have a genuine, stable rate constant.
pub struct QuadraticQuartic {
    pub n: usize,
}

impl QuadraticQuartic {
    /// The per-coordinate minimizer: the real root of `x^3 + x = 1`.
    pub fn scalar_minimizer() -> f64 {
        let mut r = 0.68f64;
        for _ in 0..60 {
            r -= (r * r * r + r - 1.0) / (3.0 * r * r + 1.0);
        }
        r
    }
}

impl Objective for QuadraticQuartic {
    fn dim(&self) -> usize {
        self.n
    }
    fn value(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.norm_squared() + 0.25 * x.iter().map(|&v| v.powi(4)).sum::<f64>()
            - x.iter().sum::<f64>()
    }
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        x.map(|v| v + v.powi(3) - 1.0)
    }
    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_diagonal(&x.map(|v| 1.0 + 3.0 * v * v))
    }
    fn hessian_vector(&self, x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        x.map(|xi| 1.0 + 3.0 * xi * xi).component_mul(v)
    }
}

/// Seeded synthetic binary classification data with dense rows stored
/// sparsely; feature scale ~ 1/sqrt(n) keeps per-sample norms near one.
pub fn synthetic_dataset(seed: u64, samples: usize, features: usize) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 1.0 / (features as f64).sqrt();
    let w_true: Vec<f64> = (0..features).map(|_| rng.gen_range(-1.0..1.0)).collect();

    let mut rows = Vec::with_capacity(samples);
    let mut labels = Vec::with_capacity(samples);
    for _ in 0..samples {
        let row: Vec<(usize, f64)> = (0..features)
            .map(|j| (j, rng.gen_range(-1.0..1.0) * scale))
            .collect();
        let margin: f64 = row.iter().map(|&(j, v)| v * w_true[j]).sum::<f64>()
            + 0.1 * rng.gen_range(-1.0..1.0);
        // Flip a fixed fraction of labels so the data is solidly
        // non-separable: the optimum stays bounded and the Hessian
        // there is well conditioned.
        let sign = if margin >= 0.0 { 1.0 } else { -1.0 };
        labels.push(if rng.gen_range(0.0..1.0) < 0.15 { -sign } else { sign });
        rows.push(row);
    }
    Dataset {
        rows,
        labels,
        n: features,
    }
}

fn rosenbrock_start(n: usize) -> DVector<f64> {
    let mut x = DVector::from_element(n, 1.0);
    x[0] = -1.2;
    x
}

fn rosenbrock_instance(n: usize) -> ProblemInstance {
    // Sublevel set of f0 = 24.2: |x_i| <= 1 + sqrt(24.2) < 5.93 for every
    // coordinate with a forward term, so the tridiagonal Hessian difference
    // has row sums <= (2400 * 5.93 + 1200) ||x - y|| < 15500 ||x - y||.
    ProblemInstance::new(
        format!("rosenbrock-{n}"),
        Arc::new(Rosenbrock { n }),
        rosenbrock_start(n),
        Some(15_500.0),
        Some((DVector::from_element(n, 1.0), 0.0)),
    )
    .expect("valid built-in instance")
}

fn logistic_instance(name: &str, seed: u64, samples: usize, features: usize) -> ProblemInstance {
    let data = synthetic_dataset(seed, samples, features);
    let obj = logistic_oracle(data, 1e-8).expect("valid synthetic dataset");
    let hint = obj.lipschitz_constant();
    ProblemInstance::new(
        name,
        Arc::new(obj),
        DVector::zeros(features),
        Some(hint),
        None,
    )
    .expect("valid built-in instance")
}

/// The built-in problem suite; instance names are the harness's lookup keys.
pub fn builtin_suite() -> Vec<ProblemInstance> {
    let mut suite = vec![ProblemInstance::new(
        "quadratic-2",
        Arc::new(DiagQuadratic {
            diag: DVector::from_vec(vec![1.0, 10.0]),
        }),
        DVector::from_element(2, 1.0),
        // Constant Hessian: any positive constant is a valid bound.
        Some(1e-6),
        Some((DVector::zeros(2), 0.0)),
    )
    .unwrap()];

    suite.push(
        ProblemInstance::new(
            "quadratic-ill-10",
            Arc::new(DiagQuadratic {
                diag: DVector::from_fn(10, |i, _| 10f64.powf(4.0 * i as f64 / 9.0)),
            }),
            DVector::from_element(10, 1.0),
            Some(1e-6),
            Some((DVector::zeros(10), 0.0)),
        )
        .unwrap(),
    );

    suite.push(rosenbrock_instance(2));
    suite.push(rosenbrock_instance(10));
    suite.push(rosenbrock_instance(100));

    // Sublevel set of the near-origin start: x_1^2 <= 2 + o(1), so
    // M = 6 * sqrt(2) < 9.
    let mut saddle_start = DVector::zeros(4);
    saddle_start[0] = 1e-3;
    saddle_start[1] = 1e-3;
    let mut saddle_opt = DVector::zeros(4);
    saddle_opt[0] = 1.0;
    suite.push(
        ProblemInstance::new(
            "quartic-saddle-4",
            Arc::new(QuarticSaddle { n: 4 }),
            saddle_start,
            Some(9.0),
            Some((saddle_opt, -0.25)),
        )
        .unwrap(),
    );

    // f0 = 0.704; per-coordinate sublevel bound |x_i| <= 1.95, M = 6 * 1.95.
    suite.push(
        ProblemInstance::new(
            "separable-quartic-5",
            Arc::new(SeparableQuartic { n: 5 }),
            DVector::from_element(5, 1.5),
            Some(12.0),
            Some((DVector::from_element(5, 1.0), -1.25)),
        )
        .unwrap(),
    );

    // f0 = -1.25 at the all-ones start; the per-coordinate minimum is
    // phi(r) = -0.3954 with r the root of x^3 + x = 1, so the sublevel
    // set confines each coordinate to [-0.29, 1.33] and M = 6 * 1.33 < 9.
    let r = QuadraticQuartic::scalar_minimizer();
    let f_opt = 5.0 * (0.5 * r * r + 0.25 * r.powi(4) - r);
    suite.push(
        ProblemInstance::new(
            "quadratic-quartic-5",
            Arc::new(QuadraticQuartic { n: 5 }),
            DVector::from_element(5, 1.0),
            Some(9.0),
            Some((DVector::from_element(5, r), f_opt)),
        )
        .unwrap(),
    );

    suite.push(logistic_instance("logistic-synthetic-200x20", 7, 200, 20));
    suite.push(logistic_instance("logistic-small-50x5", 11, 50, 5));

    suite
}
