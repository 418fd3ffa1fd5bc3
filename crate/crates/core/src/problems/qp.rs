//! Random convex quadratic programs with a known solution.
//!
//! ```text
//! min 1/2 x'Ax - b'x   subject to   H'x + h0 = 0,   x >= 0
//! ```
//!
//! The instance is built backwards from the KKT conditions: pick the solution
//! `x*` (with some coordinates on the bound), the equality multipliers `nu`
//! and the bound multipliers `mu`, then choose `b` and `h0` so that
//! `A x* - b + H nu - mu = 0` and `H'x* + h0 = 0` hold exactly. Multipliers
//! are kept below one in magnitude, which puts the exact-penalty threshold of
//! the l1 penalty below one as well.
//!
//! `H` is stored as a `d x p` matrix whose columns are the constraint
//! normals, so both `H'x` and `H nu` are well formed.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{InitSpec, Problem};
use crate::error::{Error, Result};
use crate::rng::{self, Purpose};

const KKT_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QpInstance {
    pub d: usize,
    pub p: usize,
    /// Symmetric positive-definite `d x d`, row-major rows.
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    /// `d x p`, row-major rows; column `k` is the normal of constraint `k`.
    pub h: Vec<Vec<f64>>,
    pub h0: Vec<f64>,
    pub x_star: Vec<f64>,
    /// Equality multipliers `nu`, length `p`.
    pub multipliers: Vec<f64>,
    /// Bound multipliers `mu`, length `d`.
    pub bound_multipliers: Vec<f64>,
}

impl QpInstance {
    pub fn a_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.d, self.d, |i, j| self.a[i][j])
    }

    pub fn h_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.d, self.p, |i, k| self.h[i][k])
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        let quad: f64 = self
            .a
            .iter()
            .zip(x)
            .map(|(row, xi)| xi * row.iter().zip(x).map(|(a, xj)| a * xj).sum::<f64>())
            .sum();
        0.5 * quad - self.b.iter().zip(x).map(|(b, xi)| b * xi).sum::<f64>()
    }

    /// `|H'x + h0|_1 + |max(0, -x)|_1`, zero exactly on the feasible set.
    pub fn penalty(&self, x: &[f64]) -> f64 {
        let mut eq = self.h0.clone();
        for (row, xi) in self.h.iter().zip(x) {
            for (e, hik) in eq.iter_mut().zip(row) {
                *e += hik * xi;
            }
        }
        eq.iter().map(|e| e.abs()).sum::<f64>() + x.iter().map(|xi| (-xi).max(0.0)).sum::<f64>()
    }

    /// Largest multiplier magnitude; the l1 penalty is exact above it.
    pub fn beta_bar(&self) -> f64 {
        self.multipliers
            .iter()
            .chain(&self.bound_multipliers)
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Check shape, convexity, feasibility of `x*` and the KKT conditions.
    pub fn validate(&self) -> Result<()> {
        let (d, p) = (self.d, self.p);
        let shape_ok = self.a.len() == d
            && self.a.iter().all(|r| r.len() == d)
            && self.b.len() == d
            && self.h.len() == d
            && self.h.iter().all(|r| r.len() == p)
            && self.h0.len() == p
            && self.x_star.len() == d
            && self.multipliers.len() == p
            && self.bound_multipliers.len() == d;
        if !shape_ok {
            return Err(Error::invalid("qp", "inconsistent matrix shapes"));
        }
        let a = self.a_matrix();
        if (&a - a.transpose()).amax() > KKT_TOL {
            return Err(Error::invalid("qp", "A is not symmetric"));
        }
        if a.clone().cholesky().is_none() {
            return Err(Error::invalid("qp", "A is not positive definite"));
        }
        let h = self.h_matrix();
        let x = DVector::from_column_slice(&self.x_star);
        let eq = h.transpose() * &x + DVector::from_column_slice(&self.h0);
        if eq.amax() > KKT_TOL {
            return Err(Error::invalid("qp", "x* violates H'x + h0 = 0"));
        }
        if self.x_star.iter().any(|&v| v < 0.0) {
            return Err(Error::invalid("qp", "x* violates x >= 0"));
        }
        let mu = DVector::from_column_slice(&self.bound_multipliers);
        let stationarity = &a * &x - DVector::from_column_slice(&self.b)
            + &h * DVector::from_column_slice(&self.multipliers)
            - &mu;
        if stationarity.amax() > KKT_TOL {
            return Err(Error::invalid("qp", "stationarity residual too large"));
        }
        if mu.iter().any(|&m| m < 0.0) || mu.iter().zip(x.iter()).any(|(m, xi)| (m * xi).abs() > KKT_TOL) {
            return Err(Error::invalid("qp", "bound multipliers violate sign or complementarity"));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain numeric struct")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let qp: Self = serde_json::from_str(text).map_err(|e| Error::invalid("qp", e.to_string()))?;
        qp.validate()?;
        Ok(qp)
    }
}

/// Generate a random instance in dimension `d` with `p = floor(d / 2)`
/// equality constraints, deterministically from `seed`.
pub fn make_random_qp(d: usize, seed: u64) -> Result<(Problem, QpInstance)> {
    if d < 2 {
        return Err(Error::invalid("d", "the random QP needs d >= 2"));
    }
    let p = d / 2;
    let mut rng = rng::stream(seed, Purpose::Generator, d as u64);

    let b_factor = DMatrix::from_fn(d, d, |_, _| rng::standard_normal(&mut rng));
    let a = &b_factor * b_factor.transpose() / d as f64 + DMatrix::identity(d, d);
    let a = (&a + a.transpose()) * 0.5;
    let h = DMatrix::from_fn(d, p, |_, _| rng::standard_normal(&mut rng));

    let mut x_star: Vec<f64> = (0..d).map(|_| rng::uniform(&mut rng, 0.0, 2.0)).collect();
    let mut active = rand::seq::index::sample(&mut rng, d, d.div_ceil(4)).into_vec();
    active.sort_unstable();
    for &i in &active {
        x_star[i] = 0.0;
    }
    let multipliers: Vec<f64> = (0..p).map(|_| rng::uniform(&mut rng, -0.9, 0.9)).collect();
    let mut bound_multipliers = vec![0.0; d];
    for &i in &active {
        bound_multipliers[i] = rng::uniform(&mut rng, 0.0, 1.0);
    }

    let x = DVector::from_column_slice(&x_star);
    let b = &a * &x + &h * DVector::from_column_slice(&multipliers)
        - DVector::from_column_slice(&bound_multipliers);
    let h0 = -(h.transpose() * &x);

    let instance = QpInstance {
        d,
        p,
        a: (0..d).map(|i| a.row(i).iter().copied().collect()).collect(),
        b: b.iter().copied().collect(),
        h: (0..d).map(|i| h.row(i).iter().copied().collect()).collect(),
        h0: h0.iter().copied().collect(),
        x_star,
        multipliers,
        bound_multipliers,
    };
    instance.validate()?;
    let problem = qp_problem(Arc::new(instance.clone()), format!("qp-d{d}-s{seed}"));
    Ok((problem, instance))
}

/// Wrap an instance as a [`Problem`] with the l1 penalty.
pub fn qp_problem(instance: Arc<QpInstance>, name: String) -> Problem {
    let (obj, pen) = (instance.clone(), instance.clone());
    Problem::new(
        name,
        instance.d,
        move |x| obj.objective(x),
        move |x| pen.penalty(x),
        InitSpec::Uniform { low: -2.0, high: 2.0 },
    )
    .with_solution(instance.x_star.clone())
    .with_beta_bar(instance.beta_bar())
}
