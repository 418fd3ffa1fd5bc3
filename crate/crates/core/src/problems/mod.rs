//! Constrained test problems in penalty form.
//!
//! A [`Problem`] couples an objective `j` with a non-negative penalty `r`
//! that vanishes exactly on the feasible set, so the solver only ever sees
//! `P(x, beta) = j(x) + beta r(x)`.

mod benchmarks;
mod qp;

use std::fmt;
use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use benchmarks::{
    ackley_shift, make_j1, make_j1_sphere, make_j1_torus, make_j2, make_j2_sphere, make_j2_torus,
    make_quadratic, make_rastrigin2d, make_test1, rastrigin_constraint, sphere_penalty,
    torus_penalty,
};
pub use qp::{make_random_qp, qp_problem, QpInstance};

/// A scalar field on `R^d`.
pub type ScalarField = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Default absolute tolerance on `r` for feasibility membership.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// Distribution of the initial particles, applied per coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitSpec {
    Uniform { low: f64, high: f64 },
    Gaussian { mean: f64, std_dev: f64 },
}

impl InitSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            InitSpec::Uniform { low, high } => {
                if !(low.is_finite() && high.is_finite() && low < high) {
                    return Err(Error::invalid("init", "uniform box needs finite low < high"));
                }
            }
            InitSpec::Gaussian { mean, std_dev } => {
                if !(mean.is_finite() && std_dev.is_finite() && std_dev >= 0.0) {
                    return Err(Error::invalid("init", "gaussian needs finite mean and std_dev >= 0"));
                }
            }
        }
        Ok(())
    }
}

/// Objective and penalty at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation {
    pub objective: f64,
    pub penalty: f64,
}

impl Evaluation {
    pub fn penalized(&self, beta: f64) -> f64 {
        self.objective + beta * self.penalty
    }
}

/// A constrained minimization problem `min j(x)` subject to `r(x) = 0`.
#[derive(Clone)]
pub struct Problem {
    pub name: String,
    pub dimension: usize,
    pub objective: ScalarField,
    pub penalty: ScalarField,
    pub feasibility_tol: f64,
    pub known_solution: Option<Vec<f64>>,
    /// Penalty parameter above which the penalized and constrained problems
    /// share their global minimizer, when known (exactly or numerically).
    pub known_beta_bar: Option<f64>,
    pub init: InitSpec,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("dimension", &self.dimension)
            .field("known_solution", &self.known_solution)
            .field("known_beta_bar", &self.known_beta_bar)
            .field("init", &self.init)
            .finish_non_exhaustive()
    }
}

impl Problem {
    pub fn new(
        name: impl Into<String>,
        dimension: usize,
        objective: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        penalty: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        init: InitSpec,
    ) -> Self {
        Self {
            name: name.into(),
            dimension,
            objective: Arc::new(objective),
            penalty: Arc::new(penalty),
            feasibility_tol: FEASIBILITY_TOL,
            known_solution: None,
            known_beta_bar: None,
            init,
        }
    }

    pub fn with_solution(mut self, x_star: Vec<f64>) -> Self {
        self.known_solution = Some(x_star);
        self
    }

    pub fn with_beta_bar(mut self, beta_bar: f64) -> Self {
        self.known_beta_bar = Some(beta_bar);
        self
    }

    /// Evaluate `j` and `r`, rejecting non-finite results.
    pub fn evaluate(&self, x: &[f64]) -> Result<Evaluation> {
        if x.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                found: x.len(),
            });
        }
        let objective = (self.objective)(x);
        let penalty = (self.penalty)(x);
        if !objective.is_finite() || !penalty.is_finite() {
            return Err(Error::NonFiniteEvaluation { x: x.to_vec() });
        }
        Ok(Evaluation { objective, penalty })
    }

    pub fn is_feasible(&self, x: &[f64]) -> bool {
        (self.penalty)(x) <= self.feasibility_tol
    }
}

/// Names a built-in problem and its parameters; the JSON form used by
/// experiment files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProblemSelector {
    Test1,
    Rastrigin2d,
    J1Sphere,
    J1Torus,
    J2Sphere,
    J2Torus,
    Qp { d: usize, seed: u64 },
    QpFile { path: PathBuf },
    Quadratic { d: usize },
}

impl ProblemSelector {
    pub fn build(&self) -> Result<Problem> {
        Ok(match self {
            ProblemSelector::Test1 => make_test1(),
            ProblemSelector::Rastrigin2d => make_rastrigin2d(),
            ProblemSelector::J1Sphere => make_j1_sphere(),
            ProblemSelector::J1Torus => make_j1_torus(),
            ProblemSelector::J2Sphere => make_j2_sphere(),
            ProblemSelector::J2Torus => make_j2_torus(),
            ProblemSelector::Qp { d, seed } => make_random_qp(*d, *seed)?.0,
            ProblemSelector::QpFile { path } => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Io(format!("reading {}: {e}", path.display())))?;
                let instance = QpInstance::from_json(&text)?;
                qp_problem(Arc::new(instance), format!("qp-file:{}", path.display()))
            }
            ProblemSelector::Quadratic { d } => make_quadratic(*d)?,
        })
    }

    /// Same selector with the dimension replaced, for problems that scale.
    pub fn with_dimension(&self, d: usize) -> Option<Self> {
        match self {
            ProblemSelector::Qp { seed, .. } => Some(ProblemSelector::Qp { d, seed: *seed }),
            ProblemSelector::Quadratic { .. } => Some(ProblemSelector::Quadratic { d }),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selector_json_round_trip() {
        for sel in [
            ProblemSelector::Test1,
            ProblemSelector::J2Torus,
            ProblemSelector::Qp { d: 10, seed: 3 },
        ] {
            let s = serde_json::to_string(&sel).unwrap();
            assert_eq!(serde_json::from_str::<ProblemSelector>(&s).unwrap(), sel);
        }
        assert_eq!(
            serde_json::to_string(&ProblemSelector::J1Sphere).unwrap(),
            r#"{"name":"j1-sphere"}"#
        );
        let err = serde_json::from_str::<ProblemSelector>(r#"{"name":"foo"}"#).unwrap_err();
        assert!(err.to_string().contains("unknown variant `foo`"));
    }

    #[test]
    fn evaluate_rejects_wrong_dimension_and_nan() {
        let p = Problem::new("t", 1, |x| x[0].ln(), |_| 0.0, InitSpec::Uniform { low: 0.0, high: 1.0 });
        assert!(matches!(p.evaluate(&[1.0, 2.0]), Err(Error::DimensionMismatch { .. })));
        assert_eq!(
            p.evaluate(&[-1.0]),
            Err(Error::NonFiniteEvaluation { x: vec![-1.0] })
        );
    }
}
