//! Exact penalties and the adaptive penalty-parameter controller.
//!
//! The controller compares a measured constraint violation with the moving
//! tolerance `1/sqrt(theta)`. When the check holds the tolerance tightens
//! (`theta *= eta_theta`); when it fails the penalty parameter grows
//! (`beta *= eta_beta`) and the tolerance relaxes, never beyond its initial
//! value (`theta = min(theta / eta_theta, theta0)`).
//!
//! [`ControllerMode::DecreaseUntilFirstViolation`] adds a warm-start
//! heuristic for overestimated `beta0`: while no check has failed yet, every
//! passing check also divides `beta` by `eta_beta`.

use serde::{Deserialize, Serialize};

use crate::dynamics::{GibbsWeights, ParticleEnsemble};
use crate::error::{Error, Result};
use crate::problems::Problem;

/// `P(x, beta) = j(x) + beta r(x)`.
pub fn penalty_value(problem: &Problem, x: &[f64], beta: f64) -> Result<f64> {
    Ok(problem.evaluate(x)?.penalized(beta))
}

/// Plain ensemble average of `r`.
pub fn violation_plain_mean(ensemble: &ParticleEnsemble, problem: &Problem) -> Result<f64> {
    let penalties = penalties(ensemble, problem)?;
    Ok(plain_mean(&penalties))
}

/// Average of `r` under the Gibbs weights `exp(-alpha P(x_i, beta))` that
/// also define the consensus point.
pub fn violation_gibbs(
    ensemble: &ParticleEnsemble,
    problem: &Problem,
    beta: f64,
    alpha: f64,
) -> Result<f64> {
    let mut r = Vec::with_capacity(ensemble.len());
    let mut values = Vec::with_capacity(ensemble.len());
    for x in ensemble.particles() {
        let e = problem.evaluate(x)?;
        r.push(e.penalty);
        values.push(e.penalized(beta));
    }
    gibbs_mean(&r, &values, alpha)
}

fn penalties(ensemble: &ParticleEnsemble, problem: &Problem) -> Result<Vec<f64>> {
    if ensemble.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    ensemble
        .particles()
        .map(|x| problem.evaluate(x).map(|e| e.penalty))
        .collect()
}

pub(crate) fn plain_mean(penalties: &[f64]) -> f64 {
    penalties.iter().sum::<f64>() / penalties.len() as f64
}

pub(crate) fn gibbs_mean(penalties: &[f64], values: &[f64], alpha: f64) -> Result<f64> {
    let gibbs = GibbsWeights::new(values, alpha)?;
    let weighted: f64 = penalties.iter().zip(&gibbs.weights).map(|(r, w)| r * w).sum();
    Ok(weighted / gibbs.sum)
}

/// Which violation estimate feeds the controller.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum FeasibilityCheck {
    PlainMean,
    #[default]
    GibbsWeighted,
}

impl FeasibilityCheck {
    /// Measure from precomputed per-particle `r` and `P(., beta)` values.
    pub fn measure(&self, penalties: &[f64], values: &[f64], alpha: f64) -> Result<f64> {
        if penalties.is_empty() {
            return Err(Error::EmptyEnsemble);
        }
        match self {
            FeasibilityCheck::PlainMean => Ok(plain_mean(penalties)),
            FeasibilityCheck::GibbsWeighted => gibbs_mean(penalties, values, alpha),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ControllerMode {
    #[default]
    IncreaseOnly,
    DecreaseUntilFirstViolation,
}

/// How `theta` is reset after a failed check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ThetaReset {
    /// `min(theta / eta_theta, theta0)`: the tolerance jumps back to at least
    /// its initial value.
    #[default]
    MinTheta0,
    /// `max(theta / eta_theta, theta0)`: the tolerance relaxes by one factor
    /// and never exceeds its initial value.
    MaxTheta0,
}

/// Initial state and update factors of a [`PenaltyController`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerConfig {
    pub beta0: f64,
    pub theta0: f64,
    pub eta_beta: f64,
    pub eta_theta: f64,
    #[serde(default)]
    pub mode: ControllerMode,
    #[serde(default)]
    pub theta_reset: ThetaReset,
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta0.is_finite() && self.beta0 >= 0.0) {
            return Err(Error::invalid("beta0", "must be finite and non-negative"));
        }
        if !(self.theta0.is_finite() && self.theta0 > 0.0) {
            return Err(Error::invalid("theta0", "must be finite and positive"));
        }
        if !(self.eta_beta.is_finite() && self.eta_beta > 1.0) {
            return Err(Error::invalid("eta_beta", "must be finite and greater than 1"));
        }
        if !(self.eta_theta.is_finite() && self.eta_theta > 1.0) {
            return Err(Error::invalid("eta_theta", "must be finite and greater than 1"));
        }
        Ok(())
    }
}

/// State of the adaptive `(beta, theta)` update.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PenaltyController {
    pub beta: f64,
    pub theta: f64,
    pub theta0: f64,
    pub eta_beta: f64,
    pub eta_theta: f64,
    pub mode: ControllerMode,
    pub theta_reset: ThetaReset,
    /// Latched on the first failed check.
    pub has_violated: bool,
}

impl PenaltyController {
    pub fn new(config: ControllerConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            beta: config.beta0,
            theta: config.theta0,
            theta0: config.theta0,
            eta_beta: config.eta_beta,
            eta_theta: config.eta_theta,
            mode: config.mode,
            theta_reset: config.theta_reset,
            has_violated: false,
        })
    }

    /// Current tolerance `1/sqrt(theta)`.
    pub fn tolerance(&self) -> f64 {
        1.0 / self.theta.sqrt()
    }

    pub fn passes(&self, violation: f64) -> bool {
        violation <= self.tolerance()
    }

    /// Apply one update for the measured `violation`.
    #[must_use]
    pub fn step(self, violation: f64) -> Self {
        if self.passes(violation) {
            let decreasing =
                self.mode == ControllerMode::DecreaseUntilFirstViolation && !self.has_violated;
            Self {
                theta: self.eta_theta * self.theta,
                beta: if decreasing {
                    self.beta / self.eta_beta
                } else {
                    self.beta
                },
                ..self
            }
        } else {
            Self {
                beta: self.eta_beta * self.beta,
                theta: match self.theta_reset {
                    ThetaReset::MinTheta0 => (self.theta / self.eta_theta).min(self.theta0),
                    ThetaReset::MaxTheta0 => (self.theta / self.eta_theta).max(self.theta0),
                },
                has_violated: true,
                ..self
            }
        }
    }
}

/// Free-function form of [`PenaltyController::step`].
pub fn controller_step(controller: PenaltyController, violation: f64) -> PenaltyController {
    controller.step(violation)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{make_test1, sphere_penalty, InitSpec};
    use proptest::prelude::*;

    fn controller(beta: f64, theta: f64, theta0: f64, mode: ControllerMode) -> PenaltyController {
        PenaltyController {
            beta,
            theta,
            theta0,
            eta_beta: 1.1,
            eta_theta: 1.1,
            mode,
            theta_reset: ThetaReset::MinTheta0,
            has_violated: false,
        }
    }

    fn sphere_problem(d: usize) -> Problem {
        Problem::new("sphere", d, |x| x.iter().sum(), sphere_penalty, InitSpec::Uniform { low: -2.0, high: 2.0 })
    }

    #[test]
    fn penalty_value_examples() {
        let p = make_test1();
        assert!((penalty_value(&p, &[-1.5], 123.0).unwrap() - 5.0125).abs() < 1e-12);
        assert!((penalty_value(&p, &[-2.5], 0.0).unwrap() - 2.8125).abs() < 1e-12);
        assert_eq!(
            penalty_value(&p, &[0.5], 0.0).unwrap(),
            penalty_value(&p, &[0.5], 1e6).unwrap()
        );
        let bad = Problem::new("bad", 1, |_| f64::NAN, |_| 0.0, InitSpec::Uniform { low: 0.0, high: 1.0 });
        assert_eq!(
            penalty_value(&bad, &[2.0], 1.0),
            Err(Error::NonFiniteEvaluation { x: vec![2.0] })
        );
    }

    #[test]
    fn plain_mean_examples() {
        let p = sphere_problem(2);
        let feasible = ParticleEnsemble::from_rows(&[[1.0, 0.0], [0.0, -1.0]]).unwrap();
        assert_eq!(violation_plain_mean(&feasible, &p).unwrap(), 0.0);
        let mixed = ParticleEnsemble::from_rows(&[[0.0, 0.0], [2.0, 0.0]]).unwrap();
        assert_eq!(violation_plain_mean(&mixed, &p).unwrap(), 1.0);
        let single = ParticleEnsemble::from_rows(&[[3.0, 4.0]]).unwrap();
        assert_eq!(violation_plain_mean(&single, &p).unwrap(), 4.0);
    }

    #[test]
    fn gibbs_examples() {
        let p = sphere_problem(2);
        let feasible = ParticleEnsemble::from_rows(&[[1.0, 0.0], [0.0, -1.0]]).unwrap();
        assert_eq!(violation_gibbs(&feasible, &p, 3.0, 1e6).unwrap(), 0.0);
        let single = ParticleEnsemble::from_rows(&[[3.0, 4.0]]).unwrap();
        assert_eq!(violation_gibbs(&single, &p, 3.0, 1e6).unwrap(), 4.0);
        // r = (0, 1), P = (0, 1), alpha = ln 2 -> (1 * 1/2) / (1 + 1/2)
        let v = gibbs_mean(&[0.0, 1.0], &[0.0, 1.0], std::f64::consts::LN_2).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn branch_table() {
        // passes: theta grows, beta frozen
        let c = controller(2.0, 1.0, 1.0, ControllerMode::IncreaseOnly).step(0.5);
        assert!((c.theta - 1.1).abs() < 1e-15);
        assert_eq!(c.beta, 2.0);
        assert!(!c.has_violated);

        // fails: beta grows, theta relaxes but stays capped by theta0
        let c = controller(1.0, 4.0, 4.0, ControllerMode::IncreaseOnly).step(0.6);
        assert!((c.beta - 1.1).abs() < 1e-15);
        assert!((c.theta - 4.0 / 1.1).abs() < 1e-15);
        assert!(c.has_violated);

        let c = controller(1.0, 40.0, 4.0, ControllerMode::IncreaseOnly).step(1.0);
        assert_eq!(c.theta, 4.0);

        // heuristic mode before the first failure
        let c = PenaltyController { eta_beta: 2.0, ..controller(10.0, 1.0, 1.0, ControllerMode::DecreaseUntilFirstViolation) };
        let next = c.step(0.1);
        assert_eq!(next.beta, 5.0);
        assert!(next.theta > c.theta);

        // after the first failure it behaves like increase-only
        let latched = PenaltyController { has_violated: true, ..controller(3.0, 2.0, 4.0, ControllerMode::DecreaseUntilFirstViolation) };
        let plain = controller(3.0, 2.0, 4.0, ControllerMode::IncreaseOnly);
        for v in [0.1, 0.9, 5.0] {
            let (a, b) = (latched.step(v), plain.step(v));
            assert_eq!((a.beta, a.theta), (b.beta, b.theta));
        }
    }

    #[test]
    fn max_reset_relaxes_by_one_factor() {
        let c = PenaltyController { theta_reset: ThetaReset::MaxTheta0, ..controller(1.0, 40.0, 4.0, ControllerMode::IncreaseOnly) };
        assert!((c.step(1.0).theta - 40.0 / 1.1).abs() < 1e-12);
        let at_floor = PenaltyController { theta: 4.0, ..c };
        assert_eq!(at_floor.step(1.0).theta, 4.0);
    }

    #[test]
    fn growth_branch_is_not_capped() {
        let c = controller(1.0, 4.0, 4.0, ControllerMode::IncreaseOnly).step(0.0);
        assert!(c.theta > c.theta0);
    }

    #[test]
    fn config_validation() {
        let ok = ControllerConfig { beta0: 0.1, theta0: 1.0, eta_beta: 1.1, eta_theta: 1.1, mode: ControllerMode::IncreaseOnly, theta_reset: ThetaReset::MinTheta0 };
        assert!(PenaltyController::new(ok).is_ok());
        assert!(PenaltyController::new(ControllerConfig { eta_beta: 1.0, ..ok }).is_err());
        assert!(PenaltyController::new(ControllerConfig { theta0: 0.0, ..ok }).is_err());
        assert!(PenaltyController::new(ControllerConfig { beta0: -1.0, ..ok }).is_err());
    }

    #[test]
    fn empty_measurements_fail() {
        assert_eq!(FeasibilityCheck::PlainMean.measure(&[], &[], 1.0), Err(Error::EmptyEnsemble));
    }

    fn mode_strategy() -> impl Strategy<Value = ControllerMode> {
        prop_oneof![Just(ControllerMode::IncreaseOnly), Just(ControllerMode::DecreaseUntilFirstViolation)]
    }

    proptest! {
        #[test]
        fn tolerance_moves_with_the_check(
            violations in prop::collection::vec(0.0f64..3.0, 1..60),
            theta0 in 0.1f64..20.0,
            mode in mode_strategy(),
            theta_reset in prop_oneof![Just(ThetaReset::MinTheta0), Just(ThetaReset::MaxTheta0)],
        ) {
            let mut c = PenaltyController::new(ControllerConfig { beta0: 1.0, theta0, eta_beta: 1.3, eta_theta: 1.2, mode, theta_reset }).unwrap();
            for v in violations {
                let next = c.step(v);
                if c.passes(v) {
                    prop_assert!(next.tolerance() < c.tolerance());
                } else if theta_reset == ThetaReset::MinTheta0 {
                    prop_assert!(next.tolerance() > c.tolerance());
                    prop_assert!(next.theta <= theta0);
                } else {
                    prop_assert!(next.tolerance() >= c.tolerance());
                    prop_assert!(next.theta >= theta0.min(c.theta));
                    prop_assert!(next.theta <= c.theta);
                }
                c = next;
            }
        }

        #[test]
        fn beta_monotone_per_mode(
            violations in prop::collection::vec(0.0f64..3.0, 1..60),
            mode in mode_strategy(),
        ) {
            let mut c = PenaltyController::new(ControllerConfig { beta0: 5.0, theta0: 1.0, eta_beta: 1.5, eta_theta: 1.5, mode, theta_reset: ThetaReset::MinTheta0 }).unwrap();
            for v in violations {
                let next = c.step(v);
                match (mode, c.has_violated) {
                    (ControllerMode::DecreaseUntilFirstViolation, false) if c.passes(v) => prop_assert!(next.beta < c.beta),
                    _ => prop_assert!(next.beta >= c.beta),
                }
                c = next;
            }
        }

        #[test]
        fn estimators_bounded_by_extremes(
            rows in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 3), 1..20),
            beta in 0.0f64..10.0,
            alpha in 0.0f64..1e6,
        ) {
            let p = sphere_problem(3);
            let e = ParticleEnsemble::from_rows(&rows).unwrap();
            let r: Vec<f64> = rows.iter().map(|x| sphere_penalty(x)).collect();
            let (lo, hi) = (r.iter().copied().fold(f64::INFINITY, f64::min), r.iter().copied().fold(0.0, f64::max));
            let slack = 1e-12 * hi.max(1.0);
            let g = violation_gibbs(&e, &p, beta, alpha.max(1e-300)).unwrap();
            let m = violation_plain_mean(&e, &p).unwrap();
            prop_assert!(lo - slack <= g && g <= hi + slack);
            prop_assert!(lo - slack <= m && m <= hi + slack);
        }

        #[test]
        fn gibbs_with_zero_alpha_is_plain_mean(
            rows in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 2), 1..20),
            beta in 0.0f64..10.0,
        ) {
            let p = sphere_problem(2);
            let e = ParticleEnsemble::from_rows(&rows).unwrap();
            prop_assert_eq!(violation_gibbs(&e, &p, beta, 0.0).unwrap(), violation_plain_mean(&e, &p).unwrap());
        }

        #[test]
        fn penalty_affine_in_beta(x in -5.0f64..5.0, b1 in 0.0f64..100.0, b2 in 0.0f64..100.0) {
            let p = make_test1();
            let r = (p.penalty)(&[x]);
            let lhs = penalty_value(&p, &[x], b2).unwrap() - penalty_value(&p, &[x], b1).unwrap();
            let rhs = (b2 - b1) * r;
            let scale = penalty_value(&p, &[x], b2.max(b1)).unwrap().abs().max(1.0);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * scale);
        }
    }
}
