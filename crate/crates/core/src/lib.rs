//! Consensus-based optimization for constrained problems with an exact
//! penalty and an adaptive penalty parameter.
//!
//! A particle ensemble explores `R^d` by relaxing toward a Gibbs-weighted
//! consensus point of the penalized objective `j + beta r`, with
//! multiplicative noise that fades as the ensemble agrees. After every step
//! a feasibility check on the ensemble drives a small controller that raises
//! `beta` whenever the ensemble violates the constraint more than the current
//! tolerance allows, and tightens the tolerance when it does not.
//!
//! ```
//! use pcbo::{harness, problems, CboParams, ControllerConfig, RunConfig};
//!
//! let problem = problems::make_test1();
//! let config = RunConfig {
//!     params: CboParams { lambda: 1.0, sigma: 1.0, dt: 0.01, alpha: 1e6, diffusion: Default::default() },
//!     controller: ControllerConfig { beta0: 1.0, theta0: 4.0, eta_beta: 1.1, eta_theta: 1.1, mode: Default::default(), theta_reset: Default::default() },
//!     check: Default::default(),
//!     n_particles: 50,
//!     n_iterations: 300,
//!     init: None,
//!     seed: 7,
//!     batch: None,
//! };
//! let trace = harness::run(&problem, &config).unwrap();
//! assert_eq!(trace.records.len(), 300);
//! ```

pub mod dynamics;
pub mod error;
pub mod harness;
pub mod penalty;
pub mod problems;
pub mod rng;

pub use dynamics::{
    consensus_point, diffusion_scales, euler_maruyama_step, variance_functional, CboParams,
    ConsensusPoint, Diffusion, ParticleEnsemble,
};
pub use error::{Error, Result};
pub use harness::{run, success_check, success_rate, BatchSpec, RunConfig, RunTrace, UpdateScope};
pub use penalty::{
    controller_step, penalty_value, violation_gibbs, violation_plain_mean, ControllerConfig,
    ControllerMode, FeasibilityCheck, PenaltyController, ThetaReset,
};
pub use problems::{InitSpec, Problem, ProblemSelector};

// The guide's snippets run as doctests.
#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/consensus.md")]
    mod consensus {}
    #[doc = include_str!("../../../book/src/penalty.md")]
    mod penalty {}
    #[doc = include_str!("../../../book/src/problems.md")]
    mod problems {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
