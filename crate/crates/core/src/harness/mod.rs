//! Driver for the penalized consensus iteration: initialization, consensus,
//! Euler-Maruyama step, feasibility check and controller update, repeated for
//! a fixed number of iterations, plus batching variants and multi-run
//! success statistics.
//!
//! All randomness is drawn from counter-based streams keyed by the run seed,
//! the iteration and the particle index (see [`crate::rng`]), so a run is
//! reproducible bit-for-bit regardless of the rayon thread count.

mod trace;

use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    consensus_of_indices, consensus_point, step_with_targets, variance_functional, CboParams,
    ConsensusPoint, ParticleEnsemble, PAR_MIN_PARTICLES,
};
use crate::error::{Error, Result};
use crate::penalty::{ControllerConfig, FeasibilityCheck, PenaltyController};
use crate::problems::{InitSpec, Problem};
use crate::rng::{self, IndexedStream, Purpose};

pub use trace::{write_positions_csv, write_trace_csv};

/// Which particles see which consensus point in an iteration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BatchSpec {
    /// Consensus from `size` particles drawn without replacement.
    RandomSubset { size: usize, update: UpdateScope },
    /// Random partition into `batches` groups of equal size; each group
    /// relaxes toward its own consensus.
    Partition { batches: usize },
}

/// Under [`BatchSpec::RandomSubset`], which particles are stepped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UpdateScope {
    All,
    Batch,
}

impl BatchSpec {
    pub fn validate(&self, n: usize) -> Result<()> {
        match *self {
            BatchSpec::RandomSubset { size, .. } if size == 0 || size > n => Err(Error::invalid(
                "batch.size",
                format!("must lie in 1..={n}, got {size}"),
            )),
            BatchSpec::Partition { batches } if batches == 0 || !n.is_multiple_of(batches) => Err(
                Error::invalid("batch.batches", format!("must divide N = {n}, got {batches}")),
            ),
            _ => Ok(()),
        }
    }
}

/// Everything that determines a run, besides the problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub params: CboParams,
    pub controller: ControllerConfig,
    #[serde(default)]
    pub check: FeasibilityCheck,
    pub n_particles: usize,
    pub n_iterations: usize,
    /// Overrides the problem's default initial distribution.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<InitSpec>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch: Option<BatchSpec>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_particles == 0 {
            return Err(Error::invalid("n_particles", "must be at least 1"));
        }
        if self.n_iterations == 0 {
            return Err(Error::invalid("n_iterations", "must be at least 1"));
        }
        self.params.validate()?;
        self.controller.validate()?;
        if let Some(init) = &self.init {
            init.validate()?;
        }
        if let Some(batch) = &self.batch {
            batch.validate(self.n_particles)?;
        }
        Ok(())
    }
}

/// One iteration of a run. `beta`, `theta` and `tolerance` are the values
/// the check was made against, before the controller update.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    pub t: f64,
    pub beta: f64,
    pub theta: f64,
    pub violation: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub consensus: Vec<f64>,
    /// Variance functional around the known solution, after the step.
    pub variance: Option<f64>,
}

/// Where and why a run stopped early.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunAbort {
    pub iteration: usize,
    pub reason: String,
}

#[derive(Clone, Debug)]
pub struct RunTrace {
    pub problem: String,
    pub seed: u64,
    pub dt: f64,
    pub initial_controller: PenaltyController,
    pub records: Vec<IterationRecord>,
    pub initial_variance: Option<f64>,
    /// Gibbs consensus of the final ensemble under the final `beta`.
    pub final_consensus: Vec<f64>,
    pub final_controller: PenaltyController,
    pub final_ensemble: ParticleEnsemble,
    pub duration: Duration,
    pub abort: Option<RunAbort>,
}

impl RunTrace {
    pub fn aborted(&self) -> bool {
        self.abort.is_some()
    }
}

/// Hook called with the ensemble after every step; used to take snapshots.
pub type Observer<'a> = &'a mut dyn FnMut(usize, &ParticleEnsemble);

/// Draw the initial ensemble for `seed`.
pub fn initial_ensemble(problem: &Problem, config: &RunConfig) -> Result<ParticleEnsemble> {
    let (n, d) = (config.n_particles, problem.dimension);
    let init = config.init.unwrap_or(problem.init);
    init.validate()?;
    let mut positions = vec![0.0; n * d];
    let mut stream = IndexedStream::new(config.seed, Purpose::Init, 0, d);
    for (i, row) in positions.chunks_mut(d).enumerate() {
        stream.seek(i as u64);
        match init {
            InitSpec::Uniform { low, high } => {
                stream.fill_uniform(row);
                row.iter_mut().for_each(|u| *u = low + (high - low) * *u);
            }
            InitSpec::Gaussian { mean, std_dev } => {
                stream.fill_normal(row);
                row.iter_mut().for_each(|z| *z = mean + std_dev * *z);
            }
        }
    }
    ParticleEnsemble::new(n, d, positions)
}

/// Standard normals for iteration `k`, particle `i` at rows `i * d..`.
fn iteration_noise(seed: u64, k: usize, n: usize, d: usize) -> Vec<f64> {
    const CHUNK: usize = 256;
    let mut noise = vec![0.0; n * d];
    let fill = |(c, chunk): (usize, &mut [f64])| {
        let mut stream = IndexedStream::new(seed, Purpose::Noise, k as u64, d);
        stream.seek((c * CHUNK) as u64);
        for row in chunk.chunks_mut(d) {
            stream.fill_normal(row);
        }
    };
    if n >= PAR_MIN_PARTICLES {
        noise.par_chunks_mut(CHUNK * d).enumerate().for_each(fill);
    } else {
        noise.chunks_mut(CHUNK * d).enumerate().for_each(fill);
    }
    noise
}

/// Objective and penalty of every particle, in particle order.
fn evaluate_all(problem: &Problem, ensemble: &ParticleEnsemble) -> Result<(Vec<f64>, Vec<f64>)> {
    let eval = |x: &[f64]| problem.evaluate(x).map(|e| (e.objective, e.penalty));
    let pairs: Vec<(f64, f64)> = if ensemble.len() >= PAR_MIN_PARTICLES {
        ensemble
            .as_slice()
            .par_chunks(ensemble.dim())
            .with_min_len(PAR_MIN_PARTICLES / 4)
            .map(eval)
            .collect::<Vec<_>>()
            .into_iter()
            .collect::<Result<_>>()?
    } else {
        ensemble.particles().map(eval).collect::<Result<_>>()?
    };
    Ok(pairs.into_iter().unzip())
}

/// Consensus points produced by a batching scheme in one iteration.
#[derive(Clone, Debug, PartialEq)]
pub enum BatchConsensus {
    Subset {
        indices: Vec<usize>,
        consensus: ConsensusPoint,
    },
    Partition {
        groups: Vec<Vec<usize>>,
        consensus: Vec<ConsensusPoint>,
    },
}

/// Consensus under a batching scheme. Subsets are drawn without replacement;
/// partitions are a fresh random shuffle cut into equal groups.
pub fn batched_consensus<R: rand::Rng + ?Sized>(
    ensemble: &ParticleEnsemble,
    values: &[f64],
    alpha: f64,
    spec: &BatchSpec,
    rng: &mut R,
) -> Result<BatchConsensus> {
    let n = ensemble.len();
    spec.validate(n)?;
    if values.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: values.len(),
        });
    }
    match *spec {
        BatchSpec::RandomSubset { size, .. } => {
            let mut indices = rand::seq::index::sample(rng, n, size).into_vec();
            indices.sort_unstable();
            let consensus = consensus_of_indices(ensemble, values, alpha, &indices)?;
            Ok(BatchConsensus::Subset { indices, consensus })
        }
        BatchSpec::Partition { batches } => {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(rng);
            let groups: Vec<Vec<usize>> = order
                .chunks(n / batches)
                .map(|g| {
                    let mut g = g.to_vec();
                    g.sort_unstable();
                    g
                })
                .collect();
            let consensus = groups
                .iter()
                .map(|g| consensus_of_indices(ensemble, values, alpha, g))
                .collect::<Result<_>>()?;
            Ok(BatchConsensus::Partition { groups, consensus })
        }
    }
}

fn penalized(objective: &[f64], penalty: &[f64], beta: f64) -> Vec<f64> {
    objective.iter().zip(penalty).map(|(j, r)| j + beta * r).collect()
}

/// Run the penalized consensus iteration for `config.n_iterations` steps.
///
/// Invalid configurations are errors. A numerical blow-up mid-run is not: the
/// trace is returned up to the failing iteration with [`RunTrace::abort`] set.
pub fn run(problem: &Problem, config: &RunConfig) -> Result<RunTrace> {
    run_observed(problem, config, &mut |_, _| {})
}

/// [`run`] with a callback invoked on the ensemble after every iteration.
pub fn run_observed(
    problem: &Problem,
    config: &RunConfig,
    observer: Observer<'_>,
) -> Result<RunTrace> {
    config.validate()?;
    let start = Instant::now();
    let (n, d) = (config.n_particles, problem.dimension);
    let params = config.params;
    let alpha = params.alpha;
    let reference = problem.known_solution.as_deref();
    if let Some(x) = reference {
        if x.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: x.len(),
            });
        }
    }
    if !params.decay_condition_holds(d) {
        log::debug!(
            "{}: 2 lambda > d sigma^2 does not hold (lambda = {}, sigma = {}, d = {d})",
            problem.name,
            params.lambda,
            params.sigma
        );
    }

    let initial_controller = PenaltyController::new(config.controller)?;
    let mut controller = initial_controller;
    let mut ensemble = initial_ensemble(problem, config)?;
    let initial_variance = reference
        .map(|x| variance_functional(&ensemble, x))
        .transpose()?;
    let mut records = Vec::with_capacity(config.n_iterations);
    let mut abort = None;

    let (mut objective, mut penalty) = match evaluate_all(problem, &ensemble) {
        Ok(v) => v,
        Err(e) => {
            return Ok(aborted_trace(
                problem, config, initial_controller, ensemble, records, initial_variance, 0, e, start,
            ))
        }
    };

    for k in 1..=config.n_iterations {
        let outcome = (|| -> Result<(ParticleEnsemble, IterationRecord, Vec<f64>, Vec<f64>)> {
            let values = penalized(&objective, &penalty, controller.beta);
            let noise = iteration_noise(config.seed, k, n, d);
            let (next, consensus) = match &config.batch {
                None => {
                    let c = consensus_point(&ensemble, &values, alpha)?;
                    let target = c.point.as_slice();
                    let next = step_with_targets(&ensemble, &params, &noise, |_| Some(target))?;
                    (next, c.point)
                }
                Some(spec) => {
                    let mut rng = rng::stream(config.seed, Purpose::Batch, k as u64);
                    match batched_consensus(&ensemble, &values, alpha, spec, &mut rng)? {
                        BatchConsensus::Subset { indices, consensus } => {
                            let scope_all = matches!(
                                spec,
                                BatchSpec::RandomSubset { update: UpdateScope::All, .. }
                            );
                            let mut member = vec![scope_all; n];
                            indices.iter().for_each(|&i| member[i] = true);
                            let target = consensus.point.as_slice();
                            let next = step_with_targets(&ensemble, &params, &noise, |i| {
                                member[i].then_some(target)
                            })?;
                            (next, consensus.point)
                        }
                        BatchConsensus::Partition { groups, consensus } => {
                            let mut owner = vec![0usize; n];
                            for (g, members) in groups.iter().enumerate() {
                                members.iter().for_each(|&i| owner[i] = g);
                            }
                            let next = step_with_targets(&ensemble, &params, &noise, |i| {
                                Some(consensus[owner[i]].point.as_slice())
                            })?;
                            // diagnostic: consensus of the whole ensemble
                            (next, consensus_point(&ensemble, &values, alpha)?.point)
                        }
                    }
                }
            };

            let (obj, pen) = evaluate_all(problem, &next)?;
            let check_values = penalized(&obj, &pen, controller.beta);
            let violation = config.check.measure(&pen, &check_values, alpha)?;
            let record = IterationRecord {
                k,
                t: k as f64 * params.dt,
                beta: controller.beta,
                theta: controller.theta,
                violation,
                tolerance: controller.tolerance(),
                passed: controller.passes(violation),
                consensus,
                variance: reference.map(|x| variance_functional(&next, x)).transpose()?,
            };
            Ok((next, record, obj, pen))
        })();

        match outcome {
            Ok((next, record, obj, pen)) => {
                controller = controller.step(record.violation);
                records.push(record);
                ensemble = next;
                objective = obj;
                penalty = pen;
                observer(k, &ensemble);
            }
            Err(e) => {
                abort = Some(RunAbort {
                    iteration: k,
                    reason: e.to_string(),
                });
                break;
            }
        }
    }

    let final_consensus = if abort.is_none() {
        let values = penalized(&objective, &penalty, controller.beta);
        consensus_point(&ensemble, &values, alpha)?.point
    } else {
        records.last().map(|r| r.consensus.clone()).unwrap_or_default()
    };
    Ok(RunTrace {
        problem: problem.name.clone(),
        seed: config.seed,
        dt: params.dt,
        initial_controller,
        records,
        initial_variance,
        final_consensus,
        final_controller: controller,
        final_ensemble: ensemble,
        duration: start.elapsed(),
        abort,
    })
}

#[allow(clippy::too_many_arguments)]
fn aborted_trace(
    problem: &Problem,
    config: &RunConfig,
    controller: PenaltyController,
    ensemble: ParticleEnsemble,
    records: Vec<IterationRecord>,
    initial_variance: Option<f64>,
    iteration: usize,
    error: Error,
    start: Instant,
) -> RunTrace {
    RunTrace {
        problem: problem.name.clone(),
        seed: config.seed,
        dt: config.params.dt,
        initial_controller: controller,
        records,
        initial_variance,
        final_consensus: Vec::new(),
        final_controller: controller,
        final_ensemble: ensemble,
        duration: start.elapsed(),
        abort: Some(RunAbort {
            iteration,
            reason: error.to_string(),
        }),
    }
}

/// Whether `|consensus - x_star|_inf <= tol_inf`.
pub fn success_check(final_consensus: &[f64], x_star: &[f64], tol_inf: f64) -> bool {
    assert_eq!(final_consensus.len(), x_star.len(), "dimension mismatch");
    final_consensus
        .iter()
        .zip(x_star)
        .all(|(a, b)| (a - b).abs() <= tol_inf)
}

/// Outcome of one run inside [`success_rate`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub seed: u64,
    pub success: bool,
    pub aborted: bool,
    pub final_beta: f64,
    pub final_consensus: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abort_reason: Option<String>,
    pub duration_secs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuccessReport {
    pub rate: f64,
    pub n_runs: usize,
    pub outcomes: Vec<RunOutcome>,
}

impl SuccessReport {
    pub fn aborted(&self) -> usize {
        self.outcomes.iter().filter(|o| o.aborted).count()
    }

    pub fn mean_final_beta(&self) -> f64 {
        let done: Vec<f64> = self
            .outcomes
            .iter()
            .filter(|o| !o.aborted)
            .map(|o| o.final_beta)
            .collect();
        if done.is_empty() {
            f64::NAN
        } else {
            done.iter().sum::<f64>() / done.len() as f64
        }
    }
}

/// Repeat a run with seeds `seed, seed + 1, ..` and count successes against
/// the problem's known solution. Aborted runs count as failures.
pub fn success_rate(
    problem: &Problem,
    config: &RunConfig,
    n_runs: usize,
    tol_inf: f64,
) -> Result<SuccessReport> {
    if n_runs == 0 {
        return Err(Error::invalid("n_runs", "must be at least 1"));
    }
    if tol_inf.is_nan() || tol_inf <= 0.0 {
        return Err(Error::invalid("tol_inf", "must be positive"));
    }
    let x_star = problem
        .known_solution
        .as_ref()
        .ok_or_else(|| Error::MissingSolution(problem.name.clone()))?;
    config.validate()?;
    let outcomes = (0..n_runs as u64)
        .into_par_iter()
        .map(|r| {
            let cfg = RunConfig {
                seed: config.seed.wrapping_add(r),
                ..config.clone()
            };
            let trace = run(problem, &cfg)?;
            Ok(outcome_of(&trace, x_star, tol_inf))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(outcomes))
}

/// Success summary of one finished trace.
pub fn outcome_of(trace: &RunTrace, x_star: &[f64], tol_inf: f64) -> RunOutcome {
    let aborted = trace.aborted();
    RunOutcome {
        seed: trace.seed,
        success: !aborted && success_check(&trace.final_consensus, x_star, tol_inf),
        aborted,
        final_beta: trace.final_controller.beta,
        final_consensus: trace.final_consensus.clone(),
        abort_reason: trace.abort.as_ref().map(|a| a.reason.clone()),
        duration_secs: trace.duration.as_secs_f64(),
    }
}

/// Collect per-run outcomes into a report.
pub fn summarize(outcomes: Vec<RunOutcome>) -> SuccessReport {
    let n_runs = outcomes.len();
    let successes = outcomes.iter().filter(|o| o.success).count();
    SuccessReport {
        rate: if n_runs == 0 { 0.0 } else { successes as f64 / n_runs as f64 },
        n_runs,
        outcomes,
    }
}
