//! Experiment definition files.

use std::path::{Path, PathBuf};

use pcbo::dynamics::Diffusion;
use pcbo::{ProblemSelector, RunConfig};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

fn one() -> usize {
    1
}

fn default_tol() -> f64 {
    0.1
}

/// A problem, a run configuration and optionally sweep axes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub problem: ProblemSelector,
    pub run: RunConfig,
    #[serde(default = "one")]
    pub n_runs: usize,
    /// Success threshold on the max-norm distance to the known solution.
    #[serde(default = "default_tol")]
    pub tol_inf: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepAxes>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

/// Values swept over. An empty axis keeps the base value from `run`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxes {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub beta0: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sigma: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diffusion: Vec<Diffusion>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dimension: Vec<usize>,
}

impl SweepAxes {
    pub fn is_empty(&self) -> bool {
        self.beta0.is_empty()
            && self.sigma.is_empty()
            && self.diffusion.is_empty()
            && self.dimension.is_empty()
    }
}

/// Command-line values that replace fields of a loaded spec.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub particles: Option<usize>,
    pub iters: Option<usize>,
    pub runs: Option<usize>,
    pub out: Option<PathBuf>,
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let spec: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            if path == "." {
                CliError::Spec(e.into_inner().to_string())
            } else {
                CliError::Spec(format!("field `{path}`: {}", e.into_inner()))
            }
        })?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Spec(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let field = |name: &str, e: pcbo::Error| CliError::Spec(format!("field `{name}`: {e}"));
        self.run.validate().map_err(|e| field("run", e))?;
        if self.n_runs == 0 {
            return Err(CliError::Spec("field `n_runs`: must be at least 1".into()));
        }
        if self.tol_inf.is_nan() || self.tol_inf <= 0.0 {
            return Err(CliError::Spec("field `tol_inf`: must be positive".into()));
        }
        if let Some(sweep) = &self.sweep {
            if sweep.is_empty() {
                return Err(CliError::Spec("field `sweep`: at least one axis must be non-empty".into()));
            }
            if !sweep.dimension.is_empty() && self.problem.with_dimension(2).is_none() {
                return Err(CliError::Spec(
                    "field `sweep.dimension`: the selected problem has a fixed dimension".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn apply(mut self, o: &Overrides) -> Result<Self, CliError> {
        if let Some(seed) = o.seed {
            self.run.seed = seed;
        }
        if let Some(n) = o.particles {
            self.run.n_particles = n;
        }
        if let Some(k) = o.iters {
            self.run.n_iterations = k;
        }
        if let Some(r) = o.runs {
            self.n_runs = r;
        }
        if let Some(out) = &o.out {
            self.output_dir = Some(out.clone());
        }
        self.validate()?;
        Ok(self)
    }
}
