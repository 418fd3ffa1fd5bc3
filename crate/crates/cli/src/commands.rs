use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use pcbo::dynamics::{Diffusion, ParticleEnsemble};
use pcbo::harness::{self, outcome_of, RunAbort, RunOutcome, RunTrace};
use pcbo::problems::{make_random_qp, Problem};
use pcbo::RunConfig;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::CliError;
use crate::figures::{self, Panel};
use crate::spec::{ExperimentSpec, Overrides};

/// A directory checked for writability before any work starts.
pub struct OutputDir {
    path: PathBuf,
}

impl OutputDir {
    pub fn prepare(path: &Path) -> Result<Self, CliError> {
        let fail = |e: std::io::Error| CliError::Output {
            path: path.to_path_buf(),
            reason: e.to_string(),
        };
        std::fs::create_dir_all(path).map_err(fail)?;
        let probe = path.join(".pcbo-write-check");
        File::create(&probe).map_err(fail)?;
        std::fs::remove_file(&probe).map_err(fail)?;
        Ok(Self {
            path: path.to_path_buf(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn subdir(&self, name: &str) -> Result<Self, CliError> {
        Self::prepare(&self.path.join(name))
    }

    fn create(&self, name: &str) -> Result<BufWriter<File>, CliError> {
        let path = self.path.join(name);
        File::create(&path)
            .map(BufWriter::new)
            .map_err(|e| CliError::Output {
                path,
                reason: e.to_string(),
            })
    }

    fn io_error(&self, e: impl ToString) -> CliError {
        CliError::Output {
            path: self.path.clone(),
            reason: e.to_string(),
        }
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), CliError> {
        let w = self.create(name)?;
        serde_json::to_writer_pretty(w, value).map_err(|e| self.io_error(e))
    }

    fn write_trace(&self, name: &str, trace: &RunTrace) -> Result<(), CliError> {
        harness::write_trace_csv(trace, self.create(name)?).map_err(|e| self.io_error(e))
    }

    fn write_positions(&self, name: &str, ensemble: &ParticleEnsemble) -> Result<(), CliError> {
        harness::write_positions_csv(ensemble, self.create(name)?).map_err(|e| self.io_error(e))
    }
}

pub fn output_dir(spec: &ExperimentSpec, overrides: &Overrides) -> PathBuf {
    overrides
        .out
        .clone()
        .or_else(|| spec.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"))
}

#[derive(Debug, Serialize)]
pub struct RunEntry {
    pub seed: u64,
    pub trace_file: String,
    pub final_consensus: Vec<f64>,
    pub final_beta: f64,
    pub final_theta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub success: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub abort: Option<RunAbort>,
    pub duration_secs: f64,
}

#[derive(Debug, Serialize)]
pub struct RunSummary {
    pub spec: ExperimentSpec,
    pub problem: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub success_rate: Option<f64>,
    pub runs: Vec<RunEntry>,
    pub elapsed_secs: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

fn trace_name(n_runs: usize, seed: u64) -> String {
    if n_runs == 1 {
        "trace.csv".into()
    } else {
        format!("trace-s{seed}.csv")
    }
}

/// Run `spec.n_runs` seeds, writing one trace CSV per run and `summary.json`.
/// Snapshots of the particle positions are written for the first seed.
pub fn cmd_run(
    spec: &ExperimentSpec,
    out: &OutputDir,
    snapshots: &[usize],
    note: Option<&str>,
) -> Result<RunSummary, CliError> {
    let start = Instant::now();
    let problem = spec.problem.build()?;
    let seeds: Vec<u64> = (0..spec.n_runs as u64)
        .map(|r| spec.run.seed.wrapping_add(r))
        .collect();
    let run_seed = |seed: u64, snaps: &mut Vec<(usize, ParticleEnsemble)>| {
        let cfg = RunConfig {
            seed,
            ..spec.run.clone()
        };
        harness::run_observed(&problem, &cfg, &mut |k, e| {
            if snapshots.contains(&k) {
                snaps.push((k, e.clone()));
            }
        })
    };
    let mut snaps = Vec::new();
    let first = run_seed(seeds[0], &mut snaps)?;
    let rest = seeds[1..]
        .par_iter()
        .map(|&s| run_seed(s, &mut Vec::new()))
        .collect::<Result<Vec<_>, _>>()?;
    let traces: Vec<RunTrace> = std::iter::once(first).chain(rest).collect();

    for (k, ensemble) in &snaps {
        out.write_positions(&format!("snap-k{k}.csv"), ensemble)?;
    }
    let mut runs = Vec::new();
    let mut successes = 0;
    for trace in &traces {
        let name = trace_name(spec.n_runs, trace.seed);
        out.write_trace(&name, trace)?;
        let success = problem
            .known_solution
            .as_ref()
            .map(|x| outcome_of(trace, x, spec.tol_inf).success);
        successes += usize::from(success == Some(true));
        runs.push(RunEntry {
            seed: trace.seed,
            trace_file: name,
            final_consensus: trace.final_consensus.clone(),
            final_beta: trace.final_controller.beta,
            final_theta: trace.final_controller.theta,
            success,
            abort: trace.abort.clone(),
            duration_secs: trace.duration.as_secs_f64(),
        });
    }
    let summary = RunSummary {
        spec: spec.clone(),
        problem: problem.name.clone(),
        success_rate: problem
            .known_solution
            .as_ref()
            .map(|_| successes as f64 / spec.n_runs as f64),
        runs,
        elapsed_secs: start.elapsed().as_secs_f64(),
        note: note.map(str::to_string),
    };
    out.write_json("summary.json", &summary)?;
    if let Some(a) = summary.runs.iter().find_map(|r| r.abort.as_ref()) {
        return Err(CliError::Aborted(format!(
            "non-finite state at iteration {}: {}",
            a.iteration, a.reason
        )));
    }
    Ok(summary)
}

#[derive(Debug, Serialize)]
pub struct SweepRow {
    pub beta0: f64,
    pub sigma: f64,
    pub success_rate: f64,
    pub n_runs: usize,
    pub aborted: usize,
    pub mean_final_beta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_bar: Option<f64>,
    pub outcomes: Vec<RunOutcome>,
}

#[derive(Debug, Serialize)]
pub struct SweepGroup {
    pub diffusion: Diffusion,
    pub dimension: usize,
    pub problem: String,
    pub table: String,
    pub rows: Vec<SweepRow>,
}

#[derive(Debug, Serialize)]
pub struct SweepSummary {
    pub spec: ExperimentSpec,
    pub groups: Vec<SweepGroup>,
    pub elapsed_secs: f64,
}

fn kebab(d: Diffusion) -> &'static str {
    match d {
        Diffusion::Isotropic => "isotropic",
        Diffusion::Anisotropic => "anisotropic",
    }
}

fn sweep_problems(spec: &ExperimentSpec) -> Result<Vec<Problem>, CliError> {
    let axes = spec.sweep.clone().unwrap_or_default();
    if axes.dimension.is_empty() {
        return Ok(vec![spec.problem.build()?]);
    }
    axes.dimension
        .iter()
        .map(|&d| {
            let sel = spec.problem.with_dimension(d).ok_or_else(|| {
                CliError::Spec("field `sweep.dimension`: the selected problem has a fixed dimension".into())
            })?;
            Ok(sel.build()?)
        })
        .collect()
}

/// Success statistics over the Cartesian product of the sweep axes. Writes
/// one CSV table per (diffusion, dimension) pair and `summary.json`.
pub fn cmd_sweep(spec: &ExperimentSpec, out: &OutputDir) -> Result<SweepSummary, CliError> {
    let start = Instant::now();
    let axes = spec
        .sweep
        .clone()
        .ok_or_else(|| CliError::Spec("field `sweep`: required by the sweep command".into()))?;
    let base = &spec.run;
    let or_base = |axis: &Vec<f64>, v: f64| if axis.is_empty() { vec![v] } else { axis.clone() };
    let diffusions = if axes.diffusion.is_empty() {
        vec![base.params.diffusion]
    } else {
        axes.diffusion.clone()
    };
    let problems = sweep_problems(spec)?;

    let mut groups = Vec::new();
    for &diffusion in &diffusions {
        for problem in &problems {
            let d = problem.dimension;
            let table = format!("sweep-{}-d{d}.csv", kebab(diffusion));
            let mut rows = Vec::new();
            for &beta0 in &or_base(&axes.beta0, base.controller.beta0) {
                for &sigma in &or_base(&axes.sigma, base.params.sigma) {
                    let mut cfg = base.clone();
                    cfg.params.diffusion = diffusion;
                    cfg.params.sigma = sigma;
                    cfg.controller.beta0 = beta0;
                    log::info!("{}: {} d={d} beta0={beta0} sigma={sigma}", problem.name, kebab(diffusion));
                    let report = harness::success_rate(problem, &cfg, spec.n_runs, spec.tol_inf)?;
                    rows.push(SweepRow {
                        beta0,
                        sigma,
                        success_rate: report.rate,
                        n_runs: report.n_runs,
                        aborted: report.aborted(),
                        mean_final_beta: report.mean_final_beta(),
                        beta_bar: problem.known_beta_bar,
                        outcomes: report.outcomes,
                    });
                }
            }
            write_table(out, &table, &rows)?;
            groups.push(SweepGroup {
                diffusion,
                dimension: d,
                problem: problem.name.clone(),
                table,
                rows,
            });
        }
    }
    let summary = SweepSummary {
        spec: spec.clone(),
        groups,
        elapsed_secs: start.elapsed().as_secs_f64(),
    };
    out.write_json("summary.json", &summary)?;
    Ok(summary)
}

fn write_table(out: &OutputDir, name: &str, rows: &[SweepRow]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out.create(name)?);
    let err = |e: csv::Error| out.io_error(e);
    w.write_record([
        "beta0",
        "sigma",
        "success_rate",
        "n_runs",
        "aborted",
        "mean_final_beta",
        "final_beta_over_beta_bar",
    ])
    .map_err(err)?;
    for r in rows {
        let ratio = r
            .beta_bar
            .filter(|b| *b > 0.0)
            .map(|b| (r.mean_final_beta / b).to_string())
            .unwrap_or_default();
        w.write_record([
            r.beta0.to_string(),
            r.sigma.to_string(),
            r.success_rate.to_string(),
            r.n_runs.to_string(),
            r.aborted.to_string(),
            r.mean_final_beta.to_string(),
            ratio,
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| out.io_error(e))
}

#[derive(Serialize)]
struct FigureSummary<'a> {
    figure: &'a str,
    note: &'a str,
    panels: Vec<String>,
}

/// Write the data behind one figure, one subdirectory per panel.
pub fn cmd_reproduce(id: &str, overrides: &Overrides, out: &OutputDir) -> Result<(), CliError> {
    let fig = figures::figure(id)?;
    let root = out.subdir(fig.id)?;
    let mut labels = Vec::new();
    for Panel {
        label,
        spec,
        snapshots,
    } in fig.panels
    {
        let spec = spec.apply(&Overrides {
            out: None,
            ..overrides.clone()
        })?;
        let dir = root.subdir(&label)?;
        log::info!("{} panel {label}", fig.id);
        if spec.sweep.is_some() {
            cmd_sweep(&spec, &dir)?;
        } else {
            cmd_run(&spec, &dir, &snapshots, Some(fig.note))?;
        }
        labels.push(label);
    }
    root.write_json(
        "figure.json",
        &FigureSummary {
            figure: fig.id,
            note: fig.note,
            panels: labels,
        },
    )
}

/// Serialize a random QP instance to `out` (a file path) or stdout.
pub fn cmd_qp_gen(d: usize, seed: u64, out: Option<&Path>) -> Result<(), CliError> {
    let (_, instance) = make_random_qp(d, seed)?;
    let text = instance.to_json();
    match out {
        Some(path) => std::fs::write(path, text + "\n").map_err(|e| CliError::Output {
            path: path.to_path_buf(),
            reason: e.to_string(),
        }),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}
