//! Built-in experiment presets, one per figure id.
//!
//! Every preset is an ordinary [`ExperimentSpec`], so `reproduce` is `run` or
//! `sweep` applied to a fixed list of panels. The parameters are listed in the
//! reproduction chapter of the guide, and a test keeps the two in step.

use pcbo::dynamics::{CboParams, Diffusion};
use pcbo::penalty::{ControllerConfig, ControllerMode, FeasibilityCheck, ThetaReset};
use pcbo::problems::{InitSpec, ProblemSelector};
use pcbo::RunConfig;

use crate::error::CliError;
use crate::spec::{ExperimentSpec, SweepAxes};

pub const FIGURE_IDS: [&str; 7] = ["fig1", "fig2", "fig4", "fig5", "fig6", "fig7", "fig8"];

/// Particle count standing in for the mean-field limit.
pub const MEAN_FIELD_PARTICLES: usize = 100_000;

pub struct Panel {
    pub label: String,
    pub spec: ExperimentSpec,
    /// Iterations after which particle positions are written out.
    pub snapshots: Vec<usize>,
}

pub struct Figure {
    pub id: &'static str,
    pub note: &'static str,
    pub panels: Vec<Panel>,
}

struct Setup {
    problem: ProblemSelector,
    n: usize,
    k: usize,
    lambda: f64,
    sigma: f64,
    dt: f64,
    beta0: f64,
    theta0: f64,
    eta_beta: f64,
    eta_theta: f64,
    check: FeasibilityCheck,
    mode: ControllerMode,
    init: Option<InitSpec>,
}

impl Setup {
    fn spec(&self) -> ExperimentSpec {
        ExperimentSpec {
            problem: self.problem.clone(),
            run: RunConfig {
                params: CboParams {
                    lambda: self.lambda,
                    sigma: self.sigma,
                    dt: self.dt,
                    alpha: 1e6,
                    diffusion: Diffusion::Isotropic,
                },
                controller: ControllerConfig {
                    beta0: self.beta0,
                    theta0: self.theta0,
                    eta_beta: self.eta_beta,
                    eta_theta: self.eta_theta,
                    mode: self.mode,
                    theta_reset: ThetaReset::MinTheta0,
                },
                check: self.check,
                n_particles: self.n,
                n_iterations: self.k,
                init: self.init,
                seed: 1,
                batch: None,
            },
            n_runs: 1,
            tol_inf: 0.1,
            sweep: None,
            output_dir: None,
        }
    }
}

fn panel(label: &str, spec: ExperimentSpec, snapshots: Vec<usize>) -> Panel {
    Panel {
        label: label.to_string(),
        spec,
        snapshots,
    }
}

/// `n` points spaced evenly in log scale from `lo` to `hi`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2 && lo > 0.0 && hi > lo);
    let (a, b) = (lo.log10(), hi.log10());
    (0..n)
        .map(|i| {
            let v = 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64);
            // round off powf noise so endpoints and powers of ten are exact
            (v * 1e12).round() / 1e12
        })
        .collect()
}

fn test1_setup(k: usize) -> Setup {
    Setup {
        problem: ProblemSelector::Test1,
        n: 10,
        k,
        lambda: 1.0,
        sigma: 10.0,
        dt: 0.01,
        beta0: 0.1,
        theta0: 1.0,
        eta_beta: 1.1,
        eta_theta: 1.1,
        check: FeasibilityCheck::GibbsWeighted,
        mode: ControllerMode::IncreaseOnly,
        init: Some(InitSpec::Gaussian {
            mean: 0.0,
            std_dev: 1.0,
        }),
    }
}

fn mean_field_setup(theta0: f64, eta_theta: f64, check: FeasibilityCheck) -> Setup {
    Setup {
        problem: ProblemSelector::Rastrigin2d,
        n: MEAN_FIELD_PARTICLES,
        k: 600,
        lambda: 1.0,
        sigma: 0.5,
        dt: 0.01,
        beta0: 0.1,
        theta0,
        eta_beta: 1.01,
        eta_theta,
        check,
        mode: ControllerMode::IncreaseOnly,
        init: None,
    }
}

fn sphere_torus_panels() -> Vec<Panel> {
    let problems = [
        ("j1-sphere", ProblemSelector::J1Sphere),
        ("j1-torus", ProblemSelector::J1Torus),
        ("j2-sphere", ProblemSelector::J2Sphere),
        ("j2-torus", ProblemSelector::J2Torus),
    ];
    let settings = [
        ("a", FeasibilityCheck::PlainMean, ControllerMode::IncreaseOnly),
        ("b", FeasibilityCheck::GibbsWeighted, ControllerMode::IncreaseOnly),
        ("c", FeasibilityCheck::GibbsWeighted, ControllerMode::DecreaseUntilFirstViolation),
    ];
    let mut panels = Vec::new();
    for (tag, check, mode) in settings {
        for (name, problem) in &problems {
            let mut spec = Setup {
                problem: problem.clone(),
                n: 200,
                k: 300,
                lambda: 1.0,
                sigma: 0.6,
                dt: 0.1,
                beta0: 1.0,
                theta0: 4.0,
                eta_beta: 1.1,
                eta_theta: 1.1,
                check,
                mode,
                init: None,
            }
            .spec();
            spec.n_runs = 500;
            spec.sweep = Some(SweepAxes {
                beta0: log_grid(1e-5, 1e3, 9),
                ..Default::default()
            });
            panels.push(panel(&format!("{tag}-{name}"), spec, vec![]));
        }
    }
    panels
}

/// The preset for a figure id.
pub fn figure(id: &str) -> Result<Figure, CliError> {
    let fig = match id {
        "fig1" => Figure {
            id: "fig1",
            note: "positions in snap-k*.csv at t = 0.5, 1, 1.5; beta and theta in trace.csv",
            panels: vec![panel("a", test1_setup(150).spec(), vec![50, 100, 150])],
        },
        "fig2" => Figure {
            id: "fig2",
            note: "plot violation, tolerance and beta from trace.csv against t",
            panels: vec![panel("a", test1_setup(300).spec(), vec![])],
        },
        "fig4" => Figure {
            id: "fig4",
            note: "mean-field panels use N = 1e5 particles by default; raise it with --particles",
            panels: vec![
                panel("a", mean_field_setup(16.0, 1.01, FeasibilityCheck::PlainMean).spec(), vec![]),
                panel("b", mean_field_setup(0.25, 1.01, FeasibilityCheck::PlainMean).spec(), vec![]),
                panel("c", mean_field_setup(16.0, 1.1, FeasibilityCheck::PlainMean).spec(), vec![]),
                panel("d", mean_field_setup(16.0, 1.01, FeasibilityCheck::GibbsWeighted).spec(), vec![]),
            ],
        },
        "fig5" => Figure {
            id: "fig5",
            note: "plot success_rate against beta0 from each panel table",
            panels: sphere_torus_panels(),
        },
        "fig6" => Figure {
            id: "fig6",
            note: "plot final_beta_over_beta_bar against beta0 / beta_bar from each panel table",
            panels: sphere_torus_panels(),
        },
        "fig7" => Figure {
            id: "fig7",
            note: "density snapshots in snap-k*.csv at t = 1..6; mean-field N = 1e5 by default; raise it with --particles",
            panels: vec![panel(
                "a",
                mean_field_setup(2.0, 1.01, FeasibilityCheck::PlainMean).spec(),
                (1..=6).map(|i| i * 100).collect(),
            )],
        },
        "fig8" => {
            let mut spec = Setup {
                problem: ProblemSelector::Qp { d: 10, seed: 1 },
                n: 500,
                k: 300,
                lambda: 1.0,
                sigma: 1.0,
                dt: 0.1,
                beta0: 0.1,
                theta0: 4.0,
                eta_beta: 1.05,
                eta_theta: 1.05,
                check: FeasibilityCheck::GibbsWeighted,
                mode: ControllerMode::IncreaseOnly,
                init: None,
            }
            .spec();
            spec.n_runs = 500;
            spec.tol_inf = 0.25;
            spec.sweep = Some(SweepAxes {
                sigma: log_grid(0.1, 3.0, 7),
                diffusion: vec![Diffusion::Isotropic, Diffusion::Anisotropic],
                dimension: vec![10, 15, 20],
                ..Default::default()
            });
            Figure {
                id: "fig8",
                note: "one table per (diffusion, dimension); plot success_rate against sigma",
                panels: vec![panel("a", spec, vec![])],
            }
        }
        other => return Err(CliError::UnknownFigure(other.to_string())),
    };
    Ok(fig)
}

#[cfg(test)]
fn kebab<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

/// One markdown table row per panel, as printed in the guide.
#[cfg(test)]
pub fn table_rows(fig: &Figure) -> Vec<String> {
    fig.panels
        .iter()
        .map(|p| {
            let s = &p.spec;
            let sweep = s.sweep.clone().unwrap_or_default();
            let or_sweep = |swept: bool, v: f64| {
                if swept { "sweep".to_string() } else { v.to_string() }
            };
            let problem = serde_json::to_value(&s.problem).unwrap()["name"]
                .as_str()
                .unwrap()
                .to_string();
            let diffusion = if sweep.diffusion.is_empty() {
                kebab(&s.run.params.diffusion)
            } else {
                "sweep".into()
            };
            let cells = [
                fig.id.to_string(),
                p.label.clone(),
                problem,
                s.run.n_particles.to_string(),
                s.run.n_iterations.to_string(),
                s.n_runs.to_string(),
                s.run.params.lambda.to_string(),
                or_sweep(!sweep.sigma.is_empty(), s.run.params.sigma),
                s.run.params.dt.to_string(),
                or_sweep(!sweep.beta0.is_empty(), s.run.controller.beta0),
                s.run.controller.theta0.to_string(),
                s.run.controller.eta_beta.to_string(),
                s.run.controller.eta_theta.to_string(),
                kebab(&s.run.check),
                diffusion,
                kebab(&s.run.controller.mode),
                s.tol_inf.to_string(),
            ];
            format!("| {} |", cells.join(" | "))
        })
        .collect()
}
