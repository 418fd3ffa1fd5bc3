mod commands;
mod error;
mod figures;
mod spec;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::OutputDir;
use crate::error::CliError;
use crate::spec::{ExperimentSpec, Overrides};

/// Penalized consensus-based optimization experiments.
#[derive(Parser)]
#[command(name = "pcbo", version)]
struct Cli {
    /// Worker threads; falls back to CBO_THREADS, then to all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Base seed; run r uses seed + r.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: the spec's output_dir, else ./out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of particles N.
    #[arg(long)]
    particles: Option<usize>,
    /// Number of iterations K.
    #[arg(long)]
    iters: Option<usize>,
    /// Number of independent runs.
    #[arg(long)]
    runs: Option<usize>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            particles: self.particles,
            iters: self.iters,
            runs: self.runs,
            out: self.out.clone(),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment spec and write traces plus summary.json.
    Run {
        #[arg(long)]
        spec: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Success rates over the spec's sweep axes, one CSV table per
    /// (diffusion, dimension) pair.
    Sweep {
        #[arg(long)]
        spec: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Write the data behind a figure preset.
    Reproduce {
        /// One of fig1, fig2, fig4, fig5, fig6, fig7, fig8.
        #[arg(long)]
        figure: String,
        #[command(flatten)]
        common: Common,
    },
    /// Print a random QP instance with known solution as JSON.
    QpGen {
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn configure_threads(flag: Option<usize>) -> Result<(), CliError> {
    let threads = match flag {
        Some(n) => Some(n),
        None => match std::env::var("CBO_THREADS") {
            Ok(v) => Some(v.trim().parse().map_err(|_| {
                CliError::Usage(format!("CBO_THREADS must be a positive integer, got `{v}`"))
            })?),
            Err(_) => None,
        },
    };
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    Ok(())
}

fn load(path: &Path, common: &Common) -> Result<(ExperimentSpec, OutputDir), CliError> {
    let overrides = common.overrides();
    let spec = ExperimentSpec::load(path)?.apply(&overrides)?;
    let out = OutputDir::prepare(&commands::output_dir(&spec, &overrides))?;
    Ok((spec, out))
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    configure_threads(cli.threads)?;
    match cli.command {
        Command::Run { spec, common } => {
            let (spec, out) = load(&spec, &common)?;
            let summary = commands::cmd_run(&spec, &out, &[], None)?;
            if let Some(rate) = summary.success_rate {
                println!("success rate {rate} over {} run(s)", spec.n_runs);
            }
            println!("wrote {}", out.path().display());
        }
        Command::Sweep { spec, common } => {
            let (spec, out) = load(&spec, &common)?;
            if spec.sweep.is_none() {
                return Err(CliError::Spec("field `sweep`: required by the sweep command".into()));
            }
            let summary = commands::cmd_sweep(&spec, &out)?;
            for g in &summary.groups {
                println!("wrote {}", out.path().join(&g.table).display());
            }
        }
        Command::Reproduce { figure, common } => {
            figures::figure(&figure)?;
            let dir = common.out.clone().unwrap_or_else(|| PathBuf::from("out"));
            let out = OutputDir::prepare(&dir)?;
            commands::cmd_reproduce(&figure, &common.overrides(), &out)?;
            println!("wrote {}", out.path().join(&figure).display());
        }
        Command::QpGen { dim, seed, out } => commands::cmd_qp_gen(dim, seed, out.as_deref())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
