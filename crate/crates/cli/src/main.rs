//! `polaron`: numerical optimization toolkit for strong-coupling polaron
//! and bipolaron ground-state energies.
//!
//! Subcommands: `pekar`, `bipolaron`, `pimc`, `scan-binding`, `verify`,
//! `report`. Configuration comes from task defaults, an optional
//! `key = value` file (`--config`), and flags, in that precedence order.
//! Machine-readable results go to standard output and the output directory;
//! human summaries go to standard error. Exit codes: 0 success, 1 solver
//! no-convergence, 2 invalid input, 3 verification failure.

mod config;
mod manifest;
mod tasks;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use config::{parse_config, RunConfig, Task};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<polaron_pekar::PekarError> for CliError {
    fn from(e: polaron_pekar::PekarError) -> Self {
        match e {
            polaron_pekar::PekarError::NoConvergence { .. } => CliError::NoConvergence(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<polaron_bipolaron::BipolaronError> for CliError {
    fn from(e: polaron_bipolaron::BipolaronError) -> Self {
        match e {
            polaron_bipolaron::BipolaronError::NoConvergence(_) => {
                CliError::NoConvergence(e.to_string())
            }
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<polaron_pimc::PimcError> for CliError {
    fn from(e: polaron_pimc::PimcError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<polaron_binding::BindingError> for CliError {
    fn from(e: polaron_binding::BindingError) -> Self {
        match e {
            polaron_binding::BindingError::Pekar(polaron_pekar::PekarError::NoConvergence {
                ..
            }) => CliError::NoConvergence(e.to_string()),
            polaron_binding::BindingError::Bipolaron(
                polaron_bipolaron::BipolaronError::NoConvergence(_),
            ) => CliError::NoConvergence(e.to_string()),
            polaron_binding::BindingError::BracketFailure(msg) => CliError::NoConvergence(msg),
            other => CliError::Validation(other.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "polaron", version, about = "Polaron ground-state toolkit")]
struct Cli {
    /// Configuration file with `key = value` lines (flags override it).
    #[arg(long, global = true)]
    config: Option<String>,

    /// Output directory for results and manifests.
    #[arg(long, global = true)]
    out: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct GridFlags {
    /// Radial nodes of the quadrature grid.
    #[arg(long)]
    grid_n: Option<usize>,
    /// Truncation radius (coupling-rescaled units).
    #[arg(long)]
    grid_rmax: Option<f64>,
    /// Solver tolerance.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Single-polaron variational energy at coupling alpha.
    Pekar {
        #[arg(long)]
        alpha: Option<f64>,
        #[command(flatten)]
        grid: GridFlags,
    },
    /// Two-polaron variational energy at (alpha, U).
    Bipolaron {
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        u: Option<f64>,
        /// Angular nodes of the internal grid.
        #[arg(long)]
        angular_n: Option<usize>,
        #[command(flatten)]
        grid: GridFlags,
    },
    /// Path-integral Monte Carlo energy estimate.
    Pimc {
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        u: Option<f64>,
        /// Particle count (1 or 2).
        #[arg(long)]
        n: Option<usize>,
        /// Path period T.
        #[arg(long)]
        period: Option<f64>,
        /// Time slices M.
        #[arg(long)]
        slices: Option<usize>,
        #[arg(long)]
        sweeps: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Thermodynamic-integration points.
        #[arg(long)]
        schedule_points: Option<usize>,
        /// Validation mode: oscillator strength v (estimates the ground
        /// energy of -Delta + v |x|^2 instead of the polaron).
        #[arg(long)]
        validate_oscillator: Option<f64>,
        /// Repeat at twice the period and require agreement.
        #[arg(long)]
        check_finite_t: bool,
    },
    /// Binding-energy scan over U, or critical-ratio bisection.
    ScanBinding {
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        u_min: Option<f64>,
        #[arg(long)]
        u_max: Option<f64>,
        #[arg(long)]
        u_steps: Option<usize>,
        /// Bisect the critical repulsion ratio instead of scanning.
        #[arg(long)]
        find_critical: bool,
        /// Bisection tolerance on nu_c.
        #[arg(long, value_name = "TOL")]
        tol: Option<f64>,
        #[arg(long)]
        grid_n: Option<usize>,
        #[arg(long)]
        grid_rmax: Option<f64>,
        #[arg(long)]
        angular_n: Option<usize>,
        /// Standard-output format (csv or json).
        #[arg(long)]
        format: Option<String>,
    },
    /// Cross-verify the rigorous bounds (exit 3 on failure).
    Verify {
        /// Check suite: `default` (full desk-scale) or `quick`.
        #[arg(long)]
        suite: Option<String>,
        #[arg(long)]
        sweeps: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Consolidate the manifests of a results directory.
    Report {
        #[arg(long)]
        dir: String,
    },
}

fn build_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let task = match &cli.command {
        Command::Pekar { .. } => Task::Pekar,
        Command::Bipolaron { .. } => Task::Bipolaron,
        Command::Pimc { .. } => Task::Pimc,
        Command::ScanBinding { .. } => Task::ScanBinding,
        Command::Verify { .. } => Task::Verify,
        Command::Report { .. } => Task::Report,
    };
    let mut config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Io(format!("reading {path}: {e}")))?;
            let mut from_file = parse_config(&text)?;
            if from_file.task != task {
                // the subcommand wins; revalidate below
                from_file.task = task;
            }
            from_file
        }
        None => RunConfig::defaults(task),
    };
    if let Some(out) = &cli.out {
        config.out_dir = out.clone();
    }

    match &cli.command {
        Command::Pekar { alpha, grid } => {
            if let Some(a) = alpha {
                config.alpha = *a;
            }
            apply_grid(&mut config, grid);
        }
        Command::Bipolaron {
            alpha,
            u,
            angular_n,
            grid,
        } => {
            if let Some(a) = alpha {
                config.alpha = *a;
            }
            if let Some(u) = u {
                config.u = *u;
            }
            if let Some(n) = angular_n {
                config.angular_n = *n;
            }
            apply_grid(&mut config, grid);
            config.n_particles = 2;
        }
        Command::Pimc {
            alpha,
            u,
            n,
            period,
            slices,
            sweeps,
            seed,
            schedule_points,
            validate_oscillator,
            check_finite_t,
        } => {
            if let Some(a) = alpha {
                config.alpha = *a;
            }
            if let Some(u) = u {
                config.u = *u;
            }
            if let Some(n) = n {
                config.n_particles = *n;
            }
            if let Some(t) = period {
                config.period = *t;
            }
            if let Some(m) = slices {
                config.slices = *m;
            }
            if let Some(s) = sweeps {
                config.sweeps = *s;
            }
            if let Some(s) = seed {
                config.seed = *s;
            }
            if let Some(p) = schedule_points {
                config.schedule_points = *p;
            }
            if let Some(v) = validate_oscillator {
                config.oscillator = *v;
            }
            if *check_finite_t {
                config.check_finite_t = true;
            }
        }
        Command::ScanBinding {
            alpha,
            u_min,
            u_max,
            u_steps,
            find_critical,
            tol,
            grid_n,
            grid_rmax,
            angular_n,
            format,
        } => {
            if let Some(a) = alpha {
                config.alpha = *a;
            }
            if let Some(v) = u_min {
                config.u_min = *v;
            }
            if let Some(v) = u_max {
                config.u_max = *v;
            }
            if let Some(v) = u_steps {
                config.u_steps = *v;
            }
            if *find_critical {
                config.find_critical = true;
            }
            if let Some(v) = tol {
                config.critical_tol = *v;
            }
            if let Some(v) = grid_n {
                config.grid_n = *v;
            }
            if let Some(v) = grid_rmax {
                config.grid_rmax = *v;
            }
            if let Some(v) = angular_n {
                config.angular_n = *v;
            }
            if let Some(v) = format {
                config.format = v.clone();
            }
            config.n_particles = 2;
        }
        Command::Verify {
            suite,
            sweeps,
            seed,
        } => {
            if let Some(s) = suite {
                config.suite = s.clone();
            }
            if let Some(s) = sweeps {
                config.sweeps = *s;
            }
            if let Some(s) = seed {
                config.seed = *s;
            }
        }
        Command::Report { dir } => {
            config.dir = dir.clone();
        }
    }
    config.validate()?;
    Ok(config)
}

fn apply_grid(config: &mut RunConfig, grid: &GridFlags) {
    if let Some(n) = grid.grid_n {
        config.grid_n = n;
    }
    if let Some(r) = grid.grid_rmax {
        config.grid_rmax = r;
    }
    if let Some(t) = grid.tol {
        config.tol = t;
    }
}

fn init_thread_pool() {
    if let Ok(raw) = std::env::var("POLARON_THREADS") {
        if let Ok(n) = raw.trim().parse::<usize>() {
            if n > 0 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn main() -> ExitCode {
    init_thread_pool();
    let cli = Cli::parse();
    let config = match build_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match tasks::run_task(&config) {
        Ok(outcome) => {
            println!("{}", outcome.stdout_payload.trim_end());
            eprintln!("{}", outcome.summary);
            match outcome.verification_passed {
                Some(false) => ExitCode::from(3),
                _ => ExitCode::SUCCESS,
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                CliError::Parse(_) | CliError::Validation(_) => ExitCode::from(2),
                CliError::NoConvergence(_) => ExitCode::from(1),
                CliError::Io(_) => ExitCode::from(1),
            }
        }
    }
}
