//! Task runners: solve, persist results + manifest, emit machine output on
//! standard output and a human summary on standard error.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;
use serde_json::json;

use polaron_binding::{
    find_critical_ratio, scan_binding, verify_bounds, BindingContext, Method,
    VerificationInputs,
};
use polaron_bipolaron::{InternalGrid, ScfOptions};
use polaron_core::CouplingParams;
use polaron_pekar::SolverOptions;
use polaron_pimc::{
    estimate_energy, finite_t_check, oscillator_validation, EstimateOptions, SampleOptions,
};

use crate::config::{RunConfig, Task};
use crate::manifest::{config_hash, emit_report, now_unix, write_atomic, RunManifest};
use crate::CliError;

/// The stable result schema shared by the solver tasks.
#[derive(Debug, Serialize)]
pub struct ResultDocument {
    pub task: String,
    pub params: ParamsDoc,
    pub energy: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stderr: Option<f64>,
    pub components: ComponentsDoc,
    pub convergence: ConvergenceDoc,
    pub meta: MetaDoc,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub binding: Option<BindingDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schedule: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oscillator: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub finite_t: Option<serde_json::Value>,
}

#[derive(Debug, Serialize)]
pub struct ParamsDoc {
    pub alpha: f64,
    pub u: f64,
    pub n: usize,
}

#[derive(Debug, Serialize)]
pub struct ComponentsDoc {
    pub kinetic: f64,
    pub attraction: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub repulsion: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct ConvergenceDoc {
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Serialize)]
pub struct MetaDoc {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub grid: serde_json::Value,
    pub version: String,
}

#[derive(Debug, Serialize)]
pub struct BindingDoc {
    pub e1: f64,
    pub delta_e: f64,
    pub unbound: bool,
}

pub struct TaskOutcome {
    pub result_files: Vec<PathBuf>,
    pub stdout_payload: String,
    pub summary: String,
    pub diagnostics: serde_json::Value,
    /// Verification outcome (verify task only).
    pub verification_passed: Option<bool>,
}

fn version() -> String {
    env!("CARGO_PKG_VERSION").to_string()
}

fn result_path(config: &RunConfig, hash: &str, ext: &str) -> PathBuf {
    Path::new(&config.out_dir).join(format!("{}-{}.{ext}", config.task.name(), &hash[..8]))
}

fn to_pretty(value: &impl Serialize) -> Result<String, CliError> {
    serde_json::to_string_pretty(value).map_err(|e| CliError::Io(format!("serializing: {e}")))
}

/// Run a validated configuration to completion: results + manifest on disk.
pub fn run_task(config: &RunConfig) -> Result<TaskOutcome, CliError> {
    let started = now_unix();
    let snapshot = config.emit();
    let hash = config_hash(&snapshot);
    let outcome = match config.task {
        Task::Pekar => run_pekar(config, &hash)?,
        Task::Bipolaron => run_bipolaron(config, &hash)?,
        Task::Pimc => run_pimc(config, &hash)?,
        Task::ScanBinding => run_scan(config, &hash)?,
        Task::Verify => run_verify(config, &hash)?,
        Task::Report => run_report(config)?,
    };
    if config.task != Task::Report {
        let manifest = RunManifest {
            config: snapshot,
            config_hash: hash,
            version: version(),
            started_unix: started,
            finished_unix: now_unix(),
            result_files: outcome
                .result_files
                .iter()
                .map(|p| p.display().to_string())
                .collect(),
            diagnostics: outcome.diagnostics.clone(),
        };
        manifest.write(Path::new(&config.out_dir))?;
    }
    Ok(outcome)
}

fn run_pekar(config: &RunConfig, hash: &str) -> Result<TaskOutcome, CliError> {
    let grid = polaron_core::build_radial_grid(config.grid_rmax, config.grid_n)
        .map_err(|e| CliError::Validation(e.to_string()))?
        .into_shared();
    let mut opts = SolverOptions::default();
    opts.tol = config.tol;
    let res = polaron_pekar::solve_pekar(config.alpha, &grid, &opts)?;
    let doc = ResultDocument {
        task: "pekar".into(),
        params: ParamsDoc {
            alpha: config.alpha,
            u: 0.0,
            n: 1,
        },
        energy: res.energy,
        stderr: None,
        components: ComponentsDoc {
            kinetic: res.kinetic,
            attraction: res.attraction,
            repulsion: None,
        },
        convergence: ConvergenceDoc {
            iterations: res.iterations,
            residual: res.residual,
        },
        meta: MetaDoc {
            seed: None,
            grid: json!({"r_max": config.grid_rmax, "n_points": config.grid_n}),
            version: version(),
        },
        binding: None,
        schedule: None,
        oscillator: None,
        finite_t: None,
    };
    let payload = to_pretty(&doc)?;
    let path = result_path(config, hash, "json");
    write_atomic(&path, &payload)?;
    Ok(TaskOutcome {
        result_files: vec![path],
        summary: format!(
            "pekar: alpha = {}, energy = {:.6} ({} iterations, residual {:.2e})",
            config.alpha, res.energy, res.iterations, res.residual
        ),
        diagnostics: json!({"iterations": res.iterations, "residual": res.residual}),
        stdout_payload: payload,
        verification_passed: None,
    })
}

fn scf_options(config: &RunConfig) -> ScfOptions {
    let mut opts = ScfOptions::default();
    opts.tol = config.tol;
    opts
}

fn run_bipolaron(config: &RunConfig, hash: &str) -> Result<TaskOutcome, CliError> {
    let grid = Arc::new(
        InternalGrid::new(config.grid_rmax, config.grid_n, config.angular_n)
            .map_err(|e| CliError::Validation(e.to_string()))?,
    );
    let params = CouplingParams::pair(config.alpha, config.u)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let opts = scf_options(config);
    let res = polaron_bipolaron::scf_minimize(&params, &grid, &opts)?;

    // binding diagnostics against the single-polaron reference, with the
    // admissible separated pair as the break-up bound
    let pekar_grid = polaron_core::build_radial_grid(20.0, 2000)
        .map_err(|e| CliError::Validation(e.to_string()))?
        .into_shared();
    let e1 = polaron_pekar::solve_pekar(config.alpha, &pekar_grid, &SolverOptions::default())?
        .energy;
    let e2 = res.energy.min(2.0 * e1);
    let delta_e = 2.0 * e1 - e2;
    let unbound = delta_e <= polaron_binding::binding_threshold(config.alpha);

    let doc = ResultDocument {
        task: "bipolaron".into(),
        params: ParamsDoc {
            alpha: config.alpha,
            u: config.u,
            n: 2,
        },
        energy: res.energy,
        stderr: None,
        components: ComponentsDoc {
            kinetic: res.kinetic,
            attraction: res.attraction,
            repulsion: Some(res.repulsion_expect),
        },
        convergence: ConvergenceDoc {
            iterations: res.scf_iterations,
            residual: res.scf_residual,
        },
        meta: MetaDoc {
            seed: None,
            grid: json!({
                "r_max": config.grid_rmax,
                "n_r": config.grid_n,
                "n_u": config.angular_n,
            }),
            version: version(),
        },
        binding: Some(BindingDoc {
            e1,
            delta_e,
            unbound,
        }),
        schedule: None,
        oscillator: None,
        finite_t: None,
    };
    let payload = to_pretty(&doc)?;
    let path = result_path(config, hash, "json");
    write_atomic(&path, &payload)?;
    Ok(TaskOutcome {
        result_files: vec![path],
        summary: format!(
            "bipolaron: (alpha, U) = ({}, {}), energy = {:.6}, delta_e = {:.6}{}",
            config.alpha,
            config.u,
            res.energy,
            delta_e,
            if unbound { " (unbound)" } else { "" }
        ),
        diagnostics: json!({
            "scf_iterations": res.scf_iterations,
            "scf_residual": res.scf_residual,
        }),
        stdout_payload: payload,
        verification_passed: None,
    })
}

fn sample_options(config: &RunConfig) -> SampleOptions {
    SampleOptions {
        alpha: config.alpha,
        u: config.u,
        n_particles: config.n_particles,
        period: config.period,
        n_slices: config.slices,
        sweeps: config.sweeps,
        seed: config.seed,
        external_harmonic: None,
        burn_in_fraction: 0.25,
        n_blocks: 32,
    }
}

fn run_pimc(config: &RunConfig, hash: &str) -> Result<TaskOutcome, CliError> {
    let mc = sample_options(config);

    if config.oscillator > 0.0 {
        let check = oscillator_validation(config.oscillator, &mc)?;
        let payload = to_pretty(&check)?;
        let path = result_path(config, hash, "json");
        write_atomic(&path, &payload)?;
        return Ok(TaskOutcome {
            result_files: vec![path],
            summary: format!(
                "pimc oscillator validation: E = {:.4} +- {:.4} vs {:.4} ({})",
                check.energy,
                check.stderr,
                check.expected,
                if check.consistent { "consistent" } else { "inconsistent" }
            ),
            diagnostics: to_diag(&check),
            stdout_payload: payload,
            verification_passed: None,
        });
    }

    let opts = EstimateOptions {
        alpha: config.alpha,
        u: config.u,
        n_particles: config.n_particles,
        schedule_points: config.schedule_points,
        schedule: None,
        mc,
    };
    let est = estimate_energy(&opts)?;
    let finite_t = if config.check_finite_t {
        Some(finite_t_check(&opts)?)
    } else {
        None
    };

    let doc = ResultDocument {
        task: "pimc".into(),
        params: ParamsDoc {
            alpha: config.alpha,
            u: config.u,
            n: config.n_particles,
        },
        energy: est.energy,
        stderr: Some(est.stderr),
        components: ComponentsDoc {
            kinetic: f64::NAN,
            attraction: f64::NAN,
            repulsion: None,
        },
        convergence: ConvergenceDoc {
            iterations: config.sweeps,
            residual: est.stderr,
        },
        meta: MetaDoc {
            seed: Some(config.seed),
            grid: json!({"period": config.period, "slices": config.slices}),
            version: version(),
        },
        binding: None,
        schedule: Some(serde_json::to_value(&est).map_err(|e| CliError::Io(e.to_string()))?),
        oscillator: None,
        finite_t: finite_t
            .as_ref()
            .map(|f| serde_json::to_value(f).expect("finite-T check serializes")),
    };
    let payload = to_pretty(&doc)?;
    let path = result_path(config, hash, "json");
    write_atomic(&path, &payload)?;
    Ok(TaskOutcome {
        result_files: vec![path],
        summary: format!(
            "pimc: alpha = {}, U = {}, N = {}: E = {:.5} +- {:.5}{}",
            config.alpha,
            config.u,
            config.n_particles,
            est.energy,
            est.stderr,
            if est.insufficient_statistics {
                " (insufficient statistics)"
            } else {
                ""
            }
        ),
        diagnostics: json!({
            "stderr": est.stderr,
            "stat_error": est.stat_error,
            "quadrature_error": est.quadrature_error,
            "insufficient_statistics": est.insufficient_statistics,
            "monotone_coupling": est.monotone_coupling,
        }),
        stdout_payload: payload,
        verification_passed: None,
    })
}

fn to_diag(value: &impl Serialize) -> serde_json::Value {
    serde_json::to_value(value).unwrap_or(serde_json::Value::Null)
}

fn binding_context(config: &RunConfig) -> BindingContext {
    let mut ctx = BindingContext::default();
    ctx.grid_r_max = config.grid_rmax;
    ctx.grid_n_r = config.grid_n;
    ctx.grid_n_u = config.angular_n;
    ctx.scf_opts = scf_options(config);
    ctx
}

fn run_scan(config: &RunConfig, hash: &str) -> Result<TaskOutcome, CliError> {
    let mut ctx = binding_context(config);
    let scan = if config.find_critical {
        find_critical_ratio(&mut ctx, config.alpha, config.critical_tol)?
    } else {
        let us: Vec<f64> = (0..config.u_steps)
            .map(|i| {
                config.u_min
                    + (config.u_max - config.u_min) * i as f64 / (config.u_steps - 1) as f64
            })
            .collect();
        scan_binding(&mut ctx, config.alpha, &us, Method::Pt)?
    };
    let csv = polaron_binding::rows_to_csv(&scan.rows);
    let csv_path = result_path(config, hash, "csv");
    write_atomic(&csv_path, &csv)?;
    let summary_doc = json!({
        "task": "scan-binding",
        "params": {"alpha": config.alpha, "u": serde_json::Value::Null, "n": 2},
        "nu_c": scan.nu_c,
        "bracket": scan.bracket,
        "tolerance": scan.tolerance,
        "rows": scan.rows.len(),
        "rows_csv": csv_path.display().to_string(),
        "meta": {"version": version()},
    });
    let json_path = Path::new(&config.out_dir).join(format!(
        "{}-{}-summary.json",
        config.task.name(),
        &hash[..8]
    ));
    let payload = serde_json::to_string_pretty(&summary_doc)
        .map_err(|e| CliError::Io(format!("serializing: {e}")))?;
    write_atomic(&json_path, &payload)?;
    let stdout_payload = if config.format == "csv" {
        csv
    } else {
        payload
    };
    Ok(TaskOutcome {
        result_files: vec![csv_path, json_path],
        summary: match scan.nu_c {
            Some(nu) => format!(
                "scan-binding: alpha = {}, critical ratio nu_c = {:.4} (bracket {:?})",
                config.alpha, nu, scan.bracket
            ),
            None => format!(
                "scan-binding: alpha = {}, {} rows over [{}, {}]",
                config.alpha,
                scan.rows.len(),
                config.u_min,
                config.u_max
            ),
        },
        diagnostics: json!({"rows": scan.rows.len(), "nu_c": scan.nu_c}),
        stdout_payload,
        verification_passed: None,
    })
}

fn run_verify(config: &RunConfig, hash: &str) -> Result<TaskOutcome, CliError> {
    let quick = config.suite == "quick";
    let mut ctx = binding_context(config);
    if quick {
        ctx.pekar_grid_n = 400;
        ctx.grid_n_r = 48;
        ctx.grid_n_u = 8;
    }

    // variational references
    let e1_unit = ctx
        .single_energy(1.0)
        .map_err(|e| CliError::Validation(e.to_string()))?;

    // critical ratio and the binding scan (bound and unbound rows)
    let crit = find_critical_ratio(&mut ctx, 1.0, config.critical_tol)?;
    let nu_c = crit.nu_c.expect("bisection reports nu_c");
    let us = [0.0, 1.0, 2.0, 1.05 * nu_c, 1.2 * nu_c, 5.0];
    let scan = scan_binding(&mut ctx, 1.0, &us, Method::Pt)?;

    // path-integral single-polaron energies
    let alphas: &[f64] = if quick {
        &[0.25, 0.5]
    } else {
        &[0.25, 0.5, 1.0, 2.0]
    };
    let mut pimc_single = Vec::new();
    for &alpha in alphas {
        let mut mc = sample_options(config);
        if quick {
            mc.period = 16.0;
            mc.n_slices = 256;
            mc.sweeps = config.sweeps.min(20_000);
        }
        mc.alpha = alpha;
        mc.u = 0.0;
        mc.n_particles = 1;
        let opts = EstimateOptions {
            alpha,
            u: 0.0,
            n_particles: 1,
            schedule_points: config.schedule_points,
            schedule: None,
            mc,
        };
        pimc_single.push(estimate_energy(&opts)?);
    }

    let inputs = VerificationInputs {
        pimc_single,
        pekar_energy_unit: Some(e1_unit),
        scan_rows: scan.rows.clone(),
        nu_c: Some(nu_c),
    };
    let report = verify_bounds(&inputs);
    let payload = to_pretty(&report)?;
    let path = result_path(config, hash, "json");
    write_atomic(&path, &payload)?;

    let mut summary = String::new();
    for check in &report.checks {
        summary.push_str(&format!(
            "{} {}: {}\n",
            if check.passed { "PASS" } else { "FAIL" },
            check.name,
            check.detail
        ));
    }
    summary.push_str(&format!(
        "verify ({} suite): {}",
        config.suite,
        if report.all_passed { "all checks passed" } else { "FAILURES present" }
    ));
    Ok(TaskOutcome {
        result_files: vec![path],
        summary,
        diagnostics: json!({
            "checks": report.checks.len(),
            "all_passed": report.all_passed,
            "nu_c": nu_c,
        }),
        stdout_payload: payload,
        verification_passed: Some(report.all_passed),
    })
}

fn run_report(config: &RunConfig) -> Result<TaskOutcome, CliError> {
    let report = emit_report(Path::new(&config.dir))?;
    let payload = to_pretty(&report)?;
    Ok(TaskOutcome {
        result_files: Vec::new(),
        summary: format!(
            "report: {} configuration(s) found in {}",
            report.count, config.dir
        ),
        diagnostics: json!({"count": report.count}),
        stdout_payload: payload,
        verification_passed: None,
    })
}
