//! Run configuration: plain `key = value` text with flag overrides.
//! Every field has a default; `parse(emit(config)) == config` exactly.

use std::fmt::Write as _;

use serde::Serialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Pekar,
    Bipolaron,
    Pimc,
    ScanBinding,
    Verify,
    Report,
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Pekar => "pekar",
            Task::Bipolaron => "bipolaron",
            Task::Pimc => "pimc",
            Task::ScanBinding => "scan-binding",
            Task::Verify => "verify",
            Task::Report => "report",
        }
    }

    pub fn from_name(s: &str) -> Option<Task> {
        match s {
            "pekar" => Some(Task::Pekar),
            "bipolaron" => Some(Task::Bipolaron),
            "pimc" => Some(Task::Pimc),
            "scan-binding" => Some(Task::ScanBinding),
            "verify" => Some(Task::Verify),
            "report" => Some(Task::Report),
            _ => None,
        }
    }
}

/// The resolved configuration of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub task: Task,
    pub alpha: f64,
    pub u: f64,
    pub n_particles: usize,
    pub grid_n: usize,
    pub grid_rmax: f64,
    pub angular_n: usize,
    pub tol: f64,
    pub period: f64,
    pub slices: usize,
    pub sweeps: usize,
    pub seed: u64,
    pub schedule_points: usize,
    pub oscillator: f64, // 0 = off
    pub check_finite_t: bool,
    pub u_min: f64,
    pub u_max: f64,
    pub u_steps: usize,
    pub find_critical: bool,
    pub critical_tol: f64,
    pub suite: String,
    pub dir: String,
    pub out_dir: String,
    pub format: String,
}

impl RunConfig {
    /// Task-specific defaults (the spec's desk-scale settings).
    pub fn defaults(task: Task) -> Self {
        let (grid_n, tol) = match task {
            Task::Pekar => (2000, 1e-8),
            _ => (96, 5e-5),
        };
        Self {
            task,
            alpha: 1.0,
            u: 0.0,
            n_particles: 1,
            grid_n,
            grid_rmax: 20.0,
            angular_n: 16,
            tol,
            period: 32.0,
            slices: 512,
            sweeps: 200_000,
            seed: 12345,
            schedule_points: 8,
            oscillator: 0.0,
            check_finite_t: false,
            u_min: 0.0,
            u_max: 3.0,
            u_steps: 7,
            find_critical: false,
            critical_tol: 0.01,
            suite: "default".into(),
            dir: String::new(),
            out_dir: "polaron-out".into(),
            format: "json".into(),
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |field: &str, detail: String| {
            Err(CliError::Validation(format!("{field}: {detail}")))
        };
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return bad("alpha", format!("must be positive, got {}", self.alpha));
        }
        if self.u < 0.0 || !self.u.is_finite() {
            return bad("u", format!("must be nonnegative, got {}", self.u));
        }
        if !(1..=2).contains(&self.n_particles) {
            return bad(
                "n_particles",
                format!("must be 1 or 2, got {}", self.n_particles),
            );
        }
        if self.grid_n < 16 {
            return bad("grid_n", format!("must be at least 16, got {}", self.grid_n));
        }
        if !(self.grid_rmax > 0.0) {
            return bad("grid_rmax", format!("must be positive, got {}", self.grid_rmax));
        }
        if !(4..=64).contains(&self.angular_n) {
            return bad(
                "angular_n",
                format!("must lie in [4, 64], got {}", self.angular_n),
            );
        }
        if !(self.tol > 0.0) {
            return bad("tol", format!("must be positive, got {}", self.tol));
        }
        if !(self.critical_tol > 0.0) {
            return bad(
                "critical_tol",
                format!("must be positive, got {}", self.critical_tol),
            );
        }
        if self.u_steps < 2 {
            return bad("u_steps", format!("must be at least 2, got {}", self.u_steps));
        }
        if self.u_max <= self.u_min {
            return bad(
                "u_max",
                format!("must exceed u_min = {}, got {}", self.u_min, self.u_max),
            );
        }
        if self.oscillator < 0.0 {
            return bad(
                "oscillator",
                format!("must be nonnegative, got {}", self.oscillator),
            );
        }
        if !matches!(self.suite.as_str(), "default" | "quick") {
            return bad("suite", format!("unknown suite '{}'", self.suite));
        }
        if !matches!(self.format.as_str(), "json" | "csv") {
            return bad("format", format!("must be json or csv, got '{}'", self.format));
        }
        if self.task == Task::Report && self.dir.is_empty() {
            return bad("dir", "the report task needs a results directory".into());
        }
        Ok(())
    }

    /// Serialize as `key = value` lines; parsing this text reproduces the
    /// configuration bit-identically.
    pub fn emit(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "task = {}", self.task.name());
        let _ = writeln!(s, "alpha = {:?}", self.alpha);
        let _ = writeln!(s, "u = {:?}", self.u);
        let _ = writeln!(s, "n_particles = {}", self.n_particles);
        let _ = writeln!(s, "grid_n = {}", self.grid_n);
        let _ = writeln!(s, "grid_rmax = {:?}", self.grid_rmax);
        let _ = writeln!(s, "angular_n = {}", self.angular_n);
        let _ = writeln!(s, "tol = {:?}", self.tol);
        let _ = writeln!(s, "period = {:?}", self.period);
        let _ = writeln!(s, "slices = {}", self.slices);
        let _ = writeln!(s, "sweeps = {}", self.sweeps);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "schedule_points = {}", self.schedule_points);
        let _ = writeln!(s, "oscillator = {:?}", self.oscillator);
        let _ = writeln!(s, "check_finite_t = {}", self.check_finite_t);
        let _ = writeln!(s, "u_min = {:?}", self.u_min);
        let _ = writeln!(s, "u_max = {:?}", self.u_max);
        let _ = writeln!(s, "u_steps = {}", self.u_steps);
        let _ = writeln!(s, "find_critical = {}", self.find_critical);
        let _ = writeln!(s, "critical_tol = {:?}", self.critical_tol);
        let _ = writeln!(s, "suite = {}", self.suite);
        let _ = writeln!(s, "dir = {}", self.dir);
        let _ = writeln!(s, "out_dir = {}", self.out_dir);
        let _ = writeln!(s, "format = {}", self.format);
        s
    }

    /// Apply one `key = value` assignment.
    pub fn apply(&mut self, key: &str, value: &str, line: usize) -> Result<(), CliError> {
        let parse_err = |what: &str| {
            CliError::Parse(format!("line {line}: cannot parse {what} from '{value}'"))
        };
        match key {
            "task" => {
                self.task = Task::from_name(value)
                    .ok_or_else(|| CliError::Parse(format!("line {line}: unknown task '{value}'")))?;
            }
            "alpha" => self.alpha = value.parse().map_err(|_| parse_err("a number"))?,
            "u" => self.u = value.parse().map_err(|_| parse_err("a number"))?,
            "n_particles" => {
                self.n_particles = value.parse().map_err(|_| parse_err("an integer"))?
            }
            "grid_n" => self.grid_n = value.parse().map_err(|_| parse_err("an integer"))?,
            "grid_rmax" => self.grid_rmax = value.parse().map_err(|_| parse_err("a number"))?,
            "angular_n" => self.angular_n = value.parse().map_err(|_| parse_err("an integer"))?,
            "tol" => self.tol = value.parse().map_err(|_| parse_err("a number"))?,
            "period" => self.period = value.parse().map_err(|_| parse_err("a number"))?,
            "slices" => self.slices = value.parse().map_err(|_| parse_err("an integer"))?,
            "sweeps" => self.sweeps = value.parse().map_err(|_| parse_err("an integer"))?,
            "seed" => self.seed = value.parse().map_err(|_| parse_err("an integer"))?,
            "schedule_points" => {
                self.schedule_points = value.parse().map_err(|_| parse_err("an integer"))?
            }
            "oscillator" => self.oscillator = value.parse().map_err(|_| parse_err("a number"))?,
            "check_finite_t" => {
                self.check_finite_t = value.parse().map_err(|_| parse_err("a boolean"))?
            }
            "u_min" => self.u_min = value.parse().map_err(|_| parse_err("a number"))?,
            "u_max" => self.u_max = value.parse().map_err(|_| parse_err("a number"))?,
            "u_steps" => self.u_steps = value.parse().map_err(|_| parse_err("an integer"))?,
            "find_critical" => {
                self.find_critical = value.parse().map_err(|_| parse_err("a boolean"))?
            }
            "critical_tol" => {
                self.critical_tol = value.parse().map_err(|_| parse_err("a number"))?
            }
            "suite" => self.suite = value.to_string(),
            "dir" => self.dir = value.to_string(),
            "out_dir" => self.out_dir = value.to_string(),
            "format" => self.format = value.to_string(),
            _ => {
                return Err(CliError::Parse(format!(
                    "line {line}: unknown key '{key}'"
                )))
            }
        }
        Ok(())
    }
}

/// Parse `key = value` text. The task must be given (here or by a flag
/// later); unknown keys are rejected with their line number.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    // first pass: find the task so defaults resolve before assignments
    let mut task = None;
    for line in text.lines() {
        let trimmed = line.trim();
        if let Some(rest) = trimmed.strip_prefix("task") {
            let rest = rest.trim_start();
            if let Some(value) = rest.strip_prefix('=') {
                task = Task::from_name(value.trim());
            }
        }
    }
    let Some(task) = task else {
        return Err(CliError::Validation(
            "task: no task given (one of pekar, bipolaron, pimc, scan-binding, verify, report)"
                .into(),
        ));
    };
    let mut config = RunConfig::defaults(task);
    for (idx, line) in text.lines().enumerate() {
        let n = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let Some((key, value)) = trimmed.split_once('=') else {
            return Err(CliError::Parse(format!(
                "line {n}: expected 'key = value', got '{trimmed}'"
            )));
        };
        config.apply(key.trim(), value.trim(), n)?;
    }
    config.validate()?;
    Ok(config)
}
