//! Subcommand dispatch, exit codes, diagnostics and the CSV text format.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::json;

use crate::config::{ConfigError, RunConfig};
use crate::ensemble::{convergence_sweep, sigma_projection_sweep};
use crate::error::Error;
use crate::generator::{generator_gap_sweep, sample_ball};
use crate::integrator::{simulate_path_with_budget, NoiseDriver};
use crate::invariants::{property_suite, SuiteSize};
use crate::levy::{RatioTrend, DEFAULT_SLOPE_TOLERANCE};
use crate::stream::PathStream;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_INVARIANT: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Alpha,
    Simulate,
    Converge,
    GeneratorCheck,
    Invariants,
    SigmaSweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::Alpha => "alpha",
            Self::Simulate => "simulate",
            Self::Converge => "converge",
            Self::GeneratorCheck => "generator-check",
            Self::Invariants => "invariants",
            Self::SigmaSweep => "sigma-sweep",
        }
    }
}

#[derive(Debug)]
pub enum Failure {
    Config(ConfigError),
    Numerical(Error),
    Invariant { failed: Vec<String> },
    Output { path: String, message: String },
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Self::Config(e)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self::Numerical(e)
    }
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Output { .. } => EXIT_CONFIG,
            Self::Numerical(e) => match e {
                Error::InvalidParameter(_) | Error::SmallJumpMassAbsent { .. } | Error::InfiniteIntensity { .. } => {
                    EXIT_CONFIG
                }
                _ => EXIT_NUMERICAL,
            },
            Self::Invariant { .. } => EXIT_INVARIANT,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Self::Config(ConfigError::Io { .. }) => "io_error",
            Self::Config(ConfigError::Parse { .. }) => "parse_error",
            Self::Config(ConfigError::UnknownField { .. }) => "unknown_field",
            Self::Config(ConfigError::Range { .. }) => "range_error",
            Self::Config(ConfigError::Usage { .. }) => "usage_error",
            Self::Numerical(Error::SmallJumpMassAbsent { .. }) => "small_jump_mass_absent",
            Self::Numerical(Error::InfiniteIntensity { .. }) => "infinite_intensity",
            Self::Numerical(Error::JumpBudgetExceeded { .. }) => "jump_budget_exceeded",
            Self::Numerical(Error::NonFinite { .. }) => "non_finite",
            Self::Numerical(Error::BlowupThreshold { .. }) => "blowup_threshold",
            Self::Numerical(Error::EmptySample) => "empty_sample",
            Self::Numerical(Error::InvalidParameter(_)) => "invalid_parameter",
            Self::Invariant { .. } => "invariant_violation",
            Self::Output { .. } => "output_error",
        }
    }

    fn message(&self) -> String {
        match self {
            Self::Config(e) => e.to_string(),
            Self::Numerical(e) => e.to_string(),
            Self::Invariant { failed } => format!("failed checks: {}", failed.join(" ")),
            Self::Output { path, message } => format!("cannot write {path}: {message}"),
        }
    }

    /// Single-line JSON diagnostic.
    pub fn diagnostic(&self, command: Option<Command>) -> String {
        let mut d = json!({
            "status": "error",
            "kind": self.kind(),
            "exit_code": self.exit_code(),
            "command": command.map(Command::name),
            "message": self.message(),
        });
        match self {
            Self::Config(ConfigError::UnknownField { key, line, column }) => {
                d["key"] = json!(key);
                d["line"] = json!(line);
                d["column"] = json!(column);
            }
            Self::Config(ConfigError::Parse { line, column, .. }) => {
                d["line"] = json!(line);
                d["column"] = json!(column);
            }
            Self::Config(ConfigError::Range { field, .. }) => d["field"] = json!(field),
            Self::Invariant { failed } => d["failed"] = json!(failed),
            _ => {}
        }
        d.to_string()
    }
}

/// Decimal text with 17 significant digits, e.g. `4.4721359549995793e-1`.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Output { path: path.display().to_string(), message: e.to_string() })
}

fn output_dir(cfg: &RunConfig) -> Result<PathBuf, Failure> {
    let dir = PathBuf::from(&cfg.output.directory);
    fs::create_dir_all(&dir)
        .map_err(|e| Failure::Output { path: dir.display().to_string(), message: e.to_string() })?;
    Ok(dir)
}

fn trend_name(t: RatioTrend) -> &'static str {
    match t {
        RatioTrend::Vanishing => "vanishing",
        RatioTrend::NonVanishing => "non_vanishing",
        RatioTrend::Undefined => "undefined",
    }
}

fn driver(cfg: &RunConfig) -> Result<NoiseDriver<f64>, Failure> {
    Ok(match cfg.ensemble.eps {
        Some(eps) => NoiseDriver::small_jump(cfg.measure()?, eps, cfg.ensemble.neglect_tol)?,
        None => NoiseDriver::Brownian,
    })
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), Failure> {
    out.write_all(text.as_bytes())
        .map_err(|e| Failure::Output { path: "<stdout>".into(), message: e.to_string() })
}

/// Runs `command`; human-readable summaries go to `out`, warnings to
/// `warn`, data files to the configured output directory.
pub fn dispatch(
    command: Command,
    cfg: &RunConfig,
    out: &mut dyn Write,
    warn: &mut dyn Write,
) -> Result<(), Failure> {
    match command {
        Command::Alpha => alpha(cfg, out, warn),
        Command::Simulate => simulate(cfg, out),
        Command::Converge => converge(cfg, out, warn),
        Command::GeneratorCheck => generator_check(cfg, out),
        Command::Invariants => invariants(cfg, out),
        Command::SigmaSweep => sigma_sweep(cfg, out),
    }
}

fn warn_non_vanishing(warn: &mut dyn Write, trend: RatioTrend) {
    if trend == RatioTrend::NonVanishing {
        let _ = writeln!(
            warn,
            "{}",
            json!({"status": "warning", "kind": "ratio_non_vanishing",
                   "message": "eps/alpha(eps) does not vanish on the eps grid"})
        );
    }
}

fn alpha(cfg: &RunConfig, out: &mut dyn Write, warn: &mut dyn Write) -> Result<(), Failure> {
    let nu = cfg.measure()?;
    let eps = &cfg.ensemble.eps_list;
    let trend = if eps.len() >= 4 {
        nu.ratio_verdict(eps, DEFAULT_SLOPE_TOLERANCE)?.trend
    } else {
        RatioTrend::Undefined
    };
    let mut text = String::from("eps,alpha,ratio,verdict\n");
    for &e in eps {
        let a = nu.alpha(e);
        let ratio = if a > 0.0 { fmt17(e / a) } else { "inf".into() };
        let _ = writeln!(text, "{},{},{},{}", fmt17(e), fmt17(a), ratio, trend_name(trend));
    }
    emit(out, &text)?;
    warn_non_vanishing(warn, trend);
    Ok(())
}

fn simulate(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), Failure> {
    let model = cfg.model_spec()?;
    let grid = cfg.grid()?;
    let drv = driver(cfg)?;
    let mut stream = PathStream::new(cfg.ensemble.seed, 0);
    let path = simulate_path_with_budget(&model, &drv, &grid, &mut stream, cfg.ensemble.jump_budget)?;

    let n = model.basis().modes();
    let mut text = String::from("t");
    for k in 1..=n {
        let _ = write!(text, ",a{k}");
    }
    text.push('\n');
    for (t, u) in &path.saved {
        text.push_str(&fmt17(*t));
        for c in &u.coeffs {
            text.push(',');
            text.push_str(&fmt17(*c));
        }
        text.push('\n');
    }
    let file = output_dir(cfg)?.join("path.csv");
    write_file(&file, &text)?;
    let s = path.stats;
    emit(
        out,
        &format!(
            "wrote {} ({} saved states), jumps={}, max_jump={}\n",
            file.display(),
            path.saved.len(),
            s.jump_count,
            fmt17(s.max_jump)
        ),
    )?;
    if s.blowup {
        return Err(Error::NonFinite { step: s.steps_done + 1 }.into());
    }
    Ok(())
}

fn converge(cfg: &RunConfig, out: &mut dyn Write, warn: &mut dyn Write) -> Result<(), Failure> {
    let model = cfg.model_spec()?;
    let nu = cfg.measure()?;
    let grid = cfg.grid()?;
    let table = convergence_sweep(
        &model,
        &nu,
        &cfg.ensemble.eps_list,
        cfg.ensemble.neglect_tol,
        &grid,
        &cfg.settings(),
    )?;
    warn_non_vanishing(warn, table.ratio_trend);
    let mut text = String::from("eps,alpha,ratio,energy_dist,baseline,mean_J,J_bound,m2,m4,blowups\n");
    for r in &table.rows {
        let _ = writeln!(
            text,
            "{},{},{},{},{},{},{},{},{},{}",
            fmt17(r.eps),
            fmt17(r.alpha),
            fmt17(r.ratio),
            fmt17(r.energy_dist),
            fmt17(r.baseline),
            fmt17(r.mean_jump.mean),
            fmt17(r.jump_bound),
            fmt17(r.moment2.mean),
            fmt17(r.moment4.mean),
            r.blowups
        );
    }
    let file = output_dir(cfg)?.join("converge.csv");
    write_file(&file, &text)?;
    emit(out, &format!("wrote {} ({} rows), ratio trend {}\n", file.display(), table.rows.len(), trend_name(table.ratio_trend)))
}

fn sigma_sweep(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), Failure> {
    let model = cfg.model_spec()?;
    let grid = cfg.grid()?;
    let drv = driver(cfg)?;
    let rows = sigma_projection_sweep(
        &model,
        &drv,
        &cfg.ensemble.n_list,
        &grid,
        &cfg.settings(),
        cfg.ensemble.delta_threshold,
    )?;
    let mut text = String::from("n,delta,exceed_prob,stderr\n");
    for r in &rows {
        let _ = writeln!(text, "{},{},{},{}", r.n, fmt17(r.delta), fmt17(r.exceed_prob), fmt17(r.stderr));
    }
    let file = output_dir(cfg)?.join("sigma_sweep.csv");
    write_file(&file, &text)?;
    emit(out, &format!("wrote {} ({} rows)\n", file.display(), rows.len()))
}

fn generator_check(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), Failure> {
    let model = cfg.model_spec()?;
    let nu = cfg.generator_measure()?;
    let f = cfg.test_function()?;
    let g = &cfg.generator;
    let z = sample_ball(model.basis(), g.ball_radius, g.samples, cfg.ensemble.seed);
    let sweep = generator_gap_sweep(&model, &nu, &f, g.ball_radius, &z, &g.eps_list)?;
    let mut text = String::from("eps,alpha,ratio,sup_gap,predicted_gap\n");
    for r in &sweep.rows {
        let _ = writeln!(
            text,
            "{},{},{},{},{}",
            fmt17(r.eps),
            fmt17(r.alpha),
            fmt17(r.ratio),
            fmt17(r.sup_gap),
            fmt17(r.predicted_gap)
        );
    }
    let file = output_dir(cfg)?.join("generator_check.csv");
    write_file(&file, &text)?;
    let slope = match (sweep.exact, sweep.slope) {
        (true, _) => "exact (all gaps vanish)".to_string(),
        (false, Some(s)) => fmt17(s),
        (false, None) => "undefined".to_string(),
    };
    emit(out, &format!("wrote {} ({} rows), slope {}\n", file.display(), sweep.rows.len(), slope))
}

fn invariants(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), Failure> {
    let model = cfg.model_spec()?;
    let nu = cfg.measure()?;
    let eps = cfg.ensemble.eps.unwrap_or(cfg.ensemble.eps_list[0]);
    let checks = property_suite(&model, &nu, eps, cfg.grid.horizon, SuiteSize::default(), cfg.ensemble.seed);
    let mut text = String::from("check,samples,worst,limit,result\n");
    let mut failed = Vec::new();
    for c in &checks {
        let verdict = if c.passed() { "pass" } else { "FAIL" };
        let _ = writeln!(text, "{},{},{},{},{}", c.name, c.samples, fmt17(c.worst), fmt17(c.limit), verdict);
        if !c.passed() {
            failed.push(c.name.to_string());
        }
    }
    emit(out, &text)?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Invariant { failed })
    }
}
