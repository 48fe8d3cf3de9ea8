//! Run configuration: a single JSON document with sections `model`,
//! `measure`, `grid`, `ensemble`, `output` and `generator`. Every section
//! and key is optional; omitted values take the defaults of the Burgers
//! acceptance model. Unknown keys are rejected.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generator::{CylinderFunction, Monomial};
use crate::integrator::TimeGrid;
use crate::ensemble::EnsembleSettings;
use crate::levy::{Atom, LevyMeasure, Sidedness};
use crate::model::{ModelSpec, NemytskiiFn};
use crate::spectral::{SpectralBasis, SpectralState};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("unknown field `{key}` at line {line}, column {column}")]
    UnknownField { key: String, line: usize, column: usize },

    #[error("{field}: {message}")]
    Range { field: String, message: String },

    #[error("command line: {message}")]
    Usage { message: String },
}

fn range(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Range { field: field.to_string(), message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PointwiseConfig {
    Linear { kappa: f64 },
    Sine { amplitude: f64, frequency: f64 },
}

impl PointwiseConfig {
    pub fn to_fn(self) -> NemytskiiFn<f64> {
        match self {
            Self::Linear { kappa } => NemytskiiFn::Linear { kappa },
            Self::Sine { amplitude, frequency } => NemytskiiFn::ScaledSine { amplitude, frequency },
        }
    }

    fn check(&self, field: &str) -> Result<(), ConfigError> {
        let ok = match *self {
            Self::Linear { kappa } => kappa.is_finite(),
            Self::Sine { amplitude, frequency } => amplitude.is_finite() && frequency.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(range(field, "parameters must be finite"))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SidedConfig {
    #[default]
    Symmetric,
    Positive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomConfig {
    pub location: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureConfig {
    Stable {
        intensity: f64,
        index: f64,
        #[serde(default)]
        sided: SidedConfig,
    },
    Uniform { level: f64, radius: f64 },
    Atomic { atoms: Vec<AtomConfig> },
}

impl Default for MeasureConfig {
    fn default() -> Self {
        Self::Stable { intensity: 1.0, index: 1.0, sided: SidedConfig::Symmetric }
    }
}

impl MeasureConfig {
    pub fn build(&self, field: &str) -> Result<LevyMeasure<f64>, ConfigError> {
        let m = match self {
            Self::Stable { intensity, index, sided } => {
                let sided = match sided {
                    SidedConfig::Symmetric => Sidedness::Symmetric,
                    SidedConfig::Positive => Sidedness::PositiveOnly,
                };
                LevyMeasure::stable(*intensity, *index, sided)
            }
            Self::Uniform { level, radius } => LevyMeasure::uniform(*level, *radius),
            Self::Atomic { atoms } => LevyMeasure::atomic(
                atoms.iter().map(|a| Atom { location: a.location, mass: a.mass }).collect(),
            ),
        };
        m.map_err(|e| range(field, e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub modes: usize,
    pub fractional_power: f64,
    pub burgers: bool,
    pub b1: Option<PointwiseConfig>,
    pub sigma: PointwiseConfig,
    pub sigma_projection_n: Option<usize>,
    /// Leading coefficients of the initial state; padded with zeros to `modes`.
    pub initial: Vec<f64>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            modes: 16,
            fractional_power: 1.0,
            burgers: true,
            b1: None,
            sigma: PointwiseConfig::Linear { kappa: 0.5 },
            sigma_projection_n: None,
            initial: vec![1.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    #[serde(rename = "T")]
    pub horizon: f64,
    pub dt: f64,
    pub save_stride: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { horizon: 0.25, dt: 5e-4, save_stride: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleConfig {
    pub paths: usize,
    pub seed: u64,
    /// Scale for `simulate` and `sigma-sweep`; `null` selects the Brownian driver.
    pub eps: Option<f64>,
    /// Scales for `alpha` and `converge`, strictly decreasing.
    pub eps_list: Vec<f64>,
    /// Projection levels for `sigma-sweep`; empty selects 4, 8, … up to `modes`.
    pub n_list: Vec<usize>,
    #[serde(rename = "K")]
    pub feature_modes: usize,
    pub neglect_tol: f64,
    pub jump_budget: f64,
    pub delta_threshold: f64,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            paths: 2000,
            seed: 1,
            eps: Some(0.1),
            eps_list: vec![0.4, 0.2, 0.1, 0.05],
            n_list: Vec::new(),
            feature_modes: 2,
            neglect_tol: 1e-3,
            jump_budget: 1e7,
            delta_threshold: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: String,
    pub format: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { directory: "out".into(), format: "csv".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermConfig {
    pub coef: f64,
    pub powers: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    /// 1-based modes the test function depends on.
    pub modes: Vec<usize>,
    pub terms: Vec<TermConfig>,
    pub ball_radius: f64,
    pub samples: usize,
    pub eps_list: Vec<f64>,
    /// Overrides the top-level measure for `generator-check`.
    pub measure: Option<MeasureConfig>,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            modes: vec![1],
            terms: vec![TermConfig { coef: 1.0, powers: vec![3] }],
            ball_radius: 1.0,
            samples: 256,
            eps_list: (2..=9).map(|k| 0.5f64.powi(k)).collect(),
            measure: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub measure: MeasureConfig,
    pub grid: GridConfig,
    pub ensemble: EnsembleConfig,
    pub output: OutputConfig,
    pub generator: GeneratorConfig,
}

/// Dotted path of the first object key named `key`, searched breadth first.
fn locate_key(value: &serde_json::Value, key: &str) -> Option<String> {
    let mut queue = vec![(String::new(), value)];
    while !queue.is_empty() {
        let mut next = Vec::new();
        for (path, v) in queue {
            let children: Vec<(String, &serde_json::Value)> = match v {
                serde_json::Value::Object(map) => map.iter().map(|(k, v)| (k.clone(), v)).collect(),
                serde_json::Value::Array(items) => {
                    items.iter().enumerate().map(|(i, v)| (i.to_string(), v)).collect()
                }
                _ => continue,
            };
            for (k, child) in children {
                let p = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                if k == key && v.is_object() {
                    return Some(p);
                }
                next.push((p, child));
            }
        }
        queue = next;
    }
    None
}

fn classify(text: &str, e: serde_json::Error) -> ConfigError {
    let (line, column) = (e.line(), e.column());
    let msg = e.to_string();
    if let Some(rest) = msg.strip_prefix("unknown field `") {
        let key = rest.split('`').next().unwrap_or_default().to_string();
        let path = serde_json::from_str::<serde_json::Value>(text)
            .ok()
            .and_then(|v| locate_key(&v, &key))
            .unwrap_or(key);
        return ConfigError::UnknownField { key: path, line, column };
    }
    let message = match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg,
    };
    ConfigError::Parse { line, column, message }
}

fn check_eps_list(field: &str, list: &[f64]) -> Result<(), ConfigError> {
    if list.is_empty() {
        return Err(range(field, "must not be empty"));
    }
    if list.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
        return Err(range(field, "entries must be positive and finite"));
    }
    if list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(range(field, "entries must be strictly decreasing"));
    }
    Ok(())
}

impl RunConfig {
    /// Parses, applies defaults, normalizes and validates.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg: RunConfig = serde_json::from_str(text).map_err(|e| classify(text, e))?;
        cfg.normalize()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io { path: path.display().to_string(), message: e.to_string() })?;
        Self::parse(&text)
    }

    /// Validated defaults.
    pub fn defaults() -> Self {
        Self::parse("{}").expect("default configuration is valid")
    }

    /// Normalized JSON; parsing it yields an identical configuration.
    pub fn dump(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration serializes")
    }

    fn normalize(&mut self) -> Result<(), ConfigError> {
        let n = self.model.modes;
        if n == 0 {
            return Err(range("model.modes", "must be at least 1"));
        }
        if self.model.initial.len() > n {
            return Err(range("model.initial", format!("has more than {n} coefficients")));
        }
        self.model.initial.resize(n, 0.0);
        if self.ensemble.n_list.is_empty() {
            let mut k = 4.min(n);
            while k < n {
                self.ensemble.n_list.push(k);
                k *= 2;
            }
            self.ensemble.n_list.push(n);
        }
        Ok(())
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let m = &self.model;
        if m.modes > 4096 {
            return Err(range("model.modes", "must be at most 4096"));
        }
        if !(m.fractional_power.is_finite() && m.fractional_power > 0.0) {
            return Err(range("model.fractional_power", "must be positive and finite"));
        }
        if m.burgers && m.fractional_power != 1.0 {
            return Err(range("model.burgers", "requires fractional_power = 1"));
        }
        if let Some(b1) = &m.b1 {
            b1.check("model.b1")?;
        }
        m.sigma.check("model.sigma")?;
        if let Some(p) = m.sigma_projection_n {
            if p == 0 || p > m.modes {
                return Err(range("model.sigma_projection_n", format!("must lie in [1, {}]", m.modes)));
            }
        }
        if m.initial.iter().any(|a| !a.is_finite()) {
            return Err(range("model.initial", "coefficients must be finite"));
        }
        self.measure.build("measure")?;
        self.grid()?;

        let e = &self.ensemble;
        if e.paths == 0 {
            return Err(range("ensemble.paths", "must be at least 1"));
        }
        if let Some(eps) = e.eps {
            if !(eps.is_finite() && eps > 0.0) {
                return Err(range("ensemble.eps", "must be positive and finite"));
            }
        }
        check_eps_list("ensemble.eps_list", &e.eps_list)?;
        if e.n_list.iter().any(|&k| k == 0 || k > m.modes) {
            return Err(range("ensemble.n_list", format!("entries must lie in [1, {}]", m.modes)));
        }
        if e.feature_modes == 0 || e.feature_modes > m.modes {
            return Err(range("ensemble.K", format!("must lie in [1, {}]", m.modes)));
        }
        if !(e.neglect_tol > 0.0 && e.neglect_tol < 1.0) {
            return Err(range("ensemble.neglect_tol", "must lie in (0, 1)"));
        }
        if !(e.jump_budget.is_finite() && e.jump_budget > 0.0) {
            return Err(range("ensemble.jump_budget", "must be positive and finite"));
        }
        if !(e.delta_threshold.is_finite() && e.delta_threshold >= 0.0) {
            return Err(range("ensemble.delta_threshold", "must be non-negative and finite"));
        }

        if self.output.format != "csv" {
            return Err(range("output.format", "only \"csv\" is supported"));
        }
        if self.output.directory.is_empty() {
            return Err(range("output.directory", "must not be empty"));
        }

        let g = &self.generator;
        if g.modes.iter().any(|&k| k > m.modes) {
            return Err(range("generator.modes", format!("entries must lie in [1, {}]", m.modes)));
        }
        self.test_function()?;
        if !(g.ball_radius.is_finite() && g.ball_radius > 0.0) {
            return Err(range("generator.ball_radius", "must be positive and finite"));
        }
        if g.samples == 0 {
            return Err(range("generator.samples", "must be at least 1"));
        }
        check_eps_list("generator.eps_list", &g.eps_list)?;
        if let Some(gm) = &g.measure {
            gm.build("generator.measure")?;
        }
        Ok(())
    }

    pub fn basis(&self) -> Result<SpectralBasis<f64>, ConfigError> {
        SpectralBasis::fractional(self.model.modes, self.model.fractional_power)
            .map_err(|e| range("model", e.to_string()))
    }

    pub fn model_spec(&self) -> Result<ModelSpec<f64>, ConfigError> {
        let m = &self.model;
        ModelSpec::new(
            self.basis()?,
            m.b1.map(PointwiseConfig::to_fn),
            m.burgers,
            m.sigma.to_fn(),
            SpectralState::from_coeffs(m.initial.clone()),
            m.sigma_projection_n,
        )
        .map_err(|e| range("model", e.to_string()))
    }

    pub fn measure(&self) -> Result<LevyMeasure<f64>, ConfigError> {
        self.measure.build("measure")
    }

    pub fn generator_measure(&self) -> Result<LevyMeasure<f64>, ConfigError> {
        match &self.generator.measure {
            Some(m) => m.build("generator.measure"),
            None => self.measure(),
        }
    }

    pub fn test_function(&self) -> Result<CylinderFunction<f64>, ConfigError> {
        let g = &self.generator;
        let terms = g.terms.iter().map(|t| Monomial { coef: t.coef, powers: t.powers.clone() }).collect();
        CylinderFunction::new(g.modes.clone(), terms).map_err(|e| range("generator", e.to_string()))
    }

    pub fn grid(&self) -> Result<TimeGrid<f64>, ConfigError> {
        let g = &self.grid;
        TimeGrid::new(g.horizon, g.dt, g.save_stride).map_err(|e| range("grid", e.to_string()))
    }

    pub fn settings(&self) -> EnsembleSettings {
        let e = &self.ensemble;
        EnsembleSettings {
            paths: e.paths,
            master_seed: e.seed,
            feature_modes: e.feature_modes,
            jump_budget: e.jump_budget,
        }
    }
}
