//! Run configuration files (TOML).
//!
//! ```toml
//! omega0_eV = 1.0          # metadata only; all inputs are in ω₀ units
//! tunneling = 0.0          # Δ; only Δ = 0 is supported
//! qubit_init = "up"        # up | down | plus_x
//! alpha_c0 = 1.0           # zero-temperature critical coupling (regime label)
//!
//! [spectral.left]
//! alpha = 0.02
//! omega_c = 1.5
//! [spectral.right]
//! alpha = 0.02
//! omega_c = 1.5
//!
//! [temperature]
//! mean = 2.0               # or: left = 2.01, right = 1.99
//!
//! [discretization]
//! scheme = "id"            # id | log
//! tolerance = 1e-2         # id: certification target
//! modes = 40               # log: modes per bath; id: optional cap
//! omega_max_multiplier = 10.0
//! weighting = "zero_temperature"   # or "thermal"
//!
//! [ansatz]
//! multiplicity = 18
//! noise = 1e-4
//! seed = 0
//!
//! [integrator]
//! dt = 0.01
//! t_final = 10.0
//! output_stride = 1
//! sigma2_stride = 10
//! max_step_arc = 0.02
//!
//! [convergence]
//! sigma2_threshold = 1e-2
//!
//! [oracle]                 # optional exact reference
//! n_max = 4
//! ```
//!
//! Unknown keys are rejected. Errors carry the line of the offending key.

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::tfd::QubitInit;

fn one() -> f64 {
    1.0
}

/// Drude–Lorentz parameters of one bath.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathSpectral {
    pub alpha: f64,
    pub omega_c: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralConfig {
    pub left: BathSpectral,
    pub right: BathSpectral,
}

/// Either explicit bath temperatures or a mean with the standard split.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemperatureConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub left: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub right: Option<f64>,
}

/// Relative temperature difference applied to a mean temperature:
/// `T_left − T_right = 0.01 T`.
pub const MEAN_TEMPERATURE_SPLIT: f64 = 0.01;

impl TemperatureConfig {
    /// `(T_left, T_right)`; a mean `T` gives `T (1 ± 0.005)`.
    pub fn resolve(&self) -> Result<(f64, f64), String> {
        match (self.mean, self.left, self.right) {
            (Some(t), None, None) => {
                Ok((t * (1.0 + 0.5 * MEAN_TEMPERATURE_SPLIT), t * (1.0 - 0.5 * MEAN_TEMPERATURE_SPLIT)))
            }
            (None, Some(l), Some(r)) => Ok((l, r)),
            (None, None, None) => Err("missing key: set `temperature.mean` or both `temperature.left` and `temperature.right`".into()),
            (None, _, _) => Err(format!(
                "missing key `temperature.{}`: explicit temperatures need both `left` and `right`",
                if self.left.is_none() { "left" } else { "right" }
            )),
            (Some(_), _, _) => Err("`temperature.mean` cannot be combined with `left`/`right`".into()),
        }
    }

    /// Mean of the two bath temperatures.
    pub fn mean_value(&self) -> Result<f64, String> {
        self.resolve().map(|(l, r)| 0.5 * (l + r))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    Id,
    Log,
}

/// Which temperature the discretization weights are fitted at.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    /// Fit the zero-temperature BCF; temperature enters only through the
    /// thermofield angles.
    #[default]
    ZeroTemperature,
    /// Fit the thermal BCF at the bath's own temperature.
    Thermal,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscretizationConfig {
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modes: Option<usize>,
    #[serde(default = "default_multiplier")]
    pub omega_max_multiplier: f64,
    /// Certification horizon; defaults to `integrator.t_final`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default)]
    pub weighting: Weighting,
}

fn default_multiplier() -> f64 {
    10.0
}

/// Default ID tolerance and log mode count.
pub const DEFAULT_ID_TOLERANCE: f64 = 1e-2;
pub const DEFAULT_LOG_MODES: usize = 40;

impl Default for DiscretizationConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::Id,
            tolerance: None,
            modes: None,
            omega_max_multiplier: default_multiplier(),
            horizon: None,
            weighting: Weighting::ZeroTemperature,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnsatzConfig {
    pub multiplicity: usize,
    #[serde(default = "default_noise")]
    pub noise: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_noise() -> f64 {
    1e-4
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_t_final")]
    pub t_final: f64,
    #[serde(default = "default_one_usize")]
    pub output_stride: usize,
    #[serde(default = "default_sigma2_stride")]
    pub sigma2_stride: usize,
    #[serde(default = "default_arc")]
    pub max_step_arc: f64,
}

fn default_dt() -> f64 {
    0.01
}
fn default_t_final() -> f64 {
    10.0
}
fn default_one_usize() -> usize {
    1
}
fn default_sigma2_stride() -> usize {
    10
}
fn default_arc() -> f64 {
    0.02
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            dt: default_dt(),
            t_final: default_t_final(),
            output_stride: 1,
            sigma2_stride: default_sigma2_stride(),
            max_step_arc: default_arc(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceConfig {
    #[serde(default = "default_threshold")]
    pub sigma2_threshold: f64,
}

fn default_threshold() -> f64 {
    1e-2
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self { sigma2_threshold: default_threshold() }
    }
}

/// Optional exact reference run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default = "default_cap")]
    pub dimension_cap: usize,
    #[serde(default = "default_cert")]
    pub certification_tol: f64,
}

fn default_n_max() -> usize {
    4
}
fn default_cap() -> usize {
    crate::oracle::DEFAULT_DIMENSION_CAP
}
fn default_cert() -> f64 {
    1e-4
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { n_max: default_n_max(), dimension_cap: default_cap(), certification_tol: default_cert() }
    }
}

/// A complete run description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// ω₀ in eV; carried into outputs, never used in computation.
    #[serde(rename = "omega0_eV", default = "one")]
    pub omega0_ev: f64,
    /// Tunnelling Δ; the model is implemented for Δ = 0 only.
    #[serde(default)]
    pub tunneling: f64,
    #[serde(default)]
    pub qubit_init: QubitInit,
    /// Zero-temperature critical coupling used by the regime label.
    #[serde(default = "one")]
    pub alpha_c0: f64,
    pub spectral: SpectralConfig,
    pub temperature: TemperatureConfig,
    #[serde(default)]
    pub discretization: DiscretizationConfig,
    pub ansatz: AnsatzConfig,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub convergence: ConvergenceConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleConfig>,
}

/// 1-based line of a byte offset.
fn line_of(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

/// Line on which `path` (`table.sub.key`) is assigned, or on which its table
/// starts when the key itself is absent.
pub fn locate_key(src: &str, path: &str) -> Option<usize> {
    let (table, key) = match path.rfind('.') {
        Some(i) => (&path[..i], &path[i + 1..]),
        None => ("", path),
    };
    let mut current = String::new();
    let mut table_line = None;
    for (i, raw) in src.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if let Some(h) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = h.trim().to_string();
            if current == table {
                table_line = Some(i + 1);
            }
            continue;
        }
        if let Some((k, _)) = line.split_once('=') {
            let k = k.trim();
            // Dotted keys inside a table, e.g. `left.alpha = …` under `[spectral]`.
            let full = if current.is_empty() { k.to_string() } else { format!("{current}.{k}") };
            if full == path || (current == table && k == key) {
                return Some(i + 1);
            }
        }
    }
    table_line
}

fn invalid(src: Option<&str>, key: &str, message: impl Into<String>) -> CliError {
    CliError::Config { line: src.and_then(|s| locate_key(s, key)), key: key.to_string(), message: message.into() }
}

impl RunConfig {
    /// Parses and validates a configuration text.
    pub fn from_toml_str(src: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(src).map_err(|e| CliError::Config {
            line: e.span().map(|s| line_of(src, s.start)),
            key: String::new(),
            message: e.message().to_string(),
        })?;
        cfg.validate_with_source(Some(src))?;
        Ok(cfg)
    }

    /// Reads and validates a configuration file.
    pub fn from_file(path: &std::path::Path) -> Result<Self, CliError> {
        let src = std::fs::read_to_string(path)?;
        Self::from_toml_str(&src)
    }

    /// Canonical TOML text (every defaulted field written explicitly).
    pub fn to_toml_string(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Serialize(e.to_string()))
    }

    /// Checks every invariant; errors name the offending key.
    pub fn validate(&self) -> Result<(), CliError> {
        self.validate_with_source(None)
    }

    fn validate_with_source(&self, src: Option<&str>) -> Result<(), CliError> {
        let pos = |key: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(src, key, format!("must be positive and finite, got {v}")))
            }
        };
        pos("omega0_eV", self.omega0_ev)?;
        pos("alpha_c0", self.alpha_c0)?;
        if self.tunneling != 0.0 {
            return Err(invalid(src, "tunneling", "only Δ = 0 is supported"));
        }
        for (name, b) in [("left", self.spectral.left), ("right", self.spectral.right)] {
            pos(&format!("spectral.{name}.alpha"), b.alpha)?;
            pos(&format!("spectral.{name}.omega_c"), b.omega_c)?;
        }
        let (tl, tr) = self.temperature.resolve().map_err(|m| invalid(src, "temperature", m))?;
        let which = if self.temperature.mean.is_some() { ["temperature.mean"; 2] } else { ["temperature.left", "temperature.right"] };
        pos(which[0], tl)?;
        pos(which[1], tr)?;
        let d = &self.discretization;
        pos("discretization.omega_max_multiplier", d.omega_max_multiplier)?;
        if let Some(t) = d.tolerance {
            pos("discretization.tolerance", t)?;
        }
        if let Some(h) = d.horizon {
            pos("discretization.horizon", h)?;
        }
        if d.modes == Some(0) {
            return Err(invalid(src, "discretization.modes", "must be ≥ 1"));
        }
        if d.scheme == Scheme::Log && d.tolerance.is_some() {
            return Err(invalid(src, "discretization.tolerance", "the log scheme takes `modes`, not `tolerance`"));
        }
        if self.ansatz.multiplicity == 0 {
            return Err(invalid(src, "ansatz.multiplicity", "must be ≥ 1"));
        }
        if !(self.ansatz.noise >= 0.0 && self.ansatz.noise.is_finite()) {
            return Err(invalid(src, "ansatz.noise", format!("must be ≥ 0, got {}", self.ansatz.noise)));
        }
        let i = &self.integrator;
        pos("integrator.dt", i.dt)?;
        pos("integrator.max_step_arc", i.max_step_arc)?;
        if !(i.t_final >= 0.0 && i.t_final.is_finite()) {
            return Err(invalid(src, "integrator.t_final", format!("must be ≥ 0, got {}", i.t_final)));
        }
        let steps = (i.t_final / i.dt).round();
        if (steps * i.dt - i.t_final).abs() > 1e-9 * i.t_final.max(1.0) {
            return Err(invalid(src, "integrator.t_final", format!("must be a multiple of dt = {}", i.dt)));
        }
        if i.output_stride == 0 {
            return Err(invalid(src, "integrator.output_stride", "must be ≥ 1"));
        }
        pos("convergence.sigma2_threshold", self.convergence.sigma2_threshold)?;
        if let Some(o) = &self.oracle {
            if o.n_max == 0 {
                return Err(invalid(src, "oracle.n_max", "must be ≥ 1"));
            }
            pos("oracle.certification_tol", o.certification_tol)?;
        }
        Ok(())
    }

    /// `(T_left, T_right)`.
    pub fn temperatures(&self) -> (f64, f64) {
        self.temperature.resolve().expect("validated configuration")
    }

    /// Certification horizon of the discretization.
    pub fn horizon(&self) -> f64 {
        self.discretization.horizon.unwrap_or(self.integrator.t_final.max(self.integrator.dt))
    }
}
