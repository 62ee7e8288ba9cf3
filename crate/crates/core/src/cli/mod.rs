//! User surface: configuration files, presets, regime labels, comparison
//! metrics and run orchestration.

mod compare;
mod config;
mod orchestrate;
mod presets;
mod regime;

use thiserror::Error;

pub use compare::{compare_trajectories, ComparisonMetrics};
pub use config::{
    locate_key, AnsatzConfig, BathSpectral, ConvergenceConfig, DiscretizationConfig, IntegratorConfig, OracleConfig,
    RunConfig, Scheme, SpectralConfig, TemperatureConfig, Weighting, DEFAULT_ID_TOLERANCE, DEFAULT_LOG_MODES,
    MEAN_TEMPERATURE_SPLIT,
};
pub use orchestrate::{
    build_baths, dt_warning, regimes, run, run_bath_stage, run_oracle, run_parameters, sweep, tfd_bcf_error,
    write_panels, BathSetup, OracleSummary, RunOutcome, Summary, Timings,
};
pub use presets::{find_preset, Preset, PRESETS};
pub use regime::{classify_regime, critical_coupling, Regime};

/// Errors surfaced to the command line.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error{}{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default(), if key.is_empty() { String::new() } else { format!(" (`{key}`)") })]
    Config { line: Option<usize>, key: String, message: String },
    #[error("could not serialize: {0}")]
    Serialize(String),
    #[error("comparison failed: {0}")]
    Compare(String),
    #[error("{0}")]
    Aborted(String),
    #[error(transparent)]
    Bath(#[from] crate::bath::BathError),
    #[error(transparent)]
    Tfd(#[from] crate::tfd::TfdError),
    #[error(transparent)]
    Ansatz(#[from] crate::ansatz::AnsatzError),
    #[error(transparent)]
    Dynamics(#[from] crate::dynamics::DynamicsError),
    #[error(transparent)]
    Oracle(#[from] crate::oracle::OracleError),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}
