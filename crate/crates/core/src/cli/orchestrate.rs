//! Pipeline orchestration: bath → thermofield Hamiltonian → dynamics
//! (→ exact reference), with file outputs.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use super::compare::compare_trajectories;
use super::config::{RunConfig, Scheme, Weighting, DEFAULT_ID_TOLERANCE, DEFAULT_LOG_MODES};
use super::regime::{classify_regime, Regime};
use super::CliError;
use crate::bath::{
    bath_correlation_function, discretize_id, discretize_log, uniform_times, write_bath, BcfGrid, DiscretizedBath,
    IdOptions, LogOptions, SpectralDensity,
};
use crate::dynamics::{
    convergence_sweep, run_trajectory, write_trajectory, RunParameters, SweepOptions, SweepReport, SweepStage,
    Trajectory,
};
use crate::oracle::{exact_propagate, ExactResult, FockConfig};
use crate::tfd::{build_effective_hamiltonian, BathBlock, EffectiveHamiltonian, InitialNoise, ThermalBathPair};
use crate::C64;

/// Time samples used for bath certification.
const CERTIFICATION_SAMPLES: usize = 400;

/// Discretized baths and the effective Hamiltonian built from them.
#[derive(Clone, Debug)]
pub struct BathSetup {
    pub left: DiscretizedBath,
    pub right: DiscretizedBath,
    pub hamiltonian: EffectiveHamiltonian,
    /// Relative error of the thermofield-doubled discrete BCF against the
    /// thermal BCF of each bath.
    pub tfd_error_left: f64,
    pub tfd_error_right: f64,
    /// One-line descriptions for trajectory metadata.
    pub descriptors: Vec<String>,
}

/// Discretizes both baths; `modes` overrides the configured mode count
/// (log: modes per bath, ID: mode cap).
pub fn build_baths(cfg: &RunConfig, modes: Option<usize>) -> Result<BathSetup, CliError> {
    let (tl, tr) = cfg.temperatures();
    let d = &cfg.discretization;
    let horizon = cfg.horizon();
    let modes = modes.or(d.modes);
    let one = |spec: super::config::BathSpectral, temperature: f64| -> Result<(DiscretizedBath, SpectralDensity, f64), CliError> {
        let sd = SpectralDensity::drude_lorentz(spec.alpha, spec.omega_c)?;
        let omega_max = d.omega_max_multiplier * spec.omega_c;
        let beta_fit = match d.weighting {
            Weighting::ZeroTemperature => f64::INFINITY,
            Weighting::Thermal => 1.0 / temperature,
        };
        let bath = match d.scheme {
            Scheme::Id => {
                let mut o = IdOptions::new(omega_max, horizon, d.tolerance.unwrap_or(DEFAULT_ID_TOLERANCE));
                o.max_modes = modes;
                discretize_id(&sd, beta_fit, &o)?
            }
            Scheme::Log => discretize_log(&sd, beta_fit, &LogOptions::new(omega_max, modes.unwrap_or(DEFAULT_LOG_MODES), horizon))?,
        };
        Ok((bath.pruned(), sd, omega_max))
    };
    let (left, sd_l, wl) = one(cfg.spectral.left, tl)?;
    let (right, sd_r, wr) = one(cfg.spectral.right, tr)?;
    let thermal = ThermalBathPair::new(&left, &right, 1.0 / tl, 1.0 / tr)?;
    let hamiltonian = build_effective_hamiltonian(&left, &right, &thermal, 1.0)?;
    let times = uniform_times(horizon, CERTIFICATION_SAMPLES);
    let tfd_error_left = tfd_bcf_error(&hamiltonian.left, &bath_correlation_function(&sd_l, 1.0 / tl, wl, &times)?);
    let tfd_error_right = tfd_bcf_error(&hamiltonian.right, &bath_correlation_function(&sd_r, 1.0 / tr, wr, &times)?);
    let describe = |name: &str, b: &DiscretizedBath, spec: super::config::BathSpectral, t: f64, e: f64| {
        format!(
            "{name} {:?} alpha={} omega_c={} T={t} modes={} cert_err={:.3e} tfd_err={e:.3e}",
            d.scheme,
            spec.alpha,
            spec.omega_c,
            b.len(),
            b.certification_error
        )
        .to_lowercase()
    };
    let descriptors = vec![
        describe("left", &left, cfg.spectral.left, tl, tfd_error_left),
        describe("right", &right, cfg.spectral.right, tr, tfd_error_right),
    ];
    Ok(BathSetup { left, right, hamiltonian, tfd_error_left, tfd_error_right, descriptors })
}

/// Relative error of `Σ λ²[cosh²θ e^{−iωt} + sinh²θ e^{iωt}]` against a
/// thermal BCF grid.
pub fn tfd_bcf_error(block: &BathBlock, reference: &BcfGrid) -> f64 {
    let scale = reference.max_abs();
    let err = reference
        .times
        .iter()
        .zip(&reference.values)
        .map(|(&t, &c)| {
            let d: C64 = block
                .frequencies
                .iter()
                .zip(block.real_couplings.iter().zip(&block.tilde_couplings))
                .map(|(&w, (&a, &b))| C64::from_polar(a * a, -w * t) + C64::from_polar(b * b, w * t))
                .sum();
            (d - c).norm()
        })
        .fold(0.0, f64::max);
    if scale > 0.0 {
        err / scale
    } else {
        err
    }
}

/// Dynamics parameters for a configuration.
pub fn run_parameters(cfg: &RunConfig, setup: &BathSetup, multiplicity: usize) -> RunParameters {
    let i = &cfg.integrator;
    RunParameters {
        qubit_init: cfg.qubit_init,
        noise: InitialNoise { amplitude: cfg.ansatz.noise, seed: cfg.ansatz.seed },
        dt: i.dt,
        t_final: i.t_final,
        output_stride: i.output_stride,
        sigma2_stride: i.sigma2_stride,
        max_step_arc: i.max_step_arc,
        baths: setup.descriptors.clone(),
        ..RunParameters::new(setup.hamiltonian.clone(), multiplicity)
    }
}

/// Regime label of each bath at the mean temperature; the overall label is
/// the stronger one.
pub fn regimes(cfg: &RunConfig) -> (Regime, Regime, Regime) {
    let (tl, tr) = cfg.temperatures();
    let t = 0.5 * (tl + tr);
    let l = classify_regime(cfg.spectral.left.alpha, cfg.spectral.left.omega_c, t, cfg.alpha_c0);
    let r = classify_regime(cfg.spectral.right.alpha, cfg.spectral.right.omega_c, t, cfg.alpha_c0);
    (l.max(r), l, r)
}

/// Advisory: the time step should resolve the fastest bath mode.
pub fn dt_warning(cfg: &RunConfig, h: &EffectiveHamiltonian) -> Option<String> {
    let wmax = h.max_frequency();
    (wmax > 0.0 && cfg.integrator.dt >= 1.0 / wmax).then(|| {
        format!("dt = {} is not below 1/max ω_k = {:.4}; fast modes are under-resolved", cfg.integrator.dt, 1.0 / wmax)
    })
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Timings {
    pub bath_s: f64,
    pub dynamics_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_s: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleSummary {
    pub n_max: usize,
    pub certified: bool,
    pub cutoff_bound: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_abs_diff: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rms_diff: Option<f64>,
}

/// Machine-readable run summary (`summary.toml`).
#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub converged: bool,
    pub completed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Largest σ² after the initial instant.
    pub max_sigma2: f64,
    /// σ² at the seeded initial state (excluded from `converged`).
    pub sigma2_at_start: f64,
    pub sigma2_threshold: f64,
    pub regime: Regime,
    pub regime_left: Regime,
    pub regime_right: Regime,
    pub alpha_c0: f64,
    #[serde(rename = "omega0_eV")]
    pub omega0_ev: f64,
    pub temperature_left: f64,
    pub temperature_right: f64,
    pub multiplicity: usize,
    pub modes_left: usize,
    pub modes_right: usize,
    pub certification_error_left: f64,
    pub certification_error_right: f64,
    pub tfd_bcf_error_left: f64,
    pub tfd_bcf_error_right: f64,
    pub max_norm_deviation: f64,
    pub relative_energy_drift: f64,
    pub regularization_events: usize,
    pub max_ridge: f64,
    pub t_reached: f64,
    pub timings: Timings,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSummary>,
    pub warnings: Vec<String>,
}

/// Outcome of [`run`].
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub summary: Summary,
    pub trajectory: Trajectory,
    pub exact: Option<ExactResult>,
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

/// Writes the two figure panels: `panel_sigma_z.dat` (with the exact σ_z
/// as a third column when available) and `panel_sigma2.dat`.
pub fn write_panels(dir: &Path, traj: &Trajectory, exact: Option<&Trajectory>) -> Result<(), CliError> {
    let mut w = create(dir, "panel_sigma_z.dat")?;
    writeln!(w, "# t sigma_z{}", if exact.is_some() { " sigma_z_exact" } else { "" })?;
    for (i, (&t, &s)) in traj.times.iter().zip(&traj.sigma_z).enumerate() {
        match exact {
            Some(e) if i < e.len() => writeln!(w, "{t:.10e} {s:.10e} {:.10e}", e.sigma_z[i])?,
            _ => writeln!(w, "{t:.10e} {s:.10e}")?,
        }
    }
    w.flush()?;
    let mut w = create(dir, "panel_sigma2.dat")?;
    writeln!(w, "# t sigma2")?;
    for (&t, &s) in traj.times.iter().zip(&traj.sigma2).filter(|(_, s)| s.is_finite()) {
        writeln!(w, "{t:.10e} {s:.10e}")?;
    }
    w.flush()?;
    Ok(())
}

fn write_traj(dir: &Path, name: &str, t: &Trajectory) -> Result<(), CliError> {
    let mut w = create(dir, name)?;
    write_trajectory(&mut w, t)?;
    w.flush()?;
    Ok(())
}

/// Discretizes both baths and writes `bath_left.dat` / `bath_right.dat`.
pub fn run_bath_stage(cfg: &RunConfig, out: &Path) -> Result<BathSetup, CliError> {
    std::fs::create_dir_all(out)?;
    let setup = build_baths(cfg, None)?;
    for (name, b) in [("bath_left.dat", &setup.left), ("bath_right.dat", &setup.right)] {
        let mut w = create(out, name)?;
        write_bath(&mut w, b)?;
        w.flush()?;
    }
    Ok(setup)
}

/// Exact reference for the configured Hamiltonian.
pub fn run_oracle(cfg: &RunConfig, h: &EffectiveHamiltonian) -> Result<ExactResult, CliError> {
    let o = cfg.oracle.unwrap_or_default();
    let i = &cfg.integrator;
    let fc = FockConfig {
        dimension_cap: o.dimension_cap,
        certification_tol: o.certification_tol,
        output_stride: i.output_stride,
        ..FockConfig::from_hamiltonian(h, o.n_max, cfg.qubit_init, i.dt, i.t_final)
    };
    Ok(exact_propagate(&fc)?)
}

/// Full pipeline. Always writes the configuration, baths, (partial)
/// trajectory, panels and `summary.toml`; returns an error after writing
/// when the solver aborted or the exact reference failed.
pub fn run(cfg: &RunConfig, out: &Path) -> Result<RunOutcome, CliError> {
    cfg.validate()?;
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("config.toml"), cfg.to_toml_string()?)?;
    let mut warnings = Vec::new();

    let t0 = Instant::now();
    let setup = run_bath_stage(cfg, out)?;
    let bath_s = t0.elapsed().as_secs_f64();
    if let Some(w) = dt_warning(cfg, &setup.hamiltonian) {
        eprintln!("warning: {w}");
        warnings.push(w);
    }

    let t1 = Instant::now();
    let params = run_parameters(cfg, &setup, cfg.ansatz.multiplicity);
    let (trajectory, error) = match run_trajectory(&params) {
        Ok(t) => (t, None),
        Err(abort) => {
            let msg = abort.to_string();
            (abort.partial, Some(msg))
        }
    };
    let dynamics_s = t1.elapsed().as_secs_f64();
    write_traj(out, "trajectory.dat", &trajectory)?;

    let mut oracle_s = None;
    let mut oracle_error = None;
    let exact = if cfg.oracle.is_some() {
        let t2 = Instant::now();
        let res = run_oracle(cfg, &setup.hamiltonian);
        oracle_s = Some(t2.elapsed().as_secs_f64());
        match res {
            Ok(r) => {
                if !r.certified {
                    let w = format!(
                        "exact reference cutoff not certified: n_max = {}, achieved max|Δσ_z| = {:.3e}",
                        r.n_max, r.bound
                    );
                    eprintln!("warning: {w}");
                    warnings.push(w);
                }
                write_traj(out, "exact.dat", &r.trajectory)?;
                Some(r)
            }
            Err(e) => {
                oracle_error = Some(e);
                None
            }
        }
    } else {
        None
    };
    write_panels(out, &trajectory, exact.as_ref().map(|e| &e.trajectory))?;

    let oracle = match &exact {
        Some(r) => {
            let metrics = compare_trajectories(&trajectory, &r.trajectory, cfg.convergence.sigma2_threshold).ok();
            Some(OracleSummary {
                n_max: r.n_max,
                certified: r.certified,
                cutoff_bound: r.bound,
                max_abs_diff: metrics.map(|m| m.max_abs),
                rms_diff: metrics.map(|m| m.rms),
            })
        }
        None => None,
    };
    if let Some(e) = &oracle_error {
        warnings.push(format!("exact reference failed: {e}"));
    }

    let (regime, regime_left, regime_right) = regimes(cfg);
    let (tl, tr) = cfg.temperatures();
    let max_sigma2 = trajectory.max_sigma2_after_start().unwrap_or(f64::NAN);
    let sigma2_at_start = trajectory.sigma2.first().copied().unwrap_or(f64::NAN);
    let completed = error.is_none();
    let summary = Summary {
        converged: completed && max_sigma2 < cfg.convergence.sigma2_threshold,
        completed,
        error: error.clone(),
        max_sigma2,
        sigma2_at_start,
        sigma2_threshold: cfg.convergence.sigma2_threshold,
        regime,
        regime_left,
        regime_right,
        alpha_c0: cfg.alpha_c0,
        omega0_ev: cfg.omega0_ev,
        temperature_left: tl,
        temperature_right: tr,
        multiplicity: cfg.ansatz.multiplicity,
        modes_left: setup.left.len(),
        modes_right: setup.right.len(),
        certification_error_left: setup.left.certification_error,
        certification_error_right: setup.right.certification_error,
        tfd_bcf_error_left: setup.tfd_error_left,
        tfd_bcf_error_right: setup.tfd_error_right,
        max_norm_deviation: trajectory.max_norm_deviation(),
        relative_energy_drift: trajectory.relative_energy_drift(),
        regularization_events: trajectory.meta.regularization.len(),
        max_ridge: trajectory.meta.regularization.iter().map(|e| e.ridge).fold(0.0, f64::max),
        t_reached: trajectory.times.last().copied().unwrap_or(f64::NAN),
        timings: Timings { bath_s, dynamics_s, oracle_s },
        oracle,
        warnings,
    };
    std::fs::write(out.join("summary.toml"), toml::to_string(&summary).map_err(|e| CliError::Serialize(e.to_string()))?)?;

    if let Some(msg) = error {
        return Err(CliError::Aborted(msg));
    }
    if let Some(e) = oracle_error {
        return Err(e.into());
    }
    Ok(RunOutcome { summary, trajectory, exact })
}

#[derive(Clone, Debug, Serialize)]
struct SweepRow {
    stage: &'static str,
    multiplicity: usize,
    modes: usize,
    max_sigma2: f64,
    completed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    diff_to_next: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
struct SweepFile {
    converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    converged_multiplicity: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    converged_modes: Option<usize>,
    entries: Vec<SweepRow>,
}

/// Mode counts of a sweep default to the configured count (or the log
/// default) when `n_list` is empty.
pub fn sweep(
    cfg: &RunConfig,
    m_list: &[usize],
    n_list: &[usize],
    opts: &SweepOptions,
    out: Option<&Path>,
) -> Result<SweepReport, CliError> {
    cfg.validate()?;
    let default_n = vec![cfg.discretization.modes.unwrap_or(DEFAULT_LOG_MODES)];
    let n_list = if n_list.is_empty() { &default_n[..] } else { n_list };
    // Baths depend only on N; build each once.
    let setups: Vec<(usize, BathSetup)> =
        n_list.iter().map(|&n| Ok((n, build_baths(cfg, Some(n))?))).collect::<Result<_, CliError>>()?;
    let report = convergence_sweep(
        |m, n| {
            let setup = &setups.iter().find(|(k, _)| *k == n).expect("mode count from the list").1;
            Ok(run_parameters(cfg, setup, m))
        },
        m_list,
        n_list,
        opts,
    )?;
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        let rows = report
            .entries
            .iter()
            .map(|e| SweepRow {
                stage: match e.stage {
                    SweepStage::Multiplicity => "multiplicity",
                    SweepStage::Modes => "modes",
                },
                multiplicity: e.multiplicity,
                modes: e.modes,
                max_sigma2: e.max_sigma2,
                completed: e.completed,
                diff_to_next: e.diff_to_next,
                tolerance: e.tolerance,
                error: e.error.clone(),
            })
            .collect();
        let file = SweepFile {
            converged: report.converged(),
            converged_multiplicity: report.converged_multiplicity,
            converged_modes: report.converged_modes,
            entries: rows,
        };
        std::fs::write(dir.join("sweep.toml"), toml::to_string(&file).map_err(|e| CliError::Serialize(e.to_string()))?)?;
        for e in &report.entries {
            write_traj(dir, &format!("sweep_M{}_N{}.dat", e.multiplicity, e.modes), &e.trajectory)?;
        }
    }
    Ok(report)
}
