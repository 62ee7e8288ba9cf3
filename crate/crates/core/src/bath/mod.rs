//! Continuous bath description and certified discrete representations.
//!
//! A bath is characterized by a Drude–Lorentz spectral density
//! `J(ω) = 2 α ω_c ω / (ω² + ω_c²)`. The thermal noise spectrum is
//! `S_β(ω) = J(ω) [coth(βω/2) + 1] / (2π)`, and the bath correlation function
//! (BCF) is `C(t) = ∫ S_β(ω) e^{-iωt} dω`. A discrete bath approximates the
//! BCF by `Σ_k z_k S_β(ω_k) e^{-iω_k t}` with couplings `g_k = √(z_k S_β(ω_k))`.

mod id;
mod io;
mod nnls;

pub use id::{discretize_id, IdOptions, PivotedSelector};
pub use io::{read_bath, write_bath};
pub use nnls::{nnls, NnlsSolution};

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

use crate::numeric::{composite_gauss_legendre, NeumaierSumC};
use crate::C64;

/// Errors raised by bath construction and discretization.
#[derive(Debug, Error)]
pub enum BathError {
    #[error("{name} must be positive and finite, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("spectral density is defined for ω ≥ 0, got ω = {0}")]
    NegativeFrequency(f64),
    #[error("inverse temperature must be positive, got β = {0}")]
    InvalidBeta(f64),
    #[error("time grid must be nonempty, finite and sorted ascending")]
    InvalidTimeGrid,
    #[error("column selection produced no pivots at tolerance {tolerance}")]
    EmptyPivotSet { tolerance: f64 },
    #[error("NNLS did not converge within {iterations} iterations (best residual {best_residual:.3e})")]
    NnlsNotConverged { iterations: usize, best_residual: f64 },
    #[error("invalid discretization parameter: {0}")]
    InvalidParameter(String),
    #[error("linear algebra failure: {0}")]
    Linalg(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed bath file at line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Functional form of the spectral density.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SpectralForm {
    #[default]
    DrudeLorentz,
}

/// A continuous spectral density `J(ω)` (energies in units of ω₀).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralDensity {
    pub alpha: f64,
    pub omega_c: f64,
    #[serde(default)]
    pub form: SpectralForm,
}

impl SpectralDensity {
    /// Drude–Lorentz density with coupling `alpha` and cutoff `omega_c`.
    pub fn drude_lorentz(alpha: f64, omega_c: f64) -> Result<Self, BathError> {
        let sd = Self { alpha, omega_c, form: SpectralForm::DrudeLorentz };
        sd.validate()?;
        Ok(sd)
    }

    /// Checks that the parameters are physical.
    pub fn validate(&self) -> Result<(), BathError> {
        positive("alpha", self.alpha)?;
        positive("omega_c", self.omega_c)
    }

    /// `J(ω)` extended antisymmetrically to negative frequencies.
    pub fn value_signed(&self, omega: f64) -> f64 {
        match self.form {
            SpectralForm::DrudeLorentz => {
                2.0 * self.alpha * self.omega_c * omega / (omega * omega + self.omega_c * self.omega_c)
            }
        }
    }

    /// Default discretization cutoff `Ω = 10 ω_c`.
    pub fn default_omega_max(&self) -> f64 {
        10.0 * self.omega_c
    }
}

pub(crate) fn positive(name: &'static str, value: f64) -> Result<(), BathError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(BathError::NonPositive { name, value })
    }
}

fn check_beta(beta: f64) -> Result<(), BathError> {
    // β = +∞ (zero temperature) is admissible.
    if beta > 0.0 && !beta.is_nan() {
        Ok(())
    } else {
        Err(BathError::InvalidBeta(beta))
    }
}

/// Evaluates `J(ω)` for `ω ≥ 0`.
pub fn spectral_density_value(sd: &SpectralDensity, omega: f64) -> Result<f64, BathError> {
    if !(omega >= 0.0) {
        return Err(BathError::NegativeFrequency(omega));
    }
    Ok(sd.value_signed(omega))
}

/// Evaluates `S_β(ω)` for any real `ω`; `beta` may be `f64::INFINITY`.
pub fn quantum_noise_spectrum(sd: &SpectralDensity, beta: f64, omega: f64) -> Result<f64, BathError> {
    check_beta(beta)?;
    Ok(noise_spectrum_unchecked(sd, beta, omega))
}

/// `S_β(ω) = J(ω) / (π (1 − e^{−βω}))`, written with `expm1` so it is accurate
/// near `ω = 0` and for both signs of `ω`.
pub(crate) fn noise_spectrum_unchecked(sd: &SpectralDensity, beta: f64, omega: f64) -> f64 {
    if omega == 0.0 {
        // lim_{ω→0} J(ω)/(π βω) = J'(0)/(πβ) = 2α/(π β ω_c).
        return 2.0 * sd.alpha / (PI * beta * sd.omega_c);
    }
    let denom = -(-beta * omega).exp_m1();
    if denom.is_infinite() {
        return 0.0;
    }
    (sd.value_signed(omega) / (PI * denom)).max(0.0)
}

/// Sampled bath correlation function.
#[derive(Clone, Debug, PartialEq)]
pub struct BcfGrid {
    pub times: Vec<f64>,
    pub values: Vec<C64>,
}

impl BcfGrid {
    /// Largest modulus on the grid.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

/// Gauss–Legendre order per panel of the dense BCF quadrature.
pub const BCF_PANEL_ORDER: usize = 20;
/// Default panel count; 512 panels × 20 nodes ≥ 10⁴ nodes.
pub const BCF_DEFAULT_PANELS: usize = 512;

/// Dense-quadrature BCF over `[−Ω, Ω]`, the certification ground truth.
pub fn bath_correlation_function(
    sd: &SpectralDensity,
    beta: f64,
    omega_max: f64,
    times: &[f64],
) -> Result<BcfGrid, BathError> {
    bath_correlation_function_with_panels(sd, beta, omega_max, times, BCF_DEFAULT_PANELS)
}

/// As [`bath_correlation_function`] with an explicit (even) panel count.
pub fn bath_correlation_function_with_panels(
    sd: &SpectralDensity,
    beta: f64,
    omega_max: f64,
    times: &[f64],
    panels: usize,
) -> Result<BcfGrid, BathError> {
    sd.validate()?;
    check_beta(beta)?;
    positive("omega_max", omega_max)?;
    check_times(times)?;
    if panels == 0 || panels % 2 != 0 {
        return Err(BathError::InvalidParameter(format!(
            "panel count must be even so that ω = 0 is a panel edge, got {panels}"
        )));
    }
    let (nodes, weights) = composite_gauss_legendre(-omega_max, omega_max, panels, BCF_PANEL_ORDER);
    let ws: Vec<f64> = nodes
        .iter()
        .zip(&weights)
        .map(|(&w, &q)| q * noise_spectrum_unchecked(sd, beta, w))
        .collect();
    let values = times
        .iter()
        .map(|&t| {
            let mut acc = NeumaierSumC::new();
            for (&w, &s) in nodes.iter().zip(&ws) {
                let (sin, cos) = (w * t).sin_cos();
                acc.add(C64::new(s * cos, -s * sin));
            }
            acc.value()
        })
        .collect();
    Ok(BcfGrid { times: times.to_vec(), values })
}

fn check_times(times: &[f64]) -> Result<(), BathError> {
    if times.is_empty() || times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|p| p[1] < p[0]) {
        return Err(BathError::InvalidTimeGrid);
    }
    Ok(())
}

/// `m` equispaced samples on `[0, horizon]`.
pub fn uniform_times(horizon: f64, m: usize) -> Vec<f64> {
    match m {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..m).map(|i| horizon * i as f64 / (m - 1) as f64).collect(),
    }
}

/// A discrete bath: modes `ω_k`, weights `z_k ≥ 0` and couplings
/// `g_k = √(z_k S_β(ω_k))`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscretizedBath {
    pub frequencies: Vec<f64>,
    pub couplings: Vec<f64>,
    pub weights: Vec<f64>,
    pub beta: f64,
    pub certification_error: f64,
}

impl DiscretizedBath {
    /// Number of modes.
    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    /// Indices of modes with `ω_k ≤ 0`.
    pub fn nonpositive_modes(&self) -> Vec<usize> {
        (0..self.len()).filter(|&k| self.frequencies[k] <= 0.0).collect()
    }

    /// Copy without zero-weight modes (they do not couple to the qubit).
    /// At least one mode is always kept.
    pub fn pruned(&self) -> DiscretizedBath {
        let keep: Vec<usize> = (0..self.len()).filter(|&k| self.weights[k] > 0.0).collect();
        if keep.is_empty() {
            return self.clone();
        }
        DiscretizedBath {
            frequencies: keep.iter().map(|&k| self.frequencies[k]).collect(),
            couplings: keep.iter().map(|&k| self.couplings[k]).collect(),
            weights: keep.iter().map(|&k| self.weights[k]).collect(),
            beta: self.beta,
            certification_error: self.certification_error,
        }
    }

    /// Discrete BCF `Σ_k g_k² e^{-iω_k t}` at the given times.
    pub fn reconstruct_bcf(&self, times: &[f64]) -> Vec<C64> {
        times
            .iter()
            .map(|&t| {
                let mut acc = NeumaierSumC::new();
                for (&w, &g) in self.frequencies.iter().zip(&self.couplings) {
                    acc.add(C64::from_polar(g * g, -w * t));
                }
                acc.value()
            })
            .collect()
    }

    /// `max_i |C_disc(t_i) − C(t_i)| / max_i |C(t_i)|` against a reference grid.
    pub fn relative_bcf_error(&self, reference: &BcfGrid) -> f64 {
        relative_error(&self.reconstruct_bcf(&reference.times), reference)
    }
}

pub(crate) fn relative_error(values: &[C64], reference: &BcfGrid) -> f64 {
    let scale = reference.max_abs();
    let err = values
        .iter()
        .zip(&reference.values)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    if scale > 0.0 {
        err / scale
    } else {
        err
    }
}

/// Parameters of the logarithmic baseline discretization.
#[derive(Clone, Debug, PartialEq)]
pub struct LogOptions {
    pub omega_max: f64,
    pub modes: usize,
    /// Lower edge of the logarithmic grid as a fraction of `omega_max`.
    pub omega_min_ratio: f64,
    /// Certification horizon and sample count.
    pub horizon: f64,
    pub time_samples: usize,
}

impl LogOptions {
    pub fn new(omega_max: f64, modes: usize, horizon: f64) -> Self {
        Self { omega_max, modes, omega_min_ratio: 1e-2, horizon, time_samples: 400 }
    }
}

/// Logarithmic discretization on `(0, Ω]`.
///
/// Edges are `e_k = ω_min (Ω/ω_min)^{k/n}`; each mode sits at the geometric
/// midpoint of its interval and carries the interval width as weight. The
/// first interval is extended down to zero so that no spectral weight is lost.
pub fn discretize_log(sd: &SpectralDensity, beta: f64, opts: &LogOptions) -> Result<DiscretizedBath, BathError> {
    sd.validate()?;
    check_beta(beta)?;
    positive("omega_max", opts.omega_max)?;
    positive("horizon", opts.horizon)?;
    if opts.modes == 0 {
        return Err(BathError::InvalidParameter("log discretization needs at least one mode".into()));
    }
    if !(opts.omega_min_ratio > 0.0 && opts.omega_min_ratio < 1.0) {
        return Err(BathError::InvalidParameter(format!(
            "omega_min_ratio must lie in (0, 1), got {}",
            opts.omega_min_ratio
        )));
    }
    if opts.time_samples == 0 {
        return Err(BathError::InvalidParameter("time_samples must be ≥ 1".into()));
    }
    let n = opts.modes;
    let w_min = opts.omega_max * opts.omega_min_ratio;
    let ratio = (opts.omega_max / w_min).ln();
    let edges: Vec<f64> = (0..=n)
        .map(|k| if k == n { opts.omega_max } else { w_min * (ratio * k as f64 / n as f64).exp() })
        .collect();
    let mut frequencies = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for k in 0..n {
        frequencies.push((edges[k] * edges[k + 1]).sqrt());
        let lower = if k == 0 { 0.0 } else { edges[k] };
        weights.push(edges[k + 1] - lower);
    }
    finish_bath(sd, beta, frequencies, weights, opts.omega_max, opts.horizon, opts.time_samples)
}

/// Computes couplings and the certification error for given modes/weights.
pub(crate) fn finish_bath(
    sd: &SpectralDensity,
    beta: f64,
    frequencies: Vec<f64>,
    weights: Vec<f64>,
    omega_max: f64,
    horizon: f64,
    time_samples: usize,
) -> Result<DiscretizedBath, BathError> {
    let couplings = frequencies
        .iter()
        .zip(&weights)
        .map(|(&w, &z)| (z * noise_spectrum_unchecked(sd, beta, w)).sqrt())
        .collect();
    let mut bath = DiscretizedBath { frequencies, couplings, weights, beta, certification_error: 0.0 };
    let reference = bath_correlation_function(sd, beta, omega_max, &uniform_times(horizon, time_samples))?;
    bath.certification_error = bath.relative_bcf_error(&reference);
    Ok(bath)
}
