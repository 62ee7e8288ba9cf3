//! Thermofield doubling and the effective zero-temperature Hamiltonian.
//!
//! Each bath mode `ω` gets a tilde partner at `−ω`. The Bogoliubov rotation
//! with angle `θ = arctanh(e^{−βω/2})` maps the thermal state onto the
//! doubled vacuum. The effective Hamiltonian is then
//!
//! `H_θ = (ω₀/2) σ_z + Σ_r Σ_k [ω_rk (b†b − b̃†b̃)
//!        + σ_x λ_rk ((b + b†) cosh θ_rk + (b̃ + b̃†) sinh θ_rk)]`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ansatz::{norm_squared, MD2State, ModeLayout};
use crate::bath::DiscretizedBath;
use crate::C64;

/// Errors raised by the thermofield transformation.
#[derive(Debug, Error)]
pub enum TfdError {
    #[error("inverse temperature must be positive, got β = {0}")]
    InvalidBeta(f64),
    #[error(
        "{bath} bath mode {index} has nonpositive frequency ω = {omega}; the Bogoliubov angle diverges \
         (discretize at zero temperature or drop negative-frequency modes)"
    )]
    NonPositiveFrequency { bath: &'static str, index: usize, omega: f64 },
    #[error("{bath} bath has {modes} modes but {angles} Bogoliubov angles")]
    LengthMismatch { bath: &'static str, modes: usize, angles: usize },
    #[error("multiplicity must be at least 1")]
    ZeroMultiplicity,
    #[error("noise amplitude must be finite and nonnegative, got {0}")]
    InvalidNoise(f64),
}

/// Bogoliubov angles `θ_k = arctanh(exp(−β ω_k / 2))`.
pub fn bogoliubov_angles(bath: &DiscretizedBath, beta: f64) -> Result<Vec<f64>, TfdError> {
    angles_for(&bath.frequencies, beta, "")
}

fn angles_for(freqs: &[f64], beta: f64, name: &'static str) -> Result<Vec<f64>, TfdError> {
    if !(beta > 0.0) {
        return Err(TfdError::InvalidBeta(beta));
    }
    freqs
        .iter()
        .enumerate()
        .map(|(index, &omega)| {
            if !(omega > 0.0) {
                Err(TfdError::NonPositiveFrequency { bath: name, index, omega })
            } else {
                Ok((-0.5 * beta * omega).exp().atanh())
            }
        })
        .collect()
}

/// Inverse temperatures and Bogoliubov angles of both baths.
#[derive(Clone, Debug, PartialEq)]
pub struct ThermalBathPair {
    pub beta_left: f64,
    pub beta_right: f64,
    pub theta_left: Vec<f64>,
    pub theta_right: Vec<f64>,
}

impl ThermalBathPair {
    /// Angles for both baths at their own inverse temperatures.
    pub fn new(
        left: &DiscretizedBath,
        right: &DiscretizedBath,
        beta_left: f64,
        beta_right: f64,
    ) -> Result<Self, TfdError> {
        Ok(Self {
            beta_left,
            beta_right,
            theta_left: angles_for(&left.frequencies, beta_left, "left")?,
            theta_right: angles_for(&right.frequencies, beta_right, "right")?,
        })
    }
}

/// Coefficients of one thermofield-doubled bath.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BathBlock {
    /// Physical frequencies `ω_k > 0`; the tilde partners sit at `−ω_k`.
    pub frequencies: Vec<f64>,
    /// `λ_k cosh θ_k`.
    pub real_couplings: Vec<f64>,
    /// `λ_k sinh θ_k`.
    pub tilde_couplings: Vec<f64>,
}

impl BathBlock {
    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    /// Tilde-mode energies `−ω_k`.
    pub fn tilde_frequencies(&self) -> Vec<f64> {
        self.frequencies.iter().map(|w| -w).collect()
    }
}

/// All coefficients of the effective Hamiltonian.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectiveHamiltonian {
    pub omega0: f64,
    pub left: BathBlock,
    pub right: BathBlock,
}

impl EffectiveHamiltonian {
    /// Mode layout of states evolving under this Hamiltonian.
    pub fn layout(&self) -> ModeLayout {
        ModeLayout::new(self.left.len(), self.right.len())
    }

    /// Flattened mode energies in the order `[f, f̃, g, g̃]`.
    pub fn mode_energies(&self) -> Vec<f64> {
        let mut e = Vec::with_capacity(self.layout().total());
        for b in [&self.left, &self.right] {
            e.extend_from_slice(&b.frequencies);
            e.extend(b.tilde_frequencies());
        }
        e
    }

    /// Flattened `σ_x` couplings in the order `[f, f̃, g, g̃]`.
    pub fn mode_couplings(&self) -> Vec<f64> {
        let mut c = Vec::with_capacity(self.layout().total());
        for b in [&self.left, &self.right] {
            c.extend_from_slice(&b.real_couplings);
            c.extend_from_slice(&b.tilde_couplings);
        }
        c
    }

    /// Largest mode frequency magnitude.
    pub fn max_frequency(&self) -> f64 {
        self.left.frequencies.iter().chain(&self.right.frequencies).fold(0.0, |a, w| a.max(w.abs()))
    }
}

/// Builds the effective Hamiltonian; couplings `λ` are the bath `g_k`.
pub fn build_effective_hamiltonian(
    bath_l: &DiscretizedBath,
    bath_r: &DiscretizedBath,
    thermal: &ThermalBathPair,
    omega0: f64,
) -> Result<EffectiveHamiltonian, TfdError> {
    let block = |bath: &DiscretizedBath, theta: &[f64], name: &'static str| {
        if theta.len() != bath.len() {
            return Err(TfdError::LengthMismatch { bath: name, modes: bath.len(), angles: theta.len() });
        }
        Ok(BathBlock {
            frequencies: bath.frequencies.clone(),
            real_couplings: bath.couplings.iter().zip(theta).map(|(l, t)| l * t.cosh()).collect(),
            tilde_couplings: bath.couplings.iter().zip(theta).map(|(l, t)| l * t.sinh()).collect(),
        })
    };
    Ok(EffectiveHamiltonian {
        omega0,
        left: block(bath_l, &thermal.theta_left, "left")?,
        right: block(bath_r, &thermal.theta_right, "right")?,
    })
}

/// Initial qubit polarization.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QubitInit {
    #[default]
    Up,
    Down,
    PlusX,
}

impl QubitInit {
    /// Spinor `[A, B]` in the `σ_z` basis.
    pub fn spinor(self) -> [C64; 2] {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            QubitInit::Up => [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
            QubitInit::Down => [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
            QubitInit::PlusX => [C64::new(r, 0.0), C64::new(r, 0.0)],
        }
    }
}

/// Symmetry-breaking noise of the initial state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InitialNoise {
    pub amplitude: f64,
    pub seed: u64,
}

impl Default for InitialNoise {
    fn default() -> Self {
        Self { amplitude: 1e-4, seed: 0 }
    }
}

/// Initial variational state: qubit spinor on configuration 1 with the
/// bath in the doubled vacuum.
///
/// Every displacement and every non-dominant amplitude receives independent
/// uniform complex noise (modulus uniform in `[0, amplitude]`, uniform
/// phase) drawn from a ChaCha stream seeded with `noise.seed`. Amplitude
/// noise is applied along the initial spinor, so `⟨σ_z⟩` stays exact for the
/// polarized initial states. The result is normalized.
pub fn initial_state_spec(
    qubit_init: QubitInit,
    m: usize,
    layout: ModeLayout,
    noise: InitialNoise,
) -> Result<MD2State, TfdError> {
    if m == 0 {
        return Err(TfdError::ZeroMultiplicity);
    }
    if !(noise.amplitude >= 0.0 && noise.amplitude.is_finite()) {
        return Err(TfdError::InvalidNoise(noise.amplitude));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let draw = |rng: &mut ChaCha8Rng| {
        if noise.amplitude == 0.0 {
            return C64::new(0.0, 0.0);
        }
        let r = rng.gen_range(0.0..=noise.amplitude);
        let phi = rng.gen_range(0.0..std::f64::consts::TAU);
        C64::from_polar(r, phi)
    };
    let [sa, sb] = qubit_init.spinor();
    let mut state = MD2State::zeros(m, layout);
    for i in 0..m {
        let eta = if i == 0 { C64::new(1.0, 0.0) } else { draw(&mut rng) };
        state.a[i] = eta * sa;
        state.b[i] = eta * sb;
        for k in 0..layout.total() {
            state.z[[i, k]] = draw(&mut rng);
        }
    }
    let norm = norm_squared(&state);
    state.scale_amplitudes(C64::new(1.0 / norm.sqrt(), 0.0));
    Ok(state)
}
