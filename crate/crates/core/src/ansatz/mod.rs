//! The multi-Davydov D2 variational state and its observables.
//!
//! The state is `Ψ = Σ_i (A_i|+⟩ + B_i|−⟩) ⊗ |z_i⟩` where `|z_i⟩` is a
//! normalized multimode coherent state. The mode axis of `z_i` is ordered
//! `[f (left real), f̃ (left tilde), g (right real), g̃ (right tilde)]`.

mod io;
mod observables;
mod spectrum;
mod state;

pub use io::{read_state, write_state};
pub use observables::{
    debye_waller, hamiltonian_expectation, hamiltonian_moments, log_overlap, norm_squared, sigma_z_expectation,
    Moments, OverlapTable,
};
pub use spectrum::{series_spectrum, trajectory_spectrum, Spectrum};
pub use state::{Block, MD2State, ModeLayout};
pub(crate) use observables::{bra_ket_overlaps, spin_forms};

use thiserror::Error;

/// Errors raised by state construction and observable evaluation.
#[derive(Debug, Error)]
pub enum AnsatzError {
    #[error("state has zero norm")]
    ZeroNorm,
    #[error("dimension mismatch: {what} expected {expected}, found {found}")]
    DimensionMismatch { what: &'static str, expected: usize, found: usize },
    #[error("series is not uniformly sampled (sample {index} deviates)")]
    NonUniformSampling { index: usize },
    #[error("series needs at least {needed} samples, found {found}")]
    TooFewSamples { needed: usize, found: usize },
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed state snapshot at line {line}: {message}")]
    Parse { line: usize, message: String },
}
