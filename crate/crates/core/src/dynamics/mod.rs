//! Equations of motion, regularized implicit solve, RK4 propagation,
//! deviation diagnostics and convergence sweeps.

mod eom;
mod integrate;
mod linalg;
mod run;
mod sweep;
mod trajectory;

pub use eom::{assemble_eom, assemble_flat, solve_eom, solve_eom_from, EomSolution, EomSystem, FlatHamiltonian};
pub use integrate::{deviation_from, deviation_sigma2, rk4_step, Propagator};
pub use run::{run_from_state, run_trajectory, RunParameters, TrajectoryAbort};
pub use sweep::{convergence_sweep, SweepEntry, SweepOptions, SweepReport, SweepStage};
pub use trajectory::{read_trajectory, write_trajectory, RidgeEvent, Trajectory, TrajectoryMeta};

use thiserror::Error;

use crate::ansatz::AnsatzError;
use crate::tfd::TfdError;

/// Adaptive ridge schedule for the implicit solve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RidgePolicy {
    pub initial: f64,
    pub factor: f64,
    pub cap: f64,
    /// Largest acceptable velocity norm `‖ẋ‖`.
    pub max_norm: f64,
    /// Largest acceptable condition estimate `1/rcond` of the factorized
    /// matrix; beyond it the solve counts as numerically singular.
    pub max_condition: f64,
    /// Largest number of iterated-Tikhonov refinement rounds applied to a
    /// regularized solution.
    pub refinements: usize,
    /// Refinement stops once the unregularized relative residual
    /// `‖r − G ẋ‖ / ‖r‖` falls to this level. Each round weakens the
    /// effective ridge on near-null directions, so rounds beyond what the
    /// residual needs only let those directions grow.
    pub refine_tol: f64,
    /// Warm start for successive solves of a propagation: each solve starts
    /// at the previously accepted ridge and tries one factor lower after
    /// this many consecutive first-try acceptances. `0` restarts every
    /// solve at `initial`.
    pub relax_after: usize,
}

impl Default for RidgePolicy {
    fn default() -> Self {
        Self {
            initial: 1e-12, factor: 1e2, cap: 1e-6, max_norm: 1e8, max_condition: 1e7, refinements: 10,
            refine_tol: 1e-10,
            relax_after: 8,
        }
    }
}

/// Errors raised while propagating.
#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error(
        "regularization cap {cap:.1e} reached at t = {time}: velocity norm {norm:.3e} \
         (multiplicity too large for the occupied manifold, or state collapse)"
    )]
    RegularizationCap { time: f64, cap: f64, norm: f64 },
    #[error("Gram matrix is not Hermitian (residual {0:.3e}); assembly defect")]
    NonHermitian(f64),
    #[error("state became non-finite at t = {0}")]
    NonFinite(f64),
    #[error("deviation σ² = {value:.3e} is negative beyond the cancellation floor (⟨H²⟩ = {h2:.3e})")]
    NegativeDeviation { value: f64, h2: f64 },
    #[error("state has {found} modes but the Hamiltonian has {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid run parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Ansatz(#[from] AnsatzError),
    #[error(transparent)]
    Tfd(#[from] TfdError),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed trajectory file at line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[cfg(test)]
mod tests;
