//! Multi-Davydov D2 variational dynamics of a qubit coupled to two bosonic
//! baths held at different temperatures.
//!
//! Finite temperature is handled with thermofield dynamics: every bath mode
//! gets a fictitious "tilde" partner, and a Bogoliubov rotation turns the
//! thermal state into the vacuum of the doubled mode set.
//!
//! Pipeline overview:
//!
//! * [`bath`] — Drude–Lorentz spectral density, the bath correlation
//!   function, and certified discretizations. Two schemes are available:
//!   interpolative decomposition with nonnegative least squares, and a
//!   logarithmic grid.
//! * [`tfd`] — Bogoliubov angles, the effective zero-temperature
//!   Hamiltonian, and the initial variational state.
//! * [`ansatz`] — the multi-D2 state, Debye–Waller overlaps, observables,
//!   and spectra of observable time series.
//! * [`dynamics`] — time-dependent variational equations of motion, the
//!   regularized implicit solve, RK4 propagation, the deviation measure σ²,
//!   and convergence sweeps.
//! * [`oracle`] — exact propagation in a truncated Fock space, used as a
//!   reference.
//! * [`cli`] — configuration files, regime classification, comparison
//!   metrics, and run orchestration.
//!
//! Units: ħ = 1, and the qubit splitting ω₀ is the energy unit, so times are
//! in units of 1/ω₀.

pub mod ansatz;
pub mod bath;
pub mod cli;
pub mod dynamics;
pub mod numeric;
pub mod oracle;
pub mod tfd;

pub use num_complex::Complex64 as C64;
