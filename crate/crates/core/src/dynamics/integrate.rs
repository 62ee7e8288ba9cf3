//! Fixed-step RK4 propagation and the deviation measure σ².

use super::eom::{assemble_flat, solve_eom_from, EomSolution, EomSystem, FlatHamiltonian};
use super::{DynamicsError, RidgeEvent, RidgePolicy};
use crate::ansatz::{hamiltonian_moments, MD2State};
use crate::tfd::EffectiveHamiltonian;
use crate::C64;

/// Evaluates variational time derivatives and advances states.
///
/// Successive solves are warm-started at the previously accepted ridge (see
/// [`RidgePolicy::relax_after`]); every change of the accepted ridge is
/// logged as a [`RidgeEvent`].
#[derive(Clone, Debug)]
pub struct Propagator {
    flat: FlatHamiltonian,
    policy: RidgePolicy,
    events: Vec<RidgeEvent>,
    /// Last accepted ridge.
    ridge: f64,
    /// Consecutive solves accepted at their starting ridge.
    streak: usize,
}

impl Propagator {
    pub fn new(h: &EffectiveHamiltonian, policy: RidgePolicy) -> Self {
        Self { flat: FlatHamiltonian::from(h), policy, events: Vec::new(), ridge: policy.initial, streak: 0 }
    }

    /// Currently accepted ridge.
    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    pub fn hamiltonian(&self) -> &FlatHamiltonian {
        &self.flat
    }

    /// Changes of the accepted ridge recorded so far.
    pub fn events(&self) -> &[RidgeEvent] {
        &self.events
    }

    /// Assembles and solves the equations of motion at `state`.
    pub fn derivative(&mut self, state: &MD2State) -> Result<(EomSystem, EomSolution), DynamicsError> {
        let mut sys = assemble_flat(state, &self.flat)?;
        let p = &self.policy;
        let relax = p.relax_after > 0 && self.streak >= p.relax_after;
        let start = match p.relax_after {
            0 => p.initial,
            _ if relax => self.ridge / p.factor,
            _ => self.ridge,
        };
        let sol = solve_eom_from(&mut sys, p, state.time, start)?;
        self.streak = if sol.rejected.is_empty() && !relax { self.streak + 1 } else { 0 };
        let previous = if p.relax_after == 0 { p.initial } else { self.ridge };
        if sol.ridge != previous {
            self.events.push(RidgeEvent { time: state.time, ridge: sol.ridge, norm: sol.norm() });
        }
        self.ridge = sol.ridge;
        Ok((sys, sol))
    }

    /// One classical RK4 step of size `dt`.
    pub fn step(&mut self, state: &MD2State, dt: f64) -> Result<MD2State, DynamicsError> {
        let (_, k1) = self.derivative(state)?;
        self.step_with_first_stage(state, &k1, dt)
    }

    /// RK4 step reusing an already computed first-stage derivative.
    pub fn step_with_first_stage(
        &mut self,
        state: &MD2State,
        k1: &EomSolution,
        dt: f64,
    ) -> Result<MD2State, DynamicsError> {
        let mut y2 = displaced(state, k1, 0.5 * dt);
        y2.time = state.time + 0.5 * dt;
        let (_, k2) = self.derivative(&y2)?;
        let mut y3 = displaced(state, &k2, 0.5 * dt);
        y3.time = y2.time;
        let (_, k3) = self.derivative(&y3)?;
        let mut y4 = displaced(state, &k3, dt);
        y4.time = state.time + dt;
        let (_, k4) = self.derivative(&y4)?;

        let mut next = state.clone();
        let w = dt / 6.0;
        let combine = |a: C64, b: C64, c: C64, d: C64| (a + (b + c) * 2.0 + d) * w;
        for i in 0..state.multiplicity() {
            next.a[i] += combine(k1.a_dot[[i, 0]], k2.a_dot[[i, 0]], k3.a_dot[[i, 0]], k4.a_dot[[i, 0]]);
            next.b[i] += combine(k1.a_dot[[i, 1]], k2.a_dot[[i, 1]], k3.a_dot[[i, 1]], k4.a_dot[[i, 1]]);
        }
        ndarray::Zip::from(&mut next.z)
            .and(&k1.z_dot)
            .and(&k2.z_dot)
            .and(&k3.z_dot)
            .and(&k4.z_dot)
            .for_each(|z, &a, &b, &c, &d| *z += combine(a, b, c, d));
        next.time = state.time + dt;
        if !next.is_finite() {
            return Err(DynamicsError::NonFinite(next.time));
        }
        Ok(next)
    }
}

fn displaced(state: &MD2State, k: &EomSolution, h: f64) -> MD2State {
    let mut s = state.clone();
    for i in 0..s.multiplicity() {
        s.a[i] += k.a_dot[[i, 0]] * h;
        s.b[i] += k.a_dot[[i, 1]] * h;
    }
    s.z.scaled_add(C64::new(h, 0.0), &k.z_dot);
    s
}

/// One RK4 step with the default ridge policy.
pub fn rk4_step(state: &MD2State, h: &EffectiveHamiltonian, dt: f64) -> Result<MD2State, DynamicsError> {
    if !(dt > 0.0) {
        return Err(DynamicsError::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    Propagator::new(h, RidgePolicy::default()).step(state, dt)
}

/// `σ² = ‖(i∂_t − H)Ψ‖²` (in units of ω₀²) for the solved velocities.
pub fn deviation_sigma2(state: &MD2State, h: &EffectiveHamiltonian, sol: &EomSolution) -> Result<f64, DynamicsError> {
    let sys = assemble_flat(state, &FlatHamiltonian::from(h))?;
    let h2 = hamiltonian_moments(state, h)?.energy_sq;
    deviation_from(&sys, sol, h2, h.omega0)
}

/// σ² from an assembled system and `⟨Ψ|H²|Ψ⟩`:
/// `σ² = [ẋ†Gẋ + ⟨H²⟩ − 2 Im⟨Ψ̇|H|Ψ⟩] / ω₀²`, where `⟨Ψ̇|H|Ψ⟩ = Σ_v ẋ_v* · i r_v`.
/// When the solve is exact the bracket equals `⟨H²⟩ − ⟨Ψ̇|Ψ̇⟩`.
/// With `ω₀ = 0` the bracket is returned unnormalized.
pub fn deviation_from(sys: &EomSystem, sol: &EomSolution, h2: f64, omega0: f64) -> Result<f64, DynamicsError> {
    let (ge, gd) = sys.apply_gram(&sol.c_dot, &sol.z_dot, 0.0);
    let mut xgx = 0.0;
    let mut cross = C64::new(0.0, 0.0);
    for (x, (g, r)) in sol.c_dot.iter().zip(ge.iter().zip(sys.rhs_amp.iter())) {
        xgx += (x.conj() * g).re;
        cross += x.conj() * C64::new(0.0, 1.0) * r;
    }
    for (x, (g, r)) in sol.z_dot.iter().zip(gd.iter().zip(sys.rhs_disp.iter())) {
        xgx += (x.conj() * g).re;
        cross += x.conj() * C64::new(0.0, 1.0) * r;
    }
    let value = xgx + h2 - 2.0 * cross.im;
    if value < -1e-10 * h2.abs().max(1.0) {
        return Err(DynamicsError::NegativeDeviation { value, h2 });
    }
    let scale = if omega0 == 0.0 { 1.0 } else { omega0 * omega0 };
    Ok(value.max(0.0) / scale)
}
