//! Whole-trajectory propagation.

use super::integrate::{deviation_from, Propagator};
use super::{DynamicsError, RidgePolicy, Trajectory, TrajectoryMeta};
use crate::ansatz::{hamiltonian_moments, MD2State};
use crate::tfd::{initial_state_spec, EffectiveHamiltonian, InitialNoise, QubitInit};

/// Everything needed to propagate one trajectory.
#[derive(Clone, Debug)]
pub struct RunParameters {
    pub hamiltonian: EffectiveHamiltonian,
    pub multiplicity: usize,
    pub qubit_init: QubitInit,
    pub noise: InitialNoise,
    pub dt: f64,
    pub t_final: f64,
    /// Record observables every `output_stride` steps.
    pub output_stride: usize,
    /// Evaluate σ² on recorded rows whose step index is a multiple of
    /// `sigma2_stride` (0 disables σ²).
    pub sigma2_stride: usize,
    pub ridge: RidgePolicy,
    /// Largest per-parameter change `max_v |ẋ_v|·h` of one RK4 step; output
    /// steps whose first-stage velocity exceeds it are split into equal
    /// substeps. This resolves the fast separation of the nearly degenerate
    /// seeded configurations at start-up and is inactive otherwise.
    /// `f64::INFINITY` gives plain fixed-step RK4.
    pub max_step_arc: f64,
    /// Bath descriptors copied into the trajectory metadata.
    pub baths: Vec<String>,
}

impl RunParameters {
    /// Defaults: `dt = 0.01`, `t_final = 10`, every step recorded, σ² every
    /// 10 steps, noise 10⁻⁴ with seed 0, qubit up.
    pub fn new(hamiltonian: EffectiveHamiltonian, multiplicity: usize) -> Self {
        Self {
            hamiltonian,
            multiplicity,
            qubit_init: QubitInit::Up,
            noise: InitialNoise::default(),
            dt: 0.01,
            t_final: 10.0,
            output_stride: 1,
            sigma2_stride: 10,
            ridge: RidgePolicy::default(),
            max_step_arc: 0.02,
            baths: Vec::new(),
        }
    }

    fn validate(&self) -> Result<usize, DynamicsError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(DynamicsError::InvalidParameter(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(DynamicsError::InvalidParameter(format!("t_final must be ≥ 0, got {}", self.t_final)));
        }
        if !(self.max_step_arc > 0.0) {
            return Err(DynamicsError::InvalidParameter("max_step_arc must be positive".into()));
        }
        if self.output_stride == 0 {
            return Err(DynamicsError::InvalidParameter("output_stride must be ≥ 1".into()));
        }
        let steps = (self.t_final / self.dt).round();
        if (steps * self.dt - self.t_final).abs() > 1e-9 * self.t_final.max(1.0) {
            return Err(DynamicsError::InvalidParameter(format!(
                "t_final = {} is not an integer multiple of dt = {}",
                self.t_final, self.dt
            )));
        }
        Ok(steps as usize)
    }
}

/// A run that stopped early; `partial` holds every row recorded before the
/// failure.
#[derive(Debug)]
pub struct TrajectoryAbort {
    pub partial: Trajectory,
    pub error: DynamicsError,
}

impl std::fmt::Display for TrajectoryAbort {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let t = self.partial.times.last().copied().unwrap_or(f64::NAN);
        write!(f, "run aborted after t = {t}: {}", self.error)
    }
}

impl std::error::Error for TrajectoryAbort {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

fn substep_count(arc: f64, max_arc: f64) -> usize {
    if arc <= max_arc {
        1
    } else {
        // Bounded so a pathological velocity cannot stall the run; the ridge
        // policy already caps ‖ẋ‖.
        ((arc / max_arc).ceil() as usize).min(1 << 16)
    }
}

/// Initializes the state and propagates it to `t_final`.
pub fn run_trajectory(p: &RunParameters) -> Result<Trajectory, TrajectoryAbort> {
    let layout = p.hamiltonian.layout();
    let abort = |error: DynamicsError| TrajectoryAbort { partial: Trajectory::default(), error };
    let state = initial_state_spec(p.qubit_init, p.multiplicity, layout, p.noise).map_err(|e| abort(e.into()))?;
    run_from_state(p, state)
}

/// Propagates a given initial state to `state.time + t_final`.
pub fn run_from_state(p: &RunParameters, mut state: MD2State) -> Result<Trajectory, TrajectoryAbort> {
    let mut traj = Trajectory {
        meta: TrajectoryMeta {
            multiplicity: state.multiplicity(),
            n_left: state.layout.n_left,
            n_right: state.layout.n_right,
            dt: p.dt,
            seed: p.noise.seed,
            baths: p.baths.clone(),
            regularization: Vec::new(),
            notes: Vec::new(),
        },
        ..Trajectory::default()
    };
    let steps = match p.validate() {
        Ok(s) => s,
        Err(error) => return Err(TrajectoryAbort { partial: traj, error }),
    };
    let mut prop = Propagator::new(&p.hamiltonian, p.ridge);
    let t0 = state.time;
    let result = (|| -> Result<(), DynamicsError> {
        for step in 0..=steps {
            let output = step % p.output_stride == 0 || step == steps;
            let want_sigma = output && p.sigma2_stride > 0 && step % p.sigma2_stride == 0;
            let deriv = if want_sigma || step < steps { Some(prop.derivative(&state)?) } else { None };
            if output {
                let mo = hamiltonian_moments(&state, &p.hamiltonian)?;
                let sigma2 = match (&deriv, want_sigma) {
                    (Some((sys, sol)), true) => deviation_from(sys, sol, mo.energy_sq, p.hamiltonian.omega0)?,
                    _ => f64::NAN,
                };
                traj.push(state.time, mo.sigma_z / mo.norm, mo.norm, mo.energy / mo.norm, sigma2);
            }
            if step < steps {
                let (_, k1) = deriv.as_ref().expect("derivative evaluated");
                let substeps = substep_count(k1.max_rate() * p.dt, p.max_step_arc);
                let h = p.dt / substeps as f64;
                state = prop.step_with_first_stage(&state, k1, h)?;
                for _ in 1..substeps {
                    state = prop.step(&state, h)?;
                }
                state.time = t0 + (step + 1) as f64 * p.dt;
            }
        }
        Ok(())
    })();
    traj.meta.regularization = prop.events().to_vec();
    match result {
        Ok(()) => Ok(traj),
        Err(error) => Err(TrajectoryAbort { partial: traj, error }),
    }
}
