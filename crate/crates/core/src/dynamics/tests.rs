use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::ansatz::{hamiltonian_moments, sigma_z_expectation, MD2State, ModeLayout};
use crate::tfd::{BathBlock, EffectiveHamiltonian, InitialNoise, QubitInit};
use crate::C64;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn hamiltonian(omega0: f64, left: &[(f64, f64, f64)], right: &[(f64, f64, f64)]) -> EffectiveHamiltonian {
    let block = |modes: &[(f64, f64, f64)]| BathBlock {
        frequencies: modes.iter().map(|m| m.0).collect(),
        real_couplings: modes.iter().map(|m| m.1).collect(),
        tilde_couplings: modes.iter().map(|m| m.2).collect(),
    };
    EffectiveHamiltonian { omega0, left: block(left), right: block(right) }
}

fn random_state(m: usize, layout: ModeLayout, scale: f64, seed: u64) -> MD2State {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = MD2State::zeros(m, layout);
    for i in 0..m {
        s.a[i] = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        s.b[i] = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    }
    s.z.mapv_inplace(|_| c(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale)));
    s
}

#[test]
fn free_mode_rotates_exactly() {
    let omega = 1.3;
    let h = hamiltonian(1.0, &[(omega, 0.0, 0.0)], &[]);
    let mut s = MD2State::zeros(1, h.layout());
    s.a[0] = c(1.0, 0.0);
    let f0 = c(0.4, -0.3);
    let ft0 = c(-0.2, 0.1);
    s.z[[0, 0]] = f0;
    s.z[[0, 1]] = ft0;
    let dt = 0.01;
    let next = rk4_step(&s, &h, dt).unwrap();
    let rot = |w: f64| C64::from_polar(1.0, -w * dt);
    assert!((next.z[[0, 0]] - f0 * rot(omega)).norm() < 1e-11);
    assert!((next.z[[0, 1]] - ft0 * rot(-omega)).norm() < 1e-11);
    assert_eq!(next.time, dt);

    let mut prop = Propagator::new(&h, RidgePolicy::default());
    let (_, sol) = prop.derivative(&s).unwrap();
    assert!((sol.z_dot[[0, 0]] - c(0.0, -omega) * f0).norm() < 1e-12);
    assert!(deviation_sigma2(&s, &h, &sol).unwrap() < 1e-10);
}

#[test]
fn single_configuration_solve_is_exact_and_unregularized() {
    let h = hamiltonian(1.0, &[(0.7, 0.3, 0.1), (1.9, 0.2, 0.05)], &[(1.1, 0.25, 0.0)]);
    let s = random_state(1, h.layout(), 0.5, 3);
    let mut sys = assemble_eom(&s, &h).unwrap();
    let sol = solve_eom(&mut sys, &RidgePolicy::default(), 0.0).unwrap();
    assert!(sol.rejected.is_empty());
    assert_eq!(sol.ridge, 1e-12);
    assert!(sol.residual < 1e-12, "residual {}", sol.residual);
}

#[test]
fn single_configuration_displacement_rate_matches_mean_field() {
    // i ḟ_k = ε_k f_k + κ_k ⟨σ_x⟩ for a single normalized configuration.
    let h = hamiltonian(1.0, &[(0.7, 0.3, 0.1)], &[(1.1, 0.25, 0.2)]);
    let mut s = random_state(1, h.layout(), 0.5, 5);
    let n = (s.a[0].norm_sqr() + s.b[0].norm_sqr()).sqrt();
    s.a[0] /= n;
    s.b[0] /= n;
    let sx = 2.0 * (s.a[0].conj() * s.b[0]).re;
    let mut prop = Propagator::new(&h, RidgePolicy::default());
    let (_, sol) = prop.derivative(&s).unwrap();
    let eps = h.mode_energies();
    let kap = h.mode_couplings();
    for k in 0..eps.len() {
        let expected = c(0.0, -1.0) * (s.z[[0, k]] * eps[k] + kap[k] * sx);
        assert!((sol.z_dot[[0, k]] - expected).norm() < 1e-10, "mode {k}");
    }
}

#[test]
fn zero_hamiltonian_leaves_state_unchanged() {
    let h = hamiltonian(0.0, &[(0.0, 0.0, 0.0)], &[(0.0, 0.0, 0.0)]);
    let s = random_state(2, h.layout(), 0.3, 9);
    let next = rk4_step(&s, &h, 0.01).unwrap();
    assert_eq!(next.a, s.a);
    assert_eq!(next.b, s.b);
    assert_eq!(next.z, s.z);
    assert_eq!(next.time, 0.01);
}

#[test]
fn nonpositive_dt_is_rejected() {
    let h = hamiltonian(1.0, &[(1.0, 0.1, 0.0)], &[]);
    let s = random_state(1, h.layout(), 0.1, 1);
    assert!(matches!(rk4_step(&s, &h, 0.0), Err(DynamicsError::InvalidParameter(_))));
}

#[test]
fn duplicated_configuration_follows_single_configuration() {
    // Two identical coherent states make the Gram matrix singular; the ridge
    // activates and the observables follow the single-configuration flow.
    // The exchange-symmetric submanifold is dynamically unstable (rounding
    // splits the copies and the richer manifold then departs from M = 1), so
    // the comparison covers the first steps only.
    let h = hamiltonian(1.0, &[(0.8, 0.3, 0.1)], &[(1.2, 0.2, 0.05)]);
    let mut one = MD2State::zeros(1, h.layout());
    one.a[0] = c(1.0, 0.0);
    one.z.row_mut(0).assign(&ndarray::arr1(&[c(0.1, 0.0), c(0.0, 0.05), c(-0.05, 0.02), c(0.01, 0.0)]));
    let mut two = MD2State::zeros(2, h.layout());
    for i in 0..2 {
        two.a[i] = c(0.5, 0.0);
        two.z.row_mut(i).assign(&one.z.row(0));
    }
    let mut p1 = Propagator::new(&h, RidgePolicy::default());
    let mut p2 = Propagator::new(&h, RidgePolicy::default());
    let (_, d1) = p1.derivative(&one).unwrap();
    let (_, d2) = p2.derivative(&two).unwrap();
    assert!(d2.ridge > RidgePolicy::default().initial);
    assert!(d1.rejected.is_empty());
    let s1 = p1.step(&one, 0.01).unwrap();
    let s2 = p2.step(&two, 0.01).unwrap();
    let d = (sigma_z_expectation(&s1).unwrap() - sigma_z_expectation(&s2).unwrap()).abs();
    assert!(d < 1e-6, "σ_z mismatch {d}");
    let e1 = hamiltonian_moments(&s1, &h).unwrap();
    let e2 = hamiltonian_moments(&s2, &h).unwrap();
    let de = (e1.energy / e1.norm - e2.energy / e2.norm).abs();
    assert!(de < 1e-6, "energy mismatch {de} (σ_z {d}) ridge {}", d2.ridge);
    assert!(!p2.events().is_empty(), "ridge escalation must be logged");
}

fn coupled_params(m: usize) -> RunParameters {
    let h = hamiltonian(1.0, &[(0.8, 0.3, 0.1)], &[(1.2, 0.2, 0.05)]);
    let mut p = RunParameters::new(h, m);
    p.t_final = 0.5;
    p.noise = InitialNoise { amplitude: 1e-4, seed: 4 };
    p
}

#[test]
fn runs_are_deterministic() {
    let p = coupled_params(3);
    let a = run_trajectory(&p).unwrap();
    let b = run_trajectory(&p).unwrap();
    assert_eq!(a.sigma_z, b.sigma_z);
    assert_eq!(a.energy, b.energy);
    assert_eq!(a.len(), 51);
    assert!(a.sigma2[0].is_finite() && a.sigma2[1].is_nan() && a.sigma2[10].is_finite());
}

#[test]
fn zero_duration_gives_single_sample() {
    let mut p = coupled_params(2);
    p.t_final = 0.0;
    p.qubit_init = QubitInit::Up;
    let t = run_trajectory(&p).unwrap();
    assert_eq!(t.len(), 1);
    assert!((t.sigma_z[0] - 1.0).abs() < 1e-12);
    assert!((t.norm[0] - 1.0).abs() < 1e-12);
}

#[test]
fn short_run_conserves_norm_and_energy() {
    // Strongly coupled and far from converged at M = 2; the residual drift
    // stems from the start-up separation of the seeded configurations.
    let p = coupled_params(2);
    let t = run_trajectory(&p).unwrap();
    assert!(t.max_norm_deviation() < 5e-6, "norm drift {}", t.max_norm_deviation());
    assert!(t.relative_energy_drift() < 5e-5, "energy drift {}", t.relative_energy_drift());
    let mut q = coupled_params(1);
    q.t_final = 2.0;
    let t = run_trajectory(&q).unwrap();
    assert!(t.max_norm_deviation() < 1e-10, "norm drift {}", t.max_norm_deviation());
    assert!(t.relative_energy_drift() < 1e-9, "energy drift {}", t.relative_energy_drift());
}

#[test]
fn invalid_run_parameters_abort_with_empty_partial() {
    let mut p = coupled_params(1);
    p.t_final = 0.015;
    p.dt = 0.01;
    let err = run_trajectory(&p).unwrap_err();
    assert!(err.partial.is_empty());
    assert!(matches!(err.error, DynamicsError::InvalidParameter(_)));
}

#[test]
fn deviation_vanishes_when_the_solve_is_exact_for_linear_motion() {
    // With zero qubit splitting and a σ_x eigenstate, the displaced oscillator
    // solution is exactly representable by one coherent state.
    let h = hamiltonian(0.0, &[(1.0, 0.4, 0.2)], &[]);
    let mut s = MD2State::zeros(1, h.layout());
    let r = std::f64::consts::FRAC_1_SQRT_2;
    s.a[0] = c(r, 0.0);
    s.b[0] = c(r, 0.0);
    let mut prop = Propagator::new(&h, RidgePolicy::default());
    for _ in 0..20 {
        let (_, sol) = prop.derivative(&s).unwrap();
        let mo = hamiltonian_moments(&s, &h).unwrap();
        assert!(deviation_sigma2(&s, &h, &sol).unwrap() < 1e-10 * mo.energy_sq.max(1.0));
        s = prop.step(&s, 0.05).unwrap();
    }
}

#[test]
fn sweep_reports_convergence_in_multiplicity() {
    let build = |m: usize, _n: usize| Ok(coupled_params(m));
    let opts = SweepOptions { tol_conv: Some(1e-2), sigma2_threshold: 1e-2, workers: 1 };
    let report = convergence_sweep(build, &[1, 2, 3], &[1, 1], &opts).unwrap();
    assert_eq!(report.stage(SweepStage::Multiplicity).count(), 3);
    assert_eq!(report.stage(SweepStage::Modes).count(), 2);
    assert!(report.entries.iter().all(|e| e.completed));
    // A single configuration cannot follow the spin flip: σ² ≈ Σκ².
    let first = report.stage(SweepStage::Multiplicity).next().unwrap();
    assert!(first.max_sigma2 > 0.1);
    assert_eq!(report.converged_multiplicity, Some(2));
    // Identical mode counts reproduce each other exactly.
    assert_eq!(report.converged_modes, Some(1));
    assert_eq!(report.stage(SweepStage::Modes).next().unwrap().diff_to_next, Some(0.0));
    assert!(convergence_sweep(build, &[2, 1], &[1], &opts).is_err());
}
