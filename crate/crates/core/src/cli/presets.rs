//! Regime presets: the twelve parameter points of the benchmark study
//! (four temperature/coupling cuts × fast and slow baths, plus the very-low
//! temperature cut), with identical left and right baths.

use super::config::{
    AnsatzConfig, BathSpectral, ConvergenceConfig, DiscretizationConfig, IntegratorConfig, RunConfig,
    SpectralConfig, TemperatureConfig,
};
use crate::tfd::QubitInit;

/// One named parameter point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub alpha: f64,
    pub omega_c: f64,
    /// Mean temperature (the baths differ by 1 %).
    pub temperature: f64,
    /// Multiplicity reported as sufficient for this point.
    pub multiplicity: usize,
}

pub const PRESETS: [Preset; 12] = [
    preset("weak_hot_fast", "weak coupling, T = 2, fast bath", 0.02, 1.5, 2.0, 18),
    preset("weak_hot_slow", "weak coupling, T = 2, slow bath", 0.02, 0.1, 2.0, 18),
    preset("strong_hot_fast", "strong coupling, T = 2, fast bath", 1.0, 2.0, 2.0, 18),
    preset("strong_hot_slow", "strong coupling, T = 2, slow bath", 1.0, 0.5, 2.0, 18),
    preset("intermediate_hot_fast", "intermediate coupling, T = 2, fast bath", 0.2, 1.0, 2.0, 15),
    preset("intermediate_hot_slow", "intermediate coupling, T = 2, slow bath", 0.2, 0.25, 2.0, 18),
    preset("intermediate_cold_fast", "intermediate coupling, T = 0.2, fast bath", 0.2, 1.5, 0.2, 10),
    preset("intermediate_cold_slow", "intermediate coupling, T = 0.2, slow bath", 0.2, 0.1, 0.2, 10),
    preset("strong_cold_fast", "strong coupling, T = 0.2, fast bath", 1.0, 1.0, 0.2, 15),
    preset("strong_cold_slow", "strong coupling, T = 0.2, slow bath", 1.0, 0.25, 0.2, 15),
    preset("intermediate_frozen_fast", "intermediate coupling, T = 0.02, fast bath", 0.1, 1.5, 0.02, 10),
    preset("intermediate_frozen_slow", "intermediate coupling, T = 0.02, slow bath", 0.1, 0.1, 0.02, 10),
];

const fn preset(
    name: &'static str,
    description: &'static str,
    alpha: f64,
    omega_c: f64,
    temperature: f64,
    multiplicity: usize,
) -> Preset {
    Preset { name, description, alpha, omega_c, temperature, multiplicity }
}

/// Looks a preset up by name.
pub fn find_preset(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}

impl Preset {
    /// Full run configuration with default numerics.
    pub fn config(&self) -> RunConfig {
        let bath = BathSpectral { alpha: self.alpha, omega_c: self.omega_c };
        RunConfig {
            omega0_ev: 1.0,
            tunneling: 0.0,
            qubit_init: QubitInit::Up,
            alpha_c0: 1.0,
            spectral: SpectralConfig { left: bath, right: bath },
            temperature: TemperatureConfig { mean: Some(self.temperature), left: None, right: None },
            discretization: DiscretizationConfig::default(),
            ansatz: AnsatzConfig { multiplicity: self.multiplicity, noise: 1e-4, seed: 0 },
            integrator: IntegratorConfig::default(),
            convergence: ConvergenceConfig::default(),
            oracle: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_are_valid_and_unique() {
        for (i, p) in PRESETS.iter().enumerate() {
            let cfg = p.config();
            cfg.validate().unwrap();
            let back = RunConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
            assert_eq!(back, cfg);
            assert!(PRESETS[..i].iter().all(|q| q.name != p.name));
        }
        assert_eq!(find_preset("weak_hot_fast").unwrap().alpha, 0.02);
        assert!(find_preset("nope").is_none());
    }
}
