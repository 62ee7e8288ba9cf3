//! Coupling-regime labels from the temperature-corrected critical coupling.

use serde::{Deserialize, Serialize};

/// Coupling regime of a bath.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Weak,
    Intermediate,
    Strong,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::Weak => "weak",
            Regime::Intermediate => "intermediate",
            Regime::Strong => "strong",
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Temperature-corrected critical coupling `α_c(T) = α_c(0) / (1 + ω_c/T)`.
pub fn critical_coupling(alpha_c0: f64, omega_c: f64, temperature: f64) -> f64 {
    alpha_c0 / (1.0 + omega_c / temperature)
}

/// Weak below `0.1 α_c(T)`, intermediate on the closed interval
/// `[0.1 α_c(T), α_c(T)]`, strong above.
pub fn classify_regime(alpha: f64, omega_c: f64, temperature: f64, alpha_c0: f64) -> Regime {
    let upper = critical_coupling(alpha_c0, omega_c, temperature);
    let lower = 0.1 * upper;
    if alpha < lower {
        Regime::Weak
    } else if alpha <= upper {
        Regime::Intermediate
    } else {
        Regime::Strong
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labelled_examples() {
        assert_eq!(classify_regime(0.02, 1.5, 2.0, 1.0), Regime::Weak);
        assert_eq!(classify_regime(1.0, 1.5, 2.0, 1.0), Regime::Strong);
        assert_eq!(classify_regime(1.0, 2.0, 2.0, 1.0), Regime::Strong);
        assert_eq!(classify_regime(0.2, 1.0, 2.0, 1.0), Regime::Intermediate);
    }

    #[test]
    fn interval_is_closed() {
        let upper = critical_coupling(1.0, 1.5, 2.0);
        assert_eq!(classify_regime(0.1 * upper, 1.5, 2.0, 1.0), Regime::Intermediate);
        assert_eq!(classify_regime(upper, 1.5, 2.0, 1.0), Regime::Intermediate);
        assert_eq!(classify_regime(upper * (1.0 + 1e-12), 1.5, 2.0, 1.0), Regime::Strong);
        assert_eq!(classify_regime(0.1 * upper * (1.0 - 1e-12), 1.5, 2.0, 1.0), Regime::Weak);
    }

    #[test]
    fn colder_baths_have_smaller_critical_coupling() {
        assert!(critical_coupling(1.0, 1.0, 0.2) < critical_coupling(1.0, 1.0, 2.0));
    }
}
