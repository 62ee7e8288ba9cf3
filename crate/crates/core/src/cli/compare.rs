//! σ_z comparison metrics between two trajectories.

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::dynamics::Trajectory;
use crate::numeric::interp_linear;

/// Differences of σ_z between two trajectories on the first one's grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonMetrics {
    pub max_abs: f64,
    pub rms: f64,
    /// First time at which `|Δσ_z|` exceeds the threshold.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_crossing: Option<f64>,
    pub threshold: f64,
    /// Number of compared samples.
    pub samples: usize,
}

/// Compares `b` against `a` on `a`'s time points inside the common range;
/// `b` is interpolated linearly.
pub fn compare_trajectories(a: &Trajectory, b: &Trajectory, threshold: f64) -> Result<ComparisonMetrics, CliError> {
    let (a0, a1) = range(a)?;
    let (b0, b1) = range(b)?;
    let (lo, hi) = (a0.max(b0), a1.min(b1));
    let slack = 1e-9 * hi.abs().max(1.0);
    if lo > hi + slack {
        return Err(CliError::Compare(format!("time ranges [{a0}, {a1}] and [{b0}, {b1}] do not overlap")));
    }
    let mut sum2 = 0.0;
    let mut max_abs = 0.0f64;
    let mut first_crossing = None;
    let mut samples = 0;
    for (&t, &s) in a.times.iter().zip(&a.sigma_z) {
        if t < lo - slack || t > hi + slack {
            continue;
        }
        let d = (s - interp_linear(&b.times, &b.sigma_z, t.clamp(b0, b1))).abs();
        if first_crossing.is_none() && d > threshold {
            first_crossing = Some(t);
        }
        max_abs = max_abs.max(d);
        sum2 += d * d;
        samples += 1;
    }
    Ok(ComparisonMetrics { max_abs, rms: (sum2 / samples as f64).sqrt(), first_crossing, threshold, samples })
}

fn range(t: &Trajectory) -> Result<(f64, f64), CliError> {
    match (t.times.first(), t.times.last()) {
        (Some(&a), Some(&b)) => Ok((a, b)),
        _ => Err(CliError::Compare("empty trajectory".into())),
    }
}
