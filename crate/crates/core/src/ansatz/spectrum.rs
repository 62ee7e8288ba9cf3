//! Discrete Fourier analysis of observable time series.

use rustfft::{num_complex::Complex, FftPlanner};

use super::AnsatzError;
use crate::dynamics::Trajectory;

/// One-sided amplitude spectrum of a mean-subtracted, uniformly sampled
/// series. Bin `k` sits at angular frequency `ω_k = 2πk / (n Δt)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub omegas: Vec<f64>,
    pub amplitudes: Vec<f64>,
    pub dt: f64,
    pub samples: usize,
}

impl Spectrum {
    /// Angular frequency of the largest nonzero-frequency bin.
    pub fn dominant_omega(&self) -> Option<f64> {
        (1..self.omegas.len())
            .max_by(|&a, &b| self.amplitudes[a].total_cmp(&self.amplitudes[b]))
            .map(|k| self.omegas[k])
    }

    /// Bin spacing `2π / (n Δt)`.
    pub fn resolution(&self) -> f64 {
        2.0 * std::f64::consts::PI / (self.samples as f64 * self.dt)
    }
}

/// Spectrum of `⟨σ_z⟩(t)` from a trajectory.
pub fn trajectory_spectrum(traj: &Trajectory) -> Result<Spectrum, AnsatzError> {
    series_spectrum(&traj.times, &traj.sigma_z)
}

/// Spectrum of an arbitrary uniformly sampled real series.
pub fn series_spectrum(times: &[f64], values: &[f64]) -> Result<Spectrum, AnsatzError> {
    let n = times.len();
    if n < 2 {
        return Err(AnsatzError::TooFewSamples { needed: 2, found: n });
    }
    if values.len() != n {
        return Err(AnsatzError::DimensionMismatch { what: "series length", expected: n, found: values.len() });
    }
    let dt = (times[n - 1] - times[0]) / (n - 1) as f64;
    if !(dt > 0.0) {
        return Err(AnsatzError::NonUniformSampling { index: 1 });
    }
    for (i, w) in times.windows(2).enumerate() {
        if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt {
            return Err(AnsatzError::NonUniformSampling { index: i + 1 });
        }
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex<f64>> = values.iter().map(|v| Complex::new(v - mean, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let bins = n / 2 + 1;
    let omegas = (0..bins).map(|k| 2.0 * std::f64::consts::PI * k as f64 / (n as f64 * dt)).collect();
    let amplitudes = (0..bins)
        .map(|k| {
            let scale = if k == 0 || (n % 2 == 0 && k == n / 2) { 1.0 } else { 2.0 };
            scale * buf[k].norm() / n as f64
        })
        .collect();
    Ok(Spectrum { omegas, amplitudes, dt, samples: n })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, dt: f64) -> Vec<f64> {
        (0..n).map(|i| i as f64 * dt).collect()
    }

    #[test]
    fn cosine_has_a_single_dominant_bin() {
        let n = 1000;
        let dt = 0.05;
        let t = grid(n, dt);
        // Choose ω₁ on a bin centre.
        let w1 = 2.0 * std::f64::consts::PI * 37.0 / (n as f64 * dt);
        let v: Vec<f64> = t.iter().map(|t| (w1 * t).cos()).collect();
        let s = series_spectrum(&t, &v).unwrap();
        assert!((s.dominant_omega().unwrap() - w1).abs() < 1e-12);
        assert!((s.amplitudes[37] - 1.0).abs() < 1e-10);
        let others = s.amplitudes.iter().enumerate().filter(|(k, _)| *k != 37).map(|(_, a)| *a).fold(0.0, f64::max);
        assert!(others < 1e-10);
    }

    #[test]
    fn constant_series_has_no_oscillating_content() {
        let t = grid(256, 0.1);
        let v = vec![0.731; 256];
        let s = series_spectrum(&t, &v).unwrap();
        assert!(s.amplitudes.iter().skip(1).all(|&a| a < 1e-12));
    }

    #[test]
    fn nonuniform_sampling_is_rejected() {
        let mut t = grid(10, 0.1);
        t[4] += 0.01;
        assert!(matches!(series_spectrum(&t, &[0.0; 10]), Err(AnsatzError::NonUniformSampling { .. })));
        assert!(matches!(series_spectrum(&[0.0], &[1.0]), Err(AnsatzError::TooFewSamples { .. })));
    }
}
