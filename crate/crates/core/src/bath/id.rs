//! Bath discretization by interpolative decomposition (ID).
//!
//! The BCF kernel `F_ij = S_β(ω_j) e^{-iω_j t_i}` on a dense candidate grid
//! of frequencies is split into real and imaginary parts, and a
//! rank-revealing column-pivoted Gram–Schmidt factorization picks the
//! representative frequencies. Nonnegative weights then follow from NNLS
//! against the quadrature BCF.

use ndarray::{Array1, Array2, ArrayView2, Axis};

use super::{
    bath_correlation_function, check_beta, noise_spectrum_unchecked, positive, relative_error, uniform_times,
    BathError, DiscretizedBath, SpectralDensity,
};
use super::nnls::nnls;
use crate::C64;

/// Parameters of the ID discretization.
#[derive(Clone, Debug, PartialEq)]
pub struct IdOptions {
    /// Half-width `Ω` of the candidate window `[−Ω, Ω]`.
    pub omega_max: f64,
    /// Time horizon `T` over which the BCF is matched.
    pub horizon: f64,
    /// Relative residual tolerance of the column selection, also the target
    /// certification error.
    pub tolerance: f64,
    pub candidates: usize,
    pub time_samples: usize,
    /// Optional hard cap on the number of selected modes.
    pub max_modes: Option<usize>,
}

impl IdOptions {
    /// Defaults: 2000 candidates, 400 time samples, no mode cap.
    pub fn new(omega_max: f64, horizon: f64, tolerance: f64) -> Self {
        Self { omega_max, horizon, tolerance, candidates: 2000, time_samples: 400, max_modes: None }
    }
}

/// Column-pivoted Gram–Schmidt selection on a real matrix.
///
/// Columns are chosen greedily by largest residual norm after projecting out
/// the span of the previously chosen columns (with reorthogonalization).
pub struct PivotedSelector {
    /// Residual columns, stored one per row for contiguous access.
    residual: Array2<f64>,
    norms2: Vec<f64>,
    selected: Vec<bool>,
    basis: Vec<Array1<f64>>,
    initial_max: f64,
}

impl PivotedSelector {
    pub fn new(matrix: ArrayView2<f64>) -> Self {
        let residual = matrix.t().to_owned();
        let norms2: Vec<f64> = residual.axis_iter(Axis(0)).map(|c| c.dot(&c)).collect();
        let initial_max = norms2.iter().fold(0.0f64, |a, &b| a.max(b)).sqrt();
        let n = norms2.len();
        Self { residual, norms2, selected: vec![false; n], basis: Vec::new(), initial_max }
    }

    /// Largest column norm of the original matrix.
    pub fn initial_max_norm(&self) -> f64 {
        self.initial_max
    }

    /// Largest residual column norm among unselected columns.
    pub fn max_residual(&self) -> f64 {
        self.argmax().map_or(0.0, |j| self.norms2[j].sqrt())
    }

    fn argmax(&self) -> Option<usize> {
        (0..self.norms2.len())
            .filter(|&j| !self.selected[j])
            .max_by(|&a, &b| self.norms2[a].total_cmp(&self.norms2[b]).then(b.cmp(&a)))
    }

    /// Number of pivots chosen so far.
    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    /// Selects the next pivot column, or `None` when the residual vanishes.
    pub fn next_pivot(&mut self) -> Option<usize> {
        let j = self.argmax()?;
        if self.norms2[j] <= 0.0 {
            return None;
        }
        let mut q = self.residual.row(j).to_owned();
        for b in &self.basis {
            let c = b.dot(&q);
            q.scaled_add(-c, b);
        }
        let nq = q.dot(&q).sqrt();
        if nq <= 0.0 || !nq.is_finite() {
            return None;
        }
        q /= nq;
        self.selected[j] = true;
        for (k, mut col) in self.residual.axis_iter_mut(Axis(0)).enumerate() {
            if self.selected[k] {
                continue;
            }
            let c = q.dot(&col);
            col.scaled_add(-c, &q);
            self.norms2[k] = col.dot(&col);
        }
        self.norms2[j] = 0.0;
        self.basis.push(q);
        Some(j)
    }
}

/// Discretizes one bath by interpolative decomposition plus NNLS.
///
/// Pivots are added until the relative column residual drops below
/// `tolerance`; if the certified BCF error still exceeds `tolerance`,
/// further pivots are added one at a time (the tolerance is tightened) until
/// it does, the rank cap is hit, or the numerical rank is exhausted.
pub fn discretize_id(sd: &SpectralDensity, beta: f64, opts: &IdOptions) -> Result<DiscretizedBath, BathError> {
    sd.validate()?;
    check_beta(beta)?;
    positive("omega_max", opts.omega_max)?;
    positive("horizon", opts.horizon)?;
    positive("tolerance", opts.tolerance)?;
    if opts.candidates < 2 || opts.time_samples < 2 {
        return Err(BathError::InvalidParameter(
            "ID needs at least two frequency candidates and two time samples".into(),
        ));
    }
    if opts.max_modes == Some(0) {
        return Err(BathError::InvalidParameter("max_modes must be ≥ 1".into()));
    }
    let n = opts.candidates;
    let m = opts.time_samples;
    let omegas: Vec<f64> =
        (0..n).map(|j| -opts.omega_max + 2.0 * opts.omega_max * j as f64 / (n - 1) as f64).collect();
    let spectrum: Vec<f64> = omegas.iter().map(|&w| noise_spectrum_unchecked(sd, beta, w)).collect();
    let times = uniform_times(opts.horizon, m);

    let mut f = Array2::<f64>::zeros((2 * m, n));
    for (i, &t) in times.iter().enumerate() {
        for j in 0..n {
            let (sin, cos) = (omegas[j] * t).sin_cos();
            f[[i, j]] = spectrum[j] * cos;
            f[[m + i, j]] = -spectrum[j] * sin;
        }
    }
    let reference = bath_correlation_function(sd, beta, opts.omega_max, &times)?;
    let mut c = Array1::<f64>::zeros(2 * m);
    for (i, v) in reference.values.iter().enumerate() {
        c[i] = v.re;
        c[m + i] = v.im;
    }

    let cap = opts.max_modes.unwrap_or(usize::MAX).min(2 * m).min(n);
    let mut selector = PivotedSelector::new(f.view());
    let threshold = opts.tolerance * selector.initial_max_norm();
    let floor = 1e-14 * selector.initial_max_norm();
    let mut pivots = Vec::new();
    while pivots.len() < cap && selector.max_residual() > threshold {
        match selector.next_pivot() {
            Some(j) => pivots.push(j),
            None => break,
        }
    }
    if pivots.is_empty() {
        return Err(BathError::EmptyPivotSet { tolerance: opts.tolerance });
    }

    let (mut weights, mut cert) = fit(&f, &c, &pivots, &omegas, &spectrum, &times, &reference)?;
    while cert > opts.tolerance && pivots.len() < cap && selector.max_residual() > floor {
        match selector.next_pivot() {
            Some(j) => pivots.push(j),
            None => break,
        }
        (weights, cert) = fit(&f, &c, &pivots, &omegas, &spectrum, &times, &reference)?;
    }

    let mut order: Vec<usize> = (0..pivots.len()).collect();
    order.sort_by(|&a, &b| omegas[pivots[a]].total_cmp(&omegas[pivots[b]]));
    let frequencies: Vec<f64> = order.iter().map(|&k| omegas[pivots[k]]).collect();
    let z: Vec<f64> = order.iter().map(|&k| weights[k]).collect();
    let couplings = order.iter().map(|&k| (weights[k] * spectrum[pivots[k]]).sqrt()).collect();
    Ok(DiscretizedBath { frequencies, couplings, weights: z, beta, certification_error: cert })
}

fn fit(
    f: &Array2<f64>,
    c: &Array1<f64>,
    pivots: &[usize],
    omegas: &[f64],
    spectrum: &[f64],
    times: &[f64],
    reference: &super::BcfGrid,
) -> Result<(Vec<f64>, f64), BathError> {
    let b = f.select(Axis(1), pivots);
    let sol = nnls(b.view(), c.view())?;
    let weights = sol.x.to_vec();
    let recon: Vec<C64> = times
        .iter()
        .map(|&t| {
            let mut acc = crate::numeric::NeumaierSumC::new();
            for (k, &j) in pivots.iter().enumerate() {
                acc.add(C64::from_polar(weights[k] * spectrum[j], -omegas[j] * t));
            }
            acc.value()
        })
        .collect();
    Ok((weights, relative_error(&recon, reference)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::quantum_noise_spectrum;
    use ndarray::array;

    fn opts(tol: f64) -> IdOptions {
        IdOptions { candidates: 600, time_samples: 120, ..IdOptions::new(15.0, 10.0, tol) }
    }

    #[test]
    fn selector_picks_independent_columns_first() {
        let a = array![[1.0, 2.0, 0.0], [0.0, 0.0, 0.5]];
        let mut s = PivotedSelector::new(a.view());
        assert_eq!(s.next_pivot(), Some(1));
        assert_eq!(s.next_pivot(), Some(2));
        assert!(s.max_residual() < 1e-15);
    }

    #[test]
    fn id_certifies_requested_tolerance() {
        let sd = SpectralDensity::drude_lorentz(0.015, 1.5).unwrap();
        let bath = discretize_id(&sd, 0.5, &opts(1e-4)).unwrap();
        assert!(bath.certification_error <= 1e-4, "cert {}", bath.certification_error);
        // The stored error is exactly what an independent reconstruction gives.
        let reference = bath_correlation_function(&sd, 0.5, 15.0, &uniform_times(10.0, 120)).unwrap();
        let again = bath.relative_bcf_error(&reference);
        assert!((again - bath.certification_error).abs() <= 1e-12 * bath.certification_error.max(1e-300) + 1e-15);
    }

    #[test]
    fn id_bath_invariants() {
        let sd = SpectralDensity::drude_lorentz(0.2, 1.0).unwrap();
        let bath = discretize_id(&sd, 2.0, &opts(1e-3)).unwrap();
        assert!(!bath.is_empty());
        assert!(bath.frequencies.windows(2).all(|p| p[0] < p[1]));
        assert!(bath.weights.iter().all(|&z| z >= 0.0));
        for k in 0..bath.len() {
            let s = quantum_noise_spectrum(&sd, 2.0, bath.frequencies[k]).unwrap();
            let lhs = bath.couplings[k].powi(2);
            assert!((lhs - bath.weights[k] * s).abs() <= 1e-12 * lhs.max(1e-300));
        }
    }

    #[test]
    fn loose_tolerance_gives_few_modes_and_rank_is_monotone() {
        let sd = SpectralDensity::drude_lorentz(0.015, 1.5).unwrap();
        let counts: Vec<usize> =
            [0.5, 1e-1, 1e-2, 1e-3, 1e-4].iter().map(|&t| discretize_id(&sd, 0.5, &opts(t)).unwrap().len()).collect();
        assert!(counts[0] <= 16 && counts[0] * 4 < counts[4], "{counts:?}");
        assert!(counts.windows(2).all(|p| p[0] <= p[1]), "{counts:?}");
        let loose = discretize_id(&sd, 0.5, &opts(0.5)).unwrap();
        assert!(loose.certification_error <= 0.5);
    }

    #[test]
    fn zero_temperature_selects_only_positive_modes() {
        let sd = SpectralDensity::drude_lorentz(0.2, 1.0).unwrap();
        let bath = discretize_id(&sd, f64::INFINITY, &opts(1e-4)).unwrap();
        assert!(bath.nonpositive_modes().is_empty());
        assert!(bath.certification_error <= 1e-4);
    }

    #[test]
    fn mode_cap_is_respected() {
        let sd = SpectralDensity::drude_lorentz(0.2, 1.0).unwrap();
        let o = IdOptions { max_modes: Some(1), ..opts(1e-8) };
        let bath = discretize_id(&sd, f64::INFINITY, &o).unwrap();
        assert_eq!(bath.len(), 1);
    }

    #[test]
    fn tolerance_of_one_selects_nothing() {
        let sd = SpectralDensity::drude_lorentz(0.2, 1.0).unwrap();
        assert!(matches!(discretize_id(&sd, 1.0, &opts(1.0)), Err(BathError::EmptyPivotSet { .. })));
    }
}
