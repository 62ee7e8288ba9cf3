//! Exact reference dynamics in a truncated Fock space.
//!
//! The effective Hamiltonian `H = (ω₀/2)σ_z + Σ_k ε_k b_k†b_k + σ_x Σ_k κ_k (b_k + b_k†)`
//! acts matrix-free on `qubit ⊗ ⨂_k {|0⟩ … |n_max⟩}`. Tilde modes enter with
//! negative `ε_k`; the truncation keeps the spectrum bounded. States are
//! propagated with a Chebyshev expansion of `e^{−iHΔt}` whose Bessel
//! coefficients come from Miller's backward recurrence, and the cutoff is
//! certified by doubling `n_max` until σ_z stops changing.

use ndarray::Array1;
use rayon::prelude::*;
use thiserror::Error;

use crate::ansatz::{Block, MD2State, ModeLayout};
use crate::dynamics::{Trajectory, TrajectoryMeta};
use crate::tfd::{EffectiveHamiltonian, QubitInit};
use crate::C64;

/// Default cap on the Hilbert-space dimension `2 (n_max+1)^K`.
pub const DEFAULT_DIMENSION_CAP: usize = 200_000;

/// Errors of the exact solver.
#[derive(Debug, Error)]
pub enum OracleError {
    #[error("Fock space dimension {dimension} exceeds the cap {cap}")]
    DimensionOverflow { dimension: String, cap: usize },
    #[error(
        "coherent-state tail {tail:.3e} beyond n_max = {n_max} for mode {block}[{mode}] of configuration {config} \
         (bound 1e-12)"
    )]
    TailTooLarge { block: &'static str, mode: usize, config: usize, n_max: usize, tail: f64 },
    #[error("invalid oracle parameter: {0}")]
    InvalidParameter(String),
    #[error("state has {found} modes, Fock space has {expected}")]
    DimensionMismatch { expected: usize, found: usize },
}

/// One bosonic mode of the truncated problem.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FockMode {
    /// Mode energy (negative for tilde modes).
    pub energy: f64,
    /// `σ_x` coupling.
    pub coupling: f64,
    /// TFD block the mode belongs to.
    pub block: Block,
}

/// Exact-propagation settings.
#[derive(Clone, Debug, PartialEq)]
pub struct FockConfig {
    /// Initial per-mode cutoff (doubled during certification).
    pub n_max: usize,
    pub omega0: f64,
    pub modes: Vec<FockMode>,
    pub qubit_init: QubitInit,
    pub dt: f64,
    pub t_final: f64,
    pub output_stride: usize,
    pub dimension_cap: usize,
    /// Certification bound on `max_t |Δσ_z|` between successive cutoffs.
    pub certification_tol: f64,
}

impl FockConfig {
    /// Modes of an effective Hamiltonian in the order `[f, f̃, g, g̃]`.
    pub fn from_hamiltonian(h: &EffectiveHamiltonian, n_max: usize, qubit_init: QubitInit, dt: f64, t_final: f64) -> Self {
        let layout = h.layout();
        let modes = h
            .mode_energies()
            .into_iter()
            .zip(h.mode_couplings())
            .enumerate()
            .map(|(k, (energy, coupling))| FockMode { energy, coupling, block: layout.block_of(k) })
            .collect();
        Self {
            n_max,
            omega0: h.omega0,
            modes,
            qubit_init,
            dt,
            t_final,
            output_stride: 1,
            dimension_cap: DEFAULT_DIMENSION_CAP,
            certification_tol: 1e-4,
        }
    }

    fn layout(&self) -> ModeLayout {
        let count = |b: Block| self.modes.iter().filter(|m| m.block == b).count();
        ModeLayout::new(count(Block::F), count(Block::G))
    }
}

/// Truncated Fock space with a matrix-free Hamiltonian.
#[derive(Clone, Debug, PartialEq)]
pub struct FockSpace {
    n_max: usize,
    omega0: f64,
    eps: Vec<f64>,
    kappa: Vec<f64>,
    strides: Vec<usize>,
    bath_dim: usize,
}

/// `2 (n_max+1)^K` with overflow and cap checks.
fn checked_dimension(n_max: usize, modes: usize, cap: usize) -> Result<usize, OracleError> {
    let mut d: usize = 2;
    for _ in 0..modes {
        d = d.checked_mul(n_max + 1).filter(|&d| d <= cap).ok_or_else(|| OracleError::DimensionOverflow {
            dimension: format!("2·{}^{}", n_max + 1, modes),
            cap,
        })?;
    }
    if d > cap {
        return Err(OracleError::DimensionOverflow { dimension: d.to_string(), cap });
    }
    Ok(d)
}

impl FockSpace {
    pub fn new(omega0: f64, modes: &[FockMode], n_max: usize, cap: usize) -> Result<Self, OracleError> {
        let dim = checked_dimension(n_max, modes.len(), cap)?;
        let k = modes.len();
        let mut strides = vec![1usize; k];
        for q in (0..k.saturating_sub(1)).rev() {
            strides[q] = strides[q + 1] * (n_max + 1);
        }
        Ok(Self {
            n_max,
            omega0,
            eps: modes.iter().map(|m| m.energy).collect(),
            kappa: modes.iter().map(|m| m.coupling).collect(),
            strides,
            bath_dim: dim / 2,
        })
    }

    /// Space for the modes of an effective Hamiltonian.
    pub fn for_hamiltonian(h: &EffectiveHamiltonian, n_max: usize, cap: usize) -> Result<Self, OracleError> {
        Self::new(h.omega0, &FockConfig::from_hamiltonian(h, n_max, QubitInit::Up, 1.0, 0.0).modes, n_max, cap)
    }

    pub fn dimension(&self) -> usize {
        2 * self.bath_dim
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn modes(&self) -> usize {
        self.eps.len()
    }

    fn occupation(&self, bath_idx: usize, k: usize) -> usize {
        (bath_idx / self.strides[k]) % (self.n_max + 1)
    }

    /// `out = H ψ`.
    pub fn apply(&self, psi: &[C64], out: &mut [C64]) {
        let d = self.bath_dim;
        let n1 = self.n_max;
        out.par_chunks_mut(4096).enumerate().for_each(|(chunk, block)| {
            let base = chunk * 4096;
            for (off, o) in block.iter_mut().enumerate() {
                let idx = base + off;
                let (s, b) = (idx / d, idx % d);
                let flip = (1 - s) * d;
                let sign = if s == 0 { 0.5 } else { -0.5 };
                let mut diag = sign * self.omega0;
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..self.eps.len() {
                    let n = self.occupation(b, k);
                    diag += self.eps[k] * n as f64;
                    let kap = self.kappa[k];
                    if kap != 0.0 {
                        if n < n1 {
                            acc += psi[flip + b + self.strides[k]] * (kap * ((n + 1) as f64).sqrt());
                        }
                        if n > 0 {
                            acc += psi[flip + b - self.strides[k]] * (kap * (n as f64).sqrt());
                        }
                    }
                }
                *o = psi[idx] * diag + acc;
            }
        });
    }

    /// Spectral enclosure `[lo, hi]` of the truncated Hamiltonian.
    pub fn spectral_bounds(&self) -> (f64, f64) {
        let nm = self.n_max as f64;
        let lo: f64 = self.eps.iter().map(|e| (e * nm).min(0.0)).sum();
        let hi: f64 = self.eps.iter().map(|e| (e * nm).max(0.0)).sum();
        // ‖b + b†‖ on {0…n} is below 2√n.
        let c: f64 = self.kappa.iter().map(|k| 2.0 * k.abs() * nm.sqrt()).sum();
        let h0 = 0.5 * self.omega0.abs();
        (lo - h0 - c, hi + h0 + c)
    }

    /// Qubit spinor times the bath vacuum.
    pub fn product_state(&self, spinor: [C64; 2]) -> Array1<C64> {
        let mut psi = Array1::zeros(self.dimension());
        psi[0] = spinor[0];
        psi[self.bath_dim] = spinor[1];
        psi
    }

    /// `(‖ψ‖², ⟨σ_z⟩_raw)`.
    fn norm_and_sigma_z(&self, psi: &[C64]) -> (f64, f64) {
        let up: f64 = psi[..self.bath_dim].iter().map(|v| v.norm_sqr()).sum();
        let down: f64 = psi[self.bath_dim..].iter().map(|v| v.norm_sqr()).sum();
        (up + down, up - down)
    }
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// `J_0(x) … J_n(x)` for `x ≥ 0` by Miller's backward recurrence normalized
/// with `J_0 + 2 Σ J_2k = 1`.
pub fn bessel_j_sequence(x: f64, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let start = {
        let m = n.max(x.ceil() as usize) + 20 + (40.0 * (n.max(x as usize) as f64 + 1.0)).sqrt() as usize;
        m + (m % 2)
    };
    let mut jp1 = 0.0;
    let mut j = 1e-300;
    let mut norm = 0.0;
    let mut vals = vec![0.0; start + 1];
    vals[start] = j;
    for k in (1..=start).rev() {
        let jm1 = 2.0 * k as f64 / x * j - jp1;
        jp1 = j;
        j = jm1;
        vals[k - 1] = j;
        if j.abs() > 1e250 {
            for v in vals.iter_mut().skip(k - 1) {
                *v *= 1e-250;
            }
            jp1 *= 1e-250;
            j *= 1e-250;
        }
    }
    for (k, v) in vals.iter().enumerate() {
        if k == 0 {
            norm += v;
        } else if k % 2 == 0 {
            norm += 2.0 * v;
        }
    }
    for k in 0..=n {
        out[k] = vals[k] / norm;
    }
    out
}

/// Chebyshev propagator `e^{−iHΔt}` on a fixed space.
struct Chebyshev<'a> {
    space: &'a FockSpace,
    center: f64,
    half_width: f64,
    coeffs: Vec<C64>,
    phase: C64,
}

impl<'a> Chebyshev<'a> {
    fn new(space: &'a FockSpace, dt: f64) -> Self {
        let (lo, hi) = space.spectral_bounds();
        let center = 0.5 * (hi + lo);
        let half_width = (0.5 * (hi - lo)).max(1e-12) * 1.01;
        let x = half_width * dt;
        let nmax = (x + 10.0 * x.cbrt() + 30.0).ceil() as usize;
        let j = bessel_j_sequence(x, nmax);
        let mut last = 0;
        for (k, v) in j.iter().enumerate() {
            if v.abs() > 1e-17 {
                last = k;
            }
        }
        let mi = C64::new(0.0, -1.0);
        let coeffs = (0..=last + 1)
            .map(|k| {
                let pow = mi.powu(k as u32);
                pow * j[k.min(nmax)] * if k == 0 { 1.0 } else { 2.0 }
            })
            .collect();
        Self { space, center, half_width, coeffs, phase: C64::from_polar(1.0, -center * dt) }
    }

    fn apply_scaled(&self, v: &[C64], out: &mut [C64]) {
        self.space.apply(v, out);
        let (c, w) = (self.center, self.half_width);
        out.iter_mut().zip(v).for_each(|(o, x)| *o = (*o - x * c) / w);
    }

    fn step(&self, psi: &mut [C64]) {
        let n = psi.len();
        let mut t0 = psi.to_vec();
        let mut t1 = vec![C64::new(0.0, 0.0); n];
        self.apply_scaled(&t0, &mut t1);
        let mut acc: Vec<C64> = t0.iter().zip(&t1).map(|(a, b)| a * self.coeffs[0] + b * self.coeffs[1]).collect();
        let mut t2 = vec![C64::new(0.0, 0.0); n];
        for c in &self.coeffs[2..] {
            self.apply_scaled(&t1, &mut t2);
            for i in 0..n {
                t2[i] = t2[i] * 2.0 - t0[i];
                acc[i] += t2[i] * c;
            }
            std::mem::swap(&mut t0, &mut t1);
            std::mem::swap(&mut t1, &mut t2);
        }
        for (p, a) in psi.iter_mut().zip(acc) {
            *p = a * self.phase;
        }
    }
}

fn steps_for(dt: f64, t_final: f64) -> Result<usize, OracleError> {
    if !(dt > 0.0 && dt.is_finite()) || !(t_final >= 0.0 && t_final.is_finite()) {
        return Err(OracleError::InvalidParameter(format!("dt = {dt}, t_final = {t_final}")));
    }
    let steps = (t_final / dt).round();
    if (steps * dt - t_final).abs() > 1e-9 * t_final.max(1.0) {
        return Err(OracleError::InvalidParameter(format!("t_final = {t_final} is not a multiple of dt = {dt}")));
    }
    Ok(steps as usize)
}

/// Propagates at the fixed cutoff `cfg.n_max`.
pub fn propagate_at_cutoff(cfg: &FockConfig) -> Result<Trajectory, OracleError> {
    if cfg.output_stride == 0 {
        return Err(OracleError::InvalidParameter("output_stride must be ≥ 1".into()));
    }
    let steps = steps_for(cfg.dt, cfg.t_final)?;
    let space = FockSpace::new(cfg.omega0, &cfg.modes, cfg.n_max, cfg.dimension_cap)?;
    let cheb = Chebyshev::new(&space, cfg.dt);
    let mut psi = space.product_state(cfg.qubit_init.spinor()).to_vec();
    let layout = cfg.layout();
    let mut traj = Trajectory {
        meta: TrajectoryMeta {
            multiplicity: 0,
            n_left: layout.n_left,
            n_right: layout.n_right,
            dt: cfg.dt,
            notes: vec![format!("exact n_max={}", cfg.n_max)],
            ..TrajectoryMeta::default()
        },
        ..Trajectory::default()
    };
    let mut hpsi = vec![C64::new(0.0, 0.0); psi.len()];
    for step in 0..=steps {
        if step % cfg.output_stride == 0 || step == steps {
            let (norm, sz) = space.norm_and_sigma_z(&psi);
            space.apply(&psi, &mut hpsi);
            let e = dot(&psi, &hpsi).re;
            traj.push(step as f64 * cfg.dt, sz / norm, norm, e / norm, f64::NAN);
        }
        if step < steps {
            cheb.step(&mut psi);
        }
    }
    Ok(traj)
}

/// Result of a certified exact propagation.
#[derive(Clone, Debug)]
pub struct ExactResult {
    /// Trajectory at the finest cutoff computed.
    pub trajectory: Trajectory,
    /// Cutoff of `trajectory`.
    pub n_max: usize,
    /// `max_t |Δσ_z|` between the last two cutoffs (`∞` if only one fit).
    pub bound: f64,
    /// `bound < certification_tol`.
    pub certified: bool,
}

/// Propagates with cutoff certification: `n_max` is doubled until two
/// successive cutoffs agree on σ_z to `certification_tol`, or the next
/// doubling would exceed the dimension cap (then `certified` is false and
/// `bound` holds the best achieved difference).
pub fn exact_propagate(cfg: &FockConfig) -> Result<ExactResult, OracleError> {
    let mut n = cfg.n_max.max(1);
    let mut current = propagate_at_cutoff(&FockConfig { n_max: n, ..cfg.clone() })?;
    let mut bound = f64::INFINITY;
    loop {
        let next_n = 2 * n;
        if checked_dimension(next_n, cfg.modes.len(), cfg.dimension_cap).is_err() {
            return Ok(ExactResult { trajectory: current, n_max: n, bound, certified: false });
        }
        let next = propagate_at_cutoff(&FockConfig { n_max: next_n, ..cfg.clone() })?;
        bound = current.sigma_z.iter().zip(&next.sigma_z).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        n = next_n;
        current = next;
        if bound < cfg.certification_tol {
            return Ok(ExactResult { trajectory: current, n_max: n, bound, certified: true });
        }
    }
}

/// A state vector in a truncated Fock space.
#[derive(Clone, Debug, PartialEq)]
pub struct FockVector {
    pub data: Array1<C64>,
    pub n_max: usize,
    pub modes: usize,
}

impl FockVector {
    /// `⟨ψ|ψ⟩`.
    pub fn norm_squared(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum()
    }

    /// Normalized `⟨σ_z⟩`.
    pub fn sigma_z(&self) -> f64 {
        let half = self.data.len() / 2;
        let up: f64 = self.data.iter().take(half).map(|v| v.norm_sqr()).sum();
        let down: f64 = self.data.iter().skip(half).map(|v| v.norm_sqr()).sum();
        (up - down) / (up + down)
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &FockVector) -> C64 {
        dot(self.data.as_slice().expect("contiguous"), other.data.as_slice().expect("contiguous"))
    }

    fn space(&self, h: &EffectiveHamiltonian) -> Result<FockSpace, OracleError> {
        if h.layout().total() != self.modes {
            return Err(OracleError::DimensionMismatch { expected: self.modes, found: h.layout().total() });
        }
        FockSpace::for_hamiltonian(h, self.n_max, usize::MAX)
    }

    /// Raw `⟨ψ|H|ψ⟩` and `⟨ψ|H²|ψ⟩ = ‖Hψ‖²`.
    pub fn energy_moments(&self, h: &EffectiveHamiltonian) -> Result<(f64, f64), OracleError> {
        let space = self.space(h)?;
        let psi = self.data.as_slice().expect("contiguous");
        let mut hpsi = vec![C64::new(0.0, 0.0); psi.len()];
        space.apply(psi, &mut hpsi);
        Ok((dot(psi, &hpsi).re, hpsi.iter().map(|v| v.norm_sqr()).sum()))
    }
}

/// Poisson tail `Σ_{n > n_max} e^{−x} xⁿ/n!`.
fn poisson_tail(x: f64, n_max: usize) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let n0 = n_max + 1;
    let log_first = -x + n0 as f64 * x.ln() - (1..=n0).map(|k| (k as f64).ln()).sum::<f64>();
    let mut term = log_first.exp();
    let mut sum = 0.0;
    let mut n = n0;
    while term > 1e-300 && (term > 1e-18 * sum || (n as f64) < x + 1.0) {
        sum += term;
        n += 1;
        term *= x / n as f64;
    }
    sum
}

/// Embeds a variational state into the truncated Fock space.
///
/// Fails when any coherent state has more than `10⁻¹²` of its weight above
/// `n_max`, naming the worst mode.
pub fn coherent_state_embed(state: &MD2State, n_max: usize, cap: usize) -> Result<FockVector, OracleError> {
    let k = state.layout.total();
    let dim = checked_dimension(n_max, k, cap)?;
    let bath_dim = dim / 2;
    let mut worst: Option<(f64, usize, usize)> = None;
    for i in 0..state.multiplicity() {
        for q in 0..k {
            let tail = poisson_tail(state.z[[i, q]].norm_sqr(), n_max);
            if tail > 1e-12 && worst.is_none_or(|w| tail > w.0) {
                worst = Some((tail, i, q));
            }
        }
    }
    if let Some((tail, i, q)) = worst {
        let block = state.layout.block_of(q);
        let mode = q - state.layout.range(block).start;
        return Err(OracleError::TailTooLarge { block: block.name(), mode, config: i, n_max, tail });
    }
    let mut data = Array1::<C64>::zeros(dim);
    let sqrt_fact: Vec<f64> = (0..=n_max)
        .scan(1.0f64, |acc, n| {
            if n > 0 {
                *acc *= (n as f64).sqrt();
            }
            Some(*acc)
        })
        .collect();
    for i in 0..state.multiplicity() {
        // Product coefficients built mode by mode (first mode most significant).
        let mut coeff = vec![C64::new(1.0, 0.0)];
        for q in 0..k {
            let z = state.z[[i, q]];
            let pref = (-0.5 * z.norm_sqr()).exp();
            let single: Vec<C64> = (0..=n_max).map(|n| z.powu(n as u32) * (pref / sqrt_fact[n])).collect();
            let mut next = Vec::with_capacity(coeff.len() * (n_max + 1));
            for c in &coeff {
                for s in &single {
                    next.push(c * s);
                }
            }
            coeff = next;
        }
        for (b, c) in coeff.iter().enumerate() {
            data[b] += state.a[i] * c;
            data[bath_dim + b] += state.b[i] * c;
        }
    }
    Ok(FockVector { data, n_max, modes: k })
}
