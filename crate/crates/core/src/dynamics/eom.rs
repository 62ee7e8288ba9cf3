//! Variational equations of motion.
//!
//! The state is parametrized holomorphically around the current point:
//! amplitude tangents `e_is = |s⟩|z_i⟩` and displacement tangents
//! `d_ik = Σ_s a_is |s⟩ (b_k† − z̄_ik)|z_i⟩`. Stationarity of the action
//! `∫ [−Im⟨Ψ|Ψ̇⟩ − ⟨Ψ|H|Ψ⟩] dt` gives `G ẋ = r` with the Gram matrix
//! `G_vw = ⟨∂_v Ψ|∂_w Ψ⟩` and `r_v = −i ⟨∂_v Ψ|H|Ψ⟩`. The chart velocities
//! `ċ_is` relate to the amplitude derivatives through
//! `Ȧ_is = ċ_is − i a_is Im(Σ_k z̄_ik ż_ik)`.
//!
//! Closed-form blocks, with `O_ij = ⟨z_i|z_j⟩`, `ρ_ij = a_i†a_j`:
//!
//! * `⟨e_is|e_jt⟩ = δ_st O_ij`
//! * `⟨e_is|d_jq⟩ = a_js (z̄_iq − z̄_jq) O_ij`
//! * `⟨d_ik|d_jq⟩ = ρ_ij O_ij [δ_kq + (z̄_iq − z̄_jq)(z_jk − z_ik)]`

use ndarray::{Array1, Array2, Axis};

use super::linalg::Lu;
use super::{DynamicsError, RidgePolicy};
use crate::ansatz::{bra_ket_overlaps, spin_forms};
use crate::ansatz::{MD2State, ModeLayout};
use crate::tfd::EffectiveHamiltonian;
use crate::C64;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Effective Hamiltonian flattened into per-mode energies and couplings.
#[derive(Clone, Debug, PartialEq)]
pub struct FlatHamiltonian {
    pub omega0: f64,
    pub eps: Array1<f64>,
    pub kappa: Array1<f64>,
    pub layout: ModeLayout,
}

impl From<&EffectiveHamiltonian> for FlatHamiltonian {
    fn from(h: &EffectiveHamiltonian) -> Self {
        Self {
            omega0: h.omega0,
            eps: Array1::from(h.mode_energies()),
            kappa: Array1::from(h.mode_couplings()),
            layout: h.layout(),
        }
    }
}

/// Structured linear system `G ẋ = r` at one state.
///
/// Unknowns are ordered `[ċ_{0,↑}, ċ_{0,↓}, …, ċ_{M−1,↓}, ż_{0,0}, …, ż_{M−1,K−1}]`
/// (row-major), `P = 2M + M K`.
#[derive(Clone, Debug)]
pub struct EomSystem {
    /// Spinors as an `M × 2` array `[A_i, B_i]`.
    pub a: Array2<C64>,
    pub z: Array2<C64>,
    /// `O_ij = ⟨z_i|z_j⟩`.
    pub o: Array2<C64>,
    /// `ρ_ij = a_i†a_j`.
    pub rho: Array2<C64>,
    /// `W_ij = ρ_ij O_ij`.
    pub w: Array2<C64>,
    /// `Γ_ij = Σ_k z̄_ik z_jk`.
    pub gamma: Array2<C64>,
    /// Right-hand side of the amplitude rows (`M × 2`).
    pub rhs_amp: Array2<C64>,
    /// Right-hand side of the displacement rows (`M × K`).
    pub rhs_disp: Array2<C64>,
    /// Ridge used by the most recent solve.
    pub regularization: f64,
    /// `1/rcond` of the matrix factorized by the most recent solve.
    pub condition_estimate: f64,
}

/// Solved derivatives.
#[derive(Clone, Debug)]
pub struct EomSolution {
    /// Chart velocities `ċ` (`M × 2`).
    pub c_dot: Array2<C64>,
    /// Amplitude derivatives `Ȧ, Ḃ` (`M × 2`).
    pub a_dot: Array2<C64>,
    /// Displacement derivatives (`M × K`).
    pub z_dot: Array2<C64>,
    pub ridge: f64,
    /// Ridge values that were tried and rejected before `ridge`.
    pub rejected: Vec<f64>,
    /// Relative residual `‖G ẋ − r‖/‖r‖` of the unregularized system.
    pub residual: f64,
    pub condition_estimate: f64,
}

impl EomSolution {
    /// Chart velocity vector in the unknown ordering of [`EomSystem`].
    pub fn flat(&self) -> Array1<C64> {
        flatten(&self.c_dot, &self.z_dot)
    }

    /// Largest component modulus of the velocity vector.
    pub fn max_rate(&self) -> f64 {
        self.c_dot.iter().chain(self.z_dot.iter()).map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Euclidean norm of the velocity vector.
    pub fn norm(&self) -> f64 {
        self.c_dot.iter().chain(self.z_dot.iter()).map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }
}

fn flatten(c: &Array2<C64>, z: &Array2<C64>) -> Array1<C64> {
    c.iter().chain(z.iter()).copied().collect()
}

/// Assembles the equations of motion.
pub fn assemble_eom(state: &MD2State, h: &EffectiveHamiltonian) -> Result<EomSystem, DynamicsError> {
    assemble_flat(state, &FlatHamiltonian::from(h))
}

/// As [`assemble_eom`] with a pre-flattened Hamiltonian.
pub fn assemble_flat(state: &MD2State, h: &FlatHamiltonian) -> Result<EomSystem, DynamicsError> {
    if h.layout != state.layout {
        return Err(DynamicsError::DimensionMismatch { expected: h.layout.total(), found: state.layout.total() });
    }
    let m = state.multiplicity();
    let z = state.z.clone();
    let mut a = Array2::<C64>::zeros((m, 2));
    a.column_mut(0).assign(&state.a);
    a.column_mut(1).assign(&state.b);

    let o = bra_ket_overlaps(&z);
    let (rho, sz, sx) = spin_forms(state);
    let w = &rho * &o;
    let zc = z.mapv(|v| v.conj());
    let gamma = zc.dot(&z.t());
    let eps_c = h.eps.mapv(|v| C64::new(v, 0.0));
    let kap_c = h.kappa.mapv(|v| C64::new(v, 0.0));
    let e = zc.dot(&(&z * &eps_c.view().insert_axis(Axis(0))).t());
    let xk = z.dot(&kap_c);
    let half_w0 = 0.5 * h.omega0;

    // Hamiltonian matrix elements h_ij = ⟨a_i z_i|H|a_j z_j⟩.
    let mut hm = Array2::<C64>::zeros((m, m));
    let mut osx_row = Array1::<C64>::zeros(m);
    let mut rhs_amp = Array2::<C64>::zeros((m, 2));
    for i in 0..m {
        let mut acc = [C64::new(0.0, 0.0); 2];
        for j in 0..m {
            let oij = o[[i, j]];
            let x = xk[j] + xk[i].conj();
            let eij = e[[i, j]];
            hm[[i, j]] = oij * (sz[[i, j]] * half_w0 + rho[[i, j]] * eij + sx[[i, j]] * x);
            osx_row[i] += oij * sx[[i, j]];
            let (aj, bj) = (a[[j, 0]], a[[j, 1]]);
            acc[0] += oij * (aj * half_w0 + aj * eij + bj * x);
            acc[1] += oij * (-bj * half_w0 + bj * eij + aj * x);
        }
        rhs_amp[[i, 0]] = -I * acc[0];
        rhs_amp[[i, 1]] = -I * acc[1];
    }
    let hrow = hm.sum_axis(Axis(1));
    let hz = hm.dot(&z);
    let wz = w.dot(&z);
    let mut rhs_disp = Array2::<C64>::zeros(z.raw_dim());
    for i in 0..m {
        for k in 0..z.ncols() {
            let v = hz[[i, k]] - z[[i, k]] * hrow[i] + wz[[i, k]] * h.eps[k] + osx_row[i] * h.kappa[k];
            rhs_disp[[i, k]] = -I * v;
        }
    }
    Ok(EomSystem { a, z, o, rho, w, gamma, rhs_amp, rhs_disp, regularization: 0.0, condition_estimate: f64::NAN })
}

impl EomSystem {
    pub fn multiplicity(&self) -> usize {
        self.a.nrows()
    }

    pub fn modes(&self) -> usize {
        self.z.ncols()
    }

    /// Number of complex unknowns `P = 2M + MK`.
    pub fn parameter_count(&self) -> usize {
        let m = self.multiplicity();
        2 * m + m * self.modes()
    }

    /// Right-hand side as a flat vector.
    pub fn rhs(&self) -> Array1<C64> {
        flatten(&self.rhs_amp, &self.rhs_disp)
    }

    /// `(G + ridge·1) ẋ` in structured form, `O(M²K)` operations.
    pub fn apply_gram(&self, c_dot: &Array2<C64>, z_dot: &Array2<C64>, ridge: f64) -> (Array2<C64>, Array2<C64>) {
        let m = self.multiplicity();
        let zc = self.z.mapv(|v| v.conj());
        let y = zc.dot(&z_dot.t());
        let mut ge = self.o.dot(c_dot);
        let mut ok = Array2::<C64>::zeros((m, m));
        for i in 0..m {
            for j in 0..m {
                let u = y[[i, j]] - y[[j, j]];
                let oij = self.o[[i, j]];
                ge[[i, 0]] += oij * self.a[[j, 0]] * u;
                ge[[i, 1]] += oij * self.a[[j, 1]] * u;
                let kap = self.a[[i, 0]].conj() * c_dot[[j, 0]]
                    + self.a[[i, 1]].conj() * c_dot[[j, 1]]
                    + self.rho[[i, j]] * u;
                ok[[i, j]] = oij * kap;
            }
        }
        let okrow = ok.sum_axis(Axis(1));
        let mut gd = self.w.dot(z_dot) + ok.dot(&self.z);
        for i in 0..m {
            for k in 0..self.modes() {
                gd[[i, k]] -= self.z[[i, k]] * okrow[i];
            }
        }
        if ridge != 0.0 {
            ge.scaled_add(C64::new(ridge, 0.0), c_dot);
            gd.scaled_add(C64::new(ridge, 0.0), z_dot);
        }
        (ge, gd)
    }

    /// Explicit `P × P` Gram matrix.
    pub fn dense_gram(&self) -> Array2<C64> {
        let m = self.multiplicity();
        let k = self.modes();
        let p = self.parameter_count();
        let d = |i: usize, q: usize| 2 * m + i * k + q;
        let mut g = Array2::<C64>::zeros((p, p));
        for i in 0..m {
            for j in 0..m {
                let oij = self.o[[i, j]];
                let rij = self.rho[[i, j]];
                for s in 0..2 {
                    g[[2 * i + s, 2 * j + s]] = oij;
                    for q in 0..k {
                        let v = self.a[[j, s]] * (self.z[[i, q]].conj() - self.z[[j, q]].conj()) * oij;
                        g[[2 * i + s, d(j, q)]] = v;
                    }
                }
                for kk in 0..k {
                    // ⟨d_ik|e_jt⟩ = ā_it (z_jk − z_ik) O_ij
                    for t in 0..2 {
                        g[[d(i, kk), 2 * j + t]] = self.a[[i, t]].conj() * (self.z[[j, kk]] - self.z[[i, kk]]) * oij;
                    }
                    let dz = self.z[[j, kk]] - self.z[[i, kk]];
                    for q in 0..k {
                        let delta = if kk == q { 1.0 } else { 0.0 };
                        let v = (self.z[[i, q]].conj() - self.z[[j, q]].conj()) * dz + delta;
                        g[[d(i, kk), d(j, q)]] = rij * oij * v;
                    }
                }
            }
        }
        g
    }

    /// `max |G − G†|` of the explicit Gram matrix.
    pub fn hermiticity_residual(&self) -> f64 {
        let g = self.dense_gram();
        let mut r = 0.0f64;
        for i in 0..g.nrows() {
            for j in 0..=i {
                r = r.max((g[[i, j]] - g[[j, i]].conj()).norm());
            }
        }
        r
    }

    /// Splits a flat unknown vector into `(ċ, ż)`.
    pub fn split(&self, x: &Array1<C64>) -> (Array2<C64>, Array2<C64>) {
        let m = self.multiplicity();
        let c = Array2::from_shape_vec((m, 2), x.iter().take(2 * m).copied().collect()).expect("shape");
        let z = Array2::from_shape_vec((m, self.modes()), x.iter().skip(2 * m).copied().collect()).expect("shape");
        (c, z)
    }

    /// Relative residual `‖(G + ridge) ẋ − r‖ / ‖r‖`.
    pub fn relative_residual(&self, c_dot: &Array2<C64>, z_dot: &Array2<C64>, ridge: f64) -> f64 {
        let (ge, gd) = self.apply_gram(c_dot, z_dot, ridge);
        let num: f64 = (&ge - &self.rhs_amp).iter().chain((&gd - &self.rhs_disp).iter()).map(|v| v.norm_sqr()).sum();
        let den: f64 = self.rhs_amp.iter().chain(self.rhs_disp.iter()).map(|v| v.norm_sqr()).sum();
        if den > 0.0 {
            (num / den).sqrt()
        } else {
            num.sqrt()
        }
    }

    /// Size of the reduced (Schur-complement) system `2M + M²`.
    fn reduced_size(&self) -> usize {
        let m = self.multiplicity();
        2 * m + m * m
    }

    /// Factorizes `G + ridge·1`, densely or through the reduced system.
    fn factorize(&self, ridge: f64, dense: bool) -> Option<Factor> {
        if dense {
            let mut g = self.dense_gram();
            for v in g.diag_mut() {
                *v += ridge;
            }
            let lu = Lu::new(g)?;
            let rcond = lu.rcond();
            Some(Factor::Dense { lu, rcond })
        } else {
            self.factorize_reduced(ridge)
        }
    }

    /// Eliminates `ż` through `V = (W + ε)⁻¹` and factorizes the system for
    /// `ċ` together with the overlaps `y_ij = Σ_q z̄_iq ż_jq`; cost
    /// `O(M⁴ + M⁶)`, independent of the right-hand side.
    fn factorize_reduced(&self, ridge: f64) -> Option<Factor> {
        let m = self.multiplicity();
        let n = self.reduced_size();
        let mut wr = self.w.clone();
        for v in wr.diag_mut() {
            *v += ridge;
        }
        let wlu = Lu::new(wr)?;
        let w_rcond = wlu.rcond();
        let v = wlu.inverse()?;
        let ce = |j: usize, s: usize| 2 * j + s;
        let iy = |i: usize, j: usize| 2 * m + i * m + j;
        let mut q = Array2::<C64>::zeros((n, n));
        for i in 0..m {
            for s in 0..2 {
                let row = ce(i, s);
                for j in 0..m {
                    let oij = self.o[[i, j]];
                    q[[row, ce(j, s)]] += oij;
                    let t = oij * self.a[[j, s]];
                    q[[row, iy(i, j)]] += t;
                    q[[row, iy(j, j)]] -= t;
                }
                q[[row, row]] += ridge;
            }
        }
        for i in 0..m {
            for j in 0..m {
                let row = iy(i, j);
                q[[row, row]] += 1.0;
                for l in 0..m {
                    let vjl = v[[j, l]];
                    if vjl == C64::new(0.0, 0.0) {
                        continue;
                    }
                    let gil = self.gamma[[i, l]];
                    for mm in 0..m {
                        let c = vjl * self.o[[l, mm]] * (self.gamma[[i, mm]] - gil);
                        q[[row, ce(mm, 0)]] += c * self.a[[l, 0]].conj();
                        q[[row, ce(mm, 1)]] += c * self.a[[l, 1]].conj();
                        let cr = c * self.rho[[l, mm]];
                        q[[row, iy(l, mm)]] += cr;
                        q[[row, iy(mm, mm)]] -= cr;
                    }
                }
            }
        }
        let lu = Lu::new(q)?;
        let rcond = lu.rcond().min(w_rcond);
        Some(Factor::Reduced { v, lu, rcond })
    }

    /// Applies a factorization to the right-hand side `(r_e, r_d)`.
    fn apply_inverse(&self, f: &Factor, r_amp: &Array2<C64>, r_disp: &Array2<C64>) -> Option<(Array2<C64>, Array2<C64>)> {
        match f {
            Factor::Dense { lu, .. } => {
                let x = lu.solve(flatten(r_amp, r_disp))?;
                Some(self.split(&x))
            }
            Factor::Reduced { v, lu, .. } => {
                let m = self.multiplicity();
                let zc = self.z.mapv(|v| v.conj());
                let vr = zc.dot(&r_disp.t()).dot(&v.t()); // (R Vᵀ)_ij = Σ_l V_jl R_il
                let b: Array1<C64> = r_amp.iter().chain(vr.iter()).copied().collect();
                let x = lu.solve(b)?;
                let c_dot = Array2::from_shape_vec((m, 2), x.iter().take(2 * m).copied().collect()).ok()?;
                let y = Array2::from_shape_vec((m, m), x.iter().skip(2 * m).copied().collect()).ok()?;
                // κ_ij = a_i†ċ_j + ρ_ij (y_ij − y_jj); h = (O∘κ) Z − Z ∘ rowsum(O∘κ).
                let mut ok = Array2::<C64>::zeros((m, m));
                for i in 0..m {
                    for j in 0..m {
                        let kap = self.a[[i, 0]].conj() * c_dot[[j, 0]]
                            + self.a[[i, 1]].conj() * c_dot[[j, 1]]
                            + self.rho[[i, j]] * (y[[i, j]] - y[[j, j]]);
                        ok[[i, j]] = self.o[[i, j]] * kap;
                    }
                }
                let okrow = ok.sum_axis(Axis(1));
                let mut hmat = ok.dot(&self.z);
                for i in 0..m {
                    for k in 0..self.modes() {
                        hmat[[i, k]] -= self.z[[i, k]] * okrow[i];
                    }
                }
                let z_dot = v.dot(&(r_disp - &hmat));
                Some((c_dot, z_dot))
            }
        }
    }

    /// Ridge-regularized solve followed by up to `policy.refinements` rounds
    /// of iterated Tikhonov correction `x ← x + (G + ε)⁻¹ (r − G x)`, which
    /// removes the ridge bias on well-determined directions while leaving
    /// numerically null directions damped. Rounds stop once the relative
    /// residual reaches `policy.refine_tol`.
    fn attempt(&self, ridge: f64, dense: bool, policy: &RidgePolicy) -> Option<(Array2<C64>, Array2<C64>, f64)> {
        let f = self.factorize(ridge, dense)?;
        let (mut c, mut z) = self.apply_inverse(&f, &self.rhs_amp, &self.rhs_disp)?;
        if ridge > 0.0 {
            let scale: f64 = self.rhs_amp.iter().chain(self.rhs_disp.iter()).map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            for _ in 0..policy.refinements {
                let (ge, gd) = self.apply_gram(&c, &z, 0.0);
                let (ra, rd) = (&self.rhs_amp - &ge, &self.rhs_disp - &gd);
                let res: f64 = ra.iter().chain(rd.iter()).map(|v| v.norm_sqr()).sum::<f64>().sqrt();
                if res <= policy.refine_tol * scale {
                    break;
                }
                let (dc, dz) = self.apply_inverse(&f, &ra, &rd)?;
                c += &dc;
                z += &dz;
            }
        }
        Some((c, z, f.rcond()))
    }
}

enum Factor {
    Dense { lu: Lu, rcond: f64 },
    Reduced { v: Array2<C64>, lu: Lu, rcond: f64 },
}

impl Factor {
    fn rcond(&self) -> f64 {
        match self {
            Factor::Dense { rcond, .. } | Factor::Reduced { rcond, .. } => *rcond,
        }
    }
}

/// Solves the equations of motion with adaptive ridge regularization.
///
/// The ridge starts at `policy.initial` and grows by `policy.factor` while
/// the factorization fails, its condition estimate exceeds
/// `policy.max_condition`, or `‖ẋ‖ > policy.max_norm`. The condition bound
/// is waived at the cap; a divergent solution at the cap aborts the step.
/// Each accepted solution is refined `policy.refinements` times against the
/// unregularized system.
pub fn solve_eom(sys: &mut EomSystem, policy: &RidgePolicy, time: f64) -> Result<EomSolution, DynamicsError> {
    solve_eom_from(sys, policy, time, policy.initial)
}

/// As [`solve_eom`], with the escalation starting at `start` (clamped to
/// `[policy.initial, policy.cap]`).
pub fn solve_eom_from(
    sys: &mut EomSystem,
    policy: &RidgePolicy,
    time: f64,
    start: f64,
) -> Result<EomSolution, DynamicsError> {
    let dense = sys.parameter_count() <= sys.reduced_size();
    if dense && sys.parameter_count() <= 256 {
        let r = sys.hermiticity_residual();
        if r > 1e-8 {
            return Err(DynamicsError::NonHermitian(r));
        }
    }
    let mut ridge = start.clamp(policy.initial, policy.cap);
    let mut rejected = Vec::new();
    let mut last_norm = f64::NAN;
    loop {
        let at_cap = ridge * policy.factor > policy.cap * (1.0 + 1e-9);
        if let Some((c_dot, z_dot, rcond)) = sys.attempt(ridge, dense, policy) {
            let norm = c_dot.iter().chain(z_dot.iter()).map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            let conditioned = rcond * policy.max_condition >= 1.0 || at_cap;
            if norm.is_finite() && norm <= policy.max_norm && conditioned {
                let residual = sys.relative_residual(&c_dot, &z_dot, 0.0);
                let a_dot = natural_amplitude_rates(sys, &c_dot, &z_dot);
                sys.regularization = ridge;
                sys.condition_estimate = 1.0 / rcond;
                return Ok(EomSolution {
                    c_dot,
                    a_dot,
                    z_dot,
                    ridge,
                    rejected,
                    residual,
                    condition_estimate: 1.0 / rcond,
                });
            }
            last_norm = norm;
        }
        rejected.push(ridge);
        ridge *= policy.factor;
        if ridge > policy.cap * (1.0 + 1e-9) {
            return Err(DynamicsError::RegularizationCap { time, cap: policy.cap, norm: last_norm });
        }
    }
}


/// `Ȧ_is = ċ_is − i a_is Im(Σ_k z̄_ik ż_ik)`.
fn natural_amplitude_rates(sys: &EomSystem, c_dot: &Array2<C64>, z_dot: &Array2<C64>) -> Array2<C64> {
    let mut out = c_dot.clone();
    for i in 0..sys.multiplicity() {
        let phase: f64 = sys.z.row(i).iter().zip(z_dot.row(i)).map(|(z, d)| (z.conj() * d).im).sum();
        for s in 0..2 {
            out[[i, s]] -= I * sys.a[[i, s]] * phase;
        }
    }
    out
}
