//! Shared helpers for integration tests: random instances, an independent
//! finite-difference evaluation of the variational Lagrangian, and literal
//! per-index forms of the amplitude and displacement equations.
#![allow(dead_code)]

use davydov::ansatz::{MD2State, ModeLayout};
use davydov::dynamics::{assemble_eom, solve_eom, EomSolution, EomSystem, RidgePolicy};
use davydov::tfd::{BathBlock, EffectiveHamiltonian};
use davydov::C64;
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Random effective Hamiltonian with `n_left`, `n_right` modes per bath.
pub fn random_hamiltonian(n_left: usize, n_right: usize, rng: &mut ChaCha8Rng) -> EffectiveHamiltonian {
    let mut block = |n: usize| {
        let frequencies: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..2.0)).collect();
        let theta: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
        let lambda: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..0.5)).collect();
        BathBlock {
            real_couplings: lambda.iter().zip(&theta).map(|(l, t)| l * t.cosh()).collect(),
            tilde_couplings: lambda.iter().zip(&theta).map(|(l, t)| l * t.sinh()).collect(),
            frequencies,
        }
    };
    let left = block(n_left);
    let right = block(n_right);
    EffectiveHamiltonian { omega0: rng.gen_range(0.5..1.5), left, right }
}

/// Random state with O(1) amplitudes and displacements of size `scale`.
pub fn random_state(m: usize, layout: ModeLayout, scale: f64, rng: &mut ChaCha8Rng) -> MD2State {
    let mut s = MD2State::zeros(m, layout);
    for i in 0..m {
        s.a[i] = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        s.b[i] = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    }
    s.z.mapv_inplace(|_| c(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale)));
    s
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Unregularized solve (ridge 0, no condition bound).
pub fn exact_solve(state: &MD2State, h: &EffectiveHamiltonian) -> (EomSystem, EomSolution) {
    let mut sys = assemble_eom(state, h).expect("assembly");
    let policy = RidgePolicy { initial: 0.0, max_condition: f64::INFINITY, ..RidgePolicy::default() };
    let sol = solve_eom(&mut sys, &policy, 0.0).expect("solve");
    (sys, sol)
}

// ---------------------------------------------------------------------------
// Finite-difference Lagrangian oracle.
//
// In the holomorphic chart x = (u, z) with |Ψ(x)⟩ = Σ_i (u_i↑|↑⟩ + u_i↓|↓⟩) e^{Σ z_ik b_k†}|0⟩
// (u = a e^{−|z|²/2}), the Lagrangian L = Im⟨Ψ|Ψ̇⟩-type kinetic term plus
// −⟨Ψ|H|Ψ⟩ is built from N(w, x) = ⟨Ψ(w̄)|Ψ(x)⟩ and E(w, x) = ⟨Ψ(w̄)|H|Ψ(x)⟩,
// both holomorphic in the bra variable w and the ket variable x. Its
// Euler–Lagrange equations read Σ_ν ∂²N/∂w_μ∂x_ν ẋ_ν = −i ∂E/∂w_μ at w = x̄.
// ---------------------------------------------------------------------------

/// Holomorphic parameter vector `[u_0↑, u_0↓, …, z_00, …]`.
pub fn holomorphic_params(s: &MD2State) -> Vec<C64> {
    let m = s.multiplicity();
    let mut p = Vec::with_capacity(2 * m + s.z.len());
    for i in 0..m {
        let damp = (-0.5 * s.z.row(i).iter().map(|v| v.norm_sqr()).sum::<f64>()).exp();
        p.push(s.a[i] * damp);
        p.push(s.b[i] * damp);
    }
    p.extend(s.z.iter().copied());
    p
}

struct Split<'a> {
    u: &'a [C64],
    z: &'a [C64],
    k: usize,
}

fn split(p: &[C64], m: usize) -> Split<'_> {
    let k = (p.len() - 2 * m) / m;
    Split { u: &p[..2 * m], z: &p[2 * m..], k }
}

/// `N(w, x)`.
pub fn overlap_fn(w: &[C64], x: &[C64], m: usize) -> C64 {
    let (bw, kx) = (split(w, m), split(x, m));
    let mut acc = c(0.0, 0.0);
    for i in 0..m {
        for j in 0..m {
            let ex: C64 = (0..bw.k).map(|q| bw.z[i * bw.k + q] * kx.z[j * kx.k + q]).sum();
            acc += (bw.u[2 * i] * kx.u[2 * j] + bw.u[2 * i + 1] * kx.u[2 * j + 1]) * ex.exp();
        }
    }
    acc
}

/// `E(w, x)`.
pub fn energy_fn(w: &[C64], x: &[C64], m: usize, h: &EffectiveHamiltonian) -> C64 {
    let (bw, kx) = (split(w, m), split(x, m));
    let eps = h.mode_energies();
    let kap = h.mode_couplings();
    let mut acc = c(0.0, 0.0);
    for i in 0..m {
        for j in 0..m {
            let (zi, zj) = (&bw.z[i * bw.k..(i + 1) * bw.k], &kx.z[j * kx.k..(j + 1) * kx.k]);
            let ex: C64 = zi.iter().zip(zj).map(|(a, b)| a * b).sum::<C64>().exp();
            let bath: C64 = (0..bw.k).map(|q| eps[q] * zi[q] * zj[q]).sum();
            let coup: C64 = (0..bw.k).map(|q| kap[q] * (zj[q] + zi[q])).sum();
            let (wu, wd, xu, xd) = (bw.u[2 * i], bw.u[2 * i + 1], kx.u[2 * j], kx.u[2 * j + 1]);
            let diag = wu * xu * (0.5 * h.omega0 + bath) + wd * xd * (-0.5 * h.omega0 + bath);
            acc += ex * (diag + (wu * xd + wd * xu) * coup);
        }
    }
    acc
}

/// `(G, r)` of the Euler–Lagrange equations by central differences with
/// step `step` in the holomorphic chart.
pub fn finite_difference_system(s: &MD2State, h: &EffectiveHamiltonian, step: f64) -> (Array2<C64>, Array1<C64>) {
    let m = s.multiplicity();
    let x = holomorphic_params(s);
    let w: Vec<C64> = x.iter().map(|v| v.conj()).collect();
    let p = x.len();
    let shift = |v: &[C64], k: usize, d: f64| {
        let mut o = v.to_vec();
        o[k] += d;
        o
    };
    let mut g = Array2::zeros((p, p));
    for mu in 0..p {
        let (wp, wm) = (shift(&w, mu, step), shift(&w, mu, -step));
        for nu in 0..p {
            let (xp, xm) = (shift(&x, nu, step), shift(&x, nu, -step));
            g[[mu, nu]] = (overlap_fn(&wp, &xp, m) - overlap_fn(&wp, &xm, m) - overlap_fn(&wm, &xp, m)
                + overlap_fn(&wm, &xm, m))
                / (4.0 * step * step);
        }
    }
    let r = Array1::from_iter((0..p).map(|mu| {
        -I * (energy_fn(&shift(&w, mu, step), &x, m, h) - energy_fn(&shift(&w, mu, -step), &x, m, h)) / (2.0 * step)
    }));
    (g, r)
}

/// Jacobian `T` with `ẋ_chart = T ẋ_holomorphic`, so `G_hol = T† G T` and
/// `r_hol = T† r`.
pub fn chart_jacobian(s: &MD2State) -> Array2<C64> {
    let m = s.multiplicity();
    let k = s.layout.total();
    let p = 2 * m + m * k;
    let mut t = Array2::zeros((p, p));
    for i in 0..m {
        let grow = (0.5 * s.z.row(i).iter().map(|v| v.norm_sqr()).sum::<f64>()).exp();
        for (sidx, amp) in [(0, s.a[i]), (1, s.b[i])] {
            let row = 2 * i + sidx;
            t[[row, row]] = c(grow, 0.0);
            for q in 0..k {
                t[[row, 2 * m + i * k + q]] = amp * s.z[[i, q]].conj();
            }
        }
        for q in 0..k {
            let idx = 2 * m + i * k + q;
            t[[idx, idx]] = c(1.0, 0.0);
        }
    }
    t
}

pub fn max_abs(a: impl IntoIterator<Item = C64>) -> f64 {
    a.into_iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Relative deviations `(G, r)` between the assembled system and the
/// finite-difference Lagrangian.
pub fn lagrangian_mismatch(s: &MD2State, h: &EffectiveHamiltonian) -> (f64, f64) {
    let sys = assemble_eom(s, h).expect("assembly");
    let t = chart_jacobian(s);
    let th = t.t().mapv(|v| v.conj());
    let g_hol = th.dot(&sys.dense_gram()).dot(&t);
    let r_hol = th.dot(&sys.rhs());
    let (g_fd, r_fd) = finite_difference_system(s, h, 1e-4);
    let dg = max_abs((&g_hol - &g_fd).iter().copied()) / max_abs(g_fd.iter().copied());
    let dr = max_abs((&r_hol - &r_fd).iter().copied()) / max_abs(r_fd.iter().copied());
    (dg, dr)
}

// ---------------------------------------------------------------------------
// Literal per-index equations (amplitude rows and displacement rows), written
// with natural amplitude rates Ȧ, Ḃ and the four TFD blocks spelled out.
// ---------------------------------------------------------------------------

/// `S_ji = ⟨z_j|z_i⟩` computed directly.
fn s_ji(s: &MD2State, j: usize, i: usize) -> C64 {
    let mut e = c(0.0, 0.0);
    for q in 0..s.layout.total() {
        let (zj, zi) = (s.z[[j, q]], s.z[[i, q]]);
        e += zj.conj() * zi - 0.5 * zj.norm_sqr() - 0.5 * zi.norm_sqr();
    }
    e.exp()
}

/// Per-block mode data `(energy, coupling, column)` over `f, f̃, g, g̃`.
fn blocks(h: &EffectiveHamiltonian) -> Vec<Vec<(f64, f64, usize)>> {
    let mut col = 0;
    let mut out = Vec::new();
    for (b, tilde) in [(&h.left, false), (&h.left, true), (&h.right, false), (&h.right, true)] {
        let mut v = Vec::new();
        for k in 0..b.frequencies.len() {
            let (w, l) = if tilde { (-b.frequencies[k], b.tilde_couplings[k]) } else { (b.frequencies[k], b.real_couplings[k]) };
            v.push((w, l, col));
            col += 1;
        }
        out.push(v);
    }
    out
}

/// Relative residual of the amplitude equations (the `A` rows; with
/// `spin_down` the `B` rows):
/// `i Σ_i S_ji [Ȧ_i + A_i Σ_k (z̄_jk ż_ik − Re z̄_ik ż_ik)]
///  = Σ_i S_ji [±(ω₀/2) A_i + A_i Σ_k ω_k z̄_jk z_ik + B_i Σ_k λ'_k (z_ik + z̄_jk)]`.
pub fn amplitude_equation_residual(s: &MD2State, h: &EffectiveHamiltonian, sol: &EomSolution, spin_down: bool) -> f64 {
    let m = s.multiplicity();
    let bl = blocks(h);
    let (amp, other, sign, dot_col) = if spin_down { (&s.b, &s.a, -1.0, 1) } else { (&s.a, &s.b, 1.0, 0) };
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for j in 0..m {
        let mut lhs = c(0.0, 0.0);
        let mut rhs = c(0.0, 0.0);
        for i in 0..m {
            let sji = s_ji(s, j, i);
            let mut kin = c(0.0, 0.0);
            let mut bath = c(0.0, 0.0);
            let mut coup = c(0.0, 0.0);
            for block in &bl {
                for &(w, l, q) in block {
                    let (zj, zi, zid) = (s.z[[j, q]], s.z[[i, q]], sol.z_dot[[i, q]]);
                    kin += zj.conj() * zid - (zi.conj() * zid).re;
                    bath += w * zj.conj() * zi;
                    coup += l * (zi + zj.conj());
                }
            }
            lhs += I * sji * (sol.a_dot[[i, dot_col]] + amp[i] * kin);
            rhs += sji * (sign * 0.5 * h.omega0 * amp[i] + amp[i] * bath + other[i] * coup);
        }
        worst = worst.max((lhs - rhs).norm());
        scale = scale.max(lhs.norm()).max(rhs.norm());
    }
    worst / scale.max(1e-300)
}

/// Relative residual of the displacement equations for the modes of one
/// block (`0..4` = `f, f̃, g, g̃`):
/// `i Σ_i S_ji {(A_j*Ȧ_i + B_j*Ḃ_i) Δ_iq + ρ_ji [ż_iq + Δ_iq Σ_k (z̄_jk ż_ik − Re z̄_ik ż_ik)]}
///  = Σ_i S_ji {(ω₀/2)(A_j*A_i − B_j*B_i) Δ_iq + ρ_ji [ω_q z_iq + Δ_iq Σ_k ω_k z̄_jk z_ik]
///             + (A_j*B_i + B_j*A_i)[λ'_q + Δ_iq Σ_k λ'_k (z_ik + z̄_jk)]}`
/// with `Δ_iq = z_iq − z_jq` and `ρ_ji = A_j*A_i + B_j*B_i`.
pub fn displacement_equation_residual(s: &MD2State, h: &EffectiveHamiltonian, sol: &EomSolution, block: usize) -> f64 {
    let m = s.multiplicity();
    let bl = blocks(h);
    let all: Vec<(f64, f64, usize)> = bl.iter().flatten().copied().collect();
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for j in 0..m {
        for &(wq, lq, q) in &bl[block] {
            let mut lhs = c(0.0, 0.0);
            let mut rhs = c(0.0, 0.0);
            for i in 0..m {
                let sji = s_ji(s, j, i);
                let rho = s.a[j].conj() * s.a[i] + s.b[j].conj() * s.b[i];
                let sz = s.a[j].conj() * s.a[i] - s.b[j].conj() * s.b[i];
                let sx = s.a[j].conj() * s.b[i] + s.b[j].conj() * s.a[i];
                let amp_dot = s.a[j].conj() * sol.a_dot[[i, 0]] + s.b[j].conj() * sol.a_dot[[i, 1]];
                let delta = s.z[[i, q]] - s.z[[j, q]];
                let (mut kin, mut bath, mut coup) = (c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0));
                for &(w, l, k) in &all {
                    let (zj, zi, zid) = (s.z[[j, k]], s.z[[i, k]], sol.z_dot[[i, k]]);
                    kin += zj.conj() * zid - (zi.conj() * zid).re;
                    bath += w * zj.conj() * zi;
                    coup += l * (zi + zj.conj());
                }
                lhs += I * sji * (amp_dot * delta + rho * (sol.z_dot[[i, q]] + delta * kin));
                rhs += sji
                    * (0.5 * h.omega0 * sz * delta + rho * (wq * s.z[[i, q]] + delta * bath) + sx * (lq + delta * coup));
            }
            worst = worst.max((lhs - rhs).norm());
            scale = scale.max(lhs.norm()).max(rhs.norm());
        }
    }
    worst / scale.max(1e-300)
}
