//! Overlaps (Debye–Waller factors) and expectation values.

use ndarray::{Array1, Array2, ArrayView1, Axis, Zip};

use super::{AnsatzError, Block, MD2State};
use crate::numeric::{NeumaierSum, NeumaierSumC};
use crate::tfd::EffectiveHamiltonian;
use crate::C64;

/// Debye–Waller factors `S_ij = ⟨z_j|z_i⟩` and per-block log-overlaps.
#[derive(Clone, Debug, PartialEq)]
pub struct OverlapTable {
    pub s: Array2<C64>,
    /// Partial log-overlaps of the blocks `f, f̃, g, g̃`, in [`Block`] order.
    pub block_logs: [Array2<C64>; 4],
}

impl OverlapTable {
    /// Multiplicity `M`.
    pub fn len(&self) -> usize {
        self.s.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    /// Bra–ket ordered overlaps `O_ij = ⟨z_i|z_j⟩ = S_ji`.
    pub fn bra_ket(&self) -> Array2<C64> {
        self.s.t().to_owned()
    }

    /// Partial log-overlap of one block.
    pub fn block_log(&self, block: Block) -> &Array2<C64> {
        &self.block_logs[block.index()]
    }
}

/// `log⟨z_j|z_i⟩ = Σ_k [z̄_jk z_ik − ½|z_ik|² − ½|z_jk|²]` in the
/// equivalent form `Σ_k [−½|z_ik − z_jk|² + i Im(z̄_jk z_ik)]`, whose real
/// part is nonpositive by construction. Accumulated with compensation.
pub fn log_overlap(zi: ArrayView1<C64>, zj: ArrayView1<C64>) -> C64 {
    let mut re = NeumaierSum::new();
    let mut im = NeumaierSum::new();
    for (p, q) in zi.iter().zip(zj.iter()) {
        re.add(-0.5 * (p - q).norm_sqr());
        im.add((q.conj() * p).im);
    }
    C64::new(re.value(), im.value())
}

/// Computes the Debye–Waller table over all four displacement blocks.
pub fn debye_waller(state: &MD2State) -> OverlapTable {
    let m = state.multiplicity();
    let block_logs = Block::ALL.map(|blk| {
        let z = state.block(blk);
        let mut l = Array2::<C64>::zeros((m, m));
        for i in 0..m {
            for j in (i + 1)..m {
                let v = log_overlap(z.row(i), z.row(j));
                l[[i, j]] = v;
                l[[j, i]] = v.conj();
            }
        }
        l
    });
    let mut s = Array2::<C64>::zeros((m, m));
    for i in 0..m {
        s[[i, i]] = C64::new(1.0, 0.0);
        for j in (i + 1)..m {
            let mut acc = NeumaierSumC::new();
            for l in &block_logs {
                acc.add(l[[i, j]]);
            }
            let v = clamp_unit(acc.value().exp());
            s[[i, j]] = v;
            s[[j, i]] = v.conj();
        }
    }
    OverlapTable { s, block_logs }
}

/// Bra–ket overlaps `O_ij = ⟨z_i|z_j⟩` directly from the displacement array.
pub(crate) fn bra_ket_overlaps(z: &Array2<C64>) -> Array2<C64> {
    let m = z.nrows();
    let mut o = Array2::<C64>::zeros((m, m));
    for i in 0..m {
        o[[i, i]] = C64::new(1.0, 0.0);
        for j in (i + 1)..m {
            // ⟨z_i|z_j⟩ = exp(log⟨z_i|z_j⟩), and log⟨z_i|z_j⟩ = log_overlap(z_j, z_i).
            let v = clamp_unit(log_overlap(z.row(j), z.row(i)).exp());
            o[[i, j]] = v;
            o[[j, i]] = v.conj();
        }
    }
    o
}

fn clamp_unit(v: C64) -> C64 {
    let n = v.norm();
    if n > 1.0 {
        v / n
    } else {
        v
    }
}

/// `⟨Ψ|Ψ⟩ = Σ_ij (A*_j A_i + B*_j B_i) S_ij`.
pub fn norm_squared(state: &MD2State) -> f64 {
    let o = bra_ket_overlaps(&state.z);
    let (rho, _, _) = spin_forms(state);
    hermitian_form(&o, &rho)
}

/// Normalized `⟨σ_z⟩`.
pub fn sigma_z_expectation(state: &MD2State) -> Result<f64, AnsatzError> {
    let o = bra_ket_overlaps(&state.z);
    let (rho, sz, _) = spin_forms(state);
    let norm = hermitian_form(&o, &rho);
    if !(norm > 0.0) {
        return Err(AnsatzError::ZeroNorm);
    }
    Ok(hermitian_form(&o, &sz) / norm)
}

/// Normalized `⟨H⟩` of the effective Hamiltonian.
pub fn hamiltonian_expectation(state: &MD2State, h: &EffectiveHamiltonian) -> Result<f64, AnsatzError> {
    let mo = hamiltonian_moments(state, h)?;
    if !(mo.norm > 0.0) {
        return Err(AnsatzError::ZeroNorm);
    }
    Ok(mo.energy / mo.norm)
}

/// Unnormalized moments `⟨Ψ|Ψ⟩`, `⟨Ψ|σ_z|Ψ⟩`, `⟨Ψ|H|Ψ⟩` and `⟨Ψ|H²|Ψ⟩`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Moments {
    pub norm: f64,
    pub sigma_z: f64,
    pub energy: f64,
    pub energy_sq: f64,
}

/// Evaluates [`Moments`] with the coherent-state matrix-element algebra in
/// `O(M² K)` operations.
///
/// With `E_ij = Σ ε z̄_i z_j`, `E2_ij = Σ ε² z̄_i z_j`, `X_ij = Σ κ (z_j + z̄_i)`
/// and `Y_ij = Σ εκ (z_j + z̄_i)`:
///
/// * `⟨z_i|H|z_j⟩ = O_ij [(ω₀/2) σ_z + E_ij + X_ij σ_x]`
/// * `⟨z_i|H²|z_j⟩ = O_ij [(ω₀²/4 + E_ij² + E2_ij + X_ij² + Σκ²) + ω₀ E_ij σ_z + (2 E_ij X_ij + Y_ij) σ_x]`
pub fn hamiltonian_moments(state: &MD2State, h: &EffectiveHamiltonian) -> Result<Moments, AnsatzError> {
    let k = state.layout.total();
    let layout = h.layout();
    if layout != state.layout {
        return Err(AnsatzError::DimensionMismatch { what: "mode count", expected: layout.total(), found: k });
    }
    let eps = Array1::from(h.mode_energies());
    let kap = Array1::from(h.mode_couplings());
    let w0 = h.omega0;
    let z = &state.z;
    let o = bra_ket_overlaps(z);
    let (rho, sz, sx) = spin_forms(state);

    let zc = z.mapv(|v| v.conj());
    let e = zc.dot(&(z * &eps.view().insert_axis(Axis(0))).t());
    let e2 = zc.dot(&(z * &eps.mapv(|v| v * v).view().insert_axis(Axis(0))).t());
    let kc = kap.mapv(|v| C64::new(v, 0.0));
    let ekc = (&eps * &kap).mapv(|v| C64::new(v, 0.0));
    let xk = z.dot(&kc);
    let yk = z.dot(&ekc);
    let kap2: f64 = kap.iter().map(|v| v * v).sum();

    let m = state.multiplicity();
    let mut norm = NeumaierSum::new();
    let mut szs = NeumaierSum::new();
    let mut en = NeumaierSum::new();
    let mut en2 = NeumaierSum::new();
    for i in 0..m {
        for j in 0..m {
            let oij = o[[i, j]];
            let x = xk[j] + xk[i].conj();
            let y = yk[j] + yk[i].conj();
            let eij = e[[i, j]];
            norm.add((oij * rho[[i, j]]).re);
            szs.add((oij * sz[[i, j]]).re);
            en.add((oij * (sz[[i, j]] * (0.5 * w0) + rho[[i, j]] * eij + sx[[i, j]] * x)).re);
            let scalar = C64::new(0.25 * w0 * w0 + kap2, 0.0) + eij * eij + e2[[i, j]] + x * x;
            en2.add((oij * (rho[[i, j]] * scalar + sz[[i, j]] * (w0 * eij) + sx[[i, j]] * (2.0 * eij * x + y))).re);
        }
    }
    Ok(Moments { norm: norm.value(), sigma_z: szs.value(), energy: en.value(), energy_sq: en2.value() })
}

/// Spin bilinears `ρ_ij = a_i†a_j`, `σz_ij = a_i†σ_z a_j`, `σx_ij = a_i†σ_x a_j`.
pub(crate) fn spin_forms(state: &MD2State) -> (Array2<C64>, Array2<C64>, Array2<C64>) {
    let m = state.multiplicity();
    let (a, b) = (&state.a, &state.b);
    let mut rho = Array2::zeros((m, m));
    let mut sz = Array2::zeros((m, m));
    let mut sx = Array2::zeros((m, m));
    Zip::indexed(&mut rho).and(&mut sz).and(&mut sx).for_each(|(i, j), r, z, x| {
        let (ai, bi) = (a[i].conj(), b[i].conj());
        *r = ai * a[j] + bi * b[j];
        *z = ai * a[j] - bi * b[j];
        *x = ai * b[j] + bi * a[j];
    });
    (rho, sz, sx)
}

/// Real part of `Σ_ij O_ij M_ij` with compensated summation.
fn hermitian_form(o: &Array2<C64>, w: &Array2<C64>) -> f64 {
    let mut acc = NeumaierSum::new();
    Zip::from(o).and(w).for_each(|a, b| acc.add((a * b).re));
    acc.value()
}
