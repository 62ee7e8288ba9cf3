//! Active-set nonnegative least squares (Lawson–Hanson).

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use ndarray_linalg::LeastSquaresSvd;

use super::BathError;

/// Solution of `min_{x ≥ 0} ‖A x − b‖₂`.
#[derive(Clone, Debug)]
pub struct NnlsSolution {
    pub x: Array1<f64>,
    pub residual: f64,
    pub iterations: usize,
}

/// Lawson–Hanson active-set NNLS with an iteration cap of `10·n`.
///
/// The returned `x` is elementwise `≥ 0` exactly.
pub fn nnls(a: ArrayView2<f64>, b: ArrayView1<f64>) -> Result<NnlsSolution, BathError> {
    let (m, n) = a.dim();
    if b.len() != m {
        return Err(BathError::InvalidParameter(format!("NNLS shape mismatch: A is {m}×{n}, b has {}", b.len())));
    }
    let cap = 10 * n.max(1);
    let amax = a.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    let bmax = b.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    let tol = 10.0 * f64::EPSILON * (m.max(n) as f64) * amax * bmax.max(amax);

    let mut x = Array1::<f64>::zeros(n);
    let mut passive = vec![false; n];
    let mut iterations = 0usize;
    let residual_norm = |x: &Array1<f64>| (&b - &a.dot(x)).mapv(|v| v * v).sum().sqrt();
    let mut best = residual_norm(&x);

    loop {
        let r = &b - &a.dot(&x);
        let w = a.t().dot(&r);
        let candidate = (0..n)
            .filter(|&j| !passive[j])
            .max_by(|&i, &j| w[i].total_cmp(&w[j]))
            .filter(|&j| w[j] > tol);
        let Some(j) = candidate else { break };
        passive[j] = true;

        loop {
            iterations += 1;
            if iterations > cap {
                return Err(BathError::NnlsNotConverged { iterations: cap, best_residual: best });
            }
            let s = solve_passive(a, b, &passive)?;
            let all_positive = (0..n).filter(|&i| passive[i]).all(|i| s[i] > 0.0);
            if all_positive {
                x = s;
                break;
            }
            // Step towards s until the first passive variable hits zero.
            let mut step = f64::INFINITY;
            for i in (0..n).filter(|&i| passive[i] && s[i] <= 0.0) {
                let denom = x[i] - s[i];
                if denom > 0.0 {
                    step = step.min(x[i] / denom);
                }
            }
            if !step.is_finite() {
                step = 0.0;
            }
            for i in 0..n {
                if passive[i] {
                    x[i] += step * (s[i] - x[i]);
                }
            }
            for i in 0..n {
                if passive[i] && x[i] <= tol.max(0.0) {
                    passive[i] = false;
                    x[i] = 0.0;
                }
            }
        }
        best = best.min(residual_norm(&x));
    }
    x.mapv_inplace(|v| v.max(0.0));
    let residual = residual_norm(&x);
    Ok(NnlsSolution { x, residual, iterations })
}

fn solve_passive(a: ArrayView2<f64>, b: ArrayView1<f64>, passive: &[bool]) -> Result<Array1<f64>, BathError> {
    let cols: Vec<usize> = (0..passive.len()).filter(|&i| passive[i]).collect();
    let sub: Array2<f64> = a.select(Axis(1), &cols);
    let sol = sub
        .least_squares(&b.to_owned())
        .map_err(|e| BathError::Linalg(e.to_string()))?
        .solution;
    let mut s = Array1::<f64>::zeros(passive.len());
    for (k, &c) in cols.iter().enumerate() {
        s[c] = sol[k];
    }
    Ok(s)
}
