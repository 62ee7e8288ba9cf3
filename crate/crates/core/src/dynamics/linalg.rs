//! Dense complex LU with a reciprocal condition estimate.

use ndarray::{Array1, Array2};
use ndarray_linalg::{AllocatedArray, AllocatedArrayMut, Lapack, MatrixLayout, OperationNorm, Pivot, Transpose};

use crate::C64;

/// LU factorization of a square complex matrix.
pub(crate) struct Lu {
    factors: Array2<C64>,
    ipiv: Pivot,
    layout: MatrixLayout,
    anorm: f64,
}

impl Lu {
    /// Factorizes `m`; fails when a pivot is exactly zero or the input is
    /// not finite.
    pub(crate) fn new(mut m: Array2<C64>) -> Option<Lu> {
        if m.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return None;
        }
        if !m.is_standard_layout() {
            m = m.as_standard_layout().to_owned();
        }
        let anorm = m.opnorm_one().ok()?;
        let layout = m.square_layout().ok()?;
        let ipiv = C64::lu(layout, m.as_allocated_mut().ok()?).ok()?;
        Some(Lu { factors: m, ipiv, layout, anorm })
    }

    /// Solves `A x = b`.
    pub(crate) fn solve(&self, mut b: Array1<C64>) -> Option<Array1<C64>> {
        let a = self.factors.as_allocated().ok()?;
        C64::solve(self.layout, Transpose::No, a, &self.ipiv, b.as_slice_mut()?).ok()?;
        Some(b)
    }

    /// Reciprocal condition number in the 1-norm (LAPACK estimate).
    pub(crate) fn rcond(&self) -> f64 {
        self.factors
            .as_allocated()
            .ok()
            .and_then(|a| C64::rcond(self.layout, a, self.anorm).ok())
            .unwrap_or(0.0)
    }

    /// Explicit inverse, column by column.
    pub(crate) fn inverse(&self) -> Option<Array2<C64>> {
        let n = self.factors.nrows();
        let mut inv = Array2::<C64>::zeros((n, n));
        for j in 0..n {
            let mut e = Array1::<C64>::zeros(n);
            e[j] = C64::new(1.0, 0.0);
            let col = self.solve(e)?;
            inv.column_mut(j).assign(&col);
        }
        Some(inv)
    }
}
