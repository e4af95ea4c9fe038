//! Direct solves of `(a I - r D₂) x = b` along one grid line, where `D₂` is the
//! unscaled Neumann second difference (`-1` on the diagonal of the end rows,
//! `-2` elsewhere). The matrix is a strictly diagonally dominant M-matrix for
//! `a > 0, r ≥ 0`, so elimination without pivoting is stable and the inverse is
//! entrywise nonnegative. Its column sums equal `a`, so a solve with `a = 1`
//! preserves the line sum exactly in exact arithmetic.

use crate::error::{KsError, Result};
use crate::scalar::Real;

#[derive(Clone, Debug)]
pub(crate) struct NeumannLine<T> {
    a: T,
    r: T,
    upper: Vec<T>,
    inv_pivot: Vec<T>,
}

impl<T: Real> NeumannLine<T> {
    pub fn new(n: usize, a: T, r: T) -> Result<Self> {
        if n < 2 {
            return Err(KsError::LinearSolve(format!("line of length {n}")));
        }
        let mut upper = vec![T::zero(); n];
        let mut inv_pivot = vec![T::zero(); n];
        let off = -r;
        let mut prev_upper = T::zero();
        for i in 0..n {
            let diag = if i == 0 || i == n - 1 {
                a + r
            } else {
                a + r + r
            };
            let lower = if i == 0 { T::zero() } else { off };
            let pivot = diag - lower * prev_upper;
            if !(pivot > T::zero()) || !pivot.is_finite() {
                return Err(KsError::LinearSolve(format!("pivot {} at row {i}", pivot.as_f64())));
            }
            inv_pivot[i] = pivot.recip();
            let up = if i + 1 < n { off } else { T::zero() };
            upper[i] = up * inv_pivot[i];
            prev_upper = upper[i];
        }
        Ok(Self {
            a,
            r,
            upper,
            inv_pivot,
        })
    }

    pub fn len(&self) -> usize {
        self.upper.len()
    }

    /// Overwrites `rhs` with the solution.
    pub fn solve_in_place(&self, rhs: &mut [T]) {
        let n = self.len();
        debug_assert_eq!(rhs.len(), n);
        let off = -self.r;
        rhs[0] *= self.inv_pivot[0];
        for i in 1..n {
            rhs[i] = (rhs[i] - off * rhs[i - 1]) * self.inv_pivot[i];
        }
        for i in (0..n - 1).rev() {
            rhs[i] -= self.upper[i] * rhs[i + 1];
        }
    }

    /// Normwise backward error `‖Ax - b‖∞ / (‖A‖∞ ‖x‖∞ + ‖b‖∞)`.
    pub fn backward_error(&self, x: &[T], b: &[T]) -> T {
        let n = self.len();
        let r = self.r;
        let mut res = T::zero();
        let mut xmax = T::zero();
        let mut bmax = T::zero();
        for i in 0..n {
            let left = if i > 0 { x[i - 1] - x[i] } else { T::zero() };
            let right = if i + 1 < n { x[i + 1] - x[i] } else { T::zero() };
            let ax = self.a * x[i] - r * (left + right);
            res = res.max((ax - b[i]).abs());
            xmax = xmax.max(x[i].abs());
            bmax = bmax.max(b[i].abs());
        }
        let norm_a = self.a + T::lit(4.0) * r;
        let scale = norm_a * xmax + bmax;
        if scale == T::zero() {
            T::zero()
        } else {
            res / scale
        }
    }
}
