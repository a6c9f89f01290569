//! Thomas algorithm for complex tridiagonal systems with constant diagonals.

use alloc::vec::Vec;

use num_complex::Complex64;

/// Elimination into a zero tail decays geometrically; under round-to-nearest
/// the smallest subnormal times a factor above one half is itself, so without
/// a cutoff the tail fills with subnormals and the solve slows tenfold.
pub const FLUSH_BELOW: f64 = 1e-150;

/// Zeroes components below [`FLUSH_BELOW`]. Symmetric in re/im and sign, so it
/// commutes with multiplication by `i`.
#[inline]
pub fn flush(u: Complex64) -> Complex64 {
    Complex64::new(
        if u.re.abs() < FLUSH_BELOW { 0.0 } else { u.re },
        if u.im.abs() < FLUSH_BELOW { 0.0 } else { u.im },
    )
}

/// Pre-factored `n x n` Toeplitz tridiagonal matrix with `diag` on the main
/// diagonal and `off` on both neighbours.
///
/// The elimination multipliers only depend on the coefficients, so they are
/// computed once and every solve is two sweeps of multiply-adds.
#[derive(Debug, Clone)]
pub struct ToeplitzTridiag {
    off: Complex64,
    /// `1 / (diag - off * upper[i-1])`
    inv_pivot: Vec<Complex64>,
    /// Normalised super-diagonal `off * inv_pivot[i]`.
    upper: Vec<Complex64>,
}

impl ToeplitzTridiag {
    /// Returns `None` when a pivot vanishes.
    pub fn new(n: usize, diag: Complex64, off: Complex64) -> Option<Self> {
        let mut inv_pivot = Vec::with_capacity(n);
        let mut upper = Vec::with_capacity(n);
        let mut prev = Complex64::new(0.0, 0.0);
        for _ in 0..n {
            let pivot = diag - off * prev;
            if pivot.norm_sqr() == 0.0 || !pivot.re.is_finite() || !pivot.im.is_finite() {
                return None;
            }
            let inv = pivot.inv();
            inv_pivot.push(inv);
            prev = off * inv;
            upper.push(prev);
        }
        Some(Self { off, inv_pivot, upper })
    }

    pub fn len(&self) -> usize {
        self.inv_pivot.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inv_pivot.is_empty()
    }

    /// Overwrites `rhs` with the solution.
    pub fn solve_in_place(&self, rhs: &mut [Complex64]) {
        let n = self.len();
        assert_eq!(rhs.len(), n, "right-hand side length mismatch");
        if n == 0 {
            return;
        }
        rhs[0] = rhs[0] * self.inv_pivot[0];
        for i in 1..n {
            rhs[i] = flush((rhs[i] - self.off * rhs[i - 1]) * self.inv_pivot[i]);
        }
        for i in (0..n - 1).rev() {
            rhs[i] = rhs[i] - self.upper[i] * rhs[i + 1];
        }
    }
}
