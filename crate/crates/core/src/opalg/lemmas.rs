//! Structural predicates used to cross-check the block-matrix arguments:
//! positivity of `[[A, B], [B, A]]` and orthogonality of PSD operators.

use super::matrix::ComplexMatrix;
use super::ops::{is_psd, trace_norm, trace_of_product};
use super::Tolerances;
use crate::error::{Error, Result};

/// Returns `(psd([[A, B], [B, A]]), psd(A + B) && psd(A − B))`.
///
/// Both sides are computed by independent eigensolves; they always agree.
pub fn block2_psd_equiv(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<(bool, bool)> {
    block2_psd_equiv_with(a, b, Tolerances::DEFAULT.psd)
}

pub fn block2_psd_equiv_with(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    tol: f64,
) -> Result<(bool, bool)> {
    let n = a.require_square()?;
    if b.rows() != n || b.cols() != n {
        return Err(Error::DimensionMismatch(format!(
            "blocks are {n}x{n} and {}x{}",
            b.rows(),
            b.cols()
        )));
    }
    let mut big = ComplexMatrix::zeros(2 * n, 2 * n);
    big.set_submatrix(0, 0, a);
    big.set_submatrix(0, n, b);
    big.set_submatrix(n, 0, b);
    big.set_submatrix(n, n, a);
    let whole = is_psd(&big, tol)?.psd;
    let sum = is_psd(&(a + b), tol)?.psd;
    let diff = is_psd(&(a - b), tol)?.psd;
    Ok((whole, sum && diff))
}

/// Returns `(‖s0 − s1‖ = ‖s0 + s1‖, tr(s0·s1) = 0)` for PSD `s0`, `s1`.
pub fn orthogonality_norm_equiv(s0: &ComplexMatrix, s1: &ComplexMatrix) -> Result<(bool, bool)> {
    orthogonality_norm_equiv_with(s0, s1, &Tolerances::DEFAULT)
}

pub fn orthogonality_norm_equiv_with(
    s0: &ComplexMatrix,
    s1: &ComplexMatrix,
    tol: &Tolerances,
) -> Result<(bool, bool)> {
    if s0.rows() != s1.rows() || s0.cols() != s1.cols() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            s0.rows(),
            s0.cols(),
            s1.rows(),
            s1.cols()
        )));
    }
    for s in [s0, s1] {
        let v = is_psd(s, tol.psd)?;
        if !v.psd {
            return Err(Error::NotPsd {
                min_eigenvalue: v.min_eigenvalue,
            });
        }
    }
    let diff = trace_norm(&(s0 - s1))?;
    let sum = trace_norm(&(s0 + s1))?;
    let overlap = trace_of_product(s0, s1).norm();
    Ok(((diff - sum).abs() <= tol.norm_eq, overlap <= tol.norm_eq))
}
