use super::eigen::hermitian_eig;
use super::matrix::ComplexMatrix;
use super::Tolerances;
use crate::error::{Error, Result};

/// `t·log₂t` with `0·log 0 = 0`.
pub fn xlog2x(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        t * t.log2()
    }
}

/// `−t log₂ t − (1−t) log₂(1−t)`.
pub fn binary_entropy(t: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::DomainError(t));
    }
    Ok(-xlog2x(t) - xlog2x(1.0 - t))
}

/// Shannon entropy in bits of a probability vector.
pub fn shannon_entropy(weights: &[f64]) -> f64 {
    -weights.iter().map(|&w| xlog2x(w)).sum::<f64>()
}

/// Von Neumann entropy in bits.
///
/// The input must be a density matrix within the default PSD tolerance;
/// eigenvalues in `[−tol, 0)` are clamped to zero.
pub fn von_neumann_entropy(m: &ComplexMatrix) -> Result<f64> {
    von_neumann_entropy_with(m, &Tolerances::DEFAULT)
}

pub fn von_neumann_entropy_with(m: &ComplexMatrix, tol: &Tolerances) -> Result<f64> {
    let trace = m.trace();
    if (trace.re - 1.0).abs() > tol.psd || trace.im.abs() > tol.psd {
        return Err(Error::NotAState(format!("trace is {trace}")));
    }
    let s = hermitian_eig(m).map_err(|e| match e {
        Error::NotHermitian { residual } => {
            Error::NotAState(format!("not Hermitian (residual {residual:e})"))
        }
        other => other,
    })?;
    if s.min_eigenvalue() < -tol.psd {
        return Err(Error::NotAState(format!(
            "negative eigenvalue {:e}",
            s.min_eigenvalue()
        )));
    }
    Ok(-s.eigenvalues.iter().map(|&l| xlog2x(l.max(0.0))).sum::<f64>())
}
