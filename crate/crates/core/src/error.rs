use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (residual {residual:e})")]
    NotHermitian { residual: f64 },

    #[error("eigensolver did not converge within {sweeps} sweeps (off-diagonal mass {off_diagonal:e})")]
    NoConvergence { sweeps: usize, off_diagonal: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("not a density matrix: {0}")]
    NotAState(String),

    #[error("operator is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("traces sum to {trace}, expected 1")]
    TraceNotOne { trace: f64 },

    #[error("argument {0} outside [0, 1]")]
    DomainError(f64),

    #[error("control operator is not unitary (residual {residual:e})")]
    NotUnitary { residual: f64 },

    #[error("measurement outcome {outcome} has probability {probability:e}; the post-selected state is undefined")]
    DegenerateOutcome { outcome: &'static str, probability: f64 },

    #[error("dense dimension {dim} exceeds the memory budget of {budget}")]
    MemoryBudgetExceeded { dim: usize, budget: usize },

    #[error("state is not in X form (off-pattern block norm {residual:e})")]
    NotXForm { residual: f64 },

    #[error("parameter out of range: {0}")]
    ParamOutOfRange(String),

    #[error("operator trace norm is {norm}, expected 1")]
    NormNotOne { norm: f64 },

    #[error("cross-check failed: {0}")]
    CrossCheck(String),
}
