//! Dense complex linear algebra: matrices, tensor products, Hermitian
//! spectra, trace norms, partial transposes and entropies.

mod eigen;
mod entropy;
mod lemmas;
mod matrix;
mod ops;

pub use eigen::{hermitian_eig, hermitian_eig_with, EigOptions, Spectrum};
pub use entropy::{
    binary_entropy, shannon_entropy, von_neumann_entropy, von_neumann_entropy_with, xlog2x,
};
pub use lemmas::{
    block2_psd_equiv, block2_psd_equiv_with, orthogonality_norm_equiv,
    orthogonality_norm_equiv_with,
};
pub use matrix::{inner, tensor, tensor_vec, vec_norm, ComplexMatrix, C64, ONE, ZERO};
pub use ops::{
    is_psd, partial_trace, partial_transpose, permute_factors, polar_decomposition, psd_sqrt,
    trace_norm, trace_of_product, unitarity_residual, FactorShape, PsdVerdict,
};

/// Numerical tolerances shared by the predicates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative Hermiticity tolerance.
    pub herm: f64,
    /// Smallest eigenvalue still accepted as PSD is `-psd`.
    pub psd: f64,
    /// Equality tolerance for trace norms and overlaps.
    pub norm_eq: f64,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        herm: 1e-10,
        psd: 1e-9,
        norm_eq: 1e-8,
    };
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}
