//! States on `ℂ² ⊗ ℂ² ⊗ ℂ^{d_A'} ⊗ ℂ^{d_B'}` stored as a 4x4 grid of shield blocks.
//!
//! Dense layout: `dense[(i·2 + j)·s + a, (k·2 + l)·s + b] = A_ijkl[a, b]` with
//! `s = d_A'·d_B'` and shield index `a = a_A'·d_B' + a_B'`. The partial
//! transpose "over BB'" acts on key factor 1 and shield factor 3 of
//! `[2, 2, d_A', d_B']`.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};
use crate::opalg::{
    hermitian_eig, is_psd, partial_transpose, permute_factors, tensor, ComplexMatrix,
    FactorShape, PsdVerdict, Tolerances, C64, ONE, ZERO,
};

/// Dimensions `(d_A', d_B')` of the shield.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ShieldDims {
    pub alice: usize,
    pub bob: usize,
}

impl ShieldDims {
    pub fn new(alice: usize, bob: usize) -> Result<Self> {
        if alice == 0 || bob == 0 {
            return Err(Error::ShapeMismatch(format!(
                "shield dimensions must be positive, got ({alice}, {bob})"
            )));
        }
        Ok(Self { alice, bob })
    }

    /// `d_A'·d_B'`.
    pub fn size(&self) -> usize {
        self.alice * self.bob
    }

    /// Shield dims of the joint shield of two states, regrouped Alice-first.
    pub fn combine(&self, other: &ShieldDims) -> ShieldDims {
        ShieldDims {
            alice: self.alice * other.alice,
            bob: self.bob * other.bob,
        }
    }

    pub fn dense_dim(&self) -> usize {
        4 * self.size()
    }
}

/// Tensor product of shield operators with Alice factors grouped first:
/// the result acts on `(A'_x ⊗ A'_y) ⊗ (B'_x ⊗ B'_y)`.
pub fn shield_tensor(
    x: &ComplexMatrix,
    x_dims: ShieldDims,
    y: &ComplexMatrix,
    y_dims: ShieldDims,
) -> ComplexMatrix {
    let plain = tensor(x, y);
    if x_dims.bob == 1 || y_dims.alice == 1 {
        // Grouping is already Alice-first.
        return plain;
    }
    let shape = FactorShape::new(vec![x_dims.alice, x_dims.bob, y_dims.alice, y_dims.bob])
        .expect("positive dims");
    permute_factors(&plain, &shape, &[0, 2, 1, 3])
        .expect("shape matches by construction")
        .0
}

/// Position of `|ij⟩` in the key basis.
#[inline]
pub const fn key_index(i: usize, j: usize) -> usize {
    2 * i + j
}

/// The four Bell vectors of `ℂ² ⊗ ℂ²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bell {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl Bell {
    pub const ALL: [Bell; 4] = [Bell::PhiPlus, Bell::PhiMinus, Bell::PsiPlus, Bell::PsiMinus];

    pub fn vector(self) -> [C64; 4] {
        let h = C64::new(FRAC_1_SQRT_2, 0.0);
        match self {
            Bell::PhiPlus => [h, ZERO, ZERO, h],
            Bell::PhiMinus => [h, ZERO, ZERO, -h],
            Bell::PsiPlus => [ZERO, h, h, ZERO],
            Bell::PsiMinus => [ZERO, h, -h, ZERO],
        }
    }

    pub fn projector(self) -> ComplexMatrix {
        ComplexMatrix::projector(&self.vector())
    }
}

/// Computational basis vector `|ij⟩` of `ℂ² ⊗ ℂ²`.
pub fn computational(i: usize, j: usize) -> [C64; 4] {
    let mut v = [ZERO; 4];
    v[key_index(i, j)] = ONE;
    v
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockState {
    dims: ShieldDims,
    /// Row-major 4x4 grid, `blocks[row_key * 4 + col_key]`.
    blocks: Vec<ComplexMatrix>,
}

/// Residuals reported by [`BlockState::validate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Validation {
    pub hermiticity_residual: f64,
    /// `Σ tr A_ijij − 1`.
    pub trace_deviation: f64,
    pub min_eigenvalue: f64,
    pub tolerances: Tolerances,
}

impl Validation {
    pub fn hermitian_ok(&self) -> bool {
        self.hermiticity_residual <= self.tolerances.herm
    }

    pub fn trace_ok(&self) -> bool {
        self.trace_deviation.abs() <= 1e-10
    }

    pub fn psd_ok(&self) -> bool {
        self.min_eigenvalue >= -self.tolerances.psd
    }

    pub fn is_valid(&self) -> bool {
        self.hermitian_ok() && self.trace_ok() && self.psd_ok()
    }

    /// Human-readable list of failed checks.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.hermitian_ok() {
            out.push(format!(
                "hermiticity residual {:e}",
                self.hermiticity_residual
            ));
        }
        if !self.trace_ok() {
            out.push(format!(
                "trace deviation {}",
                crate::format::sig(self.trace_deviation.abs(), 12)
            ));
        }
        if !self.psd_ok() {
            out.push(format!("negative eigenvalue {:e}", self.min_eigenvalue));
        }
        out
    }
}

impl BlockState {
    /// Assembles a state from its 16 blocks and validates it.
    pub fn from_blocks(dims: ShieldDims, blocks: Vec<ComplexMatrix>) -> Result<Self> {
        let s = Self::from_blocks_unchecked(dims, blocks)?;
        s.ensure_valid()?;
        Ok(s)
    }

    /// Shape checks only; the caller vouches for positivity and normalisation.
    pub fn from_blocks_unchecked(dims: ShieldDims, blocks: Vec<ComplexMatrix>) -> Result<Self> {
        if blocks.len() != 16 {
            return Err(Error::ShapeMismatch(format!(
                "expected 16 blocks, got {}",
                blocks.len()
            )));
        }
        let s = dims.size();
        if let Some((i, b)) = blocks
            .iter()
            .enumerate()
            .find(|(_, b)| b.rows() != s || b.cols() != s)
        {
            return Err(Error::ShapeMismatch(format!(
                "block {i} is {}x{}, shield size is {s}",
                b.rows(),
                b.cols()
            )));
        }
        Ok(Self { dims, blocks })
    }

    pub fn from_dense(m: &ComplexMatrix, dims: ShieldDims) -> Result<Self> {
        let s = Self::from_dense_unchecked(m, dims)?;
        s.ensure_valid()?;
        Ok(s)
    }

    pub fn from_dense_unchecked(m: &ComplexMatrix, dims: ShieldDims) -> Result<Self> {
        let s = dims.size();
        if !m.is_square() || m.rows() != 4 * s {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} matrix does not match 2x2x{}x{}",
                m.rows(),
                m.cols(),
                dims.alice,
                dims.bob
            )));
        }
        let blocks = (0..16)
            .map(|idx| m.submatrix((idx / 4) * s, (idx % 4) * s, s, s))
            .collect();
        Ok(Self { dims, blocks })
    }

    pub fn to_dense(&self) -> ComplexMatrix {
        let s = self.dims.size();
        let mut m = ComplexMatrix::zeros(4 * s, 4 * s);
        for (idx, b) in self.blocks.iter().enumerate() {
            m.set_submatrix((idx / 4) * s, (idx % 4) * s, b);
        }
        m
    }

    fn ensure_valid(&self) -> Result<()> {
        let v = self.validate();
        if v.is_valid() {
            Ok(())
        } else {
            Err(Error::NotAState(v.problems().join("; ")))
        }
    }

    pub fn dims(&self) -> ShieldDims {
        self.dims
    }

    pub fn shield_size(&self) -> usize {
        self.dims.size()
    }

    pub fn dense_dim(&self) -> usize {
        self.dims.dense_dim()
    }

    /// Block at key rows `row` and columns `col` (both in `0..4`).
    pub fn block(&self, row: usize, col: usize) -> &ComplexMatrix {
        &self.blocks[row * 4 + col]
    }

    /// `A_ijkl`.
    pub fn block_bits(&self, i: usize, j: usize, k: usize, l: usize) -> &ComplexMatrix {
        self.block(key_index(i, j), key_index(k, l))
    }

    pub fn blocks(&self) -> &[ComplexMatrix] {
        &self.blocks
    }

    /// `[2, 2, d_A', d_B']`.
    pub fn factor_shape(&self) -> FactorShape {
        FactorShape::new(vec![2, 2, self.dims.alice, self.dims.bob]).expect("positive dims")
    }

    /// Applies `f(row, col, block)` to every block.
    pub fn map_blocks(&self, f: impl Fn(usize, usize, &ComplexMatrix) -> ComplexMatrix) -> Self {
        let blocks = self
            .blocks
            .iter()
            .enumerate()
            .map(|(idx, b)| f(idx / 4, idx % 4, b))
            .collect();
        Self {
            dims: self.dims,
            blocks,
        }
    }

    /// `Σ tr A_ijij` (real part).
    pub fn trace(&self) -> f64 {
        (0..4).map(|k| self.block(k, k).trace().re).sum()
    }

    /// Reports Hermiticity residual, trace deviation and smallest eigenvalue.
    pub fn validate(&self) -> Validation {
        self.validate_with(&Tolerances::DEFAULT)
    }

    pub fn validate_with(&self, tol: &Tolerances) -> Validation {
        let dense = self.to_dense();
        let hermiticity_residual = dense.hermiticity_residual() / dense.max_abs().max(1.0);
        let trace = dense.trace();
        let trace_deviation = trace.re - 1.0;
        let min_eigenvalue = hermitian_eig(&dense.hermitian_part())
            .map(|s| s.min_eigenvalue())
            .unwrap_or(f64::NAN);
        Validation {
            hermiticity_residual,
            trace_deviation,
            min_eigenvalue,
            tolerances: *tol,
        }
    }

    /// Dense partial transpose over the B key qubit and the B' shield factor.
    pub fn partial_transpose_bb(&self) -> ComplexMatrix {
        partial_transpose(&self.to_dense(), &self.factor_shape(), &[1, 3])
            .expect("shape matches by construction")
    }

    /// PPT test: `is_psd` of the partial transpose over BB'.
    pub fn ppt_check(&self) -> Result<PsdVerdict> {
        self.ppt_check_with(Tolerances::DEFAULT.psd)
    }

    pub fn ppt_check_with(&self, tol: f64) -> Result<PsdVerdict> {
        is_psd(&self.partial_transpose_bb(), tol)
    }

    /// Trace norm of every diagonal block `A_jkjk` is its trace (the blocks are PSD).
    pub fn diagonal_weight(&self, key: usize) -> f64 {
        self.block(key, key).trace().re
    }
}

/// `ρ = Σᵢ |Φᵢ⟩⟨Φᵢ| ⊗ σᵢ` over the Bell basis (φ⁺, φ⁻, ψ⁺, ψ⁻).
#[derive(Debug, Clone, PartialEq)]
pub struct BellDiagonalShieldState {
    dims: ShieldDims,
    sigmas: [ComplexMatrix; 4],
}

impl BellDiagonalShieldState {
    pub fn new(dims: ShieldDims, sigmas: [ComplexMatrix; 4]) -> Result<Self> {
        Self::new_with(dims, sigmas, &Tolerances::DEFAULT)
    }

    pub fn new_with(dims: ShieldDims, sigmas: [ComplexMatrix; 4], tol: &Tolerances) -> Result<Self> {
        let s = dims.size();
        for (k, sigma) in sigmas.iter().enumerate() {
            if sigma.rows() != s || sigma.cols() != s {
                return Err(Error::ShapeMismatch(format!(
                    "sigma_{k} is {}x{}, shield size is {s}",
                    sigma.rows(),
                    sigma.cols()
                )));
            }
            let v = is_psd(sigma, tol.psd)?;
            if !v.psd {
                return Err(Error::NotPsd {
                    min_eigenvalue: v.min_eigenvalue,
                });
            }
        }
        let trace: f64 = sigmas.iter().map(|s| s.trace().re).sum();
        if (trace - 1.0).abs() > 1e-10 {
            return Err(Error::TraceNotOne { trace });
        }
        Ok(Self { dims, sigmas })
    }

    /// Same-dimension identity shields with equal Bell weights: the maximally mixed state.
    pub fn maximally_mixed(dims: ShieldDims) -> Self {
        let sigma = ComplexMatrix::identity(dims.size()).scale(1.0 / (4.0 * dims.size() as f64));
        Self {
            dims,
            sigmas: [sigma.clone(), sigma.clone(), sigma.clone(), sigma],
        }
    }

    pub fn dims(&self) -> ShieldDims {
        self.dims
    }

    pub fn sigma(&self, k: usize) -> &ComplexMatrix {
        &self.sigmas[k]
    }

    pub fn sigmas(&self) -> &[ComplexMatrix; 4] {
        &self.sigmas
    }

    /// Traces of σ₀..σ₃.
    pub fn bell_weights(&self) -> [f64; 4] {
        std::array::from_fn(|k| self.sigmas[k].trace().re)
    }

    /// Grid form: corners `(σ₀ ± σ₁)/2`, centres `(σ₂ ± σ₃)/2`, zeros elsewhere.
    pub fn render_blocks(&self) -> BlockState {
        let s = self.dims.size();
        let [s0, s1, s2, s3] = &self.sigmas;
        let corner_diag = (s0 + s1).scale(0.5);
        let corner_off = (s0 - s1).scale(0.5);
        let centre_diag = (s2 + s3).scale(0.5);
        let centre_off = (s2 - s3).scale(0.5);
        let mut blocks = vec![ComplexMatrix::zeros(s, s); 16];
        let (k00, k01, k10, k11) = (key_index(0, 0), key_index(0, 1), key_index(1, 0), key_index(1, 1));
        blocks[k00 * 4 + k00] = corner_diag.clone();
        blocks[k11 * 4 + k11] = corner_diag;
        blocks[k00 * 4 + k11] = corner_off.clone();
        blocks[k11 * 4 + k00] = corner_off;
        blocks[k01 * 4 + k01] = centre_diag.clone();
        blocks[k10 * 4 + k10] = centre_diag;
        blocks[k01 * 4 + k10] = centre_off.clone();
        blocks[k10 * 4 + k01] = centre_off;
        BlockState {
            dims: self.dims,
            blocks,
        }
    }

    /// Recovers σ₀..σ₃ from a grid in Bell-diagonal form, if it is one.
    pub fn from_block_state(state: &BlockState, tol: &Tolerances) -> Option<Self> {
        let b = |i, j, k, l| state.block_bits(i, j, k, l);
        let eps = tol.norm_eq;
        let in_pattern = |row: usize, col: usize| {
            (row == col) || (row + col == 3)
        };
        for row in 0..4 {
            for col in 0..4 {
                if !in_pattern(row, col) && state.block(row, col).max_abs() > eps {
                    return None;
                }
            }
        }
        let pairs = [
            (b(0, 0, 0, 0), b(1, 1, 1, 1)),
            (b(0, 0, 1, 1), b(1, 1, 0, 0)),
            (b(0, 1, 0, 1), b(1, 0, 1, 0)),
            (b(0, 1, 1, 0), b(1, 0, 0, 1)),
        ];
        if pairs.iter().any(|(x, y)| x.max_abs_diff(y) > eps) {
            return None;
        }
        let d = b(0, 0, 0, 0);
        let c = b(0, 0, 1, 1);
        let m = b(0, 1, 0, 1);
        let o = b(0, 1, 1, 0);
        let sigmas = [d + c, d - c, m + o, m - o];
        Self::new_with(state.dims(), sigmas, tol).ok()
    }
}
