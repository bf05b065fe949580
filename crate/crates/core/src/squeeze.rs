//! Privacy squeezing: twisting the corner blocks positive, depolarizing the
//! key qubits into X-form, the two-qubit squeezed state, its ccq weights and
//! the Devetak–Winter rate `1 − S(E)`.

use crate::blockstate::{BellDiagonalShieldState, BlockState};
use crate::distill::KeyNorms;
use crate::error::{Error, Result};
use crate::opalg::{
    partial_trace, polar_decomposition, shannon_entropy, trace_norm, von_neumann_entropy,
    ComplexMatrix, FactorShape, ONE,
};
use crate::privstate::TwistingOp;

/// Off-pattern blocks larger than this (entrywise) reject the X-form.
pub const X_FORM_TOL: f64 = 1e-10;

/// Margin for the strict `S(E) < 1` verdict.
pub const THEOREM2_MARGIN: f64 = 1e-9;

/// Agreement required between the norm path and the full pipeline.
pub const PIPELINE_TOL: f64 = 1e-9;

/// Weights this far below zero are rounding and get clamped.
const NEGATIVE_WEIGHT_SLACK: f64 = 1e-9;

fn flip(key: usize) -> usize {
    3 - key
}

/// Twists so that `B_0011` and `B_0110` are PSD with trace `‖A_0011‖`, `‖A_0110‖`.
///
/// With `A_0011 = P·W` the controls are `U_00 = I`, `U_11 = W`, and likewise
/// `U_01 = I`, `U_10 = W'` from `A_0110`.
pub fn positivize_corners(r: &BlockState) -> Result<BlockState> {
    let (_, w_corner) = polar_decomposition(r.block_bits(0, 0, 1, 1))?;
    let (_, w_centre) = polar_decomposition(r.block_bits(0, 1, 1, 0))?;
    let s = r.shield_size();
    let twist = TwistingOp::qubit([
        ComplexMatrix::identity(s),
        ComplexMatrix::identity(s),
        w_centre,
        w_corner,
    ])?;
    twist.apply_blocks(r)
}

/// Average over `{I⊗I, X⊗X, Y⊗Y, Z⊗Z}` on the key qubits.
///
/// Blocks with `i⊕j = k⊕l` become `(A_ijkl + A_īj̄k̄l̄)/2`; all others vanish.
pub fn depolarize_key(r: &BlockState) -> BlockState {
    r.map_blocks(|row, col, a| {
        let parity = |key: usize| (key >> 1) ^ (key & 1);
        if parity(row) == parity(col) {
            (a + r.block(flip(row), flip(col))).scale(0.5)
        } else {
            ComplexMatrix::zeros(a.rows(), a.cols())
        }
    })
}

/// Two-qubit state whose entries are trace norms of the X-form blocks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivacySqueezedState {
    /// `m[r][c] = ‖A_rc‖` on the X pattern (rows/cols indexed `00,01,10,11`).
    pub m: [[f64; 4]; 4],
}

fn x_pattern(row: usize, col: usize) -> bool {
    row == col || row + col == 3
}

impl PrivacySqueezedState {
    pub fn from_block_state(r: &BlockState) -> Result<Self> {
        let mut residual: f64 = 0.0;
        for row in 0..4 {
            for col in 0..4 {
                if !x_pattern(row, col) {
                    residual = residual.max(r.block(row, col).max_abs());
                }
            }
        }
        if residual > X_FORM_TOL {
            return Err(Error::NotXForm { residual });
        }
        let mut m = [[0.0; 4]; 4];
        for (row, line) in m.iter_mut().enumerate() {
            for (col, entry) in line.iter_mut().enumerate() {
                if x_pattern(row, col) {
                    *entry = trace_norm(r.block(row, col))?;
                }
            }
        }
        Ok(Self { m })
    }

    pub fn from_bell_diagonal(s: &BellDiagonalShieldState) -> Result<Self> {
        let [s0, s1, s2, s3] = s.sigmas();
        let corner_diag = trace_norm(&(s0 + s1))? / 2.0;
        let corner_off = trace_norm(&(s0 - s1))? / 2.0;
        let centre_diag = trace_norm(&(s2 + s3))? / 2.0;
        let centre_off = trace_norm(&(s2 - s3))? / 2.0;
        Ok(Self {
            m: [
                [corner_diag, 0.0, 0.0, corner_off],
                [0.0, centre_diag, centre_off, 0.0],
                [0.0, centre_off, centre_diag, 0.0],
                [corner_off, 0.0, 0.0, corner_diag],
            ],
        })
    }

    pub fn trace(&self) -> f64 {
        (0..4).map(|k| self.m[k][k]).sum()
    }

    pub fn to_matrix(&self) -> ComplexMatrix {
        let rows: Vec<&[f64]> = self.m.iter().map(|r| r.as_slice()).collect();
        ComplexMatrix::from_real_rows(&rows).expect("4x4")
    }

    /// Determinant of the `{00, 11}` corner submatrix.
    pub fn corner_determinant(&self) -> f64 {
        self.m[0][0] * self.m[3][3] - self.m[0][3] * self.m[3][0]
    }
}

/// Weights of Eve's marginal and the resulting one-way key rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CcqSummary {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub w: f64,
    pub s_e: f64,
    pub k_dw: f64,
}

impl CcqSummary {
    pub fn from_weights(weights: [f64; 4]) -> Self {
        let [x, y, z, w] = weights.map(|v| {
            if v < 0.0 && v > -NEGATIVE_WEIGHT_SLACK {
                0.0
            } else {
                v
            }
        });
        let s_e = shannon_entropy(&[x, y, z, w]);
        Self {
            x,
            y,
            z,
            w,
            s_e,
            k_dw: 1.0 - s_e,
        }
    }

    pub fn weights(&self) -> [f64; 4] {
        [self.x, self.y, self.z, self.w]
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        [
            self.x - other.x,
            self.y - other.y,
            self.z - other.z,
            self.w - other.w,
            self.s_e - other.s_e,
            self.k_dw - other.k_dw,
        ]
        .iter()
        .fold(0.0, |m, d| m.max(d.abs()))
    }
}

/// Weights from a squeezed state.
pub fn ccq_weights(s: &PrivacySqueezedState) -> CcqSummary {
    let m = &s.m;
    let diag = (m[0][0] + m[3][3]) / 2.0;
    let centre = (m[1][1] + m[2][2]) / 2.0;
    CcqSummary::from_weights([diag + m[0][3], diag - m[0][3], centre + m[1][2], centre - m[1][2]])
}

/// Weights straight from the six block norms of an arbitrary grid.
pub fn ccq_weights_from_norms(n: &KeyNorms) -> CcqSummary {
    let diag = (n.a0000 + n.a1111) / 2.0;
    let centre = (n.a0101 + n.a1010) / 2.0;
    CcqSummary::from_weights([diag + n.a0011, diag - n.a0011, centre + n.a0110, centre - n.a0110])
}

/// Alice bit, Bob bit, and Eve's conditional pure states in a 4-dim space.
#[derive(Debug, Clone, PartialEq)]
pub struct CcqState {
    /// `p[2i + j]` for outcome `(i, j)`.
    pub probabilities: [f64; 4],
    /// Real unit vectors in the basis `e₀..e₃`, same indexing.
    pub eve_vectors: [[f64; 4]; 4],
}

impl CcqState {
    pub fn from_summary(c: &CcqSummary) -> Result<Self> {
        Self::from_weights(c.weights())
    }

    pub fn from_weights(weights: [f64; 4]) -> Result<Self> {
        let [x, y, z, w] = weights;
        if weights.iter().any(|&v| v < 0.0 || !v.is_finite()) {
            return Err(Error::NotAState(format!("negative weight in {weights:?}")));
        }
        let total = x + y + z + w;
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::TraceNotOne { trace: total });
        }
        let unit = |a: [f64; 4]| {
            let n = a.iter().map(|v| v * v).sum::<f64>().sqrt();
            if n > 0.0 {
                a.map(|v| v / n)
            } else {
                a
            }
        };
        let (sx, sy, sz, sw) = (x.sqrt(), y.sqrt(), z.sqrt(), w.sqrt());
        Ok(Self {
            probabilities: [(x + y) / 2.0, (z + w) / 2.0, (z + w) / 2.0, (x + y) / 2.0],
            eve_vectors: [
                unit([sx, sy, 0.0, 0.0]),
                unit([0.0, 0.0, sz, sw]),
                unit([0.0, 0.0, sz, -sw]),
                unit([sx, -sy, 0.0, 0.0]),
            ],
        })
    }

    /// `Σ_ij p_ij |ij⟩⟨ij| ⊗ |v_ij⟩⟨v_ij|` on `A ⊗ B ⊗ E` (dimension 16).
    pub fn to_dense(&self) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(16, 16);
        for (ab, (&p, v)) in self.probabilities.iter().zip(&self.eve_vectors).enumerate() {
            for e in 0..4 {
                for f in 0..4 {
                    m[(ab * 4 + e, ab * 4 + f)] = ONE * (p * v[e] * v[f]);
                }
            }
        }
        m
    }
}

/// `I(A:B) − I(A:E)` from von Neumann entropies of the explicit marginals.
pub fn kdw_direct_oracle(c: &CcqState) -> Result<f64> {
    let rho = c.to_dense();
    let shape = FactorShape::new(vec![2, 2, 4])?;
    let entropy_of = |traced: &[usize]| -> Result<f64> {
        let (m, _) = partial_trace(&rho, &shape, traced)?;
        von_neumann_entropy(&m)
    };
    let s_a = entropy_of(&[1, 2])?;
    let s_b = entropy_of(&[0, 2])?;
    let s_e = entropy_of(&[0, 1])?;
    let s_ab = entropy_of(&[2])?;
    let s_ae = entropy_of(&[1])?;
    let i_ab = s_a + s_b - s_ab;
    let i_ae = s_a + s_e - s_ae;
    Ok(i_ab - i_ae)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Theorem2Report {
    pub holds: bool,
    /// Weights from the block norms of the input.
    pub summary: CcqSummary,
    /// Same weights through positivize → depolarize → squeeze.
    pub pipeline: CcqSummary,
}

impl Theorem2Report {
    /// Lower bound `1 + Σ v log₂ v` on the distillable key.
    pub fn k_dw_bound(&self) -> f64 {
        self.summary.k_dw
    }
}

/// Squeezes `r` through the full twisting/depolarizing pipeline.
pub fn pipeline_summary(r: &BlockState) -> Result<CcqSummary> {
    let twisted = positivize_corners(r)?;
    let depolarized = depolarize_key(&twisted);
    Ok(ccq_weights(&PrivacySqueezedState::from_block_state(&depolarized)?))
}

pub fn check_theorem2(r: &BlockState) -> Result<Theorem2Report> {
    let summary = ccq_weights_from_norms(&KeyNorms::of(r)?);
    let pipeline = pipeline_summary(r)?;
    let gap = summary.max_abs_diff(&pipeline);
    if gap > PIPELINE_TOL {
        return Err(Error::CrossCheck(format!(
            "block-norm weights and squeezing pipeline differ by {gap:e}"
        )));
    }
    Ok(Theorem2Report {
        holds: summary.s_e < 1.0 - THEOREM2_MARGIN,
        summary,
        pipeline,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blockstate::{Bell, ShieldDims};
    use crate::opalg::{is_psd, tensor, C64};
    use crate::privstate::make_pdit;
    use crate::random::{random_block_state, random_density_matrix, random_unitary};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pauli(k: usize) -> ComplexMatrix {
        let (o, z, i) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 1.0));
        let rows = match k {
            0 => vec![vec![o, z], vec![z, o]],
            1 => vec![vec![z, o], vec![o, z]],
            2 => vec![vec![z, -i], vec![i, z]],
            _ => vec![vec![o, z], vec![z, -o]],
        };
        ComplexMatrix::from_rows(&rows).unwrap()
    }

    /// Dense four-term average of `(P⊗P⊗I) ρ (P⊗P⊗I)†`.
    fn dense_twirl(r: &BlockState) -> ComplexMatrix {
        let rho = r.to_dense();
        let id = ComplexMatrix::identity(r.shield_size());
        let mut acc = ComplexMatrix::zeros(rho.rows(), rho.cols());
        for k in 0..4 {
            let u = tensor(&tensor(&pauli(k), &pauli(k)), &id);
            acc = &acc + &rho.conjugate_by(&u).scale(0.25);
        }
        acc
    }

    #[test]
    fn depolarize_matches_dense_twirl() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for dims in [(1, 2), (2, 2), (3, 1)] {
            let r = random_block_state(ShieldDims::new(dims.0, dims.1).unwrap(), &mut rng);
            let out = depolarize_key(&r);
            assert!(out.to_dense().max_abs_diff(&dense_twirl(&r)) <= 1e-12);
            assert_abs_diff_eq!(out.trace(), 1.0, epsilon = 1e-12);
            assert!(out.validate().is_valid());
            assert!(depolarize_key(&out).to_dense().max_abs_diff(&out.to_dense()) < 1e-15);
        }
    }

    #[test]
    fn depolarize_fixes_bell_diagonal_and_moves_01() {
        let dims = ShieldDims::new(1, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let sig = |w: f64, rng: &mut ChaCha8Rng| random_density_matrix(2, rng).scale(w);
        let b = BellDiagonalShieldState::new(
            dims,
            [sig(0.4, &mut rng), sig(0.3, &mut rng), sig(0.2, &mut rng), sig(0.1, &mut rng)],
        )
        .unwrap()
        .render_blocks();
        assert!(depolarize_key(&b).to_dense().max_abs_diff(&b.to_dense()) < 1e-15);

        let rho_s = random_density_matrix(2, &mut rng);
        let ket01 = ComplexMatrix::projector(&crate::blockstate::computational(0, 1));
        let r = BlockState::from_dense(&tensor(&ket01, &rho_s), dims).unwrap();
        let out = depolarize_key(&r);
        let half = rho_s.scale(0.5);
        assert!(out.block_bits(0, 1, 0, 1).max_abs_diff(&half) < 1e-15);
        assert!(out.block_bits(1, 0, 1, 0).max_abs_diff(&half) < 1e-15);
    }

    #[test]
    fn positivize_makes_corners_psd_with_norm_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let r = random_block_state(ShieldDims::new(2, 2).unwrap(), &mut rng);
        let out = positivize_corners(&r).unwrap();
        for (i, j, k, l) in [(0, 0, 1, 1), (0, 1, 1, 0)] {
            let b = out.block_bits(i, j, k, l);
            assert!(b.is_hermitian(1e-10));
            assert!(is_psd(b, 1e-10).unwrap().psd);
            let want = trace_norm(r.block_bits(i, j, k, l)).unwrap();
            assert_abs_diff_eq!(b.trace().re, want, epsilon = 1e-10);
        }
        let before = ccq_weights_from_norms(&KeyNorms::of(&r).unwrap());
        let after = ccq_weights_from_norms(&KeyNorms::of(&out).unwrap());
        assert!(before.max_abs_diff(&after) < 1e-10);
    }

    #[test]
    fn positivize_recovers_polar_factor() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let shield = random_density_matrix(2, &mut rng);
        let u = random_unitary(2, &mut rng);
        let twist = TwistingOp::qubit([
            ComplexMatrix::identity(2),
            ComplexMatrix::identity(2),
            ComplexMatrix::identity(2),
            u,
        ])
        .unwrap();
        let g = make_pdit(2, &shield, &twist).unwrap();
        let r = BlockState::from_dense(&g, ShieldDims::new(1, 2).unwrap()).unwrap();
        let out = positivize_corners(&r).unwrap();
        assert!(out.block_bits(0, 0, 1, 1).max_abs_diff(&shield.scale(0.5)) < 1e-10);
    }

    #[test]
    fn already_positive_corners_are_untouched() {
        let dims = ShieldDims::new(2, 1).unwrap();
        let r = BellDiagonalShieldState::maximally_mixed(dims).render_blocks();
        let out = positivize_corners(&r).unwrap();
        assert!(out.to_dense().max_abs_diff(&r.to_dense()) < 1e-15);
    }

    #[test]
    fn squeeze_of_pbit_is_phi_plus() {
        let mut rng = ChaCha8Rng::seed_from_u64(45);
        let shield = random_density_matrix(3, &mut rng);
        let g = make_pdit(2, &shield, &TwistingOp::identity(2, 3)).unwrap();
        let r = BlockState::from_dense(&g, ShieldDims::new(1, 3).unwrap()).unwrap();
        let s = PrivacySqueezedState::from_block_state(&r).unwrap();
        assert!(s.to_matrix().max_abs_diff(&Bell::PhiPlus.projector()) < 1e-12);
        let c = ccq_weights(&s);
        assert_abs_diff_eq!(c.x, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.k_dw, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn squeeze_of_maximally_mixed() {
        let b = BellDiagonalShieldState::maximally_mixed(ShieldDims::new(2, 2).unwrap());
        let s = PrivacySqueezedState::from_bell_diagonal(&b).unwrap();
        assert!(s.to_matrix().max_abs_diff(&ComplexMatrix::identity(4).scale(0.25)) < 1e-12);
        let rep = check_theorem2(&b.render_blocks()).unwrap();
        assert!(!rep.holds);
        assert_abs_diff_eq!(rep.summary.s_e, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn squeeze_rejects_off_pattern() {
        let mut rng = ChaCha8Rng::seed_from_u64(46);
        let r = random_block_state(ShieldDims::new(1, 2).unwrap(), &mut rng);
        assert!(matches!(
            PrivacySqueezedState::from_block_state(&r),
            Err(Error::NotXForm { .. })
        ));
    }

    #[test]
    fn squeezed_state_is_a_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        for _ in 0..10 {
            let r = random_block_state(ShieldDims::new(2, 1).unwrap(), &mut rng);
            let d = depolarize_key(&positivize_corners(&r).unwrap());
            let s = PrivacySqueezedState::from_block_state(&d).unwrap();
            assert_abs_diff_eq!(s.trace(), 1.0, epsilon = 1e-10);
            assert!(is_psd(&s.to_matrix(), 1e-10).unwrap().psd);
            assert!(s.corner_determinant() >= -1e-10);
        }
    }

    #[test]
    fn pipeline_agrees_with_norm_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(48);
        for dims in [(1, 2), (2, 2), (2, 1)] {
            let r = random_block_state(ShieldDims::new(dims.0, dims.1).unwrap(), &mut rng);
            let rep = check_theorem2(&r).unwrap();
            assert!(rep.summary.max_abs_diff(&rep.pipeline) <= PIPELINE_TOL);
            let c = rep.summary;
            assert!(c.x >= c.y && c.y >= 0.0 && c.z >= c.w && c.w >= 0.0);
            assert_abs_diff_eq!(c.x + c.y + c.z + c.w, 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn direct_oracle_simple_cases() {
        let pbit = CcqState::from_weights([1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(kdw_direct_oracle(&pbit).unwrap(), 1.0, epsilon = 1e-10);
        let uniform = CcqState::from_weights([0.25; 4]).unwrap();
        assert_abs_diff_eq!(kdw_direct_oracle(&uniform).unwrap(), -1.0, epsilon = 1e-10);
        let c = CcqSummary::from_weights([0.5, 0.1, 0.3, 0.1]);
        let st = CcqState::from_summary(&c).unwrap();
        assert_abs_diff_eq!(st.to_dense().trace().re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(kdw_direct_oracle(&st).unwrap(), c.k_dw, epsilon = 1e-9);
        assert!(CcqState::from_weights([0.5, 0.5, 0.5, 0.0]).is_err());
    }
}
