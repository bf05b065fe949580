//! Twisting operations, private states (pdits) and the pbit-closeness certificate.

use crate::blockstate::{BlockState, ShieldDims};
use crate::error::{Error, Result};
use crate::opalg::{
    binary_entropy, hermitian_eig, is_psd, trace_norm, unitarity_residual, ComplexMatrix,
    Tolerances,
};

/// Tolerance for a control operator to count as unitary.
pub const UNITARY_TOL: f64 = 1e-10;

/// Below this, the corner deficit is treated as exactly zero.
pub const EPSILON_FLOOR: f64 = 1e-12;

/// Largest deficit for which the certificate's entropy argument stays in `[0, 1]`.
pub const EPSILON_MAX: f64 = 0.125;

/// Controlled unitary `U = Σ_{k,l} |kl⟩⟨kl| ⊗ U_kl` on key ⊗ shield.
#[derive(Debug, Clone, PartialEq)]
pub struct TwistingOp {
    key_dim: usize,
    shield_dim: usize,
    /// `controls[k * key_dim + l] = U_kl`.
    controls: Vec<ComplexMatrix>,
}

impl TwistingOp {
    pub fn new(key_dim: usize, controls: Vec<ComplexMatrix>) -> Result<Self> {
        if key_dim < 2 || controls.len() != key_dim * key_dim {
            return Err(Error::DimensionMismatch(format!(
                "key dimension {key_dim} needs {} controls, got {}",
                key_dim * key_dim,
                controls.len()
            )));
        }
        let shield_dim = controls[0].rows();
        for u in &controls {
            if u.rows() != shield_dim || u.cols() != shield_dim {
                return Err(Error::DimensionMismatch(format!(
                    "control is {}x{}, expected {shield_dim}x{shield_dim}",
                    u.rows(),
                    u.cols()
                )));
            }
            let residual = unitarity_residual(u);
            if residual > UNITARY_TOL {
                return Err(Error::NotUnitary { residual });
            }
        }
        Ok(Self {
            key_dim,
            shield_dim,
            controls,
        })
    }

    pub fn identity(key_dim: usize, shield_dim: usize) -> Self {
        Self {
            key_dim,
            shield_dim,
            controls: vec![ComplexMatrix::identity(shield_dim); key_dim * key_dim],
        }
    }

    /// Qubit-key twisting from `[U_00, U_01, U_10, U_11]`.
    pub fn qubit(controls: [ComplexMatrix; 4]) -> Result<Self> {
        Self::new(2, controls.into())
    }

    pub fn key_dim(&self) -> usize {
        self.key_dim
    }

    pub fn shield_dim(&self) -> usize {
        self.shield_dim
    }

    pub fn control(&self, k: usize, l: usize) -> &ComplexMatrix {
        &self.controls[k * self.key_dim + l]
    }

    /// Dense block-diagonal unitary on `ℂ^d ⊗ ℂ^d ⊗ shield`.
    pub fn to_dense(&self) -> ComplexMatrix {
        let s = self.shield_dim;
        let d2 = self.key_dim * self.key_dim;
        let mut u = ComplexMatrix::zeros(d2 * s, d2 * s);
        for (kl, c) in self.controls.iter().enumerate() {
            u.set_submatrix(kl * s, kl * s, c);
        }
        u
    }

    /// `U m U†` for a dense operator on key ⊗ shield.
    pub fn apply_dense(&self, m: &ComplexMatrix) -> Result<ComplexMatrix> {
        let n = self.key_dim * self.key_dim * self.shield_dim;
        if m.rows() != n || m.cols() != n {
            return Err(Error::DimensionMismatch(format!(
                "twisting acts on dimension {n}, operator is {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        Ok(m.conjugate_by(&self.to_dense()))
    }

    /// Block action `B_ijkl = U_ij A_ijkl U_kl†` on a qubit-key state.
    pub fn apply_blocks(&self, state: &BlockState) -> Result<BlockState> {
        if self.key_dim != 2 || self.shield_dim != state.shield_size() {
            return Err(Error::DimensionMismatch(format!(
                "twisting (key {}, shield {}) vs state shield {}",
                self.key_dim,
                self.shield_dim,
                state.shield_size()
            )));
        }
        Ok(state.map_blocks(|row, col, a| {
            self.controls[row]
                .matmul(a)
                .matmul(&self.controls[col].adjoint())
        }))
    }
}

/// `(1/d) Σ_{k,l} |kk⟩⟨ll| ⊗ U_kk ρ U_ll†`.
pub fn make_pdit(d: usize, shield_state: &ComplexMatrix, twist: &TwistingOp) -> Result<ComplexMatrix> {
    if twist.key_dim() != d {
        return Err(Error::DimensionMismatch(format!(
            "key dimension {d} but twisting has {}",
            twist.key_dim()
        )));
    }
    let s = shield_state.require_square()?;
    if s != twist.shield_dim() {
        return Err(Error::DimensionMismatch(format!(
            "shield state is {s}-dimensional, twisting acts on {}",
            twist.shield_dim()
        )));
    }
    ensure_density(shield_state)?;
    let n = d * d * s;
    let mut out = ComplexMatrix::zeros(n, n);
    let scale = 1.0 / d as f64;
    for k in 0..d {
        let left = twist.control(k, k).matmul(shield_state);
        for l in 0..d {
            let block = left.matmul(&twist.control(l, l).adjoint()).scale(scale);
            out.set_submatrix((k * d + k) * s, (l * d + l) * s, &block);
        }
    }
    Ok(out)
}

fn ensure_density(m: &ComplexMatrix) -> Result<()> {
    let t = m.trace();
    if (t.re - 1.0).abs() > 1e-10 || t.im.abs() > 1e-10 {
        return Err(Error::NotAState(format!("shield state has trace {t}")));
    }
    let v = is_psd(m, Tolerances::DEFAULT.psd).map_err(|e| Error::NotAState(e.to_string()))?;
    if !v.psd {
        return Err(Error::NotAState(format!(
            "shield state has eigenvalue {:e}",
            v.min_eigenvalue
        )));
    }
    Ok(())
}

/// Evidence that a qubit-key state is close to a pbit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PbitCertificate {
    /// `max(0, 1/2 − ‖A_0011‖)`.
    pub epsilon: f64,
    /// Trace-norm distance bound; `None` outside the valid range of `epsilon`.
    pub delta: Option<f64>,
    pub valid: bool,
    pub corner_norm: f64,
}

/// `δ(ε) = sqrt(ln2 · (8√(2ε) + h(2√(2ε)))) + 2√(2ε)` for `0 ≤ ε ≤ 1/8`.
pub fn pbit_delta(epsilon: f64) -> Option<f64> {
    if !(0.0..=EPSILON_MAX).contains(&epsilon) {
        return None;
    }
    let r = 2.0 * (2.0 * epsilon).sqrt();
    let h = binary_entropy(r.min(1.0)).ok()?;
    Some((std::f64::consts::LN_2 * (4.0 * r + h)).sqrt() + r)
}

pub fn pbit_certificate(state: &BlockState) -> Result<PbitCertificate> {
    let corner_norm = trace_norm(state.block_bits(0, 0, 1, 1))?;
    Ok(certificate_from_corner_norm(corner_norm))
}

pub fn certificate_from_corner_norm(corner_norm: f64) -> PbitCertificate {
    let mut epsilon = (0.5 - corner_norm).max(0.0);
    if epsilon < EPSILON_FLOOR {
        epsilon = 0.0;
    }
    let delta = pbit_delta(epsilon);
    PbitCertificate {
        epsilon,
        delta,
        valid: delta.is_some(),
        corner_norm,
    }
}

/// Structural pdit test on a dense state of `ℂ^d ⊗ ℂ^d ⊗ shield`.
///
/// Accepts iff the state is valid, all key blocks outside the `(kk, ll)`
/// positions vanish, every `‖B(kk, ll)‖ = 1/d`, and the diagonal blocks
/// `B(kk, kk)` share one spectrum.
pub fn is_private_state(m: &ComplexMatrix, d: usize, shield: ShieldDims) -> Result<bool> {
    let s = shield.size();
    let n = d * d * s;
    if d < 2 || !m.is_square() || m.rows() != n {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} matrix does not match key {d}x{d} with shield {}x{}",
            m.rows(),
            m.cols(),
            shield.alice,
            shield.bob
        )));
    }
    let tol = Tolerances::DEFAULT.norm_eq;
    if (m.trace().re - 1.0).abs() > tol || !m.is_hermitian(Tolerances::DEFAULT.herm) {
        return Ok(false);
    }
    if !is_psd(m, Tolerances::DEFAULT.psd)?.psd {
        return Ok(false);
    }
    let block = |r: usize, c: usize| m.submatrix(r * s, c * s, s, s);
    let diag_key = |k: usize| k * d + k;
    for r in 0..d * d {
        for c in 0..d * d {
            let on_pattern = r % (d + 1) == 0 && c % (d + 1) == 0;
            if !on_pattern && block(r, c).max_abs() > tol {
                return Ok(false);
            }
        }
    }
    let target = 1.0 / d as f64;
    for k in 0..d {
        for l in 0..d {
            if (trace_norm(&block(diag_key(k), diag_key(l)))? - target).abs() > tol {
                return Ok(false);
            }
        }
    }
    let reference = hermitian_eig(&block(0, 0))?.eigenvalues;
    for k in 1..d {
        let spectrum = hermitian_eig(&block(diag_key(k), diag_key(k)))?.eigenvalues;
        if reference
            .iter()
            .zip(&spectrum)
            .any(|(a, b)| (a - b).abs() > tol)
        {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blockstate::Bell;
    use crate::opalg::{tensor, C64, ZERO};
    use crate::random::{random_density_matrix, random_unitary};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pauli_x() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap()
    }

    #[test]
    fn trivial_twisting_gives_bell_times_shield() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let rho = random_density_matrix(4, &mut rng);
        let g = make_pdit(2, &rho, &TwistingOp::identity(2, 4)).unwrap();
        let want = tensor(&Bell::PhiPlus.projector(), &rho);
        assert!(g.max_abs_diff(&want) < 1e-15);
    }

    #[test]
    fn flip_twisting_keeps_corner_norm_half() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let rho = random_density_matrix(4, &mut rng);
        let i4 = ComplexMatrix::identity(4);
        let flip = tensor(&pauli_x(), &ComplexMatrix::identity(2));
        let twist = TwistingOp::qubit([i4.clone(), i4.clone(), i4, flip.clone()]).unwrap();
        let g = make_pdit(2, &rho, &twist).unwrap();
        let state = BlockState::from_dense(&g, ShieldDims::new(2, 2).unwrap()).unwrap();
        let corner = state.block_bits(0, 0, 1, 1);
        assert!(corner.max_abs_diff(&rho.matmul(&flip.adjoint()).scale(0.5)) < 1e-15);
        assert_abs_diff_eq!(trace_norm(corner).unwrap(), 0.5, epsilon = 1e-13);
    }

    #[test]
    fn pdit_matches_dense_definition() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for d in [2, 3] {
            let s = 3;
            let rho = random_density_matrix(s, &mut rng);
            let controls = (0..d * d).map(|_| random_unitary(s, &mut rng)).collect();
            let twist = TwistingOp::new(d, controls).unwrap();
            let g = make_pdit(d, &rho, &twist).unwrap();
            let mut psi = vec![ZERO; d * d];
            for k in 0..d {
                psi[k * d + k] = C64::new(1.0 / (d as f64).sqrt(), 0.0);
            }
            let dense = twist
                .apply_dense(&tensor(&ComplexMatrix::projector(&psi), &rho))
                .unwrap();
            assert!(g.max_abs_diff(&dense) <= 1e-12);
            assert!(is_private_state(&g, d, ShieldDims::new(1, s).unwrap()).unwrap());
        }
    }

    #[test]
    fn make_pdit_errors() {
        let rho = ComplexMatrix::identity(2).scale(0.5);
        assert!(matches!(
            make_pdit(3, &rho, &TwistingOp::identity(2, 2)),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(matches!(
            make_pdit(2, &ComplexMatrix::identity(2), &TwistingOp::identity(2, 2)),
            Err(Error::NotAState(_))
        ));
        let bad = ComplexMatrix::identity(2).scale(2.0);
        let i2 = ComplexMatrix::identity(2);
        assert!(matches!(
            TwistingOp::qubit([i2.clone(), i2.clone(), i2, bad]),
            Err(Error::NotUnitary { .. })
        ));
    }

    #[test]
    fn certificate_for_exact_pbit_and_mixed_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let rho = random_density_matrix(4, &mut rng);
        let controls: Vec<_> = (0..4).map(|_| random_unitary(4, &mut rng)).collect();
        let g = make_pdit(2, &rho, &TwistingOp::new(2, controls).unwrap()).unwrap();
        let state = BlockState::from_dense(&g, ShieldDims::new(2, 2).unwrap()).unwrap();
        let c = pbit_certificate(&state).unwrap();
        assert_eq!(c.epsilon, 0.0);
        assert_eq!(c.delta, Some(0.0));
        assert!(c.valid);

        let mixed = ComplexMatrix::identity(16).scale(1.0 / 16.0);
        let state = BlockState::from_dense(&mixed, ShieldDims::new(2, 2).unwrap()).unwrap();
        let c = pbit_certificate(&state).unwrap();
        assert_eq!(c.epsilon, 0.5);
        assert!(!c.valid && c.delta.is_none());
    }

    #[test]
    fn delta_regression_value() {
        // Evaluated independently: 2√(2·0.02) = 0.4, h(0.4) = 0.970950594...
        assert_abs_diff_eq!(pbit_delta(0.02).unwrap(), 1.734933390063028, epsilon = 1e-12);
        assert_eq!(pbit_delta(0.0), Some(0.0));
        assert!(pbit_delta(0.125).is_some());
        assert!(pbit_delta(0.13).is_none());
    }

    #[test]
    fn is_private_state_rejects_wrong_shape_and_non_pbits() {
        let dims = ShieldDims::new(2, 2).unwrap();
        assert!(is_private_state(&ComplexMatrix::identity(8), 2, dims).is_err());
        let mixed = ComplexMatrix::identity(16).scale(1.0 / 16.0);
        assert!(!is_private_state(&mixed, 2, dims).unwrap());
    }
}
