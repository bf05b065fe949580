use super::eigen::{hermitian_eig, Spectrum};
use super::matrix::{inner, vec_norm, ComplexMatrix, C64, ZERO};
use super::Tolerances;
use crate::error::{Error, Result};

/// Tensor-factor dimensions of a square operator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactorShape {
    dims: Vec<usize>,
}

impl FactorShape {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::ShapeMismatch(format!(
                "factor dimensions must be positive, got {dims:?}"
            )));
        }
        Ok(Self { dims })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    fn check(&self, m: &ComplexMatrix) -> Result<()> {
        let n = m.require_square()?;
        if n != self.total() {
            return Err(Error::ShapeMismatch(format!(
                "factor dims {:?} give {} but matrix is {}x{}",
                self.dims,
                self.total(),
                m.rows(),
                m.cols()
            )));
        }
        Ok(())
    }

    fn check_factors(&self, which: &[usize]) -> Result<()> {
        if let Some(&k) = which.iter().find(|&&k| k >= self.dims.len()) {
            return Err(Error::ShapeMismatch(format!(
                "factor index {k} out of range for {} factors",
                self.dims.len()
            )));
        }
        Ok(())
    }

    /// Row-major digits of `index`, most significant factor first.
    fn digits(&self, mut index: usize, out: &mut [usize]) {
        for (slot, &d) in out.iter_mut().zip(&self.dims).rev() {
            *slot = index % d;
            index /= d;
        }
    }

    fn compose(&self, digits: &[usize]) -> usize {
        digits
            .iter()
            .zip(&self.dims)
            .fold(0, |acc, (&x, &d)| acc * d + x)
    }
}

/// Transposes the tensor factors listed in `which`: `(…iₖ…; …jₖ…) ↦ (…jₖ…; …iₖ…)`.
pub fn partial_transpose(
    m: &ComplexMatrix,
    shape: &FactorShape,
    which: &[usize],
) -> Result<ComplexMatrix> {
    shape.check(m)?;
    shape.check_factors(which)?;
    let n = shape.total();
    let k = shape.len();
    let mut mask = vec![false; k];
    for &w in which {
        mask[w] = true;
    }
    let mut out = ComplexMatrix::zeros(n, n);
    let mut rd = vec![0; k];
    let mut cd = vec![0; k];
    for r in 0..n {
        shape.digits(r, &mut rd);
        for c in 0..n {
            shape.digits(c, &mut cd);
            let mut r2 = rd.clone();
            let mut c2 = cd.clone();
            for f in 0..k {
                if mask[f] {
                    std::mem::swap(&mut r2[f], &mut c2[f]);
                }
            }
            out[(shape.compose(&r2), shape.compose(&c2))] = m[(r, c)];
        }
    }
    Ok(out)
}

/// Traces out the factors in `traced`; returns the reduced operator and its shape.
pub fn partial_trace(
    m: &ComplexMatrix,
    shape: &FactorShape,
    traced: &[usize],
) -> Result<(ComplexMatrix, FactorShape)> {
    shape.check(m)?;
    shape.check_factors(traced)?;
    let kept: Vec<usize> = (0..shape.len()).filter(|f| !traced.contains(f)).collect();
    if kept.is_empty() {
        let t = m.trace();
        return Ok((ComplexMatrix::from_vec(1, 1, vec![t])?, FactorShape::new(vec![1])?));
    }
    let kept_shape = FactorShape::new(kept.iter().map(|&f| shape.dims[f]).collect())?;
    let n = shape.total();
    let nk = kept_shape.total();
    let mut out = ComplexMatrix::zeros(nk, nk);
    let mut rd = vec![0; shape.len()];
    let mut cd = vec![0; shape.len()];
    let mut rk = vec![0; kept.len()];
    let mut ck = vec![0; kept.len()];
    for r in 0..n {
        shape.digits(r, &mut rd);
        for c in 0..n {
            shape.digits(c, &mut cd);
            if traced.iter().any(|&f| rd[f] != cd[f]) {
                continue;
            }
            for (slot, &f) in kept.iter().enumerate() {
                rk[slot] = rd[f];
                ck[slot] = cd[f];
            }
            out[(kept_shape.compose(&rk), kept_shape.compose(&ck))] += m[(r, c)];
        }
    }
    Ok((out, kept_shape))
}

/// Reorders tensor factors: factor `j` of the output is factor `order[j]` of the input.
pub fn permute_factors(
    m: &ComplexMatrix,
    shape: &FactorShape,
    order: &[usize],
) -> Result<(ComplexMatrix, FactorShape)> {
    shape.check(m)?;
    let mut seen = vec![false; shape.len()];
    if order.len() != shape.len() {
        return Err(Error::ShapeMismatch(format!(
            "permutation {order:?} does not cover {} factors",
            shape.len()
        )));
    }
    for &o in order {
        if o >= shape.len() || std::mem::replace(&mut seen[o], true) {
            return Err(Error::ShapeMismatch(format!("{order:?} is not a permutation")));
        }
    }
    let new_shape = FactorShape::new(order.iter().map(|&f| shape.dims[f]).collect())?;
    let n = shape.total();
    let mut out = ComplexMatrix::zeros(n, n);
    let mut rd = vec![0; shape.len()];
    let mut cd = vec![0; shape.len()];
    let mut rn = vec![0; shape.len()];
    let mut cn = vec![0; shape.len()];
    for r in 0..n {
        shape.digits(r, &mut rd);
        for (j, &f) in order.iter().enumerate() {
            rn[j] = rd[f];
        }
        let r2 = new_shape.compose(&rn);
        for c in 0..n {
            shape.digits(c, &mut cd);
            for (j, &f) in order.iter().enumerate() {
                cn[j] = cd[f];
            }
            out[(r2, new_shape.compose(&cn))] = m[(r, c)];
        }
    }
    Ok((out, new_shape))
}

/// Sum of singular values.
///
/// Hermitian inputs use `Σ|λ|`. Otherwise the Hermitian dilation
/// `[[0, M], [M†, 0]]` is diagonalised; its spectrum is `±σᵢ`, so the norm is
/// half the sum of absolute eigenvalues.
pub fn trace_norm(m: &ComplexMatrix) -> Result<f64> {
    let n = m.require_square()?;
    if m.is_hermitian(Tolerances::DEFAULT.herm) {
        let s = hermitian_eig(m)?;
        return Ok(s.eigenvalues.iter().map(|l| l.abs()).sum());
    }
    let mut dilation = ComplexMatrix::zeros(2 * n, 2 * n);
    dilation.set_submatrix(0, n, m);
    dilation.set_submatrix(n, 0, &m.adjoint());
    let s = hermitian_eig(&dilation)?;
    Ok(0.5 * s.eigenvalues.iter().map(|l| l.abs()).sum::<f64>())
}

#[derive(Debug, Clone)]
pub struct PsdVerdict {
    pub psd: bool,
    pub min_eigenvalue: f64,
    /// Eigenvector of the most negative eigenvalue when `psd` is false.
    pub witness: Option<Vec<C64>>,
}

pub fn is_psd(m: &ComplexMatrix, tol: f64) -> Result<PsdVerdict> {
    let s = hermitian_eig(m)?;
    Ok(psd_from_spectrum(&s, tol))
}

pub(crate) fn psd_from_spectrum(s: &Spectrum, tol: f64) -> PsdVerdict {
    let min = s.min_eigenvalue();
    let psd = min >= -tol;
    PsdVerdict {
        psd,
        min_eigenvalue: min,
        witness: (!psd).then(|| s.eigenvector(s.dim() - 1)),
    }
}

/// Principal square root of a PSD operator; eigenvalues in `[−tol, 0)` are clamped.
pub fn psd_sqrt(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let s = hermitian_eig(m)?;
    let scale = s.eigenvalues.iter().fold(1.0f64, |a, l| a.max(l.abs()));
    if s.min_eigenvalue() < -Tolerances::DEFAULT.psd * scale {
        return Err(Error::NotPsd {
            min_eigenvalue: s.min_eigenvalue(),
        });
    }
    Ok(s.reconstruct_with(|l| l.max(0.0).sqrt()))
}

/// Polar decomposition `A = P·W` with `P = √(A A†)` PSD and `W` unitary.
///
/// Right singular vectors come from the spectrum of `A†A`; left ones are
/// `A v / ‖A v‖`. Directions with vanishing singular value are completed by
/// Gram–Schmidt over the standard basis. `A = 0` yields `W = I`.
pub fn polar_decomposition(a: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let n = a.require_square()?;
    if a.max_abs() == 0.0 {
        return Ok((ComplexMatrix::zeros(n, n), ComplexMatrix::identity(n)));
    }
    let gram = a.adjoint().matmul(a);
    let s = hermitian_eig(&gram)?;
    let sigma_max = s.max_eigenvalue().max(0.0).sqrt();
    let cutoff = 1e-10 * sigma_max;

    let mut left: Vec<Vec<C64>> = Vec::with_capacity(n);
    let mut right: Vec<Vec<C64>> = Vec::with_capacity(n);
    for k in 0..n {
        let v = s.eigenvector(k);
        let av = a.mul_vec(&v);
        let norm = vec_norm(&av);
        if norm > cutoff {
            if let Some(u) = orthonormalise(&av, &left) {
                left.push(u);
                right.push(v);
                continue;
            }
        }
        right.push(v);
        left.push(Vec::new());
    }
    // Complete the missing left vectors.
    let mut pending: Vec<usize> = (0..n).filter(|&k| left[k].is_empty()).collect();
    let mut basis_idx = 0;
    while let Some(&k) = pending.first() {
        let e = ComplexMatrix::basis_vector(n, basis_idx);
        basis_idx += 1;
        let filled: Vec<Vec<C64>> = left.iter().filter(|u| !u.is_empty()).cloned().collect();
        if let Some(u) = orthonormalise(&e, &filled) {
            left[k] = u;
            pending.remove(0);
        }
        if basis_idx > 2 * n {
            return Err(Error::CrossCheck("polar completion failed".into()));
        }
    }

    let mut w = ComplexMatrix::zeros(n, n);
    for (u, v) in left.iter().zip(&right) {
        for i in 0..n {
            for j in 0..n {
                w[(i, j)] += u[i] * v[j].conj();
            }
        }
    }
    let p = a.matmul(&w.adjoint()).hermitian_part();
    Ok((p, w))
}

/// Two-pass modified Gram–Schmidt of `v` against an orthonormal set.
fn orthonormalise(v: &[C64], basis: &[Vec<C64>]) -> Option<Vec<C64>> {
    let start = vec_norm(v);
    let mut u = v.to_vec();
    for _ in 0..2 {
        for b in basis {
            let c = inner(b, &u);
            for (x, y) in u.iter_mut().zip(b) {
                *x -= c * y;
            }
        }
    }
    let norm = vec_norm(&u);
    if norm <= 1e-8 * start || norm == 0.0 {
        return None;
    }
    Some(u.into_iter().map(|x| x / norm).collect())
}

/// `max|U U† − I|`.
pub fn unitarity_residual(u: &ComplexMatrix) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    u.matmul(&u.adjoint())
        .max_abs_diff(&ComplexMatrix::identity(u.rows()))
}

/// `tr(a·b)` without forming the product.
pub fn trace_of_product(a: &ComplexMatrix, b: &ComplexMatrix) -> C64 {
    let n = a.rows();
    let mut t = ZERO;
    for i in 0..n {
        for k in 0..a.cols() {
            t += a[(i, k)] * b[(k, i)];
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opalg::matrix::{tensor, ONE};
    use crate::random::{random_density_matrix, random_matrix, random_unitary};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn phi_plus() -> ComplexMatrix {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let v = vec![C64::new(h, 0.0), ZERO, ZERO, C64::new(h, 0.0)];
        ComplexMatrix::projector(&v)
    }

    #[test]
    fn partial_transpose_of_bell_state_has_minus_half() {
        let shape = FactorShape::new(vec![2, 2]).unwrap();
        let pt = partial_transpose(&phi_plus(), &shape, &[1]).unwrap();
        let v = is_psd(&pt, 1e-9).unwrap();
        assert!(!v.psd);
        assert_abs_diff_eq!(v.min_eigenvalue, -0.5, epsilon = 1e-14);
    }

    #[test]
    fn partial_transpose_is_an_involution_and_keeps_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = random_density_matrix(12, &mut rng);
        let shape = FactorShape::new(vec![2, 3, 2]).unwrap();
        for which in [vec![0], vec![1], vec![0, 2], vec![0, 1, 2]] {
            let pt = partial_transpose(&m, &shape, &which).unwrap();
            assert!(pt.is_hermitian(1e-14));
            assert_abs_diff_eq!(pt.trace().re, m.trace().re, epsilon = 1e-14);
            assert_eq!(partial_transpose(&pt, &shape, &which).unwrap(), m);
        }
        let full = partial_transpose(&m, &shape, &[0, 1, 2]).unwrap();
        assert_eq!(full, m.transpose());
    }

    #[test]
    fn partial_transpose_shape_errors() {
        let shape = FactorShape::new(vec![2, 3]).unwrap();
        let m = ComplexMatrix::identity(4);
        assert!(matches!(
            partial_transpose(&m, &shape, &[0]),
            Err(Error::ShapeMismatch(_))
        ));
        let m = ComplexMatrix::identity(6);
        assert!(partial_transpose(&m, &shape, &[2]).is_err());
    }

    #[test]
    fn partial_trace_of_product_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random_density_matrix(2, &mut rng);
        let b = random_density_matrix(3, &mut rng);
        let shape = FactorShape::new(vec![2, 3]).unwrap();
        let ab = tensor(&a, &b);
        let (ra, sa) = partial_trace(&ab, &shape, &[1]).unwrap();
        assert_eq!(sa.dims(), &[2]);
        assert!(ra.max_abs_diff(&a) < 1e-14);
        let (rb, _) = partial_trace(&ab, &shape, &[0]).unwrap();
        assert!(rb.max_abs_diff(&b) < 1e-14);
    }

    #[test]
    fn permute_factors_swaps_tensor_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_matrix(2, &mut rng);
        let b = random_matrix(3, &mut rng);
        let shape = FactorShape::new(vec![2, 3]).unwrap();
        let (swapped, new_shape) = permute_factors(&tensor(&a, &b), &shape, &[1, 0]).unwrap();
        assert_eq!(new_shape.dims(), &[3, 2]);
        assert_eq!(swapped, tensor(&b, &a));
        assert!(permute_factors(&tensor(&a, &b), &shape, &[0, 0]).is_err());
    }

    #[test]
    fn trace_norm_of_identity_and_unitary_invariance() {
        assert_abs_diff_eq!(trace_norm(&ComplexMatrix::identity(5)).unwrap(), 5.0, epsilon = 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let m = random_matrix(6, &mut rng);
        let u = random_unitary(6, &mut rng);
        let v = random_unitary(6, &mut rng);
        let base = trace_norm(&m).unwrap();
        let rotated = trace_norm(&u.matmul(&m).matmul(&v)).unwrap();
        assert_abs_diff_eq!(base, rotated, epsilon = 1e-9);
    }

    #[test]
    fn trace_norm_of_rank_one_non_hermitian() {
        let mut m = ComplexMatrix::zeros(4, 4);
        m[(0, 1)] = ONE;
        assert_abs_diff_eq!(trace_norm(&m).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn psd_verdicts() {
        let v = is_psd(&ComplexMatrix::identity(4), 1e-9).unwrap();
        assert!(v.psd && v.witness.is_none());
        let v = is_psd(&ComplexMatrix::from_diag(&[1.0, -0.3]), 1e-9).unwrap();
        assert!(!v.psd);
        assert_abs_diff_eq!(v.min_eigenvalue, -0.3, epsilon = 1e-15);
        let w = v.witness.unwrap();
        assert_abs_diff_eq!(w[0].norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w[1].norm(), 1.0, epsilon = 1e-15);
        assert!(is_psd(&ComplexMatrix::from_real_rows(&[&[1.0, 1.0], &[0.0, 1.0]]).unwrap(), 1e-9).is_err());
    }

    #[test]
    fn polar_of_unitary_times_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let p = random_density_matrix(4, &mut rng);
        let u = random_unitary(4, &mut rng);
        // A = U P = (U P U†) U
        let a = u.matmul(&p);
        let (pp, w) = polar_decomposition(&a).unwrap();
        assert!(unitarity_residual(&w) < 1e-12);
        assert!(pp.matmul(&w).max_abs_diff(&a) < 1e-12);
        assert!(pp.max_abs_diff(&p.conjugate_by(&u)) < 1e-12);
        assert!(is_psd(&pp, 1e-12).unwrap().psd);
    }

    #[test]
    fn polar_of_rank_deficient_and_zero() {
        let mut a = ComplexMatrix::zeros(3, 3);
        a[(0, 2)] = C64::new(0.0, 2.0);
        let (p, w) = polar_decomposition(&a).unwrap();
        assert!(unitarity_residual(&w) < 1e-12);
        assert!(p.matmul(&w).max_abs_diff(&a) < 1e-12);
        assert_abs_diff_eq!(p.trace().re, 2.0, epsilon = 1e-14);
        let (p0, w0) = polar_decomposition(&ComplexMatrix::zeros(2, 2)).unwrap();
        assert!(p0.is_zero());
        assert_eq!(w0, ComplexMatrix::identity(2));
    }

    #[test]
    fn psd_sqrt_squares_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = random_density_matrix(5, &mut rng);
        let r = psd_sqrt(&m).unwrap();
        assert!(r.matmul(&r).max_abs_diff(&m) < 1e-13);
    }
}
