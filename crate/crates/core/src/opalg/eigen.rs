//! Cyclic Jacobi eigensolver for Hermitian matrices.
//!
//! Each rotation zeroes one off-diagonal pair `(p, q)` with the unitary
//! `[[c, s·e], [−s·ē, c]]`, where `e = h_pq / |h_pq|` carries the phase of the
//! pivot and `(c, s)` is the real Jacobi rotation of the phase-stripped 2x2
//! problem.

use super::matrix::{ComplexMatrix, C64};
use super::Tolerances;
use crate::error::{Error, Result};

pub const DEFAULT_MAX_SWEEPS: usize = 100;
pub const DEFAULT_CONVERGENCE: f64 = 1e-13;

#[derive(Debug, Clone, Copy)]
pub struct EigOptions {
    pub max_sweeps: usize,
    /// Stop once the off-diagonal Frobenius mass drops below `convergence * ‖m‖_F`.
    pub convergence: f64,
    pub herm_tol: f64,
}

impl Default for EigOptions {
    fn default() -> Self {
        Self {
            max_sweeps: DEFAULT_MAX_SWEEPS,
            convergence: DEFAULT_CONVERGENCE,
            herm_tol: Tolerances::DEFAULT.herm,
        }
    }
}

/// Real spectrum (descending) with orthonormal eigenvectors as matrix columns.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvector(&self, k: usize) -> Vec<C64> {
        self.eigenvectors.column(k)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    /// `V diag(f(λ)) V†`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.dim();
        let v = &self.eigenvectors;
        let mut out = ComplexMatrix::zeros(n, n);
        for (k, &lambda) in self.eigenvalues.iter().enumerate() {
            let fl = f(lambda);
            if fl == 0.0 {
                continue;
            }
            for i in 0..n {
                let vik = v[(i, k)] * fl;
                for j in 0..n {
                    out[(i, j)] += vik * v[(j, k)].conj();
                }
            }
        }
        out
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.reconstruct_with(|l| l)
    }
}

pub fn hermitian_eig(m: &ComplexMatrix) -> Result<Spectrum> {
    hermitian_eig_with(m, &EigOptions::default())
}

pub fn hermitian_eig_with(m: &ComplexMatrix, opts: &EigOptions) -> Result<Spectrum> {
    let n = m.require_square()?;
    let residual = m.hermiticity_residual();
    if residual > opts.herm_tol * m.max_abs().max(1.0) {
        return Err(Error::NotHermitian { residual });
    }

    let mut a = m.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    let scale = a.frobenius_norm();
    let target = opts.convergence * scale;

    let mut converged = false;
    let mut off = off_diagonal_mass(&a);
    for _ in 0..opts.max_sweeps {
        if off <= target {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
        off = off_diagonal_mass(&a);
    }
    if !converged && off > target {
        return Err(Error::NoConvergence {
            sweeps: opts.max_sweeps,
            off_diagonal: off,
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].re.total_cmp(&a[(i, i)].re));
    let eigenvalues = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut eigenvectors = ComplexMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for i in 0..n {
            eigenvectors[(i, dst)] = v[(i, src)];
        }
    }
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
    })
}

fn off_diagonal_mass(a: &ComplexMatrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let h = a[(p, q)];
    let g = h.norm();
    if g == 0.0 {
        return;
    }
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    // Skip pivots already below the diagonal's resolution.
    if g < f64::EPSILON * 1e-3 * (app.abs() + aqq.abs()) {
        a[(p, q)] = C64::new(0.0, 0.0);
        a[(q, p)] = C64::new(0.0, 0.0);
        return;
    }
    let e = h / g;
    let tau = (aqq - app) / (2.0 * g);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let se = e * s;
    let se_bar = e.conj() * s;

    let n = a.rows();
    // A <- A V (columns p, q)
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * c - akq * se_bar;
        a[(k, q)] = akp * se + akq * c;
    }
    // A <- V† A (rows p, q)
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = apk * c - aqk * se;
        a[(q, k)] = apk * se_bar + aqk * c;
    }
    a[(p, q)] = C64::new(0.0, 0.0);
    a[(q, p)] = C64::new(0.0, 0.0);
    a[(p, p)] = C64::new(app - t * g, 0.0);
    a[(q, q)] = C64::new(aqq + t * g, 0.0);

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * c - vkq * se_bar;
        v[(k, q)] = vkp * se + vkq * c;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::random_hermitian;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn diagonal_input_sorted_descending() {
        let s = hermitian_eig(&ComplexMatrix::from_diag(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(s.eigenvalues, vec![3.0, 2.0, 1.0]);
    }

    #[test]
    fn pauli_x_spectrum() {
        let x = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        let s = hermitian_eig(&x).unwrap();
        assert_abs_diff_eq!(s.eigenvalues[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.eigenvalues[1], -1.0, epsilon = 1e-15);
    }

    #[test]
    fn pauli_y_spectrum() {
        let y = ComplexMatrix::from_rows(&[
            vec![C64::new(0.0, 0.0), C64::new(0.0, -1.0)],
            vec![C64::new(0.0, 1.0), C64::new(0.0, 0.0)],
        ])
        .unwrap();
        let s = hermitian_eig(&y).unwrap();
        assert_abs_diff_eq!(s.eigenvalues[0], 1.0, epsilon = 1e-15);
        let v = s.eigenvector(0);
        let yv = y.mul_vec(&v);
        for (a, b) in yv.iter().zip(&v) {
            assert_abs_diff_eq!((a - b).norm(), 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn random_hermitian_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let m = random_hermitian(8, &mut rng);
            let s = hermitian_eig(&m).unwrap();
            let err = s.reconstruct().max_abs_diff(&m);
            assert!(err <= 1e-10 * (1.0 + m.max_abs()), "reconstruction error {err}");
            let vv = s.eigenvectors.adjoint().matmul(&s.eigenvectors);
            assert!(vv.max_abs_diff(&ComplexMatrix::identity(8)) < 1e-12);
            for k in 0..8 {
                let v = s.eigenvector(k);
                let mv = m.mul_vec(&v);
                let res: f64 = mv
                    .iter()
                    .zip(&v)
                    .map(|(a, b)| (a - b * s.eigenvalues[k]).norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                assert!(res <= 1e-12 * m.frobenius_norm());
            }
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = ComplexMatrix::from_real_rows(&[&[1.0, 2.0], &[0.0, 1.0]]).unwrap();
        assert!(matches!(hermitian_eig(&m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn zero_sweep_budget_reports_no_convergence() {
        let x = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        let opts = EigOptions {
            max_sweeps: 0,
            ..EigOptions::default()
        };
        assert!(matches!(
            hermitian_eig_with(&x, &opts),
            Err(Error::NoConvergence { .. })
        ));
    }

    #[test]
    fn zero_matrix() {
        let s = hermitian_eig(&ComplexMatrix::zeros(3, 3)).unwrap();
        assert_eq!(s.eigenvalues, vec![0.0; 3]);
    }
}
