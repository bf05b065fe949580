//! Random matrices and states for property tests and benchmarks.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::blockstate::{BlockState, ShieldDims};
use crate::opalg::{inner, vec_norm, ComplexMatrix, C64};

fn gaussian(rng: &mut impl Rng) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Complex Ginibre matrix with standard normal entries.
pub fn random_matrix(n: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let data = (0..n * n).map(|_| gaussian(rng)).collect();
    ComplexMatrix::from_vec(n, n, data).expect("n > 0")
}

pub fn random_hermitian(n: usize, rng: &mut impl Rng) -> ComplexMatrix {
    random_matrix(n, rng).hermitian_part()
}

/// Haar-like unitary from Gram–Schmidt on a Ginibre matrix.
pub fn random_unitary(n: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let g = random_matrix(n, rng);
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(n);
    for j in 0..n {
        let mut v = g.column(j);
        for _ in 0..2 {
            for u in &cols {
                let c = inner(u, &v);
                for (x, y) in v.iter_mut().zip(u) {
                    *x -= c * y;
                }
            }
        }
        let norm = vec_norm(&v);
        cols.push(v.into_iter().map(|x| x / norm).collect());
    }
    let mut u = ComplexMatrix::zeros(n, n);
    for (j, col) in cols.iter().enumerate() {
        for (i, x) in col.iter().enumerate() {
            u[(i, j)] = *x;
        }
    }
    u
}

/// PSD matrix `G G†` of the given rank, not normalised.
pub fn random_psd(n: usize, rank: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let data = (0..n * rank).map(|_| gaussian(rng)).collect();
    let g = ComplexMatrix::from_vec(n, rank.max(1), data).expect("positive shape");
    g.matmul(&g.adjoint())
}

/// Full-rank density matrix (Hilbert–Schmidt measure).
pub fn random_density_matrix(n: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let m = random_psd(n, n, rng);
    let t = m.trace().re;
    m.scale(1.0 / t)
}

pub fn random_block_state(dims: ShieldDims, rng: &mut impl Rng) -> BlockState {
    let rho = random_density_matrix(dims.dense_dim(), rng);
    BlockState::from_dense_unchecked(&rho, dims).expect("dims match")
}
