//! Recurrence distillation: the block formula for one step, a dense LOCC
//! simulation of the same step, the closed-form n-copy iterate, and the two
//! sufficient conditions built on them.
//!
//! Output shields are regrouped Alice-first (see [`shield_tensor`]), so the
//! kept state of two states with shields `(a₁, b₁)` and `(a₂, b₂)` has shield
//! dims `(a₁a₂, b₁b₂)`.

use crate::blockstate::{shield_tensor, BellDiagonalShieldState, BlockState, ShieldDims};
use crate::error::{Error, Result};
use crate::opalg::{
    partial_trace, permute_factors, tensor, trace_norm, trace_of_product, ComplexMatrix,
    FactorShape, Tolerances, ZERO,
};

/// Post-selection probabilities at or below this leave the branch undefined.
pub const DEGENERATE_TOL: f64 = 1e-12;

/// Upper bound on dense dimensions the distillation routines will materialise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MemoryBudget {
    pub max_dense_dim: usize,
}

impl Default for MemoryBudget {
    fn default() -> Self {
        Self {
            max_dense_dim: 4096,
        }
    }
}

impl MemoryBudget {
    fn check(&self, dim: usize) -> Result<()> {
        if dim > self.max_dense_dim {
            Err(Error::MemoryBudgetExceeded {
                dim,
                budget: self.max_dense_dim,
            })
        } else {
            Ok(())
        }
    }
}

/// Result of one recurrence round on a pair of states.
#[derive(Debug, Clone)]
pub struct RecurrenceOutcome {
    /// Kept state for outcome `00`; `None` when `prob_00` is degenerate.
    pub kept_state_00: Option<BlockState>,
    pub kept_state_11: Option<BlockState>,
    /// `N₀ = Σ_{jk} ‖A_jkjk‖·‖B_jkjk‖`.
    pub prob_00: f64,
    /// `N₁ = Σ_{jk} ‖A_jkjk‖·‖B_j̄k̄j̄k̄‖`.
    pub prob_11: f64,
}

impl RecurrenceOutcome {
    pub fn kept_00(&self) -> Result<&BlockState> {
        self.kept_state_00.as_ref().ok_or(Error::DegenerateOutcome {
            outcome: "00",
            probability: self.prob_00,
        })
    }

    pub fn kept_11(&self) -> Result<&BlockState> {
        self.kept_state_11.as_ref().ok_or(Error::DegenerateOutcome {
            outcome: "11",
            probability: self.prob_11,
        })
    }
}

fn flip(key: usize) -> usize {
    3 - key
}

/// One recurrence round by the block formula.
///
/// `ρ₀₀ = [A_ijkl ⊗ B_ijkl] / N₀` and `ρ₁₁ = [A_ijkl ⊗ B_īj̄k̄l̄] / N₁`.
pub fn recurrence_step(r1: &BlockState, r2: &BlockState) -> Result<RecurrenceOutcome> {
    let d1 = r1.dims();
    let d2 = r2.dims();
    let w1: Vec<f64> = (0..4).map(|k| r1.diagonal_weight(k)).collect();
    let w2: Vec<f64> = (0..4).map(|k| r2.diagonal_weight(k)).collect();
    let mut prob_00 = 0.0;
    let mut prob_11 = 0.0;
    for k in 0..4 {
        prob_00 += w1[k] * w2[k];
        prob_11 += w1[k] * w2[flip(k)];
    }
    let dims = d1.combine(&d2);
    let branch = |prob: f64, partner: fn(usize) -> usize| -> Result<Option<BlockState>> {
        if prob <= DEGENERATE_TOL {
            return Ok(None);
        }
        let inv = 1.0 / prob;
        let mut blocks = Vec::with_capacity(16);
        for row in 0..4 {
            for col in 0..4 {
                let b = r2.block(partner(row), partner(col));
                blocks.push(shield_tensor(r1.block(row, col), d1, b, d2).scale(inv));
            }
        }
        BlockState::from_blocks_unchecked(dims, blocks).map(Some)
    };
    Ok(RecurrenceOutcome {
        kept_state_00: branch(prob_00, |k| k)?,
        kept_state_11: branch(prob_11, flip)?,
        prob_00,
        prob_11,
    })
}

/// Probabilities of the four pair-2 outcomes `00, 01, 10, 11` plus the
/// normalised post-measurement states, from a dense simulation.
#[derive(Debug, Clone)]
pub struct OracleBranches {
    pub probabilities: [f64; 4],
    pub states: [Option<BlockState>; 4],
}

/// Dense simulation of one recurrence round.
///
/// Builds `ρ₁ ⊗ ρ₂`, applies CNOT from each pair-1 key qubit onto the
/// corresponding pair-2 key qubit on both sides, projects the pair-2 key
/// qubits onto `|ab⟩`, traces them out and folds pair 2's shield into the
/// new shield.
pub fn recurrence_oracle_branches(
    r1: &BlockState,
    r2: &BlockState,
    budget: &MemoryBudget,
) -> Result<OracleBranches> {
    let d1 = r1.dims();
    let d2 = r2.dims();
    let joint_dim = r1.dense_dim() * r2.dense_dim();
    budget.check(joint_dim)?;

    // Factors: A1 B1 A1' B1' A2 B2 A2' B2'
    let shape = FactorShape::new(vec![2, 2, d1.alice, d1.bob, 2, 2, d2.alice, d2.bob])?;
    let joint = tensor(&r1.to_dense(), &r2.to_dense());
    let permuted = apply_bilateral_cnot(&joint, &shape);

    let mut probabilities = [0.0; 4];
    let mut states: [Option<BlockState>; 4] = Default::default();
    let kept_dims = d1.combine(&d2);
    for outcome in 0..4 {
        let (a, b) = (outcome / 2, outcome % 2);
        let projected = project_pair2_keys(&permuted, &shape, a, b);
        let (reduced, reduced_shape) = partial_trace(&projected, &shape, &[4, 5])?;
        let prob = reduced.trace().re;
        probabilities[outcome] = prob;
        if prob <= DEGENERATE_TOL {
            continue;
        }
        // A1 B1 A1' B1' A2' B2' -> A1 B1 A1' A2' B1' B2'
        let (regrouped, _) = permute_factors(&reduced, &reduced_shape, &[0, 1, 2, 4, 3, 5])?;
        let normalised = regrouped.scale(1.0 / prob);
        states[outcome] = Some(BlockState::from_dense_unchecked(&normalised, kept_dims)?);
    }
    Ok(OracleBranches {
        probabilities,
        states,
    })
}

/// The `00`/`11` branches of [`recurrence_oracle_branches`] as a [`RecurrenceOutcome`].
pub fn recurrence_oracle(r1: &BlockState, r2: &BlockState) -> Result<RecurrenceOutcome> {
    recurrence_oracle_with(r1, r2, &MemoryBudget::default())
}

pub fn recurrence_oracle_with(
    r1: &BlockState,
    r2: &BlockState,
    budget: &MemoryBudget,
) -> Result<RecurrenceOutcome> {
    let OracleBranches {
        probabilities,
        mut states,
    } = recurrence_oracle_branches(r1, r2, budget)?;
    Ok(RecurrenceOutcome {
        kept_state_00: states[0].take(),
        kept_state_11: states[3].take(),
        prob_00: probabilities[0],
        prob_11: probabilities[3],
    })
}

fn digits_of(mut index: usize, dims: &[usize], out: &mut [usize]) {
    for (slot, &d) in out.iter_mut().zip(dims).rev() {
        *slot = index % d;
        index /= d;
    }
}

fn compose(digits: &[usize], dims: &[usize]) -> usize {
    digits.iter().zip(dims).fold(0, |acc, (&x, &d)| acc * d + x)
}

/// `C ρ C†` where `C` maps `|a₁ b₁ … a₂ b₂ …⟩ ↦ |a₁ b₁ … (a₂⊕a₁)(b₂⊕b₁) …⟩`.
fn apply_bilateral_cnot(m: &ComplexMatrix, shape: &FactorShape) -> ComplexMatrix {
    let dims = shape.dims();
    let n = shape.total();
    let image: Vec<usize> = (0..n)
        .map(|idx| {
            let mut d = vec![0; dims.len()];
            digits_of(idx, dims, &mut d);
            d[4] ^= d[0];
            d[5] ^= d[1];
            compose(&d, dims)
        })
        .collect();
    let mut out = ComplexMatrix::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            out[(image[r], image[c])] = m[(r, c)];
        }
    }
    out
}

/// `Π ρ Π` with `Π = I ⊗ |ab⟩⟨ab|_{A2 B2} ⊗ I`.
fn project_pair2_keys(m: &ComplexMatrix, shape: &FactorShape, a: usize, b: usize) -> ComplexMatrix {
    let dims = shape.dims();
    let n = shape.total();
    let keep: Vec<bool> = (0..n)
        .map(|idx| {
            let mut d = vec![0; dims.len()];
            digits_of(idx, dims, &mut d);
            d[4] == a && d[5] == b
        })
        .collect();
    let mut out = m.clone();
    for r in 0..n {
        for c in 0..n {
            if !(keep[r] && keep[c]) {
                out[(r, c)] = ZERO;
            }
        }
    }
    out
}

/// `ρ' = [A_ijkl^{⊗n}] / N` with `N = Σ_{jk} ‖A_jkjk‖ⁿ`.
pub fn iterate_closed_form(r: &BlockState, n: u32, budget: &MemoryBudget) -> Result<BlockState> {
    if n == 0 {
        return Err(Error::ParamOutOfRange("recurrence exponent must be >= 1".into()));
    }
    let base = r.dims();
    let dims = checked_iterated_dims(base, n).ok_or(Error::MemoryBudgetExceeded {
        dim: usize::MAX,
        budget: budget.max_dense_dim,
    })?;
    budget.check(dims.dense_dim())?;

    let mut norm = 0.0;
    for k in 0..4 {
        let w = r.diagonal_weight(k);
        let mut p = w;
        for _ in 1..n {
            p *= w;
        }
        norm += p;
    }
    if norm <= DEGENERATE_TOL {
        return Err(Error::DegenerateOutcome {
            outcome: "00",
            probability: norm,
        });
    }
    let inv = 1.0 / norm;
    let mut blocks = Vec::with_capacity(16);
    for row in 0..4 {
        for col in 0..4 {
            let a = r.block(row, col);
            let mut power = a.clone();
            let mut power_dims = base;
            for _ in 1..n {
                power = shield_tensor(&power, power_dims, a, base);
                power_dims = power_dims.combine(&base);
            }
            blocks.push(power.scale(inv));
        }
    }
    BlockState::from_blocks_unchecked(dims, blocks)
}

/// Trace norms of the six blocks entering the sufficient conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyNorms {
    pub a0000: f64,
    pub a0101: f64,
    pub a1010: f64,
    pub a1111: f64,
    pub a0011: f64,
    pub a0110: f64,
}

impl KeyNorms {
    pub fn of(r: &BlockState) -> Result<Self> {
        let n = |i, j, k, l| trace_norm(r.block_bits(i, j, k, l));
        Ok(Self {
            a0000: n(0, 0, 0, 0)?,
            a0101: n(0, 1, 0, 1)?,
            a1010: n(1, 0, 1, 0)?,
            a1111: n(1, 1, 1, 1)?,
            a0011: n(0, 0, 1, 1)?,
            a0110: n(0, 1, 1, 0)?,
        })
    }

    pub fn diagonal(&self) -> [f64; 4] {
        [self.a0000, self.a0101, self.a1010, self.a1111]
    }
}

/// `‖A'_0011‖ = aⁿ / Σ dᵢⁿ` for `n = 1..=n_max`, given the corner norm `a`
/// and the four diagonal norms `dᵢ`.
pub fn corner_trajectory_from_norms(corner: f64, diagonal: [f64; 4], n_max: u32) -> Vec<f64> {
    let scale = diagonal.iter().copied().fold(corner, f64::max);
    if scale <= 0.0 {
        return vec![0.0; n_max as usize];
    }
    let a = corner / scale;
    let d = diagonal.map(|x| x / scale);
    (1..=n_max as i32)
        .map(|n| {
            let denom: f64 = d.iter().map(|x| x.powi(n)).sum();
            if denom > 0.0 {
                a.powi(n) / denom
            } else {
                0.0
            }
        })
        .collect()
}

/// Corner-norm trajectory of the closed-form iterate for `n = 1..=n_max`.
pub fn corner_norm_trajectory(r: &BlockState, n_max: u32) -> Result<Vec<f64>> {
    let norms = KeyNorms::of(r)?;
    Ok(corner_trajectory_from_norms(norms.a0011, norms.diagonal(), n_max))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Theorem1Report {
    pub holds: bool,
    pub norms: KeyNorms,
    pub tol: f64,
}

impl Theorem1Report {
    pub fn from_norms(norms: KeyNorms, tol: f64) -> Self {
        let a = norms.a0011;
        let holds = (norms.a0000 - a).abs() <= tol
            && (norms.a1111 - a).abs() <= tol
            && norms.a0101 < a - tol
            && norms.a1010 < a - tol;
        Self { holds, norms, tol }
    }

    /// Deficit bound `(bⁿ + cⁿ) / (4aⁿ)` on `1/2 − ‖A'_0011‖`.
    pub fn deficit_bound(&self, n: u32) -> f64 {
        let a = self.norms.a0011;
        if a <= 0.0 {
            return f64::INFINITY;
        }
        let rb = self.norms.a0101 / a;
        let rc = self.norms.a1010 / a;
        (rb.powi(n as i32) + rc.powi(n as i32)) / 4.0
    }

    /// Smallest `n` whose deficit bound is at most `epsilon`; `None` unless the
    /// hypothesis holds.
    pub fn rounds_for(&self, epsilon: f64) -> Option<u32> {
        if !self.holds || epsilon <= 0.0 {
            return None;
        }
        (1..=1_000_000u32).find(|&n| self.deficit_bound(n) <= epsilon)
    }
}

pub fn check_theorem1(r: &BlockState) -> Result<Theorem1Report> {
    Ok(Theorem1Report::from_norms(
        KeyNorms::of(r)?,
        Tolerances::DEFAULT.norm_eq,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Corollary1Report {
    pub holds: bool,
    /// `‖σ₀ − σ₁‖`.
    pub diff_norm: f64,
    /// `‖σ₀ + σ₁‖`.
    pub sum_norm: f64,
    /// `‖σ₂ + σ₃‖`.
    pub centre_sum_norm: f64,
    /// `tr(σ₀σ₁)`.
    pub overlap: f64,
    /// `‖σ₀ − σ₁‖ = ‖σ₀ + σ₁‖` and `‖σ₂ + σ₃‖ < ‖σ₀ + σ₁‖`, when `holds`.
    pub reduction_consistent: bool,
    pub theorem1: Theorem1Report,
}

pub fn check_corollary1(s: &BellDiagonalShieldState) -> Result<Corollary1Report> {
    let tol = Tolerances::DEFAULT.norm_eq;
    let [s0, s1, s2, s3] = s.sigmas();
    let diff_norm = trace_norm(&(s0 - s1))?;
    let sum_norm = trace_norm(&(s0 + s1))?;
    let centre_sum_norm = trace_norm(&(s2 + s3))?;
    let overlap = trace_of_product(s0, s1).re;
    let holds = diff_norm > 0.5 + tol && overlap.abs() <= tol;
    let theorem1 = check_theorem1(&s.render_blocks())?;
    let reduction_consistent = (diff_norm - sum_norm).abs() <= tol
        && centre_sum_norm < sum_norm
        && theorem1.holds;
    Ok(Corollary1Report {
        holds,
        diff_norm,
        sum_norm,
        centre_sum_norm,
        overlap,
        reduction_consistent,
        theorem1,
    })
}

/// Shield dims after `n` closed-form copies, `None` if the dense size overflows.
pub fn checked_iterated_dims(base: ShieldDims, n: u32) -> Option<ShieldDims> {
    let alice = base.alice.checked_pow(n)?;
    let bob = base.bob.checked_pow(n)?;
    alice.checked_mul(bob)?.checked_mul(4)?;
    Some(ShieldDims { alice, bob })
}
