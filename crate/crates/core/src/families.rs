//! Generators for the four example families and their closed-form weights.
//!
//! * Example 1: Werner-state shields, `l` tensor copies, recurrence iterate `m`.
//! * Example 2: a biased mixture of two pbits.
//! * Example 3: Bell-diagonal, PT-invariant, key positive by the recurrence
//!   condition but with a one-way rate that changes sign in `q`.
//! * Example 4: X-form, PPT, one-way rate negative everywhere.

use crate::blockstate::{computational, shield_tensor, Bell, BellDiagonalShieldState, BlockState, ShieldDims};
use crate::distill::MemoryBudget;
use crate::error::{Error, Result};
use crate::opalg::{
    hermitian_eig, partial_transpose, psd_sqrt, tensor, trace_norm, xlog2x, ComplexMatrix,
    FactorShape, C64, ONE,
};
use crate::squeeze::{check_theorem2, CcqSummary};
use std::f64::consts::SQRT_2;

/// Upper end (exclusive) of the `q` range shared by Examples 3 and 4.
pub fn q_max() -> f64 {
    (2.0 - SQRT_2) / 8.0
}

/// `p(q) = (1 − 2q) / (4 + 2√2)`.
pub fn p_of_q(q: f64) -> f64 {
    (1.0 - 2.0 * q) / (4.0 + 2.0 * SQRT_2)
}

fn swap_operator(d: usize) -> ComplexMatrix {
    let mut s = ComplexMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            s[(j * d + i, i * d + j)] = ONE;
        }
    }
    s
}

/// `(P_sym, P_as) = ((I + SWAP)/2, (I − SWAP)/2)` on `ℂᵈ ⊗ ℂᵈ`.
pub fn sym_antisym_projectors(d: usize) -> Result<(ComplexMatrix, ComplexMatrix)> {
    if d < 2 {
        return Err(Error::ParamOutOfRange(format!("local dimension {d} < 2")));
    }
    let id = ComplexMatrix::identity(d * d);
    let swap = swap_operator(d);
    Ok(((&id + &swap).scale(0.5), (&id - &swap).scale(0.5)))
}

/// `(ϱ_s, ϱ_a) = (2P_sym/(d²+d), 2P_as/(d²−d))`.
pub fn werner_states(d: usize) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let (ps, pa) = sym_antisym_projectors(d)?;
    let df = d as f64;
    Ok((ps.scale(2.0 / (df * df + df)), pa.scale(2.0 / (df * df - df))))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ex1Params {
    pub d: usize,
    pub l: u32,
    pub p: f64,
    pub m: u32,
}

impl Default for Ex1Params {
    fn default() -> Self {
        Self {
            d: 2,
            l: 1,
            p: 0.3,
            m: 1,
        }
    }
}

impl Ex1Params {
    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(Error::ParamOutOfRange(format!("d = {} < 2", self.d)));
        }
        if self.l < 1 || self.m < 1 {
            return Err(Error::ParamOutOfRange("l and m must be >= 1".into()));
        }
        if !(0.0..0.5).contains(&self.p) {
            return Err(Error::ParamOutOfRange(format!("p = {} outside [0, 1/2)", self.p)));
        }
        Ok(())
    }

    /// `p ≤ 1/3` and `(1−p)/p ≥ (d/(d−1))^l`, with a relative slack of 1e−12
    /// so exact boundary points count as PPT.
    pub fn ppt_flag(&self) -> bool {
        const SLACK: f64 = 1e-12;
        if self.p > 1.0 / 3.0 + SLACK {
            return false;
        }
        if self.p == 0.0 {
            return true;
        }
        let d = self.d as f64;
        let lhs = (1.0 - self.p) / self.p;
        let rhs = (d / (d - 1.0)).powi(self.l as i32);
        lhs >= rhs * (1.0 - SLACK)
    }

    /// Shield dims of the `m`-fold iterate, `None` on overflow.
    pub fn shield_dims(&self) -> Option<ShieldDims> {
        let side = self.d.checked_pow(self.l.checked_mul(self.m)?)?;
        side.checked_mul(side)?.checked_mul(4)?;
        Some(ShieldDims { alice: side, bob: side })
    }

    /// `N = 2p^m + 2(1/2 − p)^m`.
    pub fn normaliser(&self) -> f64 {
        let m = self.m as i32;
        2.0 * self.p.powi(m) + 2.0 * (0.5 - self.p).powi(m)
    }
}

fn tensor_power(x: &ComplexMatrix, dims: ShieldDims, n: u32) -> ComplexMatrix {
    let mut acc = x.clone();
    let mut acc_dims = dims;
    for _ in 1..n {
        acc = shield_tensor(&acc, acc_dims, x, dims);
        acc_dims = acc_dims.combine(&dims);
    }
    acc
}

/// `(τ₀, τ₁) = (ϱ_s^{⊗l}, [(ϱ_a + ϱ_s)/2]^{⊗l})`, shields grouped Alice-first.
pub fn example1_taus(d: usize, l: u32) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let (rs, ra) = werner_states(d)?;
    let dims = ShieldDims::new(d, d)?;
    let mix = (&ra + &rs).scale(0.5);
    Ok((tensor_power(&rs, dims, l), tensor_power(&mix, dims, l)))
}

/// `‖τ₁ − τ₀‖`, densely for small shields, otherwise from the common
/// eigenbasis of `ϱ_s` and `ϱ_a` (they commute with orthogonal supports).
pub fn tau_difference_norm(d: usize, l: u32) -> Result<f64> {
    if d < 2 || l < 1 {
        return Err(Error::ParamOutOfRange(format!("d = {d}, l = {l}")));
    }
    if d.checked_pow(2 * l).is_some_and(|n| n <= 256) {
        let (t0, t1) = example1_taus(d, l)?;
        return trace_norm(&(&t1 - &t0));
    }
    let df = d as f64;
    let dim_s = (df * df + df) / 2.0;
    let dim_a = (df * df - df) / 2.0;
    // Product eigenvectors with k antisymmetric factors.
    let mut total = 0.0;
    let mut binom = 1.0;
    for k in 0..=l {
        if k > 0 {
            binom *= (l - k + 1) as f64 / k as f64;
        }
        let mult = binom * dim_a.powi(k as i32) * dim_s.powi((l - k) as i32);
        let t1 = 0.5f64.powi(l as i32) / (dim_a.powi(k as i32) * dim_s.powi((l - k) as i32));
        let t0 = if k == 0 { dim_s.powi(-(l as i32)) } else { 0.0 };
        total += mult * (t1 - t0).abs();
    }
    Ok(total)
}

/// The example-1 state before recurrence:
/// `½[[p(τ₁+τ₀),0,0,p(τ₁−τ₀)],[0,(1−2p)τ₀,0,0],[0,0,(1−2p)τ₀,0],[p(τ₁−τ₀),0,0,p(τ₁+τ₀)]]`.
fn example1_base_blocks(params: &Ex1Params) -> Result<[ComplexMatrix; 3]> {
    let (t0, t1) = example1_taus(params.d, params.l)?;
    let p = params.p;
    Ok([
        (&t1 + &t0).scale(p),
        (&t1 - &t0).scale(p),
        t0.scale(1.0 - 2.0 * p),
    ])
}

fn x_form(dims: ShieldDims, diag: ComplexMatrix, corner: ComplexMatrix, centre: ComplexMatrix) -> Result<BlockState> {
    let s = dims.size();
    let mut blocks = vec![ComplexMatrix::zeros(s, s); 16];
    blocks[0] = diag.clone();
    blocks[15] = diag;
    blocks[3] = corner.clone();
    blocks[12] = corner;
    blocks[5] = centre.clone();
    blocks[10] = centre;
    BlockState::from_blocks_unchecked(dims, blocks)
}

/// Dense iterate `ρ'` (`m = 1` is the base state).
pub fn example1_state(params: &Ex1Params, budget: &MemoryBudget) -> Result<BlockState> {
    params.validate()?;
    let dims = params.shield_dims();
    let dim = dims.map_or(usize::MAX, |d| d.dense_dim());
    let dims = match dims {
        Some(dims) if dim <= budget.max_dense_dim => dims,
        _ => {
            return Err(Error::MemoryBudgetExceeded {
                dim,
                budget: budget.max_dense_dim,
            })
        }
    };
    let base_dims = ShieldDims::new(params.d.pow(params.l), params.d.pow(params.l))?;
    let scale = 1.0 / (2f64.powi(params.m as i32) * params.normaliser());
    let [diag, corner, centre] =
        example1_base_blocks(params)?.map(|x| tensor_power(&x, base_dims, params.m).scale(scale));
    x_form(dims, diag, corner, centre)
}

/// Scalar weights of the iterate from the block norms `2p`, `p‖τ₁−τ₀‖`, `1−2p`.
pub fn example1_weights(params: &Ex1Params) -> Result<CcqSummary> {
    params.validate()?;
    let t = tau_difference_norm(params.d, params.l)?;
    Ok(example1_weights_with_norm(params, t))
}

fn example1_weights_with_norm(params: &Ex1Params, tau_diff: f64) -> CcqSummary {
    let m = params.m as i32;
    let p = params.p;
    let scale = 1.0 / (2f64.powi(m) * params.normaliser());
    let plus = (2.0 * p).powi(m) * scale;
    let minus = (p * tau_diff).powi(m) * scale;
    let centre = (1.0 - 2.0 * p).powi(m) * scale;
    CcqSummary::from_weights([plus + minus, plus - minus, centre, centre])
}

#[derive(Debug, Clone)]
pub struct Example1 {
    pub params: Ex1Params,
    pub ppt_flag: bool,
    pub tau_difference_norm: f64,
    pub weights: CcqSummary,
    /// Present only when the dense iterate fits the budget.
    pub state: Option<BlockState>,
}

pub fn example1(params: &Ex1Params, budget: &MemoryBudget) -> Result<Example1> {
    params.validate()?;
    let tau_diff = tau_difference_norm(params.d, params.l)?;
    let state = match example1_state(params, budget) {
        Ok(s) => Some(s),
        Err(Error::MemoryBudgetExceeded { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(Example1 {
        params: *params,
        ppt_flag: params.ppt_flag(),
        tau_difference_norm: tau_diff,
        weights: example1_weights_with_norm(params, tau_diff),
        state,
    })
}

/// Smallest `l ≤ 16`, then smallest `m ≤ 64`, with `S(E) < 1`.
pub fn example1_minimal_rounds(d: usize, p: f64) -> Result<Option<(u32, u32)>> {
    for l in 1..=16 {
        let t = tau_difference_norm(d, l)?;
        for m in 1..=64 {
            let params = Ex1Params { d, l, p, m };
            params.validate()?;
            if example1_weights_with_norm(&params, t).s_e < 1.0 - crate::squeeze::THEOREM2_MARGIN {
                return Ok(Some((m, l)));
            }
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ex2Params {
    pub p1: f64,
    pub x1: ComplexMatrix,
    pub x2: ComplexMatrix,
    pub shield: ShieldDims,
}

impl Ex2Params {
    /// Both shield operators `|φ⁺⟩⟨φ⁺|` on a two-qubit shield.
    pub fn with_p1(p1: f64) -> Self {
        let phi = Bell::PhiPlus.projector();
        Self {
            p1,
            x1: phi.clone(),
            x2: phi,
            shield: ShieldDims { alice: 2, bob: 2 },
        }
    }

    pub fn p2(&self) -> f64 {
        1.0 - self.p1
    }
}

impl Default for Ex2Params {
    fn default() -> Self {
        Self::with_p1(0.75)
    }
}

/// `½[[p₁√(X₁X₁†),0,0,p₁X₁],[0,p₂√(X₂X₂†),p₂X₂,0],[0,p₂X₂†,p₂√(X₂†X₂),0],[p₁X₁†,0,0,p₁√(X₁†X₁)]]`.
pub fn example2(params: &Ex2Params) -> Result<BlockState> {
    let Ex2Params { p1, x1, x2, shield } = params;
    if !(0.0..=1.0).contains(p1) {
        return Err(Error::ParamOutOfRange(format!("p1 = {p1} outside [0, 1]")));
    }
    let s = shield.size();
    for x in [x1, x2] {
        if x.rows() != s || x.cols() != s {
            return Err(Error::ShapeMismatch(format!(
                "shield operator is {}x{}, shield size {s}",
                x.rows(),
                x.cols()
            )));
        }
        let norm = trace_norm(x)?;
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::NormNotOne { norm });
        }
    }
    let p2 = 1.0 - p1;
    let h1 = 0.5 * p1;
    let h2 = 0.5 * p2;
    let mut blocks = vec![ComplexMatrix::zeros(s, s); 16];
    blocks[0] = psd_sqrt(&x1.matmul(&x1.adjoint()))?.scale(h1);
    blocks[3] = x1.scale(h1);
    blocks[12] = x1.adjoint().scale(h1);
    blocks[15] = psd_sqrt(&x1.adjoint().matmul(x1))?.scale(h1);
    blocks[5] = psd_sqrt(&x2.matmul(&x2.adjoint()))?.scale(h2);
    blocks[6] = x2.scale(h2);
    blocks[9] = x2.adjoint().scale(h2);
    blocks[10] = psd_sqrt(&x2.adjoint().matmul(x2))?.scale(h2);
    BlockState::from_blocks_unchecked(*shield, blocks)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ex34Params {
    pub q: f64,
}

impl Default for Ex34Params {
    fn default() -> Self {
        Self { q: 0.03 }
    }
}

impl Ex34Params {
    pub fn new(q: f64) -> Result<Self> {
        if !(0.0..q_max()).contains(&q) {
            return Err(Error::ParamOutOfRange(format!(
                "q = {q} outside [0, {})",
                q_max()
            )));
        }
        Ok(Self { q })
    }

    pub fn p(&self) -> f64 {
        p_of_q(self.q)
    }
}

const EX34_SHIELD: ShieldDims = ShieldDims { alice: 2, bob: 2 };

fn ket_projector(i: usize, j: usize) -> ComplexMatrix {
    ComplexMatrix::projector(&computational(i, j))
}

/// `σ₀ = p(φ⁺ + |01⟩⟨01|)`, `σ₁ = p(φ⁻ + |10⟩⟨10|)`.
fn ex34_sigma01(p: f64) -> (ComplexMatrix, ComplexMatrix) {
    let s0 = (&Bell::PhiPlus.projector() + &ket_projector(0, 1)).scale(p);
    let s1 = (&Bell::PhiMinus.projector() + &ket_projector(1, 0)).scale(p);
    (s0, s1)
}

/// `(ξ₀, ξ₁)`: eigenvectors of `(σ₀ − σ₁)^Γ` for `±√2 p`, phased so the
/// `|01⟩` component of `ξ₀` and the `|10⟩` component of `ξ₁` are positive.
pub fn example3_xis(p: f64) -> Result<([C64; 4], [C64; 4])> {
    let (s0, s1) = ex34_sigma01(p);
    let shape = FactorShape::new(vec![2, 2])?;
    let gamma = partial_transpose(&(&s0 - &s1), &shape, &[1])?;
    let spec = hermitian_eig(&gamma)?;
    let phased = |v: Vec<C64>, anchor: usize| -> [C64; 4] {
        let phase = v[anchor] / v[anchor].norm();
        std::array::from_fn(|k| v[k] / phase)
    };
    let xi0 = phased(spec.eigenvector(0), 1);
    let xi1 = phased(spec.eigenvector(3), 2);
    let span = &ComplexMatrix::projector(&xi0) + &ComplexMatrix::projector(&xi1);
    let want = &ket_projector(0, 1) + &ket_projector(1, 0);
    let gap = span.max_abs_diff(&want);
    if gap > 1e-12 {
        return Err(Error::CrossCheck(format!(
            "ξ projectors miss span{{|01⟩,|10⟩}} by {gap:e}"
        )));
    }
    Ok((xi0, xi1))
}

/// Bell-diagonal state with `σ₂ = √2p|ξ₀⟩⟨ξ₀| + q|00⟩⟨00|`, `σ₃ = √2p|ξ₁⟩⟨ξ₁| + q|00⟩⟨00|`.
pub fn example3(params: &Ex34Params) -> Result<BellDiagonalShieldState> {
    let Ex34Params { q } = Ex34Params::new(params.q)?;
    let p = p_of_q(q);
    let (s0, s1) = ex34_sigma01(p);
    let (xi0, xi1) = example3_xis(p)?;
    let q00 = ket_projector(0, 0).scale(q);
    let s2 = &ComplexMatrix::projector(&xi0).scale(SQRT_2 * p) + &q00;
    let s3 = &ComplexMatrix::projector(&xi1).scale(SQRT_2 * p) + &q00;
    BellDiagonalShieldState::new(EX34_SHIELD, [s0, s1, s2, s3])
}

/// `σ₂ = (p/√2)(|01⟩⟨01| + |10⟩⟨10|) + (q/2)(|00⟩⟨00| + |11⟩⟨11|)`.
pub fn example4_sigma2(q: f64) -> ComplexMatrix {
    let p = p_of_q(q);
    let off = (&ket_projector(0, 1) + &ket_projector(1, 0)).scale(p / SQRT_2);
    let diag = (&ket_projector(0, 0) + &ket_projector(1, 1)).scale(q / 2.0);
    &off + &diag
}

/// `½[[σ₀+σ₁,0,0,σ₀−σ₁],[0,2σ₂,0,0],[0,0,2σ₂,0],[σ₀−σ₁,0,0,σ₀+σ₁]]`.
pub fn example4(params: &Ex34Params) -> Result<BlockState> {
    let Ex34Params { q } = Ex34Params::new(params.q)?;
    let (s0, s1) = ex34_sigma01(p_of_q(q));
    x_form(
        EX34_SHIELD,
        (&s0 + &s1).scale(0.5),
        (&s0 - &s1).scale(0.5),
        example4_sigma2(q),
    )
}

/// `1 + 4p log₂4p + q log₂q + (2√2p+q) log₂(2√2p+q)`.
pub fn kdw_example3(q: f64) -> f64 {
    let p = p_of_q(q);
    1.0 + xlog2x(4.0 * p) + xlog2x(q) + xlog2x(2.0 * SQRT_2 * p + q)
}

/// `1 + 4p log₂4p + 2(√2p+q) log₂(√2p+q)`.
pub fn kdw_example4(q: f64) -> f64 {
    let p = p_of_q(q);
    1.0 + xlog2x(4.0 * p) + 2.0 * xlog2x(SQRT_2 * p + q)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family34 {
    Ex3,
    Ex4,
}

impl Family34 {
    pub fn state(self, params: &Ex34Params) -> Result<BlockState> {
        match self {
            Family34::Ex3 => Ok(example3(params)?.render_blocks()),
            Family34::Ex4 => example4(params),
        }
    }

    pub fn closed_form(self, q: f64) -> f64 {
        match self {
            Family34::Ex3 => kdw_example3(q),
            Family34::Ex4 => kdw_example4(q),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub q: f64,
    pub p: f64,
    pub summary: CcqSummary,
}

/// Tolerance between the pipeline value and the closed form.
pub const SWEEP_TOL: f64 = 1e-9;

/// Points `from, from + step, …` up to `to` (inclusive within half a step).
pub fn q_grid(from: f64, to: f64, step: f64) -> Result<Vec<f64>> {
    if !(from.is_finite() && to.is_finite() && step.is_finite()) || to < from {
        return Err(Error::ParamOutOfRange(format!("bad range {from}..{to}")));
    }
    if from < 0.0 || to >= q_max() {
        return Err(Error::ParamOutOfRange(format!(
            "range {from}..{to} leaves [0, {})",
            q_max()
        )));
    }
    if to == from {
        return Ok(vec![from]);
    }
    if step <= 0.0 {
        return Err(Error::ParamOutOfRange(format!("step {step} must be positive")));
    }
    let count = ((to - from) / step + 0.5).floor() as usize + 1;
    Ok((0..count)
        .map(|i| from + i as f64 * step)
        .filter(|&q| q < q_max())
        .collect())
}

/// `q = 0, 0.001, …, 0.073`.
pub fn default_q_grid() -> Vec<f64> {
    (0..74).map(|i| i as f64 * 0.001).collect()
}

pub fn fig1_sweep(family: Family34, grid: &[f64]) -> Result<Vec<SweepRow>> {
    grid.iter()
        .map(|&q| {
            let params = Ex34Params::new(q)?;
            let report = check_theorem2(&family.state(&params)?)?;
            let closed = family.closed_form(q);
            let gap = (report.summary.k_dw - closed).abs();
            if gap > SWEEP_TOL {
                return Err(Error::CrossCheck(format!(
                    "K_DW at q = {q}: pipeline {} vs closed form {closed}",
                    report.summary.k_dw
                )));
            }
            Ok(SweepRow {
                q,
                p: params.p(),
                summary: report.summary,
            })
        })
        .collect()
}

/// `|φ⁺⟩⟨φ⁺| ⊗ ρ_s` with the maximally mixed shield, handy as a known NPT state.
pub fn phi_plus_with_mixed_shield(dims: ShieldDims) -> BlockState {
    let s = dims.size();
    let dense = tensor(&Bell::PhiPlus.projector(), &ComplexMatrix::identity(s).scale(1.0 / s as f64));
    BlockState::from_dense_unchecked(&dense, dims).expect("dims match")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distill::{check_corollary1, check_theorem1, iterate_closed_form};
    use crate::opalg::is_psd;
    use approx::assert_abs_diff_eq;

    #[test]
    fn projector_identities() {
        for d in [2, 3] {
            let (ps, pa) = sym_antisym_projectors(d).unwrap();
            let id = ComplexMatrix::identity(d * d);
            assert!((&ps + &pa).max_abs_diff(&id) < 1e-15);
            assert!(ps.matmul(&pa).max_abs() < 1e-15);
            assert_abs_diff_eq!(ps.trace().re, (d * (d + 1) / 2) as f64);
            let (rs, ra) = werner_states(d).unwrap();
            assert_abs_diff_eq!(rs.trace().re, 1.0, epsilon = 1e-15);
            assert_abs_diff_eq!(ra.trace().re, 1.0, epsilon = 1e-15);
        }
        let (ps, pa) = sym_antisym_projectors(2).unwrap();
        assert_abs_diff_eq!(ps.trace().re, 3.0);
        assert_abs_diff_eq!(pa.trace().re, 1.0);
        assert!(sym_antisym_projectors(1).is_err());
    }

    #[test]
    fn tau_difference_closed_form() {
        for (d, l) in [(2, 1), (2, 2), (3, 1), (2, 5), (3, 4), (4, 9)] {
            let want = 2.0 * (1.0 - 0.5f64.powi(l as i32));
            assert_abs_diff_eq!(tau_difference_norm(d, l).unwrap(), want, epsilon = 1e-12);
        }
    }

    #[test]
    fn example1_iterate_matches_recurrence() {
        let budget = MemoryBudget::default();
        let base = Ex1Params { d: 2, l: 1, p: 0.3, m: 1 };
        let r = example1_state(&base, &budget).unwrap();
        assert!(r.validate().is_valid());
        for m in [2, 3] {
            let direct = example1_state(&Ex1Params { m, ..base }, &budget).unwrap();
            let iterated = iterate_closed_form(&r, m, &budget).unwrap();
            assert!(direct.to_dense().max_abs_diff(&iterated.to_dense()) < 1e-14);
            assert_abs_diff_eq!(direct.trace(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn example1_weights_match_state_norms() {
        let params = Ex1Params { d: 2, l: 2, p: 0.28, m: 2 };
        let ex = example1(&params, &MemoryBudget::default()).unwrap();
        let state = ex.state.as_ref().unwrap();
        let rep = check_theorem2(state).unwrap();
        assert!(rep.summary.max_abs_diff(&ex.weights) < 1e-10);
        assert_eq!(ex.weights.z, ex.weights.w);
    }

    #[test]
    fn example1_large_params_skip_dense() {
        let params = Ex1Params { d: 3, l: 4, p: 0.3, m: 8 };
        let ex = example1(&params, &MemoryBudget::default()).unwrap();
        assert!(ex.state.is_none());
        assert_abs_diff_eq!(ex.weights.weights().iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        assert!(matches!(
            example1_state(&params, &MemoryBudget::default()),
            Err(Error::MemoryBudgetExceeded { .. })
        ));
    }

    #[test]
    fn example1_ppt_reference_point() {
        let params = Ex1Params::default();
        assert!(params.ppt_flag());
        let r = example1_state(&params, &MemoryBudget::default()).unwrap();
        assert!(r.ppt_check().unwrap().psd);
        let npt = Ex1Params { p: 0.4, ..params };
        assert!(!npt.ppt_flag());
        assert!(!example1_state(&npt, &MemoryBudget::default()).unwrap().ppt_check().unwrap().psd);
    }

    #[test]
    fn example1_minimal_rounds_in_key_window() {
        let (m, l) = example1_minimal_rounds(2, 0.3).unwrap().unwrap();
        let params = Ex1Params { d: 2, l, p: 0.3, m };
        assert!(example1_weights(&params).unwrap().s_e < 1.0);
        if m > 1 {
            assert!(example1_weights(&Ex1Params { m: m - 1, ..params }).unwrap().s_e >= 1.0 - 1e-9);
        }
        assert_eq!(example1_minimal_rounds(2, 0.1).unwrap(), None);
    }

    #[test]
    fn example2_weights_and_bound() {
        let r = example2(&Ex2Params::default()).unwrap();
        assert!(r.validate().is_valid());
        let rep = check_theorem2(&r).unwrap();
        let s = rep.summary;
        assert_abs_diff_eq!(s.x, 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(s.y, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.z, 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(s.w, 0.0, epsilon = 1e-12);
        assert!(rep.holds);
        assert_abs_diff_eq!(rep.k_dw_bound(), 0.18872187554086717, epsilon = 1e-10);

        assert!(!check_theorem2(&example2(&Ex2Params::with_p1(0.5)).unwrap()).unwrap().holds);
        let bad = Ex2Params { x1: Bell::PhiPlus.projector().scale(2.0), ..Ex2Params::default() };
        assert!(matches!(example2(&bad), Err(Error::NormNotOne { .. })));
    }

    #[test]
    fn example3_structure() {
        for q in [0.0, 0.01, 0.05, 0.07] {
            let params = Ex34Params::new(q).unwrap();
            let b = example3(&params).unwrap();
            let r = b.render_blocks();
            assert!(r.validate().is_valid());
            assert!(r.partial_transpose_bb().max_abs_diff(&r.to_dense()) <= 1e-12);
            let rep = check_corollary1(&b).unwrap();
            assert!(rep.holds);
            assert_abs_diff_eq!(rep.diff_norm, 4.0 * params.p(), epsilon = 1e-12);
        }
    }

    #[test]
    fn example3_xi_vectors() {
        let p = p_of_q(0.03);
        let (xi0, xi1) = example3_xis(p).unwrap();
        let norm = (1.0 + (SQRT_2 - 1.0).powi(2)).sqrt();
        assert_abs_diff_eq!(xi0[1].re, 1.0 / norm, epsilon = 1e-12);
        assert_abs_diff_eq!(xi0[2].re, (SQRT_2 - 1.0) / norm, epsilon = 1e-12);
        assert!(xi0[0].norm() < 1e-12 && xi0[3].norm() < 1e-12);
        assert!(crate::opalg::inner(&xi0, &xi1).norm() < 1e-12);
    }

    #[test]
    fn example4_structure() {
        for q in [0.0, 0.03, 0.07] {
            let r = example4(&Ex34Params::new(q).unwrap()).unwrap();
            assert!(r.validate().is_valid());
            assert!(r.ppt_check().unwrap().min_eigenvalue >= -1e-10);
            assert!(check_theorem1(&r).unwrap().holds);
            assert!(!check_theorem2(&r).unwrap().holds);
        }
        assert!(Ex34Params::new(q_max()).is_err());
        assert!(Ex34Params::new(-0.001).is_err());
    }

    #[test]
    fn shared_weights_between_examples() {
        let q = 0.04;
        let params = Ex34Params::new(q).unwrap();
        let p = params.p();
        let a = check_theorem2(&example3(&params).unwrap().render_blocks()).unwrap().summary;
        let b = check_theorem2(&example4(&params).unwrap()).unwrap().summary;
        assert_abs_diff_eq!(a.x, 4.0 * p, epsilon = 1e-12);
        assert_abs_diff_eq!(b.x, 4.0 * p, epsilon = 1e-12);
        assert_abs_diff_eq!(a.y, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b.y, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(a.z, 2.0 * SQRT_2 * p + q, epsilon = 1e-12);
        assert_abs_diff_eq!(a.w, q, epsilon = 1e-12);
        assert_abs_diff_eq!(b.z, SQRT_2 * p + q, epsilon = 1e-12);
        assert_abs_diff_eq!(b.w, SQRT_2 * p + q, epsilon = 1e-12);
    }

    #[test]
    fn closed_form_reference_values() {
        assert_abs_diff_eq!(kdw_example3(0.0), 0.021339915649840502, epsilon = 1e-12);
        assert_abs_diff_eq!(kdw_example3(0.005), -0.020620328325095527, epsilon = 1e-12);
        assert_abs_diff_eq!(kdw_example3(0.07), -0.29125319167030156, epsilon = 1e-12);
        assert_abs_diff_eq!(kdw_example4(0.0), -0.39287364672325464, epsilon = 1e-12);
        assert_abs_diff_eq!(kdw_example4(0.03), -0.44194894401167506, epsilon = 1e-12);
    }

    #[test]
    fn sweep_grid_and_ordering() {
        let grid = default_q_grid();
        assert_eq!(grid.len(), 74);
        let r3 = fig1_sweep(Family34::Ex3, &grid).unwrap();
        let r4 = fig1_sweep(Family34::Ex4, &grid).unwrap();
        assert!(r3[0].summary.k_dw > 0.0);
        assert!(r3.last().unwrap().summary.k_dw < 0.0);
        for (a, b) in r3.iter().zip(&r4) {
            assert!(b.summary.k_dw < 0.0);
            assert!(a.summary.k_dw > b.summary.k_dw);
        }
        assert_eq!(q_grid(0.01, 0.01, 0.0).unwrap(), vec![0.01]);
        assert_eq!(q_grid(0.0, 0.002, 0.001).unwrap().len(), 3);
        assert!(q_grid(0.0, 0.08, 0.001).is_err());
        assert!(fig1_sweep(Family34::Ex3, &[0.1]).is_err());
    }

    #[test]
    fn generated_states_are_valid() {
        let r = phi_plus_with_mixed_shield(ShieldDims::new(2, 2).unwrap());
        assert!(r.validate().is_valid());
        assert!(!is_psd(&r.partial_transpose_bb(), 1e-9).unwrap().psd);
    }
}
