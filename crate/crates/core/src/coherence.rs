//! Coherence measures, basis pruning and the empirical bound checks built on them.
//!
//! Two notions are provided. The C-coherence of `A` is the ratio of its
//! largest row norm to the typical row norm `‖A‖_F / √m`. The μ0-coherence is
//! `(m / r) · max_j ‖U_(j)‖²` for the rank-`r` left singular factor `U`.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::linalg::gram_schmidt;
use crate::matrix::{gaussian_matrix, DenseMatrix};
use crate::rng::RngSeed;
use crate::svd::{left_singular_factor, numerical_rank};

/// Singular values below this fraction of σ₁ count as zero for μ0.
pub const DEFAULT_RANK_TOLERANCE: f64 = 1e-9;

/// Constant multiplying the `sqrt(k ln m / m)` term of the ℓ∞ basis bound.
pub const LINF_LOG_TERM_CONSTANT: f64 = 8.0;

/// Constant used when reporting whether `m ≥ c₀ k (r + k) ln(r + k)`.
pub const PERTURB_REGIME_CONSTANT: f64 = 40.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoherenceReport {
    pub c_coherence: f64,
    pub mu0_coherence: f64,
    pub rank_used: usize,
    pub max_row_norm: f64,
    pub frobenius_norm: f64,
}

impl CoherenceReport {
    pub fn compute(a: &DenseMatrix, rank_tolerance: f64) -> Result<Self> {
        let c = c_coherence(a)?;
        let (mu0, rank_used) = mu0_coherence(a, rank_tolerance)?;
        Ok(CoherenceReport {
            c_coherence: c,
            mu0_coherence: mu0,
            rank_used,
            max_row_norm: a.row_norms().into_iter().fold(0.0, f64::max),
            frobenius_norm: a.frobenius_norm(),
        })
    }
}

/// Smallest `C` with `max_i ‖e_iᵀA‖ ≤ C ‖A‖_F / √m`.
pub fn c_coherence(a: &DenseMatrix) -> Result<f64> {
    let frob = a.frobenius_norm();
    if frob == 0.0 {
        return Err(invalid("C-coherence is undefined for the zero matrix"));
    }
    let max_row = a.row_norms().into_iter().fold(0.0, f64::max);
    Ok(max_row * (a.rows() as f64).sqrt() / frob)
}

/// μ0-coherence of the left singular factor truncated to singular values
/// above `rank_tolerance · σ₁`. Returns `(μ0, rank_used)`.
pub fn mu0_coherence(a: &DenseMatrix, rank_tolerance: f64) -> Result<(f64, usize)> {
    if !(rank_tolerance > 0.0) {
        return Err(invalid("rank tolerance must be positive"));
    }
    if a.is_zero() {
        return Err(invalid("μ0-coherence is undefined for the zero matrix"));
    }
    let (u, values) = left_singular_factor(a)?;
    let r = numerical_rank(&values, rank_tolerance);
    Ok((mu0_of_basis(&u.leading_columns(r)), r))
}

/// `(m / r) · max_j ‖U_(j)‖²` for a basis with `r` columns.
pub fn mu0_of_basis(u: &DenseMatrix) -> f64 {
    let (m, r) = u.shape();
    let max_sq = (0..m).map(|i| u.row(i).iter().map(|v| v * v).sum::<f64>()).fold(0.0, f64::max);
    m as f64 / r as f64 * max_sq
}

/// Zeroes every entry with `|w_ij| > alpha`; entries equal to `alpha` are kept.
///
/// Column norms are not checked here; callers that rely on unit columns
/// check them themselves.
pub fn prune_entries(w: &DenseMatrix, alpha: f64) -> Result<DenseMatrix> {
    if !(alpha > 0.0) {
        return Err(invalid(format!("pruning threshold must be positive, got {alpha}")));
    }
    Ok(w.map(|v| if v.abs() > alpha { 0.0 } else { v }))
}

pub(crate) fn check_column_norms(w: &DenseMatrix) -> Result<()> {
    for j in 0..w.cols() {
        let norm = crate::matrix::norm2(&w.column(j));
        if norm > 1.0 + 1e-10 {
            return Err(Error::ColumnNormTooLarge { col: j, norm });
        }
    }
    Ok(())
}

/// Both sides of the pruning error inequality
/// `‖W W_αᵀ A − W Wᵀ A‖_F ≤ C k ‖A‖_F / (α √m)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncationCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

pub fn truncation_error_check(a: &DenseMatrix, w: &DenseMatrix, alpha: f64) -> Result<TruncationCheck> {
    if a.rows() != w.rows() {
        return Err(Error::DimensionMismatch("basis and matrix row counts differ".into()));
    }
    check_column_norms(w)?;
    let pruned = prune_entries(w, alpha)?;
    let exact = w.matmul(&w.t_matmul(a)?)?;
    let truncated = w.matmul(&pruned.t_matmul(a)?)?;
    let lhs = truncated.sub(&exact)?.frobenius_norm();
    let k = w.cols() as f64;
    let rhs = c_coherence(a)? * k * a.frobenius_norm() / (alpha * (a.rows() as f64).sqrt());
    Ok(TruncationCheck { lhs, rhs, holds: lhs <= rhs + 1e-8 })
}

/// Outcome of the ℓ∞ basis experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinfCheck {
    /// `max_i ‖w_i‖_∞` over the computed basis.
    pub observed_linf: f64,
    /// `sqrt(4 r μ0 / m) + 8 sqrt(k ln m / m)`.
    pub bound: f64,
    pub mu0: f64,
    pub rank: usize,
    /// Whether `m ≥ 40 k (r + k) ln(r + k)` held.
    pub perturb_regime: bool,
}

/// Forms `Ỹ = AΩ + N` with `Ω ~ N(0,1)^{n×k}`, `N ~ N(0, σ²)^{m×k}`,
/// orthonormalizes it and compares the basis' largest entry with the bound.
pub fn linf_basis_bound_check(a: &DenseMatrix, k: usize, sigma: f64, seed: RngSeed) -> Result<LinfCheck> {
    let (m, n) = a.shape();
    if k == 0 || k > m {
        return Err(invalid(format!("need 1 ≤ k ≤ m, got k = {k}, m = {m}")));
    }
    let (mu0, rank) = mu0_coherence(a, DEFAULT_RANK_TOLERANCE)?;
    let omega = gaussian_matrix(n, k, 0.0, 1.0, seed.derive(1))?;
    let noise = gaussian_matrix(m, k, 0.0, sigma, seed.derive(2))?;
    let y = a.matmul(&omega)?.add(&noise)?;
    let w = gram_schmidt(&y);
    let observed_linf = w.max_abs();
    let mf = m as f64;
    let bound = (4.0 * rank as f64 * mu0 / mf).sqrt() + LINF_LOG_TERM_CONSTANT * (k as f64 * mf.ln() / mf).sqrt();
    let rk = (rank + k) as f64;
    let perturb_regime = mf >= PERTURB_REGIME_CONSTANT * k as f64 * rk * rk.ln();
    Ok(LinfCheck { observed_linf, bound, mu0, rank, perturb_regime })
}
