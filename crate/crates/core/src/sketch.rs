//! Sketch-then-project low-rank approximation, with and without privacy.
//!
//! * [`hmt_low_rank`]: `Y = AΩ`, `B = P_Y A`, no noise.
//! * [`private_range_finder`]: perturbs the sketch `AΩ` with Gaussian noise of
//!   scale `ρ = 2ε⁻¹ sqrt(2k ln(4k/δ))` and orthonormalizes it.
//! * [`private_projection`]: releases `WᵀA + N` with row `i` of `N` drawn from
//!   `N(0, α_i² ρ²)`, `α_i = ‖w_i‖_∞`, `ρ = 2ε⁻¹ sqrt(8k ln(4k/δ) ln(2/δ))`.
//! * [`pfp`]: range finder at `(ε/2, δ/2)`, entry pruning at `α`, projection at
//!   `(ε/2, δ/2)`.
//!
//! Random streams derived from the seed: `Ω` uses stream 1, range noise
//! stream 2 and projection noise stream 3, so a noiseless [`pfp`] reproduces
//! [`hmt_low_rank`] exactly.

use std::sync::Once;

use serde::{Deserialize, Serialize};

use crate::approx::{ApproxResult, Diagnostics, NoiseScales};
use crate::coherence::{c_coherence, check_column_norms, prune_entries};
use crate::error::{invalid, Result};
use crate::linalg::{gram_schmidt, project_unchecked};
use crate::matrix::{gaussian_matrix, DenseMatrix};
use crate::privacy::{basic_composition, PrivacyBudget};
use crate::rng::RngSeed;

const OMEGA_STREAM: u64 = 1;
const RANGE_NOISE_STREAM: u64 = 2;
const PROJECTION_NOISE_STREAM: u64 = 3;

/// Smallest pruning threshold [`select_alpha`] returns.
pub const MIN_ALPHA: f64 = 1e-6;

/// Target rank `r`, oversampling `p` and seed; the sketch width is `k = r + p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SketchParams {
    target_rank: usize,
    oversampling: usize,
    pub seed: RngSeed,
}

impl SketchParams {
    pub fn new(target_rank: usize, oversampling: usize, seed: RngSeed) -> Result<Self> {
        if target_rank < 2 {
            return Err(invalid(format!("target rank must be at least 2, got {target_rank}")));
        }
        if oversampling < 2 {
            return Err(invalid(format!("oversampling must be at least 2, got {oversampling}")));
        }
        Ok(SketchParams { target_rank, oversampling, seed })
    }

    /// Oversampling `p = r + 1`.
    pub fn with_default_oversampling(target_rank: usize, seed: RngSeed) -> Result<Self> {
        Self::new(target_rank, target_rank + 1, seed)
    }

    pub fn target_rank(&self) -> usize {
        self.target_rank
    }

    pub fn oversampling(&self) -> usize {
        self.oversampling
    }

    pub fn k(&self) -> usize {
        self.target_rank + self.oversampling
    }

    pub fn with_seed(self, seed: RngSeed) -> Self {
        SketchParams { seed, ..self }
    }

    fn check_shape(&self, a: &DenseMatrix) -> Result<()> {
        let (m, n) = a.shape();
        if self.k() > m.min(n) {
            return Err(invalid(format!("k = r + p = {} exceeds min(m, n) = {}", self.k(), m.min(n))));
        }
        Ok(())
    }
}

/// How [`pfp`] chooses its pruning threshold when none is supplied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CoherenceMode {
    /// α from [`select_alpha`], using `C` and `‖A‖_F` measured on the data.
    CCoherent,
    /// α = 1: the range basis is used unpruned.
    Mu0Coherent,
}

#[derive(Debug, Clone)]
pub struct RangeResult {
    /// `m × k_effective`, orthonormal columns.
    pub w: DenseMatrix,
    pub rho_range: f64,
    pub k_effective: usize,
}

/// `2ε⁻¹ sqrt(2k ln(4k/δ))`.
pub fn range_noise_scale(k: usize, budget: PrivacyBudget) -> f64 {
    let k = k as f64;
    2.0 / budget.epsilon() * (2.0 * k * (4.0 * k / budget.delta()).ln()).sqrt()
}

/// `2ε⁻¹ sqrt(8k ln(4k/δ) ln(2/δ))`.
pub fn projection_noise_scale(k: usize, budget: PrivacyBudget) -> f64 {
    let kf = k as f64;
    let d = budget.delta();
    2.0 / budget.epsilon() * (8.0 * kf * (4.0 * kf / d).ln() * (2.0 / d).ln()).sqrt()
}

/// Non-private randomized range finder followed by exact projection.
pub fn hmt_low_rank(a: &DenseMatrix, params: SketchParams) -> Result<ApproxResult> {
    params.check_shape(a)?;
    let omega = gaussian_matrix(a.cols(), params.k(), 0.0, 1.0, params.seed.derive(OMEGA_STREAM))?;
    let w = gram_schmidt(&a.matmul(&omega)?);
    let b = project_unchecked(&w, a);
    let achieved_error = a.sub(&b)?.frobenius_norm();
    Ok(ApproxResult {
        b,
        alpha_used: 1.0,
        noise: NoiseScales::default(),
        achieved_error,
        budget_spent: None,
        diagnostics: Diagnostics { range_error: Some(achieved_error), ..Diagnostics::default() },
    })
}

/// Private range finder: orthonormal basis of `AΩ + N`.
pub fn private_range_finder(a: &DenseMatrix, params: SketchParams, budget: PrivacyBudget) -> Result<RangeResult> {
    range_finder_impl(a, params, budget, None)
}

pub(crate) fn range_finder_impl(
    a: &DenseMatrix,
    params: SketchParams,
    budget: PrivacyBudget,
    rho_override: Option<f64>,
) -> Result<RangeResult> {
    params.check_shape(a)?;
    let k = params.k();
    let rho = range_noise_scale(k, budget);
    let applied = rho_override.unwrap_or(rho);
    let omega = gaussian_matrix(a.cols(), k, 0.0, 1.0, params.seed.derive(OMEGA_STREAM))?;
    let mut y = a.matmul(&omega)?;
    if applied != 0.0 {
        let noise = gaussian_matrix(a.rows(), k, 0.0, applied, params.seed.derive(RANGE_NOISE_STREAM))?;
        y = y.add(&noise)?;
    }
    let w = gram_schmidt(&y);
    let k_effective = w.cols();
    Ok(RangeResult { w, rho_range: applied, k_effective })
}

pub(crate) struct Projection {
    pub b: DenseMatrix,
    pub rho: f64,
    /// `Σ_i α_i²`.
    pub alpha_sq_sum: f64,
    /// `‖W N‖_F`.
    pub noise_norm: f64,
}

/// Private projection `B = W(WᵀA + N)` for a `w` whose columns have norm ≤ 1.
pub fn private_projection(a: &DenseMatrix, w: &DenseMatrix, budget: PrivacyBudget, seed: RngSeed) -> Result<DenseMatrix> {
    Ok(projection_impl(a, w, budget, seed, None)?.b)
}

pub(crate) fn projection_impl(
    a: &DenseMatrix,
    w: &DenseMatrix,
    budget: PrivacyBudget,
    seed: RngSeed,
    rho_override: Option<f64>,
) -> Result<Projection> {
    if w.rows() != a.rows() {
        return Err(crate::Error::DimensionMismatch(format!(
            "basis has {} rows, matrix has {}",
            w.rows(),
            a.rows()
        )));
    }
    check_column_norms(w)?;
    let k = w.cols();
    if k == 0 {
        return Ok(Projection { b: DenseMatrix::zeros(a.rows(), a.cols()), rho: 0.0, alpha_sq_sum: 0.0, noise_norm: 0.0 });
    }
    let rho = rho_override.unwrap_or_else(|| projection_noise_scale(k, budget));
    let alphas: Vec<f64> = (0..k).map(|j| w.column(j).iter().fold(0.0, |m: f64, v| m.max(v.abs()))).collect();
    let alpha_sq_sum = alphas.iter().map(|a| a * a).sum();
    let mut coeffs = w.t_matmul(a)?;
    let mut noise_norm = 0.0;
    if rho != 0.0 {
        let z = gaussian_matrix(k, a.cols(), 0.0, 1.0, seed)?;
        let noise = DenseMatrix::from_fn(k, a.cols(), |i, j| alphas[i] * rho * z.get(i, j));
        noise_norm = w.matmul(&noise)?.frobenius_norm();
        coeffs = coeffs.add(&noise)?;
    }
    let b = w.matmul(&coeffs)?;
    Ok(Projection { b, rho, alpha_sq_sum, noise_norm })
}

/// Pruning threshold balancing `Ck‖A‖_F / (α√m)` against `αk√n ln(4k/δ) / ε`:
/// `sqrt(C‖A‖_F ε / (sqrt(mn) ln(4k/δ)))`, clamped to `[1e-6, 1]`.
pub fn select_alpha(a_frobenius: f64, c: f64, k: usize, m: usize, n: usize, budget: PrivacyBudget) -> f64 {
    let raw = (c * a_frobenius * budget.epsilon()
        / ((m as f64 * n as f64).sqrt() * (4.0 * k as f64 / budget.delta()).ln()))
    .sqrt();
    if raw.is_nan() {
        return MIN_ALPHA;
    }
    raw.clamp(MIN_ALPHA, 1.0)
}

/// Private find and project.
///
/// In [`CoherenceMode::CCoherent`] without an override, `C` and `‖A‖_F` are
/// read from the data to choose α; that auxiliary computation is not
/// privatized and a warning is logged.
pub fn pfp(
    a: &DenseMatrix,
    params: SketchParams,
    budget: PrivacyBudget,
    mode: CoherenceMode,
    alpha_override: Option<f64>,
) -> Result<ApproxResult> {
    pfp_impl(a, params, budget, mode, alpha_override, None, None)
}

pub(crate) fn pfp_impl(
    a: &DenseMatrix,
    params: SketchParams,
    budget: PrivacyBudget,
    mode: CoherenceMode,
    alpha_override: Option<f64>,
    range_rho: Option<f64>,
    projection_rho: Option<f64>,
) -> Result<ApproxResult> {
    if let Some(alpha) = alpha_override {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(invalid(format!("alpha must lie in (0, 1], got {alpha}")));
        }
    }
    params.check_shape(a)?;
    let stage = budget.halve();
    let range = range_finder_impl(a, params, stage, range_rho)?;

    let alpha = match (alpha_override, mode) {
        (Some(alpha), _) => alpha,
        (None, CoherenceMode::Mu0Coherent) => 1.0,
        (None, CoherenceMode::CCoherent) => {
            static WARNED: Once = Once::new();
            WARNED.call_once(|| {
                log::warn!(
                    "choosing alpha from the data's C-coherence and Frobenius norm; \
                     this auxiliary computation is NOT differentially private"
                )
            });
            let c = if a.is_zero() { 1.0 } else { c_coherence(a)? };
            select_alpha(a.frobenius_norm(), c, params.k(), a.rows(), a.cols(), budget)
        }
    };
    let pruned = prune_entries(&range.w, alpha)?;
    let proj = projection_impl(a, &pruned, stage, params.seed.derive(PROJECTION_NOISE_STREAM), projection_rho)?;

    let exact = project_unchecked(&range.w, a);
    let range_error = a.sub(&exact)?.frobenius_norm();
    let truncation_error = if alpha >= 1.0 {
        0.0
    } else {
        exact.sub(&project_unchecked(&pruned, a))?.frobenius_norm()
    };
    let bound = (pruned.cols() as f64 * proj.alpha_sq_sum * proj.rho * proj.rho * a.cols() as f64).sqrt();
    let spent = basic_composition(2, stage)?;
    let achieved_error = a.sub(&proj.b)?.frobenius_norm();
    Ok(ApproxResult {
        b: proj.b,
        alpha_used: alpha,
        noise: NoiseScales { input: 0.0, range: range.rho_range, projection: proj.rho },
        achieved_error,
        budget_spent: Some(PrivacyBudget::new(spent.epsilon, spent.delta)?),
        diagnostics: Diagnostics {
            range_error: Some(range_error),
            truncation_error: Some(truncation_error),
            projection_noise: Some(proj.noise_norm),
            projection_bound_ratio: (bound > 0.0).then(|| proj.noise_norm / bound),
        },
    })
}
