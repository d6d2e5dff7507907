//! Noise-override entry points for tests.
//!
//! Every function here runs the same code path as its public counterpart but
//! replaces the calibrated noise scale with the given one. Passing `0.0`
//! removes the noise entirely. Nothing in this module is private.

use crate::approx::ApproxResult;
use crate::error::Result;
use crate::matrix::DenseMatrix;
use crate::privacy::{perturb, rr_low_rank_with_sigma, PrivacyBudget};
use crate::rng::RngSeed;
use crate::sketch::{pfp_impl, projection_impl, range_finder_impl, CoherenceMode, RangeResult, SketchParams};

pub fn range_finder_with_noise(
    a: &DenseMatrix,
    params: SketchParams,
    budget: PrivacyBudget,
    rho: f64,
) -> Result<RangeResult> {
    range_finder_impl(a, params, budget, Some(rho))
}

pub fn projection_with_noise(
    a: &DenseMatrix,
    w: &DenseMatrix,
    budget: PrivacyBudget,
    seed: RngSeed,
    rho: f64,
) -> Result<DenseMatrix> {
    Ok(projection_impl(a, w, budget, seed, Some(rho))?.b)
}

pub fn pfp_with_noise(
    a: &DenseMatrix,
    params: SketchParams,
    budget: PrivacyBudget,
    mode: CoherenceMode,
    alpha_override: Option<f64>,
    range_rho: f64,
    projection_rho: f64,
) -> Result<ApproxResult> {
    pfp_impl(a, params, budget, mode, alpha_override, Some(range_rho), Some(projection_rho))
}

pub fn randomized_response_with_noise(a: &DenseMatrix, sigma: f64, seed: RngSeed) -> Result<DenseMatrix> {
    perturb(a, sigma, seed)
}

pub fn rr_low_rank_with_noise(
    a: &DenseMatrix,
    k: usize,
    sigma: f64,
    budget: PrivacyBudget,
    seed: RngSeed,
) -> Result<ApproxResult> {
    rr_low_rank_with_sigma(a, k, sigma, budget, seed)
}
