use serde::Serialize;

use crate::matrix::DenseMatrix;
use crate::privacy::PrivacyBudget;

/// Per-stage noise standard deviations; zero where a stage adds no noise.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct NoiseScales {
    /// Entry-wise input perturbation (randomized response).
    pub input: f64,
    /// Range-finder noise `ρ` on the sketch.
    pub range: f64,
    /// Projection noise `ρ` before scaling by each column's `α_i`.
    pub projection: f64,
}

/// Error decomposition of a find-and-project run.
///
/// `A − B = (A − WWᵀA) + (WWᵀA − W'W'ᵀA) − W'N`, so the achieved error is at
/// most the sum of the three norms below.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Diagnostics {
    /// `‖A − WWᵀA‖_F` for the unpruned range basis.
    pub range_error: Option<f64>,
    /// `‖WWᵀA − W'W'ᵀA‖_F` introduced by pruning.
    pub truncation_error: Option<f64>,
    /// `‖W'N‖_F`.
    pub projection_noise: Option<f64>,
    /// `‖W'N‖_F / sqrt(k Σ_i α_i² ρ² n)`.
    pub projection_bound_ratio: Option<f64>,
}

/// Output of every low-rank approximation routine.
#[derive(Debug, Clone)]
pub struct ApproxResult {
    pub b: DenseMatrix,
    pub alpha_used: f64,
    pub noise: NoiseScales,
    /// `‖A − B‖_F`.
    pub achieved_error: f64,
    /// `None` for the non-private baseline.
    pub budget_spent: Option<PrivacyBudget>,
    pub diagnostics: Diagnostics,
}
