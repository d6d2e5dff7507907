//! Privacy budgets, Gaussian noise calibration, composition and the
//! input-perturbation baseline.
//!
//! All logarithms are natural. Neighboring matrices differ in one row by at
//! most 1 in ℓ2.

use serde::{Deserialize, Serialize};

use crate::approx::{ApproxResult, Diagnostics, NoiseScales};
use crate::error::{invalid, Result};
use crate::matrix::{gaussian_matrix, DenseMatrix};
use crate::rng::RngSeed;
use crate::svd::left_singular_factor;

/// An `(ε, δ)` pair with `ε ∈ (0, 1]` and `δ ∈ (0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyBudget {
    epsilon: f64,
    delta: f64,
}

impl PrivacyBudget {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(invalid(format!("epsilon must lie in (0, 1], got {epsilon}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(invalid(format!("delta must lie in (0, 1), got {delta}")));
        }
        Ok(PrivacyBudget { epsilon, delta })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `(ε/2, δ/2)`, the per-stage share of a two-stage pipeline.
    pub fn halve(&self) -> PrivacyBudget {
        PrivacyBudget { epsilon: self.epsilon / 2.0, delta: self.delta / 2.0 }
    }
}

/// Calibrated noise level of the Gaussian mechanism for one query.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseCalibration {
    pub sigma: f64,
    pub sensitivity: f64,
    pub budget: PrivacyBudget,
}

impl NoiseCalibration {
    pub fn new(sensitivity: f64, budget: PrivacyBudget) -> Result<Self> {
        Ok(NoiseCalibration { sigma: gaussian_mechanism_sigma(sensitivity, budget)?, sensitivity, budget })
    }
}

/// `c · ε⁻¹ · sqrt(ln(1.25 / δ))` for ℓ2-sensitivity `c`.
pub fn gaussian_mechanism_sigma(c: f64, budget: PrivacyBudget) -> Result<f64> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(invalid(format!("sensitivity must be positive, got {c}")));
    }
    Ok(c / budget.epsilon * (1.25 / budget.delta).ln().sqrt())
}

/// Result of composing several mechanisms. `epsilon` may exceed 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComposedBudget {
    pub epsilon: f64,
    pub delta: f64,
}

/// `k` mechanisms at `(ε, δ)` each are jointly `(kε, kδ)`-private.
pub fn basic_composition(k: usize, per_step: PrivacyBudget) -> Result<ComposedBudget> {
    if k == 0 {
        return Err(invalid("composition over zero mechanisms"));
    }
    let kf = k as f64;
    Ok(ComposedBudget { epsilon: kf * per_step.epsilon, delta: kf * per_step.delta })
}

/// Advanced composition: `ε' = sqrt(2k ln(1/δ')) ε + 2kε²` and `δ_total = kδ + δ'`.
pub fn advanced_composition(k: usize, per_step: PrivacyBudget, delta_prime: f64) -> Result<ComposedBudget> {
    if k == 0 {
        return Err(invalid("composition over zero mechanisms"));
    }
    if !(delta_prime > 0.0 && delta_prime < 1.0) {
        return Err(invalid(format!("delta' must lie in (0, 1), got {delta_prime}")));
    }
    let kf = k as f64;
    let eps = per_step.epsilon;
    Ok(ComposedBudget {
        epsilon: (2.0 * kf * (1.0 / delta_prime).ln()).sqrt() * eps + 2.0 * kf * eps * eps,
        delta: kf * per_step.delta + delta_prime,
    })
}

/// Adds i.i.d. `N(0, σ²)` noise to every entry, `σ = gaussian_mechanism_sigma(1, budget)`.
///
/// A unit ℓ2 change of one row is a unit ℓ2 change of the flattened matrix,
/// so sensitivity 1 applies.
pub fn randomized_response(a: &DenseMatrix, budget: PrivacyBudget, seed: RngSeed) -> Result<DenseMatrix> {
    let sigma = gaussian_mechanism_sigma(1.0, budget)?;
    perturb(a, sigma, seed)
}

pub(crate) fn perturb(a: &DenseMatrix, sigma: f64, seed: RngSeed) -> Result<DenseMatrix> {
    if sigma == 0.0 {
        return Ok(a.clone());
    }
    let noise = gaussian_matrix(a.rows(), a.cols(), 0.0, sigma, seed)?;
    a.add(&noise)
}

/// Randomized response followed by the optimal rank-`k` truncation of the
/// perturbed matrix.
pub fn rr_low_rank_baseline(a: &DenseMatrix, k: usize, budget: PrivacyBudget, seed: RngSeed) -> Result<ApproxResult> {
    let sigma = gaussian_mechanism_sigma(1.0, budget)?;
    rr_low_rank_with_sigma(a, k, sigma, budget, seed)
}

pub(crate) fn rr_low_rank_with_sigma(
    a: &DenseMatrix,
    k: usize,
    sigma: f64,
    budget: PrivacyBudget,
    seed: RngSeed,
) -> Result<ApproxResult> {
    let (m, n) = a.shape();
    if k == 0 || k > m.min(n) {
        return Err(invalid(format!("rank {k} must lie in 1..=min({m}, {n})")));
    }
    let noisy = perturb(a, sigma, seed)?;
    let (u, _) = left_singular_factor(&noisy)?;
    let uk = u.leading_columns(k);
    let b = uk.matmul(&uk.t_matmul(&noisy)?)?;
    let achieved_error = a.sub(&b)?.frobenius_norm();
    Ok(ApproxResult {
        b,
        alpha_used: 1.0,
        noise: NoiseScales { input: sigma, ..NoiseScales::default() },
        achieved_error,
        budget_spent: Some(budget),
        diagnostics: Diagnostics::default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn budget(e: f64, d: f64) -> PrivacyBudget {
        PrivacyBudget::new(e, d).unwrap()
    }

    #[test]
    fn budget_validation() {
        assert!(PrivacyBudget::new(0.5, 0.01).is_ok());
        assert!(PrivacyBudget::new(1.0, 1e-5).is_ok());
        for (e, d) in [(0.0, 0.1), (1.0 + 1e-12, 0.1), (1.5, 0.1), (0.5, 0.0), (0.5, 1.0), (f64::NAN, 0.1)] {
            assert!(PrivacyBudget::new(e, d).is_err(), "({e}, {d}) accepted");
        }
    }

    #[test]
    fn sigma_values() {
        let s = gaussian_mechanism_sigma(1.0, budget(1.0, 0.05)).unwrap();
        assert!((s - 1.794_122_577_994_101_5).abs() < 1e-14);
        let s1 = gaussian_mechanism_sigma(1.0, budget(1.0, 1e-5)).unwrap();
        assert!((s1 - 3.425_794_654_716_543).abs() < 1e-14);
        let s2 = gaussian_mechanism_sigma(2.0, budget(1.0, 1e-5)).unwrap();
        assert_eq!(s2, 2.0 * s1);
        assert!(gaussian_mechanism_sigma(0.0, budget(0.5, 0.1)).is_err());
        assert!(gaussian_mechanism_sigma(-1.0, budget(0.5, 0.1)).is_err());
    }

    #[test]
    fn composition_examples() {
        let b = basic_composition(1, budget(0.5, 0.01)).unwrap();
        assert_eq!((b.epsilon, b.delta), (0.5, 0.01));
        let b = basic_composition(2, budget(0.3, 0.02)).unwrap();
        assert_eq!((b.epsilon, b.delta), (0.6, 0.04));
        let adv = advanced_composition(10, budget(0.1, 1e-7), 1e-6).unwrap();
        assert!((adv.epsilon - 1.862_258_136_269_11).abs() < 1e-12);
        assert!((adv.delta - 2e-6).abs() < 1e-20);
        assert!(advanced_composition(0, budget(0.1, 0.1), 1e-6).is_err());
        assert!(basic_composition(0, budget(0.1, 0.1)).is_err());
    }

    #[test]
    fn composition_monotone_in_k() {
        let step = budget(0.05, 1e-6);
        let mut prev = advanced_composition(1, step, 1e-5).unwrap();
        for k in 2..200 {
            let cur = advanced_composition(k, step, 1e-5).unwrap();
            assert!(cur.epsilon >= prev.epsilon && cur.delta >= prev.delta);
            prev = cur;
        }
    }

    #[test]
    fn rr_is_additive_and_deterministic() {
        let b = budget(0.9, 1e-5);
        let a1 = gaussian_matrix(6, 5, 0.0, 1.0, RngSeed(1)).unwrap();
        let a2 = gaussian_matrix(6, 5, 3.0, 2.0, RngSeed(2)).unwrap();
        let r1 = randomized_response(&a1, b, RngSeed(7)).unwrap();
        assert_eq!(r1, randomized_response(&a1, b, RngSeed(7)).unwrap());
        let r2 = randomized_response(&a2, b, RngSeed(7)).unwrap();
        let n1 = r1.sub(&a1).unwrap();
        let n2 = r2.sub(&a2).unwrap();
        assert!(n1.sub(&n2).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn rr_pooled_moments() {
        let b = budget(0.9, 1e-5);
        let sigma = gaussian_mechanism_sigma(1.0, b).unwrap();
        let a = DenseMatrix::zeros(400, 250);
        let noise = randomized_response(&a, b, RngSeed(11)).unwrap();
        let xs = noise.as_slice();
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() <= 4.0 * sigma / n.sqrt());
        // standard error of the sample variance is σ² sqrt(2 / (N − 1))
        assert!((var - sigma * sigma).abs() <= 4.0 * sigma * sigma * (2.0 / (n - 1.0)).sqrt());
    }

    #[test]
    fn rr_zero_noise_recovers_low_rank() {
        let l = gaussian_matrix(30, 3, 0.0, 1.0, RngSeed(1)).unwrap();
        let r = gaussian_matrix(3, 40, 0.0, 1.0, RngSeed(2)).unwrap();
        let a = l.matmul(&r).unwrap();
        let res = rr_low_rank_with_sigma(&a, 3, 0.0, budget(0.5, 0.1), RngSeed(3)).unwrap();
        assert!(res.achieved_error <= 1e-8 * a.frobenius_norm());
    }

    #[test]
    fn rr_output_rank_bounded() {
        let a = gaussian_matrix(20, 30, 0.0, 1.0, RngSeed(4)).unwrap();
        let res = rr_low_rank_baseline(&a, 4, budget(0.5, 1e-3), RngSeed(5)).unwrap();
        let s = crate::svd::singular_values(&res.b).unwrap();
        assert!(crate::svd::numerical_rank(&s, 1e-8) <= 4);
        assert!((res.achieved_error - a.sub(&res.b).unwrap().frobenius_norm()).abs() < 1e-10);
        assert!(rr_low_rank_baseline(&a, 0, budget(0.5, 1e-3), RngSeed(5)).is_err());
        assert!(rr_low_rank_baseline(&a, 21, budget(0.5, 1e-3), RngSeed(5)).is_err());
    }
}
