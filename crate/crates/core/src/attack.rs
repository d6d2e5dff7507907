//! Reconstruction attack against low-rank release mechanisms.
//!
//! A bit string of length `k·n` is laid out in the first `k` rows of an
//! `m × n` matrix (all other rows zero). Any mechanism that approximates this
//! matrix well in Frobenius norm lets an attacker recover most bits by
//! reading the first `k` rows of the output and rounding. Calibrated
//! mechanisms keep the recovery rate near that of guessing.

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::matrix::DenseMatrix;
use crate::privacy::{gaussian_mechanism_sigma, perturb, PrivacyBudget};
use crate::rng::RngSeed;
use crate::sketch::{pfp, projection_noise_scale, CoherenceMode, SketchParams};

/// Database of `k·n` bits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitDatabase {
    bits: Vec<bool>,
    k: usize,
}

impl BitDatabase {
    pub fn new(bits: Vec<bool>, k: usize) -> Result<Self> {
        if k == 0 || !bits.len().is_multiple_of(k) || bits.is_empty() {
            return Err(invalid(format!("{} bits cannot be split into {k} equal rows", bits.len())));
        }
        Ok(BitDatabase { bits, k })
    }

    /// Uniformly random bits.
    pub fn random(len: usize, k: usize, seed: RngSeed) -> Result<Self> {
        let bits = (0..len as u64).map(|i| seed.u64_at(i) >> 63 == 1).collect();
        Self::new(bits, k)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn row_len(&self) -> usize {
        self.bits.len() / self.k
    }

    pub fn ones_fraction(&self) -> f64 {
        self.bits.iter().filter(|&&b| b).count() as f64 / self.len() as f64
    }
}

/// A release mechanism mapping an `m × n` matrix to an `m × n` matrix.
pub trait Mechanism: Sync {
    fn label(&self) -> String;

    /// Per-entry noise standard deviation, 0 for noiseless mechanisms.
    fn noise_sigma(&self) -> f64;

    fn apply(&self, a: &DenseMatrix, seed: RngSeed) -> Result<DenseMatrix>;
}

/// Releases the input unchanged.
#[derive(Debug, Clone, Copy, Default)]
pub struct Identity;

impl Mechanism for Identity {
    fn label(&self) -> String {
        "identity".into()
    }

    fn noise_sigma(&self) -> f64 {
        0.0
    }

    fn apply(&self, a: &DenseMatrix, _seed: RngSeed) -> Result<DenseMatrix> {
        Ok(a.clone())
    }
}

/// Calibrated randomized response.
#[derive(Debug, Clone, Copy)]
pub struct RandomizedResponse {
    pub budget: PrivacyBudget,
}

impl Mechanism for RandomizedResponse {
    fn label(&self) -> String {
        format!("rr(eps={},delta={})", self.budget.epsilon(), self.budget.delta())
    }

    fn noise_sigma(&self) -> f64 {
        gaussian_mechanism_sigma(1.0, self.budget).expect("unit sensitivity is valid")
    }

    fn apply(&self, a: &DenseMatrix, seed: RngSeed) -> Result<DenseMatrix> {
        perturb(a, self.noise_sigma(), seed)
    }
}

/// Entry-wise Gaussian noise of an arbitrary (uncalibrated) scale.
#[derive(Debug, Clone, Copy)]
pub struct GaussianNoise {
    pub sigma: f64,
}

impl Mechanism for GaussianNoise {
    fn label(&self) -> String {
        format!("gaussian(sigma={})", self.sigma)
    }

    fn noise_sigma(&self) -> f64 {
        self.sigma
    }

    fn apply(&self, a: &DenseMatrix, seed: RngSeed) -> Result<DenseMatrix> {
        perturb(a, self.sigma, seed)
    }
}

/// The private find-and-project pipeline as a release mechanism.
#[derive(Debug, Clone, Copy)]
pub struct PfpMechanism {
    pub target_rank: usize,
    pub oversampling: usize,
    pub budget: PrivacyBudget,
    pub mode: CoherenceMode,
}

impl Mechanism for PfpMechanism {
    fn label(&self) -> String {
        format!("pfp(r={},p={},eps={},delta={})", self.target_rank, self.oversampling, self.budget.epsilon(), self.budget.delta())
    }

    /// Projection noise scale before the per-column `α_i` factor.
    fn noise_sigma(&self) -> f64 {
        projection_noise_scale(self.target_rank + self.oversampling, self.budget.halve())
    }

    fn apply(&self, a: &DenseMatrix, seed: RngSeed) -> Result<DenseMatrix> {
        let params = SketchParams::new(self.target_rank, self.oversampling, seed)?;
        Ok(pfp(a, params, self.budget, self.mode, None)?.b)
    }
}

/// Puts the database into the first `k` rows of an `m × n` zero matrix, row-major.
pub fn encode_database(d: &BitDatabase, m: usize) -> Result<DenseMatrix> {
    let (k, n) = (d.k(), d.row_len());
    if m < k {
        return Err(invalid(format!("m = {m} is smaller than k = {k}")));
    }
    Ok(DenseMatrix::from_fn(m, n, |i, j| if i < k && d.bits[i * n + j] { 1.0 } else { 0.0 }))
}

/// Reads the first `k` rows and rounds to the nearest bit, ties (`0.5`) to 1.
pub fn decode_database(released: &DenseMatrix, k: usize) -> Result<BitDatabase> {
    if k == 0 || released.rows() < k {
        return Err(invalid(format!("cannot read {k} rows from a {}-row matrix", released.rows())));
    }
    let bits = (0..k).flat_map(|i| released.row(i).iter().map(|&v| v >= 0.5).collect::<Vec<_>>()).collect();
    BitDatabase::new(bits, k)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttackReport {
    /// `1 − hamming_distance / n'`.
    pub recovered_fraction: f64,
    pub hamming_distance: usize,
    pub mechanism_label: String,
    pub noise_sigma_effective: f64,
}

/// Encodes `d`, releases it through `mechanism`, decodes and scores the result.
pub fn attack(d: &BitDatabase, m: usize, mechanism: &dyn Mechanism, seed: RngSeed) -> Result<AttackReport> {
    let a = encode_database(d, m)?;
    let released = mechanism.apply(&a, seed)?;
    if released.shape() != a.shape() {
        return Err(crate::Error::DimensionMismatch(format!(
            "mechanism returned {:?} for a {:?} input",
            released.shape(),
            a.shape()
        )));
    }
    let guess = decode_database(&released, d.k())?;
    let hamming_distance = guess.bits().iter().zip(d.bits()).filter(|(a, b)| a != b).count();
    Ok(AttackReport {
        recovered_fraction: 1.0 - hamming_distance as f64 / d.len() as f64,
        hamming_distance,
        mechanism_label: mechanism.label(),
        noise_sigma_effective: mechanism.noise_sigma(),
    })
}
