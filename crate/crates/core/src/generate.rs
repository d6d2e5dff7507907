//! Synthetic matrix generators.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::gram_schmidt;
use crate::matrix::{gaussian_matrix, DenseMatrix};
use crate::rng::{RngSeed, RngStream};

/// Number of ratings in the published Netflix Prize data.
pub const NETFLIX_RATINGS: u64 = 100_480_507;
pub const NETFLIX_MOVIES: u64 = 17_770;
pub const NETFLIX_USERS: u64 = 480_189;
/// Ratings of the most-rated movie.
pub const NETFLIX_MAX_ROW_COUNT: u64 = 227_715;

/// Fraction of nonzero entries in the full-size rating matrix.
pub fn netflix_density() -> f64 {
    NETFLIX_RATINGS as f64 / (NETFLIX_MOVIES as f64 * NETFLIX_USERS as f64)
}

/// Share of all ratings held by the most-rated movie.
pub fn netflix_max_row_share() -> f64 {
    NETFLIX_MAX_ROW_COUNT as f64 / NETFLIX_RATINGS as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatrixKind {
    /// Rank-`rank` product of orthonormalized Gaussian factors, `σ_j = j^(−decay)`.
    LowMu0,
    /// One dominant row on top of a rank-`(rank − 1)` low-μ0 background.
    Spiked,
    /// Full-rank product of orthonormalized Gaussian factors, `σ_j = j^(−decay)`.
    PowerLaw,
    /// Sparse integer ratings with a skewed row-count distribution.
    NetflixLike,
}

impl MatrixKind {
    pub fn name(&self) -> &'static str {
        match self {
            MatrixKind::LowMu0 => "low_mu0",
            MatrixKind::Spiked => "spiked",
            MatrixKind::PowerLaw => "power_law",
            MatrixKind::NetflixLike => "netflix_like",
        }
    }
}

/// Generator parameters.
///
/// For the dense kinds the matrix is scaled to an RMS entry of
/// `value_range.1`, i.e. `‖A‖_F = value_range.1 · sqrt(m n)`. For
/// [`MatrixKind::NetflixLike`] nonzero entries are uniform integers in
/// `value_range` and `density` is the fraction of nonzeros.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub kind: MatrixKind,
    pub m: usize,
    pub n: usize,
    pub rank: usize,
    pub spectrum_decay: f64,
    pub density: f64,
    pub value_range: (i64, i64),
    pub seed: RngSeed,
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        let (m, n) = (self.m, self.n);
        if m == 0 || n == 0 {
            return Err(invalid("generator needs m, n ≥ 1"));
        }
        if self.rank == 0 || self.rank > m.min(n) {
            return Err(invalid(format!("rank {} must lie in 1..=min({m}, {n})", self.rank)));
        }
        if !(self.spectrum_decay > 0.0) || !self.spectrum_decay.is_finite() {
            return Err(invalid("spectrum decay must be positive"));
        }
        if !(self.density > 0.0 && self.density <= 1.0) {
            return Err(invalid(format!("density must lie in (0, 1], got {}", self.density)));
        }
        if self.kind == MatrixKind::NetflixLike && self.density * ((m * n) as f64) < self.rank as f64 {
            return Err(invalid("density too low to realize the requested rank"));
        }
        let (lo, hi) = self.value_range;
        if lo > hi {
            return Err(invalid("value range is empty"));
        }
        match self.kind {
            MatrixKind::NetflixLike if lo <= 0 && hi >= 0 => {
                Err(invalid("value range for sparse ratings must exclude zero"))
            }
            MatrixKind::NetflixLike => Ok(()),
            _ if hi <= 0 => Err(invalid("dense kinds use value_range.1 > 0 as the RMS entry size")),
            _ => Ok(()),
        }
    }
}

pub fn generate(spec: &GeneratorSpec) -> Result<DenseMatrix> {
    spec.validate()?;
    let target = spec.value_range.1 as f64 * ((spec.m * spec.n) as f64).sqrt();
    match spec.kind {
        MatrixKind::LowMu0 => {
            let a = orthogonal_product(spec.m, spec.n, &power_spectrum(spec.rank, spec.spectrum_decay), spec.seed)?;
            Ok(rescale(&a, target))
        }
        MatrixKind::PowerLaw => {
            let r = spec.m.min(spec.n);
            let a = orthogonal_product(spec.m, spec.n, &power_spectrum(r, spec.spectrum_decay), spec.seed)?;
            Ok(rescale(&a, target))
        }
        MatrixKind::Spiked => spiked(spec, target),
        MatrixKind::NetflixLike => netflix_like(spec),
    }
}

fn power_spectrum(r: usize, decay: f64) -> Vec<f64> {
    (1..=r).map(|j| (j as f64).powf(-decay)).collect()
}

/// Gaussian factor with every row rescaled to norm `sqrt(r)`, then orthonormalized.
///
/// Plain Gaussian rows leave a chi-squared spread in the row norms and push
/// μ0 to about 3.5 at `m = 512, r = 5`; equalizing them first keeps μ0 near 1.
fn balanced_factor(rows: usize, r: usize, seed: RngSeed) -> Result<DenseMatrix> {
    let g = gaussian_matrix(rows, r, 0.0, 1.0, seed)?;
    let norms = g.row_norms();
    let scale = (r as f64).sqrt();
    let g = DenseMatrix::from_fn(rows, r, |i, j| if norms[i] > 0.0 { g.get(i, j) * scale / norms[i] } else { 0.0 });
    Ok(gram_schmidt(&g))
}

/// `U diag(σ) Vᵀ` with `U`, `V` from [`balanced_factor`].
fn orthogonal_product(m: usize, n: usize, sigma: &[f64], seed: RngSeed) -> Result<DenseMatrix> {
    let r = sigma.len();
    let u = balanced_factor(m, r, seed.derive(10))?;
    let v = balanced_factor(n, r, seed.derive(11))?;
    let us = DenseMatrix::from_fn(m, u.cols(), |i, j| u.get(i, j) * sigma[j]);
    us.matmul(&v.leading_columns(u.cols()).transpose())
}

fn rescale(a: &DenseMatrix, target_frobenius: f64) -> DenseMatrix {
    let f = a.frobenius_norm();
    if f == 0.0 {
        a.clone()
    } else {
        a.scale(target_frobenius / f)
    }
}

fn spiked(spec: &GeneratorSpec, target: f64) -> Result<DenseMatrix> {
    let (m, n) = (spec.m, spec.n);
    let mut direction = gaussian_matrix(1, n, 0.0, 1.0, spec.seed.derive(12))?;
    direction = rescale(&direction, 1.0);
    if spec.rank == 1 {
        return Ok(DenseMatrix::from_fn(m, n, |i, j| if i == 0 { target * direction.get(0, j) } else { 0.0 }));
    }
    let share = target / 2f64.sqrt();
    let background = rescale(
        &orthogonal_product(m, n, &power_spectrum(spec.rank - 1, spec.spectrum_decay), spec.seed)?,
        share,
    );
    Ok(DenseMatrix::from_fn(m, n, |i, j| {
        background.get(i, j) + if i == 0 { share * direction.get(0, j) } else { 0.0 }
    }))
}

/// Row weights `(i + 1)^(−s)` with `s` chosen so that row 0 holds `share` of the mass.
fn row_weights(m: usize, share: f64) -> Vec<f64> {
    let head_share = |s: f64| {
        let total: f64 = (0..m).map(|i| ((i + 1) as f64).powf(-s)).sum();
        1.0 / total
    };
    let (mut lo, mut hi) = (0.0f64, 16.0f64);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if head_share(mid) < share {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = 0.5 * (lo + hi);
    let w: Vec<f64> = (0..m).map(|i| ((i + 1) as f64).powf(-s)).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

/// Integer counts proportional to `weights`, summing to `total`, each at most `cap`.
fn apportion(weights: &[f64], total: usize, cap: usize) -> Vec<usize> {
    let mut counts: Vec<usize> = weights.iter().map(|w| ((w * total as f64).floor() as usize).min(cap)).collect();
    let mut assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    let frac = |i: usize| weights[i] * total as f64 - (weights[i] * total as f64).floor();
    order.sort_by(|&a, &b| frac(b).total_cmp(&frac(a)).then(a.cmp(&b)));
    let mut idx = 0;
    let mut stalled = 0;
    while assigned < total && stalled < weights.len() {
        let i = order[idx % order.len()];
        if counts[i] < cap {
            counts[i] += 1;
            assigned += 1;
            stalled = 0;
        } else {
            stalled += 1;
        }
        idx += 1;
    }
    counts
}

fn choose_columns(stream: &mut RngStream, n: usize, count: usize, mask: &mut [bool]) -> Vec<usize> {
    let complement = 2 * count > n;
    let draws = if complement { n - count } else { count };
    mask.iter_mut().for_each(|b| *b = false);
    let mut chosen = 0;
    while chosen < draws {
        let j = stream.below(n as u64) as usize;
        if !mask[j] {
            mask[j] = true;
            chosen += 1;
        }
    }
    (0..n).filter(|&j| mask[j] != complement).collect()
}

fn netflix_like(spec: &GeneratorSpec) -> Result<DenseMatrix> {
    let (m, n) = (spec.m, spec.n);
    let nnz = ((spec.density * (m * n) as f64).round() as usize).max(spec.rank).min(m * n);
    let share = netflix_max_row_share().max(1.0 / m as f64);
    let counts = apportion(&row_weights(m, share), nnz, n);
    let (lo, hi) = spec.value_range;
    let span = (hi - lo + 1) as u64;
    let mut stream = spec.seed.derive(13).stream();
    let mut mask = vec![false; n];
    let mut data = vec![0.0; m * n];
    for (i, &count) in counts.iter().enumerate() {
        for j in choose_columns(&mut stream, n, count, &mut mask) {
            data[i * n + j] = (lo + stream.below(span) as i64) as f64;
        }
    }
    DenseMatrix::new(m, n, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coherence::{c_coherence, mu0_coherence, DEFAULT_RANK_TOLERANCE};
    use crate::svd::{numerical_rank, singular_values};

    fn spec(kind: MatrixKind, m: usize, n: usize, rank: usize, seed: u64) -> GeneratorSpec {
        GeneratorSpec {
            kind,
            m,
            n,
            rank,
            spectrum_decay: 1.0,
            density: 0.011,
            value_range: (1, 5),
            seed: RngSeed(seed),
        }
    }

    #[test]
    fn validation() {
        let good = spec(MatrixKind::LowMu0, 10, 20, 3, 0);
        assert!(good.validate().is_ok());
        assert!(GeneratorSpec { rank: 11, ..good }.validate().is_err());
        assert!(GeneratorSpec { rank: 0, ..good }.validate().is_err());
        assert!(GeneratorSpec { density: 0.0, ..good }.validate().is_err());
        assert!(GeneratorSpec { spectrum_decay: 0.0, ..good }.validate().is_err());
        assert!(GeneratorSpec { value_range: (3, 1), ..good }.validate().is_err());
        let nf = spec(MatrixKind::NetflixLike, 10, 20, 3, 0);
        assert!(GeneratorSpec { value_range: (0, 5), density: 0.5, ..nf }.validate().is_err());
        assert!(GeneratorSpec { density: 0.01, ..nf }.validate().is_err());
        assert!(GeneratorSpec { density: 0.5, ..nf }.validate().is_ok());
    }

    #[test]
    fn low_mu0_shape_rank_and_scale() {
        let s = spec(MatrixKind::LowMu0, 64, 128, 5, 1);
        let a = generate(&s).unwrap();
        assert_eq!(a.shape(), (64, 128));
        assert_eq!(numerical_rank(&singular_values(&a).unwrap(), 1e-9), 5);
        assert!((a.frobenius_norm() - 5.0 * (64.0f64 * 128.0).sqrt()).abs() < 1e-9);
        assert_eq!(generate(&s).unwrap(), a);
    }

    #[test]
    fn low_mu0_is_incoherent() {
        let mut ok = 0;
        for seed in 0..20 {
            let a = generate(&spec(MatrixKind::LowMu0, 512, 40, 5, seed)).unwrap();
            let (mu0, r) = mu0_coherence(&a, DEFAULT_RANK_TOLERANCE).unwrap();
            assert_eq!(r, 5);
            let c = c_coherence(&a).unwrap();
            if mu0 <= 3.0 && c <= (5.0f64 * 3.0).sqrt() {
                ok += 1;
            }
        }
        assert!(ok >= 18, "only {ok}/20 seeds incoherent");
    }

    #[test]
    fn spiked_single_row() {
        let a = generate(&spec(MatrixKind::Spiked, 49, 30, 1, 2)).unwrap();
        assert!((c_coherence(&a).unwrap() - 7.0).abs() < 1e-12);
        let b = generate(&spec(MatrixKind::Spiked, 49, 30, 4, 2)).unwrap();
        assert!(c_coherence(&b).unwrap() > 4.0);
    }

    #[test]
    fn power_law_full_rank() {
        let a = generate(&spec(MatrixKind::PowerLaw, 30, 50, 30, 3)).unwrap();
        let s = singular_values(&a).unwrap();
        assert_eq!(numerical_rank(&s, 1e-9), 30);
        assert!((s[0] / s[1] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn netflix_like_statistics() {
        let s = GeneratorSpec { density: 0.05, ..spec(MatrixKind::NetflixLike, 600, 2000, 5, 4) };
        let a = generate(&s).unwrap();
        let counts: Vec<usize> = (0..600).map(|i| a.row(i).iter().filter(|&&v| v != 0.0).count()).collect();
        let nnz: usize = counts.iter().sum();
        assert_eq!(nnz, 60_000);
        let max_share = *counts.iter().max().unwrap() as f64 / nnz as f64;
        assert!((max_share - netflix_max_row_share()).abs() < 1e-3, "share {max_share}");
        assert!(a.as_slice().iter().all(|&v| v == 0.0 || (1.0..=5.0).contains(&v) && v.fract() == 0.0));
    }

    #[test]
    fn netflix_constants() {
        assert!((netflix_density() - 0.011_775_576_624_066_87).abs() < 1e-15);
        assert!((netflix_max_row_share() - 0.002_266_260_459_852_178).abs() < 1e-15);
    }
}
