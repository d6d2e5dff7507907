//! Repeated trials, parameter sweeps and their CSV output.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::approx::ApproxResult;
use crate::coherence::{c_coherence, mu0_of_basis, DEFAULT_RANK_TOLERANCE};
use crate::error::{invalid, Error, Result};
use crate::generate::{generate, GeneratorSpec, MatrixKind};
use crate::matrix::DenseMatrix;
use crate::privacy::{rr_low_rank_baseline, PrivacyBudget};
use crate::rng::RngSeed;
use crate::sketch::{hmt_low_rank, pfp, CoherenceMode, SketchParams};
use crate::svd::{left_singular_factor, numerical_rank, tail_norm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Algorithm {
    /// Randomized response, then rank-`k` truncation.
    Rr,
    /// Non-private sketch and project.
    Hmt,
    /// Private find and project.
    Pfp,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Rr => "rr",
            Algorithm::Hmt => "hmt",
            Algorithm::Pfp => "pfp",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rr" => Ok(Algorithm::Rr),
            "hmt" => Ok(Algorithm::Hmt),
            "pfp" => Ok(Algorithm::Pfp),
            _ => Err(invalid(format!("unknown algorithm `{s}` (expected rr, hmt or pfp)"))),
        }
    }
}

/// Column names of the CSV output, in order.
pub const CSV_HEADER: [&str; 15] = [
    "algorithm",
    "m",
    "n",
    "k",
    "r",
    "p",
    "epsilon",
    "delta",
    "alpha",
    "trial_seed",
    "error_frobenius",
    "optimal_rank_k_error",
    "c_coherence",
    "mu0_coherence",
    "wall_time_ms",
];

/// One trial. `epsilon` and `delta` are `None` for the non-private baseline;
/// coherence fields are `None` for the zero matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRecord {
    pub algorithm: Algorithm,
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub r: usize,
    pub p: usize,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    pub alpha: f64,
    pub trial_seed: u64,
    pub error_frobenius: f64,
    pub optimal_rank_k_error: f64,
    pub c_coherence: Option<f64>,
    pub mu0_coherence: Option<f64>,
    /// Zero unless timing was requested, so repeated runs stay byte-identical.
    pub wall_time_ms: u64,
}

/// 17 significant digits in exponent form, enough to recover the exact `f64`.
pub fn csv_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt_float(v: Option<f64>) -> String {
    v.map(csv_float).unwrap_or_default()
}

impl ExperimentRecord {
    pub fn csv_fields(&self) -> [String; 15] {
        [
            self.algorithm.to_string(),
            self.m.to_string(),
            self.n.to_string(),
            self.k.to_string(),
            self.r.to_string(),
            self.p.to_string(),
            opt_float(self.epsilon),
            opt_float(self.delta),
            csv_float(self.alpha),
            self.trial_seed.to_string(),
            csv_float(self.error_frobenius),
            csv_float(self.optimal_rank_k_error),
            opt_float(self.c_coherence),
            opt_float(self.mu0_coherence),
            self.wall_time_ms.to_string(),
        ]
    }
}

/// Writes the header and all records.
pub fn write_csv(records: &[ExperimentRecord], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record(r.csv_fields())?;
    }
    w.flush()?;
    Ok(())
}

/// Quantities that depend only on the input matrix, computed once per matrix.
#[derive(Debug, Clone)]
pub struct MatrixStats {
    pub singular_values: Vec<f64>,
    pub c_coherence: Option<f64>,
    pub mu0_coherence: Option<f64>,
}

impl MatrixStats {
    pub fn compute(a: &DenseMatrix) -> Result<Self> {
        let (u, values) = left_singular_factor(a)?;
        if a.is_zero() {
            return Ok(MatrixStats { singular_values: values, c_coherence: None, mu0_coherence: None });
        }
        let r = numerical_rank(&values, DEFAULT_RANK_TOLERANCE);
        Ok(MatrixStats {
            c_coherence: Some(c_coherence(a)?),
            mu0_coherence: Some(mu0_of_basis(&u.leading_columns(r))),
            singular_values: values,
        })
    }

    /// `‖A − A_k‖_F`.
    pub fn optimal_rank_k_error(&self, k: usize) -> f64 {
        tail_norm(&self.singular_values, k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    pub target_rank: usize,
    pub oversampling: usize,
    /// Ignored by [`Algorithm::Hmt`].
    pub budget: PrivacyBudget,
    pub mode: CoherenceMode,
    pub alpha: Option<f64>,
    pub trials: usize,
    pub base_seed: u64,
    pub record_timing: bool,
}

impl ExperimentConfig {
    /// Sketch size `r + p`; also the truncation rank of the RR baseline.
    pub fn k(&self) -> usize {
        self.target_rank + self.oversampling
    }
}

/// Runs one trial with the given seed; identical to calling the library routine directly.
pub fn run_trial(a: &DenseMatrix, config: &ExperimentConfig, seed: RngSeed) -> Result<ApproxResult> {
    match config.algorithm {
        Algorithm::Rr => rr_low_rank_baseline(a, config.k(), config.budget, seed),
        Algorithm::Hmt => hmt_low_rank(a, SketchParams::new(config.target_rank, config.oversampling, seed)?),
        Algorithm::Pfp => pfp(
            a,
            SketchParams::new(config.target_rank, config.oversampling, seed)?,
            config.budget,
            config.mode,
            config.alpha,
        ),
    }
}

pub fn run_experiment(a: &DenseMatrix, config: &ExperimentConfig) -> Result<Vec<ExperimentRecord>> {
    run_experiment_with_stats(a, &MatrixStats::compute(a)?, config)
}

/// Trial `i` uses seed `base_seed + i`. Trials run in parallel; records come
/// back in trial order.
pub fn run_experiment_with_stats(
    a: &DenseMatrix,
    stats: &MatrixStats,
    config: &ExperimentConfig,
) -> Result<Vec<ExperimentRecord>> {
    if config.trials == 0 {
        return Err(invalid("at least one trial is required"));
    }
    let (m, n) = a.shape();
    let k = config.k();
    if k > m.min(n) {
        return Err(invalid(format!("k = r + p = {k} exceeds min({m}, {n})")));
    }
    let private = config.algorithm != Algorithm::Hmt;
    (0..config.trials as u64)
        .into_par_iter()
        .map(|i| {
            let seed = RngSeed(config.base_seed).offset(i);
            let start = Instant::now();
            let res = run_trial(a, config, seed)?;
            let elapsed = start.elapsed().as_millis() as u64;
            Ok(ExperimentRecord {
                algorithm: config.algorithm,
                m,
                n,
                k,
                r: config.target_rank,
                p: config.oversampling,
                epsilon: private.then(|| config.budget.epsilon()),
                delta: private.then(|| config.budget.delta()),
                alpha: res.alpha_used,
                trial_seed: seed.0,
                error_frobenius: res.achieved_error,
                optimal_rank_k_error: stats.optimal_rank_k_error(k),
                c_coherence: stats.c_coherence,
                mu0_coherence: stats.mu0_coherence,
                wall_time_ms: if config.record_timing { elapsed } else { 0 },
            })
        })
        .collect()
}

/// Cartesian grid of experiments. Cells are ordered with `kind` outermost,
/// then `m`, `n`, `target_ranks`, `epsilons` and `algorithms` innermost.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub kinds: Vec<MatrixKind>,
    pub ms: Vec<usize>,
    pub ns: Vec<usize>,
    pub target_ranks: Vec<usize>,
    pub epsilons: Vec<f64>,
    pub algorithms: Vec<Algorithm>,
    /// `None` means `r + 1`.
    pub oversampling: Option<usize>,
    pub delta: f64,
    pub mode: CoherenceMode,
    pub alpha: Option<f64>,
    /// Template for the generated matrices; `kind`, `m` and `n` are overwritten per cell.
    pub generator: GeneratorSpec,
    pub trials: usize,
    pub base_seed: u64,
    pub record_timing: bool,
}

impl SweepGrid {
    pub fn cell_count(&self) -> usize {
        self.kinds.len() * self.ms.len() * self.ns.len() * self.target_ranks.len() * self.epsilons.len() * self.algorithms.len()
    }
}

/// Runs every cell and streams the CSV to `out`, flushing after each cell so
/// that finished cells survive a later failure.
pub fn sweep(grid: &SweepGrid, out: impl Write) -> Result<Vec<ExperimentRecord>> {
    if grid.cell_count() == 0 {
        return Err(invalid("sweep grid is empty"));
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    w.flush()?;
    let mut all = Vec::new();
    for &kind in &grid.kinds {
        for &m in &grid.ms {
            for &n in &grid.ns {
                let spec = GeneratorSpec { kind, m, n, ..grid.generator };
                let a = generate(&spec)?;
                let stats = MatrixStats::compute(&a)?;
                for &r in &grid.target_ranks {
                    for &eps in &grid.epsilons {
                        for &algorithm in &grid.algorithms {
                            let config = ExperimentConfig {
                                algorithm,
                                target_rank: r,
                                oversampling: grid.oversampling.unwrap_or(r + 1),
                                budget: PrivacyBudget::new(eps, grid.delta)?,
                                mode: grid.mode,
                                alpha: grid.alpha,
                                trials: grid.trials,
                                base_seed: grid.base_seed,
                                record_timing: grid.record_timing,
                            };
                            let records = run_experiment_with_stats(&a, &stats, &config)?;
                            for rec in &records {
                                w.write_record(rec.csv_fields())?;
                            }
                            w.flush()?;
                            all.extend(records);
                        }
                    }
                }
            }
        }
    }
    Ok(all)
}

/// Median of a non-empty sample.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix() -> DenseMatrix {
        generate(&GeneratorSpec {
            kind: MatrixKind::LowMu0,
            m: 40,
            n: 60,
            rank: 4,
            spectrum_decay: 1.0,
            density: 1.0,
            value_range: (1, 3),
            seed: RngSeed(9),
        })
        .unwrap()
    }

    fn config(algorithm: Algorithm) -> ExperimentConfig {
        ExperimentConfig {
            algorithm,
            target_rank: 3,
            oversampling: 4,
            budget: PrivacyBudget::new(1.0, 1e-5).unwrap(),
            mode: CoherenceMode::Mu0Coherent,
            alpha: None,
            trials: 3,
            base_seed: 100,
            record_timing: false,
        }
    }

    #[test]
    fn single_trial_matches_direct_call() {
        let a = matrix();
        for alg in [Algorithm::Rr, Algorithm::Hmt, Algorithm::Pfp] {
            let cfg = ExperimentConfig { trials: 1, ..config(alg) };
            let rec = run_experiment(&a, &cfg).unwrap();
            assert_eq!(rec.len(), 1);
            let direct = match alg {
                Algorithm::Rr => rr_low_rank_baseline(&a, 7, cfg.budget, RngSeed(100)).unwrap(),
                Algorithm::Hmt => hmt_low_rank(&a, SketchParams::new(3, 4, RngSeed(100)).unwrap()).unwrap(),
                Algorithm::Pfp => {
                    pfp(&a, SketchParams::new(3, 4, RngSeed(100)).unwrap(), cfg.budget, cfg.mode, None).unwrap()
                }
            };
            assert_eq!(rec[0].error_frobenius, direct.achieved_error);
            assert_eq!(rec[0].trial_seed, 100);
        }
    }

    #[test]
    fn records_share_matrix_stats_and_respect_optimum() {
        let a = matrix();
        let rr = run_experiment(&a, &config(Algorithm::Rr)).unwrap();
        let pf = run_experiment(&a, &config(Algorithm::Pfp)).unwrap();
        assert_eq!(rr[0].optimal_rank_k_error, pf[0].optimal_rank_k_error);
        assert_eq!(rr.iter().map(|r| r.trial_seed).collect::<Vec<_>>(), vec![100, 101, 102]);
        for rec in rr.iter().chain(&pf) {
            assert!(rec.error_frobenius >= rec.optimal_rank_k_error - 1e-8);
            assert_eq!(rec.wall_time_ms, 0);
        }
        let hmt = run_experiment(&a, &config(Algorithm::Hmt)).unwrap();
        assert_eq!(hmt[0].epsilon, None);
        assert!(run_experiment(&a, &ExperimentConfig { trials: 0, ..config(Algorithm::Rr) }).is_err());
        assert!(run_experiment(&a, &ExperimentConfig { target_rank: 30, oversampling: 31, ..config(Algorithm::Rr) }).is_err());
    }

    #[test]
    fn csv_layout() {
        let a = matrix();
        let rec = run_experiment(&a, &ExperimentConfig { trials: 2, ..config(Algorithm::Hmt) }).unwrap();
        let mut buf = Vec::new();
        write_csv(&rec, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER.join(","));
        assert_eq!(lines.len(), 3);
        for l in &lines {
            assert_eq!(l.split(',').count(), 15);
        }
        let err = lines[1].split(',').nth(10).unwrap();
        let mantissa = err.split('e').next().unwrap();
        assert_eq!(mantissa.chars().filter(|c| c.is_ascii_digit()).count(), 17);
        assert_eq!(err.parse::<f64>().unwrap(), rec[0].error_frobenius);
    }

    fn grid() -> SweepGrid {
        SweepGrid {
            kinds: vec![MatrixKind::LowMu0],
            ms: vec![30],
            ns: vec![50],
            target_ranks: vec![2],
            epsilons: vec![0.5],
            algorithms: vec![Algorithm::Pfp],
            oversampling: None,
            delta: 1e-5,
            mode: CoherenceMode::Mu0Coherent,
            alpha: None,
            generator: GeneratorSpec {
                kind: MatrixKind::LowMu0,
                m: 1,
                n: 1,
                rank: 3,
                spectrum_decay: 1.0,
                density: 1.0,
                value_range: (1, 2),
                seed: RngSeed(4),
            },
            trials: 1,
            base_seed: 7,
            record_timing: false,
        }
    }

    #[test]
    fn sweep_single_cell() {
        let mut buf = Vec::new();
        let rec = sweep(&grid(), &mut buf).unwrap();
        assert_eq!(rec.len(), 1);
        assert_eq!(rec[0].p, 3);
        assert_eq!(String::from_utf8(buf.clone()).unwrap().lines().count(), 2);
        let mut again = Vec::new();
        sweep(&grid(), &mut again).unwrap();
        assert_eq!(buf, again);
        assert!(sweep(&SweepGrid { epsilons: vec![], ..grid() }, Vec::new()).is_err());
    }

    #[test]
    fn sweep_flushes_finished_cells() {
        let g = SweepGrid { target_ranks: vec![2, 40], ..grid() };
        let mut buf = Vec::new();
        assert!(sweep(&g, &mut buf).is_err());
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 2);
    }

    #[test]
    fn median_values() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
