use std::fs::File;
use std::io::{self, BufWriter, Write};

use pfp_core::attack::{GaussianNoise, Identity, PfpMechanism, RandomizedResponse};
use pfp_core::experiment::{csv_float, run_experiment, run_trial, sweep, write_csv, ExperimentConfig, SweepGrid};
use pfp_core::io::write_matrix;
use pfp_core::{
    attack, generate, load_matrix, Algorithm, BitDatabase, CoherenceMode, CoherenceReport, DenseMatrix,
    GeneratorSpec, MatrixFormat, MatrixKind, Mechanism, PrivacyBudget, RngSeed, SketchParams,
};

use crate::args::*;
use crate::Failure;

/// Sub-stream of a trial seed that draws the attacked database.
const DATABASE_STREAM: u64 = 20;

type Outcome = Result<(), Failure>;

fn usage(msg: impl std::fmt::Display) -> Failure {
    Failure::Usage(msg.to_string())
}

pub fn run(command: Command) -> Outcome {
    match command {
        Command::Gen(a) => gen(a),
        Command::Coherence(a) => coherence(a),
        Command::Hmt(a) => approx(Algorithm::Hmt, a, None, CoherenceMode::Mu0Coherent, None),
        Command::Rr(a) => {
            let budget = budget(&a.budget)?;
            approx(Algorithm::Rr, a.approx, Some(budget), CoherenceMode::Mu0Coherent, None)
        }
        Command::Pfp(a) => {
            let budget = budget(&a.private.budget)?;
            approx(Algorithm::Pfp, a.private.approx, Some(budget), mode(a.mode), alpha(a.alpha))
        }
        Command::Sweep(a) => run_sweep(a),
        Command::Attack(a) => run_attack(a),
    }
}

fn sink(out: &OutputArgs) -> Result<Box<dyn Write>, Failure> {
    Ok(match &out.output {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn budget(b: &BudgetArgs) -> Result<PrivacyBudget, Failure> {
    PrivacyBudget::new(b.epsilon, b.delta).map_err(usage)
}

fn mode(m: Mode) -> CoherenceMode {
    match m {
        Mode::C => CoherenceMode::CCoherent,
        Mode::Mu0 => CoherenceMode::Mu0Coherent,
    }
}

fn alpha(a: Alpha) -> Option<f64> {
    match a {
        Alpha::Auto => None,
        Alpha::Value(v) => Some(v),
    }
}

fn kind(k: Kind) -> MatrixKind {
    match k {
        Kind::LowMu0 => MatrixKind::LowMu0,
        Kind::Spiked => MatrixKind::Spiked,
        Kind::PowerLaw => MatrixKind::PowerLaw,
        Kind::NetflixLike => MatrixKind::NetflixLike,
    }
}

fn algorithm(a: AlgorithmArg) -> Algorithm {
    match a {
        AlgorithmArg::Rr => Algorithm::Rr,
        AlgorithmArg::Hmt => Algorithm::Hmt,
        AlgorithmArg::Pfp => Algorithm::Pfp,
    }
}

fn require_csv(format: Format, command: &str) -> Outcome {
    if format != Format::Csv {
        return Err(usage(format!("`{command}` only writes csv")));
    }
    Ok(())
}

fn generator_spec(k: Kind, m: usize, n: usize, g: &GeneratorArgs, seed: u64) -> Result<GeneratorSpec, Failure> {
    let spec = GeneratorSpec {
        kind: kind(k),
        m,
        n,
        rank: g.gen_rank,
        spectrum_decay: g.decay,
        density: g.density,
        value_range: (g.value_range.0, g.value_range.1),
        seed: RngSeed(seed),
    };
    spec.validate().map_err(usage)?;
    Ok(spec)
}

fn gen(a: GenArgs) -> Outcome {
    let format = match a.format {
        Format::Dense => MatrixFormat::Dense,
        Format::Sparse => MatrixFormat::Sparse,
        Format::Csv => return Err(usage("`gen` writes dense or sparse matrices")),
    };
    let spec = generator_spec(a.kind, a.m, a.n, &a.generator, a.seed)?;
    let matrix = generate(&spec)?;
    let mut out = sink(&a.out)?;
    write_matrix(&matrix, format, &mut out)?;
    out.flush()?;
    Ok(())
}

fn coherence(a: CoherenceArgs) -> Outcome {
    require_csv(a.format, "coherence")?;
    if !(a.rank_tolerance > 0.0) {
        return Err(usage("rank tolerance must be positive"));
    }
    let matrix = load_matrix(&a.input)?;
    let report = CoherenceReport::compute(&matrix, a.rank_tolerance)?;
    let mut w = csv::Writer::from_writer(sink(&a.out)?);
    w.write_record(["c_coherence", "mu0_coherence", "rank_used", "max_row_norm", "frobenius_norm"])
        .map_err(csv_failure)?;
    w.write_record([
        csv_float(report.c_coherence),
        csv_float(report.mu0_coherence),
        report.rank_used.to_string(),
        csv_float(report.max_row_norm),
        csv_float(report.frobenius_norm),
    ])
    .map_err(csv_failure)?;
    w.flush()?;
    Ok(())
}

fn csv_failure(e: csv::Error) -> Failure {
    Failure::Data(e.to_string())
}

fn approx(
    algorithm: Algorithm,
    a: ApproxArgs,
    budget: Option<PrivacyBudget>,
    mode: CoherenceMode,
    alpha: Option<f64>,
) -> Outcome {
    let oversampling = a.oversample.unwrap_or(a.rank + 1);
    SketchParams::new(a.rank, oversampling, RngSeed(a.seed)).map_err(usage)?;
    if a.trials == 0 {
        return Err(usage("--trials must be at least 1"));
    }
    let config = ExperimentConfig {
        algorithm,
        target_rank: a.rank,
        oversampling,
        // the non-private baseline never reads it
        budget: budget.unwrap_or(PrivacyBudget::new(1.0, 0.5).expect("valid")),
        mode,
        alpha,
        trials: a.trials,
        base_seed: a.seed,
        record_timing: a.record_timing,
    };
    let matrix_format = match a.format {
        Format::Csv => None,
        Format::Dense => Some(MatrixFormat::Dense),
        Format::Sparse => Some(MatrixFormat::Sparse),
    };
    if matrix_format.is_some() && a.trials != 1 {
        return Err(usage("matrix output needs exactly one trial"));
    }
    let matrix = load_matrix(&a.input)?;
    check_rank(&matrix, config.k())?;
    let mut out = sink(&a.out)?;
    match matrix_format {
        None => write_csv(&run_experiment(&matrix, &config)?, &mut out)?,
        Some(f) => write_matrix(&run_trial(&matrix, &config, RngSeed(a.seed))?.b, f, &mut out)?,
    }
    out.flush()?;
    Ok(())
}

fn check_rank(a: &DenseMatrix, k: usize) -> Outcome {
    let (m, n) = a.shape();
    if k > m.min(n) {
        return Err(Failure::Data(format!("k = r + p = {k} exceeds min({m}, {n}) of the input")));
    }
    Ok(())
}

fn run_sweep(a: SweepArgs) -> Outcome {
    require_csv(a.format, "sweep")?;
    if a.trials == 0 {
        return Err(usage("--trials must be at least 1"));
    }
    for &k in &a.kinds {
        for &m in &a.m {
            for &n in &a.n {
                generator_spec(k, m, n, &a.generator, a.seed)?;
            }
        }
    }
    for &eps in &a.epsilon {
        PrivacyBudget::new(eps, a.delta).map_err(usage)?;
    }
    for &r in &a.rank {
        SketchParams::new(r, a.oversample.unwrap_or(r + 1), RngSeed(a.seed)).map_err(usage)?;
    }
    let template = generator_spec(a.kinds[0], a.m[0], a.n[0], &a.generator, a.seed)?;
    let grid = SweepGrid {
        kinds: a.kinds.iter().map(|&k| kind(k)).collect(),
        ms: a.m,
        ns: a.n,
        target_ranks: a.rank,
        epsilons: a.epsilon,
        algorithms: a.algorithms.iter().map(|&x| algorithm(x)).collect(),
        oversampling: a.oversample,
        delta: a.delta,
        mode: mode(a.mode),
        alpha: alpha(a.alpha),
        generator: template,
        trials: a.trials,
        base_seed: a.seed,
        record_timing: a.record_timing,
    };
    let mut out = sink(&a.out)?;
    sweep(&grid, &mut out)?;
    out.flush()?;
    Ok(())
}

fn run_attack(a: AttackArgs) -> Outcome {
    require_csv(a.format, "attack")?;
    if a.trials == 0 {
        return Err(usage("--trials must be at least 1"));
    }
    if a.m < a.db_rows {
        return Err(usage(format!("-m {} is smaller than --db-rows {}", a.m, a.db_rows)));
    }
    BitDatabase::new(vec![false; a.bits], a.db_rows).map_err(usage)?;
    let mechanism: Box<dyn Mechanism> = match a.mechanism {
        MechanismArg::Identity => Box::new(Identity),
        MechanismArg::Rr => Box::new(RandomizedResponse { budget: budget(&a.budget)? }),
        MechanismArg::Gaussian => match a.sigma {
            Some(sigma) if sigma >= 0.0 && sigma.is_finite() => Box::new(GaussianNoise { sigma }),
            _ => return Err(usage("the gaussian mechanism needs --sigma ≥ 0")),
        },
        MechanismArg::Pfp => {
            let oversampling = a.oversample.unwrap_or(a.rank + 1);
            SketchParams::new(a.rank, oversampling, RngSeed(a.seed)).map_err(usage)?;
            Box::new(PfpMechanism { target_rank: a.rank, oversampling, budget: budget(&a.budget)?, mode: mode(a.mode) })
        }
    };
    let mut w = csv::Writer::from_writer(sink(&a.out)?);
    w.write_record(["mechanism", "trial_seed", "recovered_fraction", "hamming_distance", "noise_sigma_effective"])
        .map_err(csv_failure)?;
    for i in 0..a.trials as u64 {
        let seed = RngSeed(a.seed).offset(i);
        let db = BitDatabase::random(a.bits, a.db_rows, seed.derive(DATABASE_STREAM))?;
        let report = attack(&db, a.m, mechanism.as_ref(), seed)?;
        w.write_record([
            report.mechanism_label,
            seed.0.to_string(),
            csv_float(report.recovered_fraction),
            report.hamming_distance.to_string(),
            csv_float(report.noise_sigma_effective),
        ])
        .map_err(csv_failure)?;
    }
    w.flush()?;
    Ok(())
}
