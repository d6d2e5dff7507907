//! Differentially private low-rank matrix approximation.
//!
//! The crate provides the non-private sketch-and-project baseline, a private
//! range finder and projection composed into the PFP (private find and
//! project) pipeline, an input-perturbation baseline, coherence measurements,
//! privacy accounting, a reconstruction-attack lab and the experiment harness
//! that drives them.
// `!(x > 0.0)` style checks reject NaN on purpose
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod approx;
pub mod attack;
pub mod coherence;
pub mod error;
pub mod experiment;
pub mod generate;
pub mod io;
pub mod linalg;
pub mod matrix;
pub mod privacy;
pub mod rng;
pub mod sketch;
pub mod svd;
#[cfg(any(test, feature = "test-hooks"))]
pub mod testing;

pub use approx::{ApproxResult, Diagnostics, NoiseScales};
pub use attack::{attack, decode_database, encode_database, AttackReport, BitDatabase, Mechanism};
pub use coherence::{c_coherence, mu0_coherence, prune_entries, CoherenceReport};
pub use error::{Error, Result};
pub use experiment::{run_experiment, sweep, Algorithm, ExperimentConfig, ExperimentRecord, SweepGrid};
pub use generate::{generate, GeneratorSpec, MatrixKind};
pub use privacy::{
    advanced_composition, basic_composition, gaussian_mechanism_sigma, randomized_response, rr_low_rank_baseline,
    ComposedBudget, NoiseCalibration, PrivacyBudget,
};
pub use sketch::{
    hmt_low_rank, pfp, private_projection, private_range_finder, select_alpha, CoherenceMode, RangeResult, SketchParams,
};
pub use io::{load_matrix, save_matrix, MatrixFormat};
pub use linalg::{gram_schmidt, project_onto_range};
pub use matrix::{frobenius_norm, gaussian_matrix, spectral_norm, DenseMatrix};
pub use rng::RngSeed;
pub use svd::{optimal_rank_k_error, svd_oracle, SvdResult};
