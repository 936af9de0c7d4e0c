//! Signatures of monotone paths and their inversion.
//!
//! A componentwise non-decreasing path normalized to total variation 1
//! turns its iterated-integral coefficients into probabilities: N! times
//! the level-N coefficient of a word is the chance of drawing that word
//! letter-by-letter at sorted uniform times, reading letter probabilities
//! off the path's slopes. This crate computes the coefficients exactly
//! (piecewise-linear paths, levelwise concatenation product), aggregates
//! them to blockwise letter counts, inverts the aggregation into a
//! staircase estimate of the path, and evaluates the large-size rate
//! functionals that control how sharply sampled words concentrate around
//! the path.
//!
//! Modules, in dependency order:
//!
//! * [`paths`] - monotone paths, explicit parametrizations, discretization.
//! * [`signature`] - dense truncated coefficient tables plus an independent
//!   quadrature oracle for spot checks.
//! * [`words`] - word indexing, probability weights, blockwise
//!   aggregations and marginals.
//! * [`invert`] - argmax reconstruction, word sampling, lattice paths and
//!   the uniform closeness bound.
//! * [`ldp`] - rate kernels/functionals, the conditioned word sampler and
//!   empirical decay probes.

pub mod error;
pub mod invert;
pub mod ldp;
pub mod paths;
pub mod rng;
pub mod signature;
mod util;
pub mod words;

pub use error::{Error, Result};
pub use invert::{
    equivalence_bound_check, mle_reconstruct, reconstruct_from_blocks, sample_word,
    word_to_lattice, ArgmaxMode, BoundReport, Reconstruction, WordSampler,
};
pub use ldp::{
    empirical_decay, rate_finite_dim, rate_i, rate_w, rate_xt, rate_xt_time_side,
    simulate_conditioned_word, simulate_conditioned_word_seeded, DecayRow, PoissonWordSample,
    RateEval, WordEvent,
};
pub use paths::{discretize, CandidatePath, MonotonePath, PolySpec};
pub use signature::{
    chen_concat, level_sum_report, path_signature, path_signature_with_cap, quadrature_oracle,
    segment_signature, TruncatedSignature, DEPTH_CAP,
};
pub use words::{
    compositions, letter_count_marginal, multinomial_pmf, piece_marginals, product_marginal_gap,
    symmetrized_weights, symmetrized_weights_from_path, word_weights, BlockWeights, ProbMatrix,
    Word, WordDistribution,
};
