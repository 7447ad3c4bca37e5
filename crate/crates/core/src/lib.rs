//! Unbiased estimation of reciprocal means.
//!
//! For a bounded non-negative random variable Z, the truncated-product
//! estimator `w/q_N * prod_{i=1}^{N} (1 - w Z_i)` is exactly unbiased for
//! `beta = 1/E[Z]` whenever the random truncation index N charges every
//! non-negative integer. This crate implements the estimator and the
//! machinery for tuning and validating it:
//!
//! - [`model`]: bounded Z models with analytic moments and seeded sampling;
//! - [`analytic`]: closed forms for the variance-minimizing geometric law
//!   (success probability, variance, expected cost, time-variance product);
//! - [`tvm`]: the time-variance-minimizing truncation law and its tilt solver;
//! - [`estimator`]: draws, cost accounting, and deterministic replication;
//! - [`adaptive`]: the two-phase pilot construction that replaces unknown
//!   moments with sample moments while preserving exact unbiasedness;
//! - [`inference`]: Laplace-asymptotic and delta-method confidence intervals,
//!   standardized errors, and a Kolmogorov–Smirnov diagnostic;
//! - [`series`]: independent series/enumeration oracles for the estimator's
//!   moments.
//!
//! All numeric code is generic over the [`Real`] scalar (`f32` or `f64`);
//! the `*64` aliases below fix the double-precision instantiations that the
//! command-line tools use. Every sampling routine consumes a [`RandomStream`]
//! addressed by `(seed, stream_index)`, which makes runs reproducible
//! bit-for-bit at any worker count.

// Validation guards use `!(x > 0)` so NaN inputs fail closed; reference
// constants in tests carry their full 19-digit frozen values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::excessive_precision)]

pub mod adaptive;
pub mod analytic;
pub mod error;
pub mod estimator;
pub mod inference;
mod kahan;
pub mod model;
pub mod real;
pub mod series;
pub mod stream;
pub mod tvm;

pub use error::{Error, Result};
pub use real::Real;
pub use stream::{RandomStream, GENERATOR_ID};

pub use adaptive::{
    adaptive_draw, adaptive_experiment, conditional_tvp, pilot, AdaptiveExperiment, PilotResult,
};
pub use analytic::{
    asymptotic_sigma, laplace_quantile, success_probability, sweep_curve, tuning_point,
    weight_for_expected_cost, TuningPoint,
};
pub use estimator::{
    draw_truncation, replicate, replicate_with_workers, single_draw, EstimateDraw,
    ReplicationSummary, TruncationLaw,
};
pub use inference::{
    ks_statistic, laplace_cdf, laplace_ci, normal_delta_ci, ratio_estimate, standard_normal_cdf,
    standardized_errors, CiMethod, ConfidenceInterval,
};
pub use model::{parse_model_spec, MomentSummary, ZModel};
pub use series::{bernoulli_exact_distribution, exact_second_moment_series, BernoulliEnumeration};
pub use tvm::{expected_truncation_cost, solve_time_variance_weight, tvm_pmf, tvm_tvp_exact, TvmLaw};

/// Double-precision instantiations.
pub type ZModel64 = ZModel<f64>;
pub type MomentSummary64 = MomentSummary<f64>;
pub type TuningPoint64 = TuningPoint<f64>;
pub type TvmLaw64 = TvmLaw<f64>;
pub type TruncationLaw64 = TruncationLaw<f64>;
pub type EstimateDraw64 = EstimateDraw<f64>;
pub type ReplicationSummary64 = ReplicationSummary<f64>;
pub type PilotResult64 = PilotResult<f64>;
pub type ConfidenceInterval64 = ConfidenceInterval<f64>;
