//! Crate-wide error type. Numeric payloads are widened to `f64` so the enum
//! stays non-generic.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("w = {w} is outside the feasibility interval (0, {limit}) = (0, 2 E[Z]/E[Z^2])")]
    InfeasibleWeight { w: f64, limit: f64 },

    #[error("the time-variance-minimizing law requires w < 1/E[Z] = {limit}, got w = {w}")]
    TvmWeightTooLarge { w: f64, limit: f64 },

    #[error("alpha = {0} must lie strictly inside (0, 1)")]
    InvalidAlpha(f64),

    #[error("tolerance must be positive and finite, got {0}")]
    InvalidTolerance(f64),

    #[error("success probability {0} must lie strictly inside (0, 1)")]
    InvalidSuccessProbability(f64),

    #[error("pilot size k must be at least 1")]
    InvalidPilotSize,

    #[error("epsilon must be positive, got {0}")]
    InvalidEpsilon(f64),

    #[error("grid must be strictly increasing: grid[{index}] = {value} does not increase")]
    GridNotIncreasing { index: usize, value: f64 },

    #[error("series diverges: {0}")]
    SeriesDiverges(String),

    #[error("series truncation failed: {0}")]
    TruncationFailed(String),

    #[error("requested expected cost {cost} is below the minimum {minimum} attainable for this model")]
    CostTooSmall { cost: f64, minimum: f64 },

    #[error("sample mean is not positive; reciprocal estimate is undefined")]
    UndefinedEstimate,

    #[error("empty sample")]
    EmptySample,

    #[error("model spec error at position {position}: {message}")]
    SpecParse { position: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
