use thiserror::Error;

/// Errors raised across the harmonic power-flow pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("incompatible operands: {0}")]
    Incompatible(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("grid hypothesis violated by {element} at f = {frequency} Hz: {reason}")]
    Hypothesis {
        element: String,
        frequency: f64,
        reason: String,
    },

    #[error("hybrid matrix does not exist: {0}")]
    Solvability(String),

    #[error("ex-ante condition failed: matrix {matrix} is not invertible (rcond = {rcond:e})")]
    Condition { matrix: String, rcond: f64 },

    #[error("closed-loop resolvent is singular: no periodic steady state ({0})")]
    Resonance(String),

    #[error("degenerate operating point: {0}")]
    DegenerateOperatingPoint(String),

    #[error("source model error: {0}")]
    SourceModel(String),

    #[error("invalid state: {0}")]
    State(String),

    #[error("simulation diverged in period {period}: {reason}")]
    Unstable { period: usize, reason: String },

    #[error("comparison error: {0}")]
    Comparison(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("completeness error: {0}")]
    Completeness(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
