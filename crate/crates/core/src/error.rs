use std::io;

use thiserror::Error;

use crate::scheme::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    #[error("system `{0}` is already registered")]
    DuplicateSystem(String),

    #[error("unknown system `{0}`")]
    UnknownSystem(String),

    #[error("system `{system}` has no parameter `{param}`")]
    UnknownParameter { system: String, param: String },

    #[error("invalid switch assignment: {}", join_violations(.0))]
    InvalidAssignment(Vec<Violation>),

    #[error("inadmissible scaling: {0}")]
    InvalidScaling(String),

    #[error("control slot {slot} of block {block} is unrealizable: both channel coefficients are zero but the aggregate control is {value}")]
    Unrealizable {
        block: usize,
        slot: usize,
        value: f64,
    },

    #[error("reduction `{variant}` requires {requirement}")]
    ReductionMismatch {
        variant: String,
        requirement: String,
    },

    #[error("division by zero coefficient {coefficient} in reduced controller")]
    ZeroCoefficient { coefficient: String },

    #[error("state diverged at t = {t}: |{component}| = {magnitude:e}")]
    Divergence {
        t: f64,
        component: String,
        magnitude: f64,
    },

    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),

    #[error("malformed config: {0}")]
    Parse(String),

    #[error("empty trace")]
    EmptyTrace,

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
