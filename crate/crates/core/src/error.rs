use std::io;

use thiserror::Error;

/// Errors produced anywhere in the analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("no scene heading matched; check the format profile")]
    NoScenesFound,

    #[error("invalid format profile: {0}")]
    InvalidProfile(String),

    #[error("invalid beat boundaries: {0}")]
    InvalidBoundaries(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("table is empty after pruning zero rows and columns")]
    EmptyAfterPrune,

    #[error("zero mass in {axis} {index}")]
    ZeroMass { axis: &'static str, index: usize },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("row {0} projects onto the origin; its correlations are undefined")]
    ZeroNormRow(usize),

    #[error("dimension mismatch: expected {expected}, found {found} at position {index}")]
    DimensionMismatch {
        expected: usize,
        found: usize,
        index: usize,
    },

    #[error("invalid segment count k={k} for {n} units")]
    InvalidK { k: usize, n: usize },

    #[error("invalid factor pair {0},{1}: the embedding has {2} factors")]
    InvalidAxes(usize, usize, usize),

    #[error("need at least {needed} units, got {got}")]
    TooFewUnits { needed: usize, got: usize },

    #[error("schema error: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

impl Error {
    /// Process exit code for this error: 2 for input or configuration
    /// problems, 3 for numerical failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::NumericalFailure(_) | Error::ZeroMass { .. } | Error::ZeroNormRow(_) => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
