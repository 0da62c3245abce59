use thiserror::Error;

/// Errors raised by the simulator and its analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum QkdError {
    #[error("unsupported dimension {0}: only 2 and 4 are supported")]
    UnsupportedDimension(usize),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("state is not normalized (squared norm {0})")]
    NotNormalized(f64),

    #[error("outcome probabilities sum to {0}, expected 1")]
    CorruptedState(f64),

    #[error("invalid probability vector: {0}")]
    InvalidProbability(String),

    #[error("letter {letter} out of range for dimension {dim}")]
    LetterOutOfRange { letter: usize, dim: usize },

    #[error("key is empty")]
    EmptyKey,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("transcript contains no eavesdropper records")]
    NoEveRecords,

    #[error("unsupported strategy: {0}")]
    UnsupportedStrategy(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("routing is not a permutation (max off-diagonal probability {max_off_diagonal:.6})")]
    NonPermutationRouting { max_off_diagonal: f64 },

    #[error("malformed record: {0}")]
    Parse(String),
}

pub type Result<T, E = QkdError> = std::result::Result<T, E>;
