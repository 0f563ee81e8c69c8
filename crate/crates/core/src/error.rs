use crate::alphabet::Letter;

/// Errors produced by the predictors, the coder, and the lab.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid source: {0}")]
    InvalidSource(String),

    #[error("letter {letter} is outside the alphabet of size {size}")]
    LetterOutOfRange { letter: Letter, size: u64 },

    #[error("letter {0} is not a leaf of the predictor tree")]
    UnknownLetter(Letter),

    #[error("invalid estimator: {0}")]
    InvalidEstimator(String),

    #[error("invalid estimator arguments: nu={nu}, total={total}, sigma={sigma}")]
    EstimateDomain { nu: u64, total: u64, sigma: u64 },

    #[error("alphabet size must be at least 2, got {0}")]
    AlphabetTooSmall(u64),

    #[error("invalid tree: {0}")]
    InvalidTree(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("codeword {first:?} (letter {first_letter}) is a prefix of {second:?} (letter {second_letter})")]
    PrefixViolation { first_letter: Letter, first: String, second_letter: Letter, second: String },

    #[error("invalid code: {0}")]
    InvalidCode(String),

    #[error("expected codeword length diverges under this source (partial sum {partial_sum} after {letters} letters)")]
    DivergentCode { partial_sum: f64, letters: u64 },

    #[error("operation requires a finite alphabet")]
    InfiniteAlphabet,

    #[error("predictor assigns zero probability to letter {0}")]
    InfiniteDivergence(Letter),

    #[error("node has {0} branches; the coder supports at most 65536")]
    TooManyBranches(usize),

    #[error("corrupt stream: {0}")]
    Corrupt(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
