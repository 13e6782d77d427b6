use thiserror::Error;

/// Errors produced by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("rank out of range: valid interval is [0, {n}!) = [0, {bound})")]
    RankOutOfRange { n: usize, bound: String },

    #[error("not a permutation of 0..{n}: {detail}")]
    NotABijection { n: usize, detail: String },

    #[error("channel must contain at least one path")]
    EmptyChannel,

    #[error(
        "ML search space M^N = {modulation_order}^{n} exceeds the 2^20 guard; use MMSE equalization instead"
    )]
    SearchSpaceTooLarge { modulation_order: usize, n: usize },

    #[error("singular system at sigma2 = {sigma2}; use a ridge sigma2 > 0")]
    Singular { sigma2: f64 },

    #[error("trial failed at snr_index={snr_index} trial={trial}: {source}")]
    TrialFailed {
        snr_index: usize,
        trial: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("numerical check failed: {0}")]
    Numerical(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
