use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid ensemble parameters: {0}")]
    InvalidParams(String),

    #[error(
        "design rate {rate} is not positive for L = {coupling_length}; increase L or decrease w"
    )]
    NonPositiveRate { rate: f64, coupling_length: usize },

    #[error("d_g = 1 cannot achieve capacity; pass the override flag to analyse it anyway")]
    DegreeOneChannel,

    #[error("density evolution does not decode even at overhead {max_alpha}")]
    NoSuccessInBracket { max_alpha: f64 },

    #[error("decoding success is not monotone in overhead: fails at {alpha} inside a bracket that succeeds at {succeeding_alpha}")]
    NonMonotoneBracket { alpha: f64, succeeding_alpha: f64 },

    #[error("power iteration did not reach relative tolerance {tol} within {iterations} iterations (gap {gap})")]
    NonConvergence {
        tol: f64,
        iterations: usize,
        gap: f64,
    },

    #[error("L = {coupling_length} is smaller than 2w - 1 = {min}")]
    SizeTooSmall { coupling_length: usize, min: usize },

    #[error("invalid section size M = {m}: {reason}")]
    InvalidM { m: usize, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
