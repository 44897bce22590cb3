use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid base {0}: must be at least 2")]
    InvalidBase(u32),

    #[error("digit {digit} at position {position} is not below base {base}")]
    DigitOutOfRange { digit: u32, position: usize, base: u32 },

    #[error("digit strings must contain at least one digit")]
    EmptyString,

    #[error("operation would delete every digit")]
    EmptyResult,

    #[error("digit {0} is not in the relabel map")]
    UnmappedDigit(u32),

    #[error("base mismatch: expected {expected}, found {found}")]
    BaseMismatch { expected: u32, found: u32 },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("string length {length} is not a multiple of block size {block}")]
    LengthNotDivisible { length: usize, block: usize },

    #[error("block length {block} exceeds string length {length}")]
    BlockTooLong { block: usize, length: usize },

    /// Raised whenever a phase angle is not a p-adic rational multiple of
    /// 2π of permitted depth: states at such angles do not exist.
    #[error("angle {numer}/{denom} of a full turn is off the base-{base} grid of depth {max_depth}")]
    OffGrid { numer: i64, denom: i64, base: u32, max_depth: u32 },

    #[error("fewer than {needed} digits remain after reduction ({available} available)")]
    SuffixTooShort { needed: usize, available: usize },

    #[error("string is not constant-0 or constant-1")]
    NotAnEigenstate,

    #[error("integration did not reach a pole within {steps} steps")]
    NonConvergence { steps: usize },

    #[error("reduced value is exactly 1/2: stationary point of the reduction flow")]
    Tie,

    #[error("degenerate statistic: {0}")]
    Degenerate(&'static str),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
