use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{0} is not an odd prime")]
    NotOddPrime(u64),
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("weight {got} is below the minimum {min}")]
    WeightTooSmall { got: u64, min: u64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("incompatible expansions: grid 1/{left_grid} vs 1/{right_grid}, length {left_len} vs {right_len}")]
    Mismatch {
        left_grid: u64,
        right_grid: u64,
        left_len: usize,
        right_len: usize,
    },
    #[error("coefficient at index {index} lies outside support class {class}")]
    OffClass { index: usize, class: u64 },
    #[error("expansion has no support class")]
    MissingSupportClass,
    #[error("truncation length {got} is below the required bound {needed}")]
    TruncationTooSmall { got: usize, needed: usize },
    #[error("rank certification failed: no agreement after {primes_tried} primes")]
    CertificationFailed { primes_tried: usize },
    #[error("dim W_{k} = {dim} exceeds the upper bound {bound} for p = {p}")]
    BoundViolation { p: u64, k: u32, dim: usize, bound: u64 },
    #[error("degree {0} has not been computed")]
    DegreeUnavailable(u32),
    #[error("cache file {path} is corrupt: {reason}")]
    CacheCorrupt { path: String, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
