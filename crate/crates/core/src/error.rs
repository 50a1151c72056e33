use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("sieve bound {requested} exceeds the in-memory capacity of {max}")]
    Capacity { requested: u64, max: u64 },

    #[error("sieve bound must be at least 2, got {0}")]
    BoundTooSmall(u64),

    #[error("argument {x} is outside the tabulated range [1, {bound}]")]
    OutOfRange { x: f64, bound: u64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("L-function has a pole at s = 1 for the principal character mod {modulus}")]
    PrincipalCharacter { modulus: u64 },

    #[error("|L(1,χ)| = {magnitude:e} for a character mod {modulus}; refusing to divide")]
    VanishingL { modulus: u64, magnitude: f64 },

    #[error(
        "Euler-Maclaurin shift {shift} too small: estimated error {estimate:e} exceeds {target:e}"
    )]
    InsufficientPrecision {
        shift: u32,
        estimate: f64,
        target: f64,
    },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("cache file {path}: {reason}")]
    CacheCorrupt { path: PathBuf, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {reason}")]
    Parse { path: PathBuf, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
