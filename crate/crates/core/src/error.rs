use thiserror::Error;

/// Errors shared by every layer of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("dimension mismatch: {0}")]
    Mismatch(String),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("polynomial degree {degree} exceeds the cap {cap}")]
    DegreeCap { degree: u32, cap: u32 },

    #[error("s = ({s0}, {s1}) lies outside the certified region")]
    NotAdmissible { s0: f64, s1: f64 },

    #[error(
        "singular system (min/max pivot ratio {pivot_ratio:.3e}); possible S-spectrum proximity"
    )]
    Singular { pivot_ratio: f64 },

    #[error("power iteration did not converge after {iterations} steps (last estimate {last})")]
    NoConvergence { iterations: usize, last: f64 },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
