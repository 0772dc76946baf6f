use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("argument outside supported domain: {0}")]
    Domain(String),

    #[error("truncation order {n} too small for space-bandwidth {c} (need at least {required})")]
    TruncationInsufficient { n: usize, c: f64, required: usize },

    #[error("{routine} did not converge after {iterations} iterations")]
    NonConvergence {
        routine: &'static str,
        iterations: usize,
    },

    #[error("no eigenvalue above cutoff {cutoff:e}")]
    EmptySpectrum { cutoff: f64 },

    #[error("space-bandwidth mismatch: basis built for C = {basis}, problem needs C = {problem}")]
    BandwidthMismatch { basis: f64, problem: f64 },

    #[error("phase-reduced matrix has imaginary residue {0:e}")]
    ImaginaryResidue(f64),

    #[error("unsupported spectral profile: {0}")]
    UnsupportedProfile(String),

    #[error("mismatched systems: {0}")]
    Mismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
