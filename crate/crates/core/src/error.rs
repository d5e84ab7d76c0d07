use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} is not normalized: |x|^2 + |y|^2 deviates from 1 by {deviation:e}")]
    NotNormalized { what: &'static str, deviation: f64 },

    #[error("{name} = {value} is not a probability in [0, 1]")]
    ProbabilityOutOfRange { name: &'static str, value: f64 },

    #[error("{what} needs at least {needed} bits, got {got}")]
    TooShort {
        what: &'static str,
        needed: usize,
        got: usize,
    },

    #[error("scrambling template has {template_len} bits, block needs more than {block_len}")]
    TemplateTooShort {
        template_len: usize,
        block_len: usize,
    },

    #[error("channel ({p0}, {p1}) lies on the diagonal p0 + p1 = 1")]
    DegenerateChannel { p0: f64, p1: f64 },

    #[error("max_len {max_len} exceeds the enumeration bound {limit}")]
    MaxLenTooLarge { max_len: u32, limit: u32 },

    #[error("omega integrity failure: {0}")]
    OmegaIntegrity(String),

    #[error("invalid program encoding: {0}")]
    InvalidProgram(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn check_probability(name: &'static str, value: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(Error::ProbabilityOutOfRange { name, value })
    }
}
