use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown variable label `{0}`")]
    UnknownLabel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("malformed input: {0}")]
    Format(String),

    #[error("composition error: {0}")]
    Composition(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("coefficient blowup: |{coefficient}| exceeds {limit} while eliminating `{variable}`")]
    Blowup {
        variable: String,
        coefficient: i64,
        limit: i64,
    },

    #[error("codebook too large: {required} entries needed, cap is {cap}")]
    CodebookCap { required: f64, cap: u64 },
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
