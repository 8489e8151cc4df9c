use thiserror::Error;

/// Errors raised by the downsampling library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid distribution: {0}")]
    Distribution(String),

    #[error("degenerate sample in dimension {dim}: {distinct} distinct coordinates for {cells} cells")]
    Degenerate {
        dim: usize,
        distinct: usize,
        cells: usize,
    },

    #[error("cell {cell:?} out of range for r = {r}")]
    CellOutOfRange { cell: Vec<usize>, r: usize },

    #[error("a tag is required to locate points in an augmented partition")]
    MissingTag,

    #[error("budget exceeded: {what} needs {needed}, budget is {budget}")]
    Budget {
        what: &'static str,
        needed: u128,
        budget: u128,
    },

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("sample budget exhausted after {drawn} draws ({accepted} usable)")]
    Exhausted { drawn: usize, accepted: usize },

    #[error("serialization: {0}")]
    Serde(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}
