use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("table too small: need index {needed}, table limit is {limit}")]
    InsufficientTable { needed: u64, limit: u64 },

    #[error(
        "accuracy target missed: {what} (achieved error {achieved:e}, requested {requested:e})"
    )]
    Accuracy {
        what: String,
        achieved: f64,
        requested: f64,
    },

    #[error("integer overflow in {0}")]
    Overflow(String),

    #[error("pole at s = {0}")]
    Pole(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_table(needed: u64, limit: u64) -> Result<()> {
    if needed > limit {
        Err(Error::InsufficientTable { needed, limit })
    } else {
        Ok(())
    }
}
