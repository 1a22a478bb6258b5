use thiserror::Error;

/// Errors produced anywhere in the toolkit.
///
/// The CLI maps these onto process exit codes, see [`Error::exit_code`].
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside the domain where the model is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// Structurally invalid input (shapes, sizes, orderings).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A numerical routine failed to converge or produced garbage.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Not enough usable data to carry out the requested analysis.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Same variant with `ctx` prepended to the message.
    pub fn context(self, ctx: impl std::fmt::Display) -> Self {
        match self {
            Error::Domain(m) => Error::Domain(format!("{ctx}: {m}")),
            Error::InvalidInput(m) => Error::InvalidInput(format!("{ctx}: {m}")),
            Error::Numerical(m) => Error::Numerical(format!("{ctx}: {m}")),
            Error::InsufficientData(m) => Error::InsufficientData(format!("{ctx}: {m}")),
            Error::Parse(m) => Error::Parse(format!("{ctx}: {m}")),
            io @ Error::Io { .. } => io,
        }
    }

    /// Exit code convention: 2 invalid arguments, 3 numerical failure,
    /// 4 insufficient data. I/O and parse problems count as invalid input.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_) | Error::InvalidInput(_) | Error::Io { .. } | Error::Parse(_) => 2,
            Error::Numerical(_) => 3,
            Error::InsufficientData(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
