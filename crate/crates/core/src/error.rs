use std::fmt;

/// Which coefficient family a set of values belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    /// Biorthogonal exchange: localized analysis `d = G†x`, synthesis with `B = (G†)⁻¹`.
    Pgb,
    /// Plain periodic Gabor expansion `x = Gc` (equivalent to the discrete Gabor expansion).
    Pg,
    /// Unitary discrete Fourier baseline.
    Dft,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Pgb => "pgb",
            Mode::Pg => "pg",
            Mode::Dft => "dft",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pgb" => Ok(Mode::Pgb),
            "pg" | "dge" => Ok(Mode::Pg),
            "dft" => Ok(Mode::Dft),
            other => Err(Error::InvalidArgument(format!("unknown mode `{other}`"))),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("mode mismatch: expected {expected}, found {found}")]
    Mode { expected: &'static str, found: Mode },

    #[error("ill-conditioned system: condition estimate {cond:.3e} exceeds {limit:.1e}")]
    IllConditioned { cond: f64, limit: f64 },

    #[error("iteration did not converge after {iterations} steps (relative residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("parse error at byte {offset}: {msg}")]
    Binary { offset: usize, msg: String },

    #[error("parse error on line {line}: {msg}")]
    Text { line: usize, msg: String },

    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    /// Attach the offending path to an error raised while handling a file.
    pub fn in_file(self, path: impl AsRef<std::path::Path>) -> Self {
        Error::File {
            path: path.as_ref().display().to_string(),
            source: Box::new(self),
        }
    }

    /// Innermost error, with any file context stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::File { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
