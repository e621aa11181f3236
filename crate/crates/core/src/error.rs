use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid config field `{field}`: expected {expected}, got {got}")]
    InvalidConfig {
        field: &'static str,
        expected: &'static str,
        got: String,
    },

    #[error("config parse error: {0}")]
    ConfigParse(String),

    #[error("combiner must have unit norm, got norm {norm}")]
    NonNormalizedCombiner { norm: f64 },

    #[error("shape mismatch in {context}: expected {expected}, got {got}")]
    ShapeMismatch {
        context: &'static str,
        expected: String,
        got: String,
    },

    #[error("unknown channel id `{0}` (expected comm_12, comm_21, si_1 or si_2)")]
    UnknownChannel(String),

    #[error("infeasible constraint set: {0}")]
    Infeasible(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("trial (tau_db={tau_db}, trial={trial}) failed: {source}")]
    Trial {
        tau_db: f64,
        trial: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn shape(context: &'static str, expected: (usize, usize), got: (usize, usize)) -> Self {
        Error::ShapeMismatch {
            context,
            expected: format!("{}x{}", expected.0, expected.1),
            got: format!("{}x{}", got.0, got.1),
        }
    }

    /// Coarse category, used for process exit codes.
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidConfig { .. } | Error::ConfigParse(_) | Error::UnknownChannel(_) => {
                ErrorKind::Config
            }
            Error::Io(_) | Error::Csv(_) | Error::Json(_) => ErrorKind::Io,
            Error::Trial { source, .. } => source.kind(),
            _ => ErrorKind::Numerical,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Numerical,
    Io,
}

impl ErrorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorKind::Config => "config",
            ErrorKind::Numerical => "numerical",
            ErrorKind::Io => "io",
        }
    }
}
