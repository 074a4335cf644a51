use thiserror::Error;

/// Errors raised by the library. Every message names the module it came from.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("graphs: node index {index} out of range for p={p}")]
    InvalidNode { index: usize, p: usize },

    #[error("graphs: self-loop ({0},{0}) is not allowed")]
    SelfLoop(usize),

    #[error("graphs: graph is not decomposable")]
    NotDecomposable,

    #[error("{module}: invalid input: {message}")]
    InvalidInput { module: &'static str, message: String },

    #[error("{module}: dimension mismatch: {message}")]
    DimensionMismatch { module: &'static str, message: String },

    #[error("likelihood: matrix not positive definite after jitter ({context})")]
    Singular { context: String },

    #[error(
        "likelihood: rank deficient statistics: entry {entry} has {dof} degrees of freedom but \
         a clique of size {clique_size} needs at least {required}; increase smoothing \
         (--smoothing daniell:m or piecewise:M), use Bartlett splitting, or add replicates"
    )]
    RankDeficient {
        entry: usize,
        dof: f64,
        clique_size: usize,
        required: usize,
    },

    #[error("{module}: invalid configuration: {message}")]
    Config { module: &'static str, message: String },

    #[error("simulate: no acceptable VAR(1) model after {attempts} attempts")]
    Generation { attempts: usize },
}

impl Error {
    pub(crate) fn input(module: &'static str, message: impl Into<String>) -> Self {
        Error::InvalidInput {
            module,
            message: message.into(),
        }
    }

    pub(crate) fn config(module: &'static str, message: impl Into<String>) -> Self {
        Error::Config {
            module,
            message: message.into(),
        }
    }

    pub(crate) fn mismatch(module: &'static str, message: impl Into<String>) -> Self {
        Error::DimensionMismatch {
            module,
            message: message.into(),
        }
    }

    /// True for errors caused by numerical breakdown rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Singular { .. } | Error::RankDeficient { .. })
    }

    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config { .. } | Error::Generation { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
