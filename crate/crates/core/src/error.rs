use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid bipartition: {0}")]
    InvalidBipartition(String),

    #[error("{what}: dimension {dim} exceeds limit {limit}")]
    SizeLimit {
        what: &'static str,
        dim: usize,
        limit: usize,
    },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("lattice size {0} is odd; the zero-magnetization sector is empty")]
    Parity(usize),

    #[error("degenerate lattice: sites {0} and {1} coincide")]
    DegenerateLattice(usize, usize),

    #[error("normal equations are rank deficient")]
    RankDeficient,

    #[error("normalization failed: {0}")]
    Normalization(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors that come from a configured size or resource ceiling.
    pub fn is_resource(&self) -> bool {
        matches!(self, Error::SizeLimit { .. })
    }
}
