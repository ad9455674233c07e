use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("self-arc on node `{0}`")]
    SelfArc(String),

    #[error("negative weight {weight} on arc {from} -> {to}")]
    NegativeWeight { from: String, to: String, weight: f64 },

    #[error("unknown node id `{0}`")]
    UnknownNode(String),

    #[error("malformed complex: {0}")]
    MalformedComplex(String),

    #[error("dimension mismatch: expected {expected}, got {got} ({what})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("problem size {size} exceeds the cap of {cap} ({what})")]
    TooLarge {
        what: &'static str,
        size: usize,
        cap: usize,
    },

    #[error("no harmonic structure to cluster")]
    NoHarmonicStructure,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty network")]
    EmptyNetwork,

    #[error("fewer than 2 edges in common ({0})")]
    TooFewCommonEdges(usize),

    #[error("design matrix is rank deficient; collinear columns: {}", .0.join(", "))]
    RankDeficient(Vec<String>),

    #[error("at least 2 clusters are required, found {0}")]
    TooFewClusters(usize),

    #[error("restricted covariance is singular")]
    SingularCovariance,

    #[error("missing required column `{0}`")]
    MissingColumn(String),

    #[error("geocoding `{address}` failed after {retries} retries: {message}")]
    Geocode {
        address: String,
        retries: u32,
        message: String,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
