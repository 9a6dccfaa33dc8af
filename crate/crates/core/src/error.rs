use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: bad header: {message}")]
    Header { path: PathBuf, message: String },

    #[error("{path}:{line}: column `{column}`: {message}")]
    Field {
        path: PathBuf,
        line: u64,
        column: String,
        message: String,
    },

    #[error("{path}:{line}: duplicate paper id `{id}`")]
    DuplicatePaper {
        path: PathBuf,
        line: u64,
        id: String,
    },

    #[error("{path}:{line}: edge {citing} -> {cited} references unknown paper `{unknown}`")]
    UnknownEndpoint {
        path: PathBuf,
        line: u64,
        citing: String,
        cited: String,
        unknown: String,
    },

    #[error("unknown paper id `{0}`")]
    UnknownPaper(String),

    #[error("cohort ({journal}, {year}) has no members")]
    EmptyCohort { journal: String, year: i32 },

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("design matrix is rank deficient: column `{column}` is collinear with {others:?}")]
    RankDeficient { column: String, others: Vec<String> },

    #[error("too few observations: {n} rows for {k} coefficients")]
    TooFewObservations { n: usize, k: usize },

    #[error("logistic regression did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("outcome is perfectly predicted (complete or quasi-complete separation) for {perfectly_predicted} observations")]
    Separation { perfectly_predicted: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("oracle guard exceeded: {papers} papers > {limit}")]
    OracleGuard { papers: usize, limit: usize },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }
}
