use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("fixed-point iteration did not converge after {iterations} iterations (residual {residual:.3e}); step size too large?")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("non-convergence in sample {sample}, step {step}: {source}")]
    SampleFailed {
        sample: usize,
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("scheme `{scheme}` is not applicable to model `{model}`")]
    UnsupportedScheme { scheme: &'static str, model: String },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown key `{0}`")]
    UnknownKey(String),

    #[error("missing required key `{0}`")]
    MissingRequired(String),

    #[error("dimension mismatch for `{key}`: {detail}")]
    DimensionMismatch { key: String, detail: String },

    #[error("invalid value for `{key}`: {detail}")]
    InvalidValue { key: String, detail: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
