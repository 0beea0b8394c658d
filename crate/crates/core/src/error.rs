use thiserror::Error;

use crate::specfun::SpecFunError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    SpecFun(#[from] SpecFunError),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("interaction matrix is numerically singular (condition estimate {condition:e})")]
    Singular { condition: f64 },
    #[error("degenerate scatterer: bare polarizability must be nonzero and finite")]
    DegenerateScatterer,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),
    #[error("projection undefined: both emitters are dark at the detector")]
    UndefinedProjection,
    #[error("far-field quadrature invalid: {0}")]
    FarFieldValidity(String),
    #[error("could not place {placed} of {requested} scatterers after {attempts} attempts")]
    Packing { requested: usize, placed: usize, attempts: u64 },
    #[error("config error: {0}")]
    Config(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
