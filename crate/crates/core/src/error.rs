use thiserror::Error;

use crate::mat::MatError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("no stabilizing solution: {0}")]
    NoStabilizingSolution(String),
    #[error("coupling condition violated: spectral radius of XY is {0:.6}")]
    CouplingFailure(f64),
    #[error("controller is not physically realizable: noise pairing requires {0:.6e} < 0")]
    NotRealizable(f64),
    #[error("controller does not have passive cavity structure: {0}")]
    Structure(String),
    #[error("closed loop is unstable (largest real part {0:.3e})")]
    UnstableLoop(f64),
    #[error("quadratic-stability certificate unavailable: {0}")]
    CertificateUnavailable(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Mat(#[from] MatError),
}

/// Coarse classification used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Invalid,
    Infeasible,
    Numerical,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Validation(_) | Error::Mat(MatError::Dimension(_)) | Error::Mat(MatError::NonFinite { .. }) => {
                ErrorClass::Invalid
            }
            Error::NoStabilizingSolution(_)
            | Error::CouplingFailure(_)
            | Error::NotRealizable(_)
            | Error::Structure(_)
            | Error::UnstableLoop(_)
            | Error::CertificateUnavailable(_) => ErrorClass::Infeasible,
            Error::Numerical(_) | Error::Mat(_) => ErrorClass::Numerical,
        }
    }
}
