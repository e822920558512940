use crate::inversion::InversionError;
use crate::model::ModelError;
use crate::pointprocess::PpError;
use crate::specfun::SpecError;
use thiserror::Error;

/// Errors of the analytic metric evaluators.
#[derive(Debug, Error)]
pub enum AnalyticsError {
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error(transparent)]
    Inversion(#[from] InversionError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    PointProcess(#[from] PpError),
    #[error(transparent)]
    Special(#[from] SpecError),
}
