//! Error types shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, ConicError>;

#[derive(Debug, Clone, Error)]
pub enum ConicError {
    #[error("point outside chart domain: {0}")]
    ChartDomain(String),
    #[error("metric is singular or badly conditioned: {0}")]
    SingularMetric(String),
    #[error("finite-difference stencil produced a non-finite value or left the chart: {0}")]
    NonFiniteDerivative(String),
    #[error("bundle is not time orientable; no causal indicator exists")]
    NotTimeOrientable,
    #[error("vector is not timelike: g(v,v) = {gvv}")]
    NonTimelike { gvv: f64 },
    #[error("model has no lab-time scalar registered")]
    MissingLabTime,
    #[error("integration produced a non-finite state at parameter {t}")]
    NonFiniteState { t: f64 },
    #[error("reparameterisation degenerate: ds/dt = {rate} at parameter {t}")]
    ReparamDegenerate { rate: f64, t: f64 },
    #[error("indicator sign incompatible with even-degree root extraction: F = {value}")]
    Sign { value: f64 },
    #[error("density vanishes identically on the declared region")]
    DegenerateDensity,
    #[error("ensemble is empty")]
    EmptyEnsemble,
    #[error("quadrature domain invalid: {0}")]
    QuadratureDomain(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
