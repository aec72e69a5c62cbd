use broadbeam_socp::SocpError;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BeamError {
    #[error("invalid array geometry: {0}")]
    InvalidGeometry(String),
    #[error("invalid band specification: {0}")]
    InvalidBand(String),
    #[error("invalid design settings: {0}")]
    InvalidSettings(String),
    #[error("expected {expected} values, got {found}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("every filter has zero energy at this frequency")]
    ZeroFilterEnergy,
    #[error("beamformer response is too close to zero for a defined phase")]
    NearZeroResponse,
    #[error("reduced parameterization requires a symmetric array")]
    AsymmetricGeometry,
    #[error("design is infeasible{}", .family.as_ref().map(|f| format!(" (binding constraints: {f})")).unwrap_or_default())]
    Infeasible { family: Option<String> },
    #[error("solver failed: {0}")]
    NumericalFailure(String),
    #[error(transparent)]
    Program(#[from] SocpError),
}
