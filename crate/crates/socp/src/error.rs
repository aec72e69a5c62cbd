use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SocpError {
    #[error("row has {found} coefficients, program has {expected} variables")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("variable index {index} out of range for {num_vars} variables")]
    VariableOutOfRange { index: usize, num_vars: usize },
    #[error("cone block must have at least one row")]
    EmptyCone,
    #[error("complex constraint needs at least one row")]
    NoRows,
    #[error("WNG floor must be positive, got {0}")]
    NonpositiveFloor(f64),
}
