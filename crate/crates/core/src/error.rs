use thiserror::Error;

/// Failure modes shared by every layer of the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QdcError {
    /// Subsystem index, ket digit or operator arity does not fit the layout.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// A superposition whose coefficients cancel to the zero vector.
    #[error("degenerate state: {0}")]
    DegenerateState(String),

    /// Projectors that are not orthogonal, not idempotent or do not sum to identity.
    #[error("invalid measurement set: {0}")]
    MeasurementSet(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    /// Amplitude cap or work budget exceeded.
    #[error("capacity limit exceeded: {0}")]
    CapacityLimit(String),

    /// A measurement outcome that an honest protocol run can never produce.
    #[error("protocol violation: {0}")]
    ProtocolViolation(String),

    /// Malformed or unsupported serialized artifact.
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, QdcError>;
