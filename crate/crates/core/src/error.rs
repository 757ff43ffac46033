use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("null state")]
    NullState,
    #[error("bad dimension: length {0} is not a power of two")]
    BadDimension(usize),
    #[error("state is not normalized (norm^2 = {0})")]
    NotNormalized(f64),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("repeated target qubit {0}")]
    RepeatedTarget(usize),
    #[error("qubit {index} out of range for a {n_qubits}-qubit register")]
    QubitOutOfRange { index: usize, n_qubits: usize },
    #[error("operator is not unitary")]
    NotUnitary,
    #[error("expected a {expected}-qubit state, found {found} qubits")]
    WrongQubitCount { expected: usize, found: usize },
    #[error("outcome value {0} is not +1 or -1")]
    OutOfDomain(i64),
    #[error("bad meter resource")]
    BadMeter,
    #[error("insufficient ebits: {granted} granted, {requested} requested")]
    InsufficientEbits { granted: u32, requested: u32 },
    #[error("{party} does not own qubit {qubit}")]
    NotOwned { party: String, qubit: usize },
    #[error("protocol phase {found} cannot follow {current}")]
    PhaseOrder { current: String, found: String },
    #[error("no pending message for {0}")]
    NoMessage(String),
    #[error("malformed trace: {0}")]
    MalformedTrace(String),
    #[error("trials must be at least 1")]
    NoTrials,
}
