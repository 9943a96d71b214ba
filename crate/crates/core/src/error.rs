use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("Hamiltonian document contains no terms")]
    EmptyDocument,

    #[error("{qubits} qubits exceeds the dense-matrix limit of {limit}")]
    QubitLimit { qubits: usize, limit: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("expected {expected} parameters, got {actual}")]
    ParameterCount { expected: usize, actual: usize },

    #[error("qubit index {index} out of range for a {qubit_count}-qubit register")]
    QubitOutOfRange { index: usize, qubit_count: usize },

    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    #[error("invalid value: {0}")]
    InvalidValue(String),

    #[error("the discriminator cost needs at least one known state")]
    EmptyLadder,

    #[error("{0} is only available in exact simulation")]
    RequiresExact(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
