use alloc::string::String;

/// Errors raised by the simulation core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("qubit count {0} outside supported range 1..={1}")]
    QubitCount(usize, usize),
    #[error("qubit index {index} out of range for {num_qubits} qubits")]
    QubitIndex { index: usize, num_qubits: usize },
    #[error("two-qubit gate needs distinct qubits, got {0} twice")]
    RepeatedQubit(usize),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("expected {expected} circuit parameters, found {found}")]
    ParameterCount { expected: usize, found: usize },
    #[error("size cap exceeded: {num_qubits} qubits > {cap}")]
    SizeCap { num_qubits: usize, cap: usize },
    #[error("block index ({row}, {col}) out of range for a {grid}x{grid} grid")]
    BlockIndex { row: usize, col: usize, grid: usize },
    #[error("operator contains Y letters, which produce imaginary entries")]
    ImaginaryOperator,
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("graph is not connected")]
    Disconnected,
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("infeasible problem: {0}")]
    Infeasible(String),
    #[error("locality violation: agent {reader} read {channel} from non-neighbor {sender}")]
    Locality { reader: usize, sender: usize, channel: &'static str },
    #[error("missing message: {channel} from agent {sender}")]
    MissingMessage { sender: usize, channel: &'static str },
    #[error("message already posted: {channel} from agent {sender}")]
    DuplicateMessage { sender: usize, channel: &'static str },
}

pub type Result<T> = core::result::Result<T, Error>;
