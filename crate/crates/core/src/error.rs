use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("qubit count {0} outside supported range 1..=20")]
    QubitCount(usize),
    #[error("wire {wire} out of range for {n_qubits}-qubit register")]
    WireOutOfRange { wire: usize, n_qubits: usize },
    #[error("gate wires must be distinct (got {0} twice)")]
    DuplicateWire(usize),
    #[error("dimension mismatch: {what} (expected {expected}, got {got})")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("states {i} and {j} have vanishing overlap; negative-log-fidelity distance is infinite")]
    InfiniteDistance { i: usize, j: usize },
    #[error("row {0} has no finite neighbour distances")]
    DegenerateRow(usize),
    #[error(
        "perplexity {target} unreachable for row {row}: at most {max} neighbours are available"
    )]
    UnreachablePerplexity { row: usize, target: f64, max: f64 },
    #[error("sigma search for row {row} did not converge: best sigma {sigma}, perplexity {achieved}")]
    SigmaNotConverged {
        row: usize,
        sigma: f64,
        achieved: f64,
    },
    #[error("non-finite cost at epoch {epoch}: {value}")]
    NonFiniteCost { epoch: usize, value: f64 },
    #[error("trajectory has no movement after centering")]
    NoMovement,
    #[error("data error: {0}")]
    Data(String),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        match e.kind() {
            csv::ErrorKind::Io(io) => Error::Io(io.to_string()),
            _ => Error::Data(e.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
