use thiserror::Error;

/// Errors raised by state manipulation, controlled tasks and network protocols.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("state dimension {0} exceeds the ceiling of 2^20")]
    TooLarge(usize),
    #[error("unknown register `{0}`")]
    UnknownRegister(String),
    #[error("duplicate register `{0}`")]
    DuplicateRegister(String),
    #[error("register `{label}` has dimension {dim}, expected {expected}")]
    DimMismatch {
        label: String,
        dim: usize,
        expected: usize,
    },
    #[error("operator shape {rows}x{cols} does not fit target dimension {target}")]
    ShapeMismatch {
        rows: usize,
        cols: usize,
        target: usize,
    },
    #[error("operator is not unitary (deviation {0:.3e})")]
    NonUnitary(f64),
    #[error("Kraus operators are not complete (deviation {0:.3e})")]
    IncompleteKraus(f64),
    #[error("outcome {outcome} has probability {probability:.3e}")]
    ImpossibleOutcome { outcome: usize, probability: f64 },
    #[error("outcome index {0} out of range")]
    OutcomeOutOfRange(usize),
    #[error("state is not normalized (norm^2 = {0})")]
    NotNormalized(f64),
    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),
    #[error("branch weight drift: level {level} deviates by {deviation:.3e}")]
    WeightDrift { level: usize, deviation: f64 },
    #[error("auxiliary register `{0}` is not in the required initial state")]
    BadAuxiliary(String),
    #[error("registers `{0}` and `{1}` do not hold |Φ+⟩")]
    ResourceNotBell(String, String),
    #[error("register `{label}` populated above level 1 in the active branch")]
    LevelOccupied { label: String },
    #[error("branch states {i} and {j} overlap by {overlap:.3e}")]
    NonOrthogonal { i: usize, j: usize, overlap: f64 },
    #[error("phase of outcome {0} cannot be corrected")]
    PhaseUncorrectable(usize),
    #[error("register `{register}` is not owned by device `{device}`")]
    ForeignRegister { device: String, register: String },
    #[error("unknown device `{0}`")]
    UnknownDevice(String),
    #[error("no table entry for populated program level {0}")]
    MissingProgram(usize),
    #[error("graph error: {0}")]
    Graph(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("bipartition error: {0}")]
    Bipartition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
