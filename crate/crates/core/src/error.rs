use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown qubit label `{0}`")]
    UnknownLabel(String),
    #[error("duplicate qubit label `{0}`")]
    DuplicateLabel(String),
    #[error("label sets overlap on `{0}`")]
    LabelCollision(String),
    #[error("unsupported qubit count {0} (expected 1..=5)")]
    QubitCount(usize),
    #[error("expected {expected} amplitudes, got {got}")]
    AmplitudeCount { expected: usize, got: usize },
    #[error("state is not normalized (norm² = {0})")]
    NotNormalized(f64),
    #[error("matrix is not unitary (residual {0:e})")]
    NotUnitary(f64),
    #[error("gate dimension {dim} does not match {targets} target(s)")]
    GateShape { dim: usize, targets: usize },
    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("partial trace needs a nonempty keep set")]
    EmptyKeep,
    #[error("outcome {outcome} has probability {probability:e}, cannot be forced")]
    ImpossibleOutcome { outcome: String, probability: f64 },
    #[error("invalid outcome `{0}`")]
    InvalidOutcome(String),
    #[error("Bell index {0} out of range 1..=4")]
    BellIndex(usize),
    #[error("alpha = {0} outside [0, 1]")]
    AlphaRange(f64),
    #[error("invalid ancilla parameters alpha = {alpha}, beta = {beta}")]
    AncillaParams { alpha: f64, beta: f64 },
    #[error("preparation matrices are indeterminate at alpha*beta = 0; use sigma_state directly")]
    DegenerateEndpoint,
    #[error("preparation wiring invalid: {0}")]
    Wiring(String),
    #[error("preparation wiring does not reproduce the ancilla state (overlap {overlap})")]
    WiringMismatch { overlap: f64 },
    #[error("Kraus set is incomplete (residual {0:e})")]
    IncompleteKraus(f64),
    #[error("fidelity pair outside the trade-off domain: {0}")]
    TradeoffDomain(String),
    #[error("need at least {min} {what}, got {got}")]
    TooFew {
        what: &'static str,
        min: usize,
        got: usize,
    },
    #[error("QND gate needs distinct control and target (got {0})")]
    SameMode(String),
    #[error("coupling constant must be positive, got {0}")]
    Coupling(f64),
    #[error("squeezing must be finite and non-negative, got {0}")]
    Squeezing(f64),
    #[error("asymmetric excess noise in mode {mode}: x {x_excess}, p {p_excess}")]
    AsymmetricNoise {
        mode: &'static str,
        x_excess: f64,
        p_excess: f64,
    },
    #[error("output mode {mode} does not have unit gain ({gain})")]
    Gain { mode: &'static str, gain: f64 },
    #[error("invalid input qubit: {0}")]
    InputQubit(String),
    #[error("serialization: {0}")]
    Serde(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}
