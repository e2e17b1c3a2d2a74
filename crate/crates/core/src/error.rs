use crate::qstate::Role;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("amplitude vector has length {found}, expected {expected}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("amplitude vector is zero")]
    ZeroVector,

    #[error("non-finite entry in input")]
    NonFinite,

    #[error("input norm {norm} is not within tolerance of 1")]
    NotNormalized { norm: f64 },

    #[error("register holds {0} qubits, the maximum is 8")]
    RegisterTooLarge(usize),

    #[error("role {0} appears more than once")]
    RoleCollision(Role),

    #[error("role {0} is not in the register")]
    UnknownRole(Role),

    #[error("registers do not match: {left} vs {right}")]
    RegisterMismatch { left: String, right: String },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("partial trace needs at least one kept role")]
    EmptyKeep,

    #[error("matrix is not unitary (max deviation {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("trace {trace} is not 1")]
    InvalidTrace { trace: f64 },

    #[error("matrix has negative eigenvalue {min_eigenvalue:e}")]
    NotPositive { min_eigenvalue: f64 },

    #[error("control and target are both {0}")]
    SameQubit(Role),

    #[error("coupling angle {0} outside [0, pi]")]
    AngleOutOfRange(f64),

    #[error("gate acts on {gate} qubits but {targets} targets were given")]
    GateArity { gate: usize, targets: usize },

    #[error("measurement basis is not orthonormal")]
    InvalidBasis,

    #[error("requested outcome has probability {probability:e}")]
    ImpossibleOutcome { probability: f64 },

    #[error("malformed outcome distribution: {0}")]
    MalformedDistribution(String),

    #[error("invalid Kraus set: {0}")]
    InvalidKraus(String),

    #[error("numerical invariant violated: {0}")]
    NumericalDrift(String),

    #[error("probability {0} outside [0, 1]")]
    ProbabilityOutOfRange(f64),

    #[error("mean shot count must be positive, got {0}")]
    InvalidShots(f64),

    #[error("tomography settings incomplete: missing {0}")]
    IncompleteSettings(String),

    #[error("all counts are zero")]
    ZeroCounts,

    #[error("bootstrap needs at least 100 resamples, got {0}")]
    TooFewResamples(usize),

    #[error("counts table: {0}")]
    Csv(String),
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}
