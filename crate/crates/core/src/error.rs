use thiserror::Error;

/// Every failure the library reports. Variants carry enough context to be
/// actionable from the command line without a debugger.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty region: {0}")]
    EmptyRegion(String),
    #[error("degenerate hyperplane: zero normal vector")]
    DegenerateHyperplane,
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("branch explosion: composing {n} steps would exceed the cap of {cap} branches")]
    BranchExplosion { n: usize, cap: usize },
    #[error("nonsingular violation: branch {branch} has non-positive Jacobian {value} at {point:?}")]
    NonsingularViolation { branch: usize, value: f64, point: Vec<f64> },
    #[error("epsilon below resolution: eps = {eps} but the grid spacing is {eta}")]
    EpsilonBelowResolution { eps: f64, eta: f64 },
    #[error("avoid set too large: diameter {diam} exceeds {limit}")]
    AvoidSetTooLarge { diam: f64, limit: f64 },
    #[error("no recovery: {0}")]
    NoRecovery(String),
    #[error("degenerate collar: {0}")]
    DegenerateCollar(String),
    #[error("not delta-regular: no cell at depth >= {delta}")]
    NotDeltaRegular { delta: f64 },
    #[error("not contained: {0}")]
    NotContained(String),
    #[error("Z too large: {0}")]
    ZTooLarge(String),
    #[error("not nice: {0}")]
    NotNice(String),
    #[error("stop ratio violated in round {round}: stopped {stopped:e} < t * remaining = {required:e}")]
    StopRatioViolated { round: usize, stopped: f64, required: f64 },
    #[error("round cap of {rounds} reached with unresolved mass {unresolved:e} (limit {limit:e})")]
    RoundCap { rounds: usize, unresolved: f64, limit: f64 },
    #[error("pair cap exceeded: {pairs} pairs after {step} steps (cap {cap})")]
    PairCap { pairs: usize, step: usize, cap: usize },
    #[error("return depth cap: {0}")]
    ReturnDepthCap(String),
    #[error("recurrence cover failed at time {time}: {detail}")]
    RecurrenceCoverFailed { time: usize, detail: String },
    #[error("insufficient tail: {0}")]
    InsufficientTail(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("hypothesis failure: {0}")]
    Hypothesis(String),
    #[error("{line}:{column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("config: {0}")]
    Config(String),
    #[error("schema: {0}")]
    Schema(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code of the error's class: 2 configuration or usage,
    /// 3 hypothesis failure, 4 builder failure, 5 unreadable scheme.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::Parse { .. }
            | Error::InvalidGrid(_)
            | Error::DimensionMismatch { .. }
            | Error::Precondition(_)
            | Error::Io(_) => 2,
            Error::Hypothesis(_) | Error::NonsingularViolation { .. } | Error::NoRecovery(_) | Error::NotNice(_) => 3,
            Error::Schema(_) => 5,
            _ => 4,
        }
    }
}
