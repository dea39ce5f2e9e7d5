use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("NORMALIZATION: density row at period {period}, history [{history}] integrates to {total} (deviation {deviation:e})")]
    Normalization {
        period: usize,
        history: String,
        total: f64,
        deviation: f64,
    },
    #[error("NEGATIVE_DENSITY: period {period}, history [{history}], signal {signal}: {value}")]
    NegativeDensity {
        period: usize,
        history: String,
        signal: usize,
        value: f64,
    },
    #[error("EMPTY_ACTION_SET: period {period}, row {row}")]
    EmptyActionSet { period: usize, row: usize },
    #[error("INVALID_PROBABILITY: {what}: {detail}")]
    InvalidProbability { what: String, detail: String },
    #[error("INVALID_GAME: {0}")]
    InvalidGame(String),
    #[error("CAP_EXCEEDED: {what} has {size} entries, cap is {cap}")]
    CapExceeded { what: String, size: u128, cap: u128 },
    #[error("PLAYER_NOT_ACTIVE: player {player} does not move at period {period}")]
    PlayerNotActive { player: usize, period: usize },
    #[error("INVALID_INFORMATION_SET: {0}")]
    InvalidInformationSet(String),
    #[error("NO_TAIL_BOUND: the game declares no tail bound")]
    NoTailBound,
    #[error("NO_TAIL_BOUND_SUM: the declared tail bounds have an infinite sum")]
    NoTailBoundSum,
    #[error("NONPOSITIVE_EPSILON: {0}")]
    NonPositiveEpsilon(f64),
    #[error("MALFORMED_MEASURE: player {player}: {detail} at prefix [{prefix}]")]
    MalformedMeasure {
        player: usize,
        prefix: String,
        detail: String,
    },
    #[error("MALFORMED_STRATEGY: player {player}: {detail}")]
    MalformedStrategy { player: usize, detail: String },
    #[error("MISMATCHED_PLAYERS: {0}")]
    MismatchedPlayers(String),
    #[error("WEIGHT_SUM: weights sum to {0}")]
    WeightSum(f64),
    #[error("INCOMPLETE_PROFILE: {0}")]
    IncompleteProfile(String),
    #[error("ZERO_REACH: player {player}, period {period}: set has zero probability under the profile")]
    ZeroReach { player: usize, period: usize },
    #[error("INVALID_PARAMETERS: {0}")]
    InvalidParameters(String),
    #[error("GRID_TOO_COARSE: noise half-width spans {cells:.3} grid cells, at least 3 are required")]
    GridTooCoarse { cells: f64 },
    #[error("NON_CONVERGENCE: {detail} (best gap {best_gap:e})")]
    NonConvergence { detail: String, best_gap: f64 },
    #[error("PARSE: line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("IO: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// Short machine-readable code, the first token of the display string.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Normalization { .. } => "NORMALIZATION",
            Error::NegativeDensity { .. } => "NEGATIVE_DENSITY",
            Error::EmptyActionSet { .. } => "EMPTY_ACTION_SET",
            Error::InvalidProbability { .. } => "INVALID_PROBABILITY",
            Error::InvalidGame(_) => "INVALID_GAME",
            Error::CapExceeded { .. } => "CAP_EXCEEDED",
            Error::PlayerNotActive { .. } => "PLAYER_NOT_ACTIVE",
            Error::InvalidInformationSet(_) => "INVALID_INFORMATION_SET",
            Error::NoTailBound => "NO_TAIL_BOUND",
            Error::NoTailBoundSum => "NO_TAIL_BOUND_SUM",
            Error::NonPositiveEpsilon(_) => "NONPOSITIVE_EPSILON",
            Error::MalformedMeasure { .. } => "MALFORMED_MEASURE",
            Error::MalformedStrategy { .. } => "MALFORMED_STRATEGY",
            Error::MismatchedPlayers(_) => "MISMATCHED_PLAYERS",
            Error::WeightSum(_) => "WEIGHT_SUM",
            Error::IncompleteProfile(_) => "INCOMPLETE_PROFILE",
            Error::ZeroReach { .. } => "ZERO_REACH",
            Error::InvalidParameters(_) => "INVALID_PARAMETERS",
            Error::GridTooCoarse { .. } => "GRID_TOO_COARSE",
            Error::NonConvergence { .. } => "NON_CONVERGENCE",
            Error::Parse { .. } => "PARSE",
            Error::Io(_) => "IO",
        }
    }
}
