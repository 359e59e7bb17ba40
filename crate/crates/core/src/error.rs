use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("unknown suite `{0}`")]
    UnknownSuite(String),
    #[error("no valid placement after {attempts} attempts")]
    NoValidPlacement { attempts: usize },
    #[error("degenerate contact: {0}")]
    DegenerateContact(&'static str),
    #[error("malformed encoder: {0}")]
    MalformedEncoder(String),
    #[error("no path between start and goal")]
    NoPath,
    #[error("start cell is occupied")]
    StartOccupied,
    #[error("goal cell is occupied")]
    GoalOccupied,
    #[error("path has no waypoints")]
    EmptyPath,
    #[error("reset failed: {0}")]
    ResetFailed(Box<Error>),
    #[error("episode already finished")]
    EpisodeFinished,
    #[error("no active episode")]
    NoEpisode,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("buffer holds {have} entries, {need} requested")]
    InsufficientEntries { have: usize, need: usize },
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(&'static str),
    #[error("empty input")]
    EmptyInput,
    #[error("policy did not respond within {0:?}")]
    PolicyTimeout(std::time::Duration),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("malformed file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
