use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the teleoperation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid robot description: {0}")]
    InvalidModel(String),
    #[error("cycle in link graph through link `{0}`")]
    CycleInLinks(String),
    #[error("passive joint `{joint}` references `{source_joint}`, which is not an active joint")]
    PassiveSource { joint: String, source_joint: String },
    #[error("passive map of `{joint}` reaches {value} outside limits [{lower}, {upper}]")]
    PassiveLimit {
        joint: String,
        value: f64,
        lower: f64,
        upper: f64,
    },
    #[error("unknown frame `{0}`")]
    UnknownFrame(String),
    #[error("configuration has {got} entries, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("joint `{joint}` value {value} outside limits [{lower}, {upper}]")]
    OutOfLimits {
        joint: String,
        value: f64,
        lower: f64,
        upper: f64,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("non-finite objective value")]
    NonFiniteObjective,
    #[error("missing keypoint `{0}` in hand frame")]
    MissingKeypoint(String),
    #[error("missing {0} hand")]
    MissingHand(&'static str),
    #[error("{path}:{line}: {message}")]
    Recording {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("calibration table is empty")]
    EmptyCalibration,
    #[error("invalid calibration table: {0}")]
    InvalidCalibration(String),
    #[error("framing error: {0}")]
    Framing(String),
    #[error("protocol version mismatch: expected {expected}, got {got}")]
    ProtocolVersion { expected: u8, got: u8 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
