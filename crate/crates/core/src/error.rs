use thiserror::Error;

use crate::track::VehicleId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error: missing column `{0}`")]
    MissingColumn(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("data error for vehicle {vehicle_id}: {reason}")]
    Vehicle { vehicle_id: VehicleId, reason: String },
    #[error("data error: {0}")]
    Data(String),
    #[error("unsupported rate: {from} Hz cannot be decimated to {to} Hz")]
    UnsupportedRate { from: u32, to: u32 },
    #[error("labeling error: {0}")]
    Label(String),
    #[error("grid contract violation: {0}")]
    Grid(String),
    #[error("singular system: {0}")]
    Singular(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("unknown {kind} `{name}` (known: {known})")]
    Unknown {
        kind: &'static str,
        name: String,
        known: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
