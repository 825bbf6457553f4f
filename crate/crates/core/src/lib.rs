//! Data model for planning-informed trajectory prediction on highways:
//! recording ingestion, scene samples, the social grid, candidate ego plans
//! and likelihood metrics.

pub mod dataset;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod maneuver;
pub mod metrics;
pub mod plan;
pub mod prediction;
pub mod registry;
pub mod resample;
pub mod sample;
pub mod track;

pub use error::{Error, Result};
pub use geometry::Point;
pub use grid::{Cell, GridSpec, GridTensor};
pub use maneuver::{Lateral, Longitudinal, ManeuverLabel};
pub use prediction::{GaussianStep, PredictionSet, TargetPrediction};
pub use sample::{SceneSample, TargetEntry, TrajectorySegment};
pub use track::{TrackTable, VehicleId};
