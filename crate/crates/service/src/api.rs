//! JSON wire types. Every trajectory payload carries explicit units.

use serde::{Deserialize, Serialize};

use pip_core::grid::Cell;
use pip_core::maneuver::{Lateral, Longitudinal, ManeuverLabel};
use pip_core::plan::{CandidateMenu, CollisionReport, Footprint, LongitudinalBehavior, PlanExchange, Units};
use pip_core::prediction::TargetPrediction;
use pip_core::{Point, VehicleId};
use pip_model::checkpoint::{Manifest, TrainingInfo};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min: Point,
    pub max: Point,
}

impl BoundingBox {
    pub fn of(points: impl IntoIterator<Item = Point>) -> Option<Self> {
        let mut it = points.into_iter();
        let first = it.next()?;
        Some(it.fold(Self { min: first, max: first }, |b, p| Self {
            min: Point::new(b.min.x.min(p.x), b.min.y.min(p.y)),
            max: Point::new(b.max.x.max(p.x), b.max.y.max(p.y)),
        }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSummary {
    pub scene_id: String,
    pub dataset: String,
    pub recording_id: String,
    pub frame: i64,
    pub ego_id: VehicleId,
    pub vehicle_count: usize,
    pub target_count: usize,
    /// Over every history position in the scene.
    pub bounds: BoundingBox,
    pub units: Units,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneList {
    pub total: usize,
    pub offset: usize,
    pub limit: usize,
    pub scenes: Vec<SceneSummary>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Ego,
    Target,
    /// Inside some target's neighbor area but not itself predicted.
    Neighbor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneVehicle {
    pub id: VehicleId,
    pub role: Role,
    pub is_ego: bool,
    pub lane_id: Option<i32>,
    /// Cell in the ego-centric target area, for targets.
    pub cell: Option<Cell>,
    pub current: Point,
    /// 16 positions at 5 Hz ending at the current frame.
    pub history: Vec<Point>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaneCenter {
    pub lane_id: i32,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneDetail {
    pub scene_id: String,
    pub dataset: String,
    pub recording_id: String,
    pub frame: i64,
    pub lane_width: f64,
    pub lanes: Vec<LaneCenter>,
    pub vehicles: Vec<SceneVehicle>,
    /// The ego's recorded future.
    pub recorded_plan: PlanExchange,
    pub units: Units,
}

/// Menu fields left out fall back to the default menu.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MenuRequest {
    pub laterals: Option<Vec<Lateral>>,
    pub longitudinals: Option<Vec<LongitudinalBehavior>>,
    pub durations: Option<Vec<f64>>,
}

impl MenuRequest {
    pub fn resolve(&self) -> CandidateMenu {
        let d = CandidateMenu::default();
        CandidateMenu {
            laterals: self.laterals.clone().unwrap_or(d.laterals),
            longitudinals: self.longitudinals.clone().unwrap_or(d.longitudinals),
            durations: self.durations.clone().unwrap_or(d.durations),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidatesRequest {
    pub scene_id: String,
    #[serde(default)]
    pub menus: MenuRequest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidatesResponse {
    pub scene_id: String,
    pub plans: Vec<PlanExchange>,
}

/// A plan in exchange form or as 25 bare `[x, y]` points in meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PlanInput {
    Exchange(PlanExchange),
    Points(Vec<Point>),
}

impl PlanInput {
    pub fn into_exchange(self) -> PlanExchange {
        match self {
            PlanInput::Exchange(p) => p,
            PlanInput::Points(points) => PlanExchange::from_points(points),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictFlags {
    pub collisions: bool,
    pub footprint: Footprint,
}

impl Default for PredictFlags {
    fn default() -> Self {
        Self { collisions: true, footprint: Footprint::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictRequest {
    pub scene_id: String,
    pub plan: PlanInput,
    #[serde(default)]
    pub flags: PredictFlags,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManeuverPrediction {
    pub lateral: Lateral,
    pub longitudinal: Longitudinal,
    pub probability: f64,
    pub mean: Vec<Point>,
    pub sigma: Vec<Point>,
    pub rho: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetForecast {
    pub vehicle_id: VehicleId,
    pub cell: Cell,
    pub last_observed: Point,
    pub lateral_probs: [f64; 3],
    pub longitudinal_probs: [f64; 2],
    pub best_maneuver: usize,
    /// All six maneuvers in index order.
    pub maneuvers: Vec<ManeuverPrediction>,
}

impl From<&TargetPrediction> for TargetForecast {
    fn from(t: &TargetPrediction) -> Self {
        let maneuvers = ManeuverLabel::all()
            .map(|m| {
                let steps = t.trajectory(m);
                ManeuverPrediction {
                    lateral: m.lateral,
                    longitudinal: m.longitudinal,
                    probability: t.maneuver_probs[m.index()],
                    mean: steps.iter().map(|s| s.mu).collect(),
                    sigma: steps.iter().map(|s| s.sigma).collect(),
                    rho: steps.iter().map(|s| s.rho).collect(),
                }
            })
            .collect();
        Self {
            vehicle_id: t.vehicle_id,
            cell: t.cell,
            last_observed: t.last_observed,
            lateral_probs: t.lateral_probs,
            longitudinal_probs: t.longitudinal_probs,
            best_maneuver: t.best_maneuver().index(),
            maneuvers,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionPayload {
    pub targets: Vec<TargetForecast>,
    pub units: Units,
}

/// The loaded checkpoint's manifest without its tensor list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEcho {
    pub checkpoint: String,
    pub format_version: u32,
    pub variant: String,
    pub fusion: String,
    pub uses_plan: bool,
    pub build: String,
    pub training: Option<TrainingInfo>,
}

impl ModelEcho {
    pub fn new(checkpoint: &str, m: &Manifest) -> Self {
        Self {
            checkpoint: checkpoint.to_string(),
            format_version: m.format_version,
            variant: m.variant.clone(),
            fusion: m.fusion.clone(),
            uses_plan: m.uses_plan,
            build: m.build.clone(),
            training: m.training.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictResponse {
    pub scene_id: String,
    pub prediction: PredictionPayload,
    /// Absent when the request turned collision checking off.
    pub collisions: Option<CollisionReport>,
    pub plan: PlanExchange,
    pub model: ModelEcho,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub scenes: usize,
    pub model: Option<ModelEcho>,
}
