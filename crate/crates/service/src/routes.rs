use std::collections::BTreeMap;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;

use pip_core::plan::{collision_check, generate_candidates, EgoState, PlanExchange, Units};
use pip_core::track::FRAME_PERIOD_S;
use pip_core::{Point, VehicleId};
use pip_model::SceneInput;

use crate::api::*;
use crate::error::{ApiError, ApiResult};
use crate::store::StoredScene;
use crate::AppState;

pub const DEFAULT_LANE_WIDTH: f64 = 3.7;
pub const DEFAULT_LIMIT: usize = 50;
pub const MAX_LIMIT: usize = 1000;

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/scenes", get(list_scenes))
        .route("/scenes/{id}", get(scene_detail))
        .route("/candidates", post(candidates))
        .route("/predict", post(predict))
        .with_state(state)
}

fn echo(state: &AppState) -> Option<ModelEcho> {
    state.model.as_ref().map(|m| ModelEcho::new(&m.checkpoint, &m.manifest))
}

async fn health(State(state): State<AppState>) -> Json<Health> {
    Json(Health { scenes: state.scenes.len(), model: echo(&state) })
}

#[derive(Debug, Deserialize)]
pub struct ScenesQuery {
    pub dataset: Option<String>,
    pub limit: Option<usize>,
    pub offset: Option<usize>,
}

fn history_points(s: &StoredScene) -> impl Iterator<Item = Point> + '_ {
    let sample = &s.scene.sample;
    sample.ego_history.points.iter().copied().chain(sample.targets.iter().flat_map(|t| {
        t.history.points.iter().copied().chain(t.neighbors.iter().flat_map(|n| n.history.points.iter().copied()))
    }))
}

fn summary(s: &StoredScene) -> SceneSummary {
    let sample = &s.scene.sample;
    SceneSummary {
        scene_id: s.id.clone(),
        dataset: s.dataset.clone(),
        recording_id: sample.recording_id.clone(),
        frame: sample.frame,
        ego_id: sample.ego_id(),
        vehicle_count: vehicles(s).len(),
        target_count: sample.targets.len(),
        bounds: BoundingBox::of(history_points(s)).expect("ego history is never empty"),
        units: Units::default(),
    }
}

async fn list_scenes(State(state): State<AppState>, Query(q): Query<ScenesQuery>) -> ApiResult<Json<SceneList>> {
    if let Some(d) = &q.dataset {
        if !state.scenes.has_dataset(d) {
            return Err(ApiError::NotFound(format!("unknown dataset `{d}`")));
        }
    }
    let limit = q.limit.unwrap_or(DEFAULT_LIMIT).min(MAX_LIMIT);
    let offset = q.offset.unwrap_or(0);
    let matching: Vec<&StoredScene> =
        state.scenes.iter().filter(|s| q.dataset.as_ref().is_none_or(|d| &s.dataset == d)).collect();
    Ok(Json(SceneList {
        total: matching.len(),
        offset,
        limit,
        scenes: matching.iter().skip(offset).take(limit).map(|s| summary(s)).collect(),
    }))
}

fn scene<'a>(state: &'a AppState, id: &str) -> ApiResult<&'a StoredScene> {
    state.scenes.get(id).ok_or_else(|| ApiError::NotFound(format!("no scene `{id}`")))
}

/// Ego first, then targets in sample order, then the remaining neighbors by id.
fn vehicles(s: &StoredScene) -> Vec<SceneVehicle> {
    let sample = &s.scene.sample;
    let lane = |id: VehicleId| s.scene.lanes.get(&id).copied();
    let mut out = vec![SceneVehicle {
        id: sample.ego_id(),
        role: Role::Ego,
        is_ego: true,
        lane_id: lane(sample.ego_id()),
        cell: None,
        current: sample.ego_history.last(),
        history: sample.ego_history.points.clone(),
    }];
    for t in &sample.targets {
        out.push(SceneVehicle {
            id: t.vehicle_id(),
            role: Role::Target,
            is_ego: false,
            lane_id: lane(t.vehicle_id()),
            cell: Some(t.cell),
            current: t.current(),
            history: t.history.points.clone(),
        });
    }
    let mut others = BTreeMap::new();
    for n in sample.targets.iter().flat_map(|t| &t.neighbors) {
        let id = n.history.vehicle_id;
        if out.iter().all(|v| v.id != id) {
            others.entry(id).or_insert_with(|| SceneVehicle {
                id,
                role: Role::Neighbor,
                is_ego: false,
                lane_id: lane(id),
                cell: None,
                current: n.history.last(),
                history: n.history.points.clone(),
            });
        }
    }
    out.extend(others.into_values());
    out
}

/// Median spacing of adjacent lane centers, or the default width.
fn lane_width(s: &StoredScene) -> f64 {
    let centers: Vec<(i32, f64)> = s.scene.lane_centers.iter().map(|(k, v)| (*k, *v)).collect();
    let mut widths: Vec<f64> = centers
        .windows(2)
        .filter(|w| w[1].0 == w[0].0 + 1)
        .map(|w| (w[1].1 - w[0].1).abs())
        .filter(|w| (2.0..6.0).contains(w))
        .collect();
    if widths.is_empty() {
        return DEFAULT_LANE_WIDTH;
    }
    widths.sort_by(f64::total_cmp);
    widths[widths.len() / 2]
}

async fn scene_detail(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<SceneDetail>> {
    let s = scene(&state, &id)?;
    let sample = &s.scene.sample;
    Ok(Json(SceneDetail {
        scene_id: s.id.clone(),
        dataset: s.dataset.clone(),
        recording_id: sample.recording_id.clone(),
        frame: sample.frame,
        lane_width: lane_width(s),
        lanes: s.scene.lane_centers.iter().map(|(&lane_id, &y)| LaneCenter { lane_id, y }).collect(),
        vehicles: vehicles(s),
        recorded_plan: PlanExchange::from_points(sample.ego_plan.points.clone()),
        units: Units::default(),
    }))
}

fn ego_state(s: &StoredScene) -> EgoState {
    let h = &s.scene.sample.ego_history.points;
    let speed = match h.len() {
        0 | 1 => 0.0,
        n => ((h[n - 1].x - h[n - 2].x) / FRAME_PERIOD_S).max(0.0),
    };
    EgoState { position: s.scene.sample.ego_history.last(), speed }
}

async fn candidates(
    State(state): State<AppState>,
    body: Result<Json<CandidatesRequest>, JsonRejection>,
) -> ApiResult<Json<CandidatesResponse>> {
    let Json(req) = body?;
    let s = scene(&state, &req.scene_id)?;
    let plans = generate_candidates(&ego_state(s), lane_width(s), &req.menus.resolve())
        .map_err(|e| ApiError::Unprocessable(e.to_string()))?;
    Ok(Json(CandidatesResponse { scene_id: s.id.clone(), plans: plans.iter().map(PlanExchange::from).collect() }))
}

async fn predict(
    State(state): State<AppState>,
    body: Result<Json<PredictRequest>, JsonRejection>,
) -> ApiResult<Json<PredictResponse>> {
    let Json(req) = body?;
    let model = state.model.clone().ok_or_else(|| ApiError::Unavailable("no model checkpoint is loaded".into()))?;
    scene(&state, &req.scene_id)?;
    let plan = req.plan.into_exchange();
    plan.validated_points().map_err(|e| ApiError::Unprocessable(e.to_string()))?;
    let flags = req.flags;
    let scene_id = req.scene_id;
    let worker_state = state.clone();
    let (set, plan) = tokio::task::spawn_blocking(move || {
        let s = worker_state.scenes.get(&scene_id).expect("checked above");
        let input = SceneInput { sample: &s.scene.sample, plan: &plan.points };
        let set = model.network.predict(&[input]).map(|mut v| v.remove(0));
        (set.map(|set| (set, s.id.clone())), plan)
    })
    .await
    .map_err(|e| ApiError::Internal(format!("prediction task failed: {e}")))?;
    let (set, scene_id) = set.map_err(|e| ApiError::Internal(e.to_string()))?;
    let collisions = flags.collisions.then(|| collision_check(&plan.points, &set, &flags.footprint));
    Ok(Json(PredictResponse {
        scene_id,
        prediction: PredictionPayload {
            targets: set.targets.iter().map(TargetForecast::from).collect(),
            units: Units::default(),
        },
        collisions,
        plan,
        model: echo(&state).expect("model is loaded"),
    }))
}
