//! Cutting 5 Hz tracks into ego-centric scene samples.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::grid::{Cell, GridSpec};
use crate::maneuver::{label_maneuver, LabelConfig, ManeuverLabel};
use crate::track::{TrackIndex, TrackTable, VehicleId, VehicleTrack};

/// History points: 3 s at 5 Hz plus the current frame.
pub const HISTORY_LEN: usize = 16;
/// Future points: 5 s at 5 Hz, excluding the current frame.
pub const FUTURE_LEN: usize = 25;
/// Sanity bound on the displacement between consecutive 0.2 s points.
pub const MAX_STEP_M: f64 = 12.0;

/// Points at 0.2 s spacing starting at `t0_frame`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySegment {
    pub vehicle_id: VehicleId,
    pub t0_frame: i64,
    pub points: Vec<Point>,
}

impl TrajectorySegment {
    pub fn new(vehicle_id: VehicleId, t0_frame: i64, points: Vec<Point>) -> Self {
        Self { vehicle_id, t0_frame, points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn last(&self) -> Point {
        *self.points.last().expect("segments are non-empty")
    }

    pub fn max_step(&self) -> f64 {
        self.points.windows(2).map(|w| (w[1] - w[0]).norm()).fold(0.0, f64::max)
    }
}

/// Subtracts `reference` from every point.
pub fn to_relative_frame(segment: &TrajectorySegment, reference: Point) -> TrajectorySegment {
    TrajectorySegment {
        points: segment.points.iter().map(|&p| p - reference).collect(),
        ..segment.clone()
    }
}

/// Inverse of [`to_relative_frame`].
pub fn from_relative_frame(segment: &TrajectorySegment, reference: Point) -> TrajectorySegment {
    TrajectorySegment {
        points: segment.points.iter().map(|&p| p + reference).collect(),
        ..segment.clone()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborEntry {
    pub history: TrajectorySegment,
    /// Cell in the target-centric grid.
    pub cell: Cell,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetEntry {
    pub history: TrajectorySegment,
    pub future: TrajectorySegment,
    pub maneuver: ManeuverLabel,
    /// Cell in the ego-centric target area.
    pub cell: Cell,
    /// Other vehicles inside this target's neighbor area (ego excluded).
    pub neighbors: Vec<NeighborEntry>,
    /// Ego cell in this target's neighbor area, if the ego is inside it.
    pub ego_cell: Option<Cell>,
}

impl TargetEntry {
    pub fn vehicle_id(&self) -> VehicleId {
        self.history.vehicle_id
    }

    pub fn current(&self) -> Point {
        self.history.last()
    }
}

/// One training or evaluation instance centered on an ego vehicle at frame `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSample {
    pub recording_id: String,
    pub frame: i64,
    pub ego_history: TrajectorySegment,
    /// The ego's future as the planning input; the true future when built here.
    pub ego_plan: TrajectorySegment,
    pub targets: Vec<TargetEntry>,
    /// Ego position at frame `t`.
    pub reference_pose: Point,
}

impl SceneSample {
    pub fn ego_id(&self) -> VehicleId {
        self.ego_history.vehicle_id
    }

    pub fn sample_ref(&self, dataset: &str, source: &str) -> SampleRef {
        SampleRef {
            dataset: dataset.to_string(),
            source: source.to_string(),
            recording_id: self.recording_id.clone(),
            ego_id: self.ego_id(),
            frame: self.frame,
        }
    }

    /// Checks the structural invariants against `grid`.
    pub fn validate(&self, grid: &GridSpec) -> Result<()> {
        let bad = |what: String| Err(Error::Data(format!("sample {}@{}: {what}", self.ego_id(), self.frame)));
        if self.ego_history.len() != HISTORY_LEN || self.ego_plan.len() != FUTURE_LEN {
            return bad("ego segment lengths".into());
        }
        let mut seen = std::collections::HashSet::new();
        for t in &self.targets {
            if t.vehicle_id() == self.ego_id() {
                return bad("ego listed as its own target".into());
            }
            if t.history.len() != HISTORY_LEN || t.future.len() != FUTURE_LEN {
                return bad(format!("target {} segment lengths", t.vehicle_id()));
            }
            if grid.cell_index(t.current() - self.reference_pose) != Some(t.cell) {
                return bad(format!("target {} outside its target-area cell", t.vehicle_id()));
            }
            if !seen.insert(t.cell) {
                return bad(format!("two targets in cell {:?}", t.cell));
            }
            for seg in [&t.history, &t.future] {
                if seg.max_step() >= MAX_STEP_M {
                    return bad(format!("target {} jumps more than {MAX_STEP_M} m", t.vehicle_id()));
                }
            }
            let mut cells = std::collections::HashSet::new();
            cells.extend(t.ego_cell);
            for n in &t.neighbors {
                if n.history.len() != HISTORY_LEN || !cells.insert(n.cell) {
                    return bad(format!("neighbor {} of target {}", n.history.vehicle_id, t.vehicle_id()));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleConfig {
    pub grid: GridSpec,
    pub labels: LabelConfig,
    /// Ego frames are taken where `frame % stride_frames == 0`.
    pub stride_frames: i64,
}

impl Default for SampleConfig {
    fn default() -> Self {
        Self { grid: GridSpec::default(), labels: LabelConfig::default(), stride_frames: 1 }
    }
}

/// What `build_samples` left out and why.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipReport {
    /// Vehicles that never had a fully covered 16 + 25 window.
    pub vehicles_without_coverage: usize,
    pub targets_without_coverage: usize,
    pub targets_unlabeled: usize,
    pub targets_tied: usize,
    pub neighbors_without_history: usize,
    pub neighbors_tied: usize,
}

impl SkipReport {
    pub fn absorb(&mut self, other: &SkipReport) {
        self.vehicles_without_coverage += other.vehicles_without_coverage;
        self.targets_without_coverage += other.targets_without_coverage;
        self.targets_unlabeled += other.targets_unlabeled;
        self.targets_tied += other.targets_tied;
        self.neighbors_without_history += other.neighbors_without_history;
        self.neighbors_tied += other.neighbors_tied;
    }
}

fn history_window(t: i64) -> (i64, i64) {
    (t - (HISTORY_LEN as i64 - 1), t)
}

fn future_window(t: i64) -> (i64, i64) {
    (t + 1, t + FUTURE_LEN as i64)
}

fn has_history(v: &VehicleTrack, t: i64) -> bool {
    let (a, b) = history_window(t);
    v.covers(a, b)
}

fn has_full_window(v: &VehicleTrack, t: i64) -> bool {
    let (a, _) = history_window(t);
    let (_, b) = future_window(t);
    v.covers(a, b)
}

fn history_of(v: &VehicleTrack, t: i64) -> TrajectorySegment {
    let (a, b) = history_window(t);
    TrajectorySegment::new(v.id, a, v.positions(a, b).expect("coverage checked").to_vec())
}

fn future_of(v: &VehicleTrack, t: i64) -> TrajectorySegment {
    let (a, b) = future_window(t);
    TrajectorySegment::new(v.id, a, v.positions(a, b).expect("coverage checked").to_vec())
}

/// Keeps one candidate per cell: the one nearest the cell center, then the
/// lowest vehicle id. Returns the winners in cell order and the drop count.
fn resolve_cells<'a>(
    grid: &GridSpec,
    candidates: impl Iterator<Item = (Cell, Point, &'a VehicleTrack)>,
    reserved: Option<Cell>,
) -> (Vec<(Cell, &'a VehicleTrack)>, usize) {
    let mut best: BTreeMap<Cell, (f64, VehicleId, &VehicleTrack)> = BTreeMap::new();
    let mut dropped = 0;
    for (cell, offset, v) in candidates {
        if Some(cell) == reserved {
            dropped += 1;
            continue;
        }
        let d = (offset - grid.cell_center(cell)).norm();
        match best.get(&cell) {
            Some(&(bd, bid, _)) if (bd, bid) <= (d, v.id) => dropped += 1,
            Some(_) => {
                dropped += 1;
                best.insert(cell, (d, v.id, v));
            }
            None => {
                best.insert(cell, (d, v.id, v));
            }
        }
    }
    (best.into_iter().map(|(c, (_, _, v))| (c, v)).collect(), dropped)
}

/// Builds the sample with `ego_id` as ego at frame `t`, or `None` if the ego
/// lacks a full 16 + 25 window there.
pub fn build_sample_at(
    index: &TrackIndex,
    ego_id: VehicleId,
    t: i64,
    config: &SampleConfig,
    report: &mut SkipReport,
) -> Option<SceneSample> {
    let grid = &config.grid;
    let ego = index.vehicle(ego_id)?;
    if !has_full_window(ego, t) {
        return None;
    }
    let ego_pos = ego.position_at(t)?;

    let mut in_area = Vec::new();
    for v in index.present_at(t).filter(|v| v.id != ego_id) {
        let offset = v.position_at(t).expect("present") - ego_pos;
        if let Some(cell) = grid.cell_index(offset) {
            if has_full_window(v, t) {
                in_area.push((cell, offset, v));
            } else {
                report.targets_without_coverage += 1;
            }
        }
    }
    let (winners, tied) = resolve_cells(grid, in_area.into_iter(), None);
    report.targets_tied += tied;

    let mut targets = Vec::with_capacity(winners.len());
    for (cell, v) in winners {
        let maneuver = match label_maneuver(v, t, &config.labels) {
            Ok(m) => m,
            Err(_) => {
                report.targets_unlabeled += 1;
                continue;
            }
        };
        let center = v.position_at(t).expect("present");
        let ego_cell = grid.cell_index(ego_pos - center);
        let mut nbrs = Vec::new();
        for n in index.present_at(t).filter(|n| n.id != v.id && n.id != ego_id) {
            let offset = n.position_at(t).expect("present") - center;
            if let Some(c) = grid.cell_index(offset) {
                if has_history(n, t) {
                    nbrs.push((c, offset, n));
                } else {
                    report.neighbors_without_history += 1;
                }
            }
        }
        let (nbrs, tied) = resolve_cells(grid, nbrs.into_iter(), ego_cell);
        report.neighbors_tied += tied;
        targets.push(TargetEntry {
            history: history_of(v, t),
            future: future_of(v, t),
            maneuver,
            cell,
            neighbors: nbrs
                .into_iter()
                .map(|(cell, n)| NeighborEntry { history: history_of(n, t), cell })
                .collect(),
            ego_cell,
        });
    }

    Some(SceneSample {
        recording_id: index.recording_id.clone(),
        frame: t,
        ego_history: history_of(ego, t),
        ego_plan: future_of(ego, t),
        targets,
        reference_pose: ego_pos,
    })
}

/// Every (ego, frame) sample of a 5 Hz table, ego-major.
pub fn build_samples(table: &TrackTable, config: &SampleConfig) -> Result<(Vec<SceneSample>, SkipReport)> {
    if table.rate_hz != 5 {
        return Err(Error::UnsupportedRate { from: table.rate_hz, to: 5 });
    }
    if config.stride_frames < 1 {
        return Err(Error::Invalid("stride_frames must be at least 1".into()));
    }
    let index = TrackIndex::new(table);
    let mut report = SkipReport::default();
    let mut samples = Vec::new();
    for ego in index.vehicles() {
        let first = ego.first_frame() + HISTORY_LEN as i64 - 1;
        let last = ego.last_frame() - FUTURE_LEN as i64;
        let mut any = false;
        for t in first..=last {
            if t.rem_euclid(config.stride_frames) != 0 {
                continue;
            }
            if let Some(s) = build_sample_at(&index, ego.id, t, config, &mut report) {
                samples.push(s);
                any = true;
            }
        }
        if !any {
            report.vehicles_without_coverage += 1;
        }
    }
    Ok((samples, report))
}

/// [`build_samples`] over several recordings, concatenated in input order.
pub fn build_samples_all(tables: &[TrackTable], config: &SampleConfig) -> Result<(Vec<SceneSample>, SkipReport)> {
    let mut all = Vec::new();
    let mut report = SkipReport::default();
    for table in tables {
        let (s, r) = build_samples(table, config)?;
        all.extend(s);
        report.absorb(&r);
    }
    Ok((all, report))
}

/// A reference that re-derives one sample from its source recording.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SampleRef {
    pub dataset: String,
    pub source: String,
    pub recording_id: String,
    pub ego_id: VehicleId,
    pub frame: i64,
}

impl SampleRef {
    pub fn scene_id(&self) -> String {
        format!("{}:{}:{}:{}", self.dataset, self.recording_id, self.ego_id, self.frame)
    }
}

/// Writes one JSON object per line.
pub fn write_manifest<W: std::io::Write>(mut out: W, refs: &[SampleRef]) -> Result<()> {
    for r in refs {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_manifest<R: std::io::BufRead>(input: R) -> Result<Vec<SampleRef>> {
    let mut refs = Vec::new();
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        refs.push(serde_json::from_str(&line)?);
    }
    Ok(refs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
    Eval,
}

impl std::str::FromStr for Split {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            "eval" | "val" | "validation" => Ok(Split::Eval),
            other => Err(Error::Invalid(format!("unknown split `{other}`"))),
        }
    }
}

fn fnv1a(bytes: impl IntoIterator<Item = u8>) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// 70 / 20 / 10 train / test / eval assignment of one vehicle trajectory,
/// stable across runs and platforms.
pub fn split_of(recording_id: &str, vehicle_id: VehicleId, seed: u64) -> Split {
    let bytes = seed
        .to_le_bytes()
        .into_iter()
        .chain(recording_id.bytes())
        .chain([0xff])
        .chain(vehicle_id.to_le_bytes());
    match fnv1a(bytes) % 100 {
        0..=69 => Split::Train,
        70..=89 => Split::Test,
        _ => Split::Eval,
    }
}

/// Samples whose ego trajectory falls in `split`.
pub fn select_split(samples: Vec<SceneSample>, split: Split, seed: u64) -> Vec<SceneSample> {
    samples
        .into_iter()
        .filter(|s| split_of(&s.recording_id, s.ego_id(), seed) == split)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::track::TrackRow;

    fn straight(id: VehicleId, frames: std::ops::Range<i64>, x0: f64, y: f64, speed: f64) -> Vec<TrackRow> {
        frames
            .map(|f| TrackRow { frame: f, vehicle_id: id, x: x0 + speed * 0.2 * f as f64, y, lane_id: 1 })
            .collect()
    }

    #[test]
    fn isolated_vehicle_has_no_targets() {
        let table = TrackTable::new("r", straight(1, 0..100, 0.0, 0.0, 10.0), 5).unwrap();
        let (samples, _) = build_samples(&table, &SampleConfig::default()).unwrap();
        assert_eq!(samples.len(), 100 - 15 - 25);
        assert!(samples.iter().all(|s| s.targets.is_empty()));
    }

    #[test]
    fn two_close_vehicles_target_each_other() {
        let mut rows = straight(1, 0..60, 0.0, 0.0, 10.0);
        rows.extend(straight(2, 0..60, 5.0, 0.0, 10.0));
        let table = TrackTable::new("r", rows, 5).unwrap();
        let config = SampleConfig { stride_frames: 5, ..Default::default() };
        let (samples, _) = build_samples(&table, &config).unwrap();
        assert!(!samples.is_empty());
        for s in &samples {
            assert_eq!(s.targets.len(), 1);
            assert_ne!(s.targets[0].vehicle_id(), s.ego_id());
            assert!(s.targets[0].ego_cell.is_some());
            assert!(s.targets[0].neighbors.is_empty());
            s.validate(&config.grid).unwrap();
        }
    }

    #[test]
    fn boundary_vehicle_excluded() {
        let mut rows = straight(1, 0..60, 0.0, 0.0, 10.0);
        rows.extend(straight(2, 0..60, 30.48, 0.0, 10.0));
        let table = TrackTable::new("r", rows, 5).unwrap();
        let index = TrackIndex::new(&table);
        let mut report = SkipReport::default();
        let s = build_sample_at(&index, 1, 20, &SampleConfig::default(), &mut report).unwrap();
        assert!(s.targets.is_empty());
    }

    #[test]
    fn one_target_per_cell() {
        let mut rows = straight(1, 0..60, 0.0, 0.0, 10.0);
        rows.extend(straight(3, 0..60, 10.3, 0.0, 10.0));
        rows.extend(straight(2, 0..60, 10.0, 0.0, 10.0));
        let table = TrackTable::new("r", rows, 5).unwrap();
        let index = TrackIndex::new(&table);
        let mut report = SkipReport::default();
        let s = build_sample_at(&index, 1, 20, &SampleConfig::default(), &mut report).unwrap();
        assert_eq!(s.targets.len(), 1);
        assert_eq!(report.targets_tied, 1);
        // cell 16 spans 8.5344..10.9728 m, center 9.7536: vehicle 2 is nearer
        assert_eq!(s.targets[0].vehicle_id(), 2);
    }

    #[test]
    fn relative_frame_round_trip() {
        let seg = TrajectorySegment::new(1, 0, vec![Point::new(1.5, -2.0), Point::new(3.25, 0.5)]);
        let r = Point::new(1.5, -2.0);
        let rel = to_relative_frame(&seg, r);
        assert_eq!(rel.points[0], Point::ZERO);
        assert_eq!(to_relative_frame(&seg, Point::ZERO), seg);
        let back = from_relative_frame(&rel, r);
        for (a, b) in back.points.iter().zip(&seg.points) {
            assert!((*a - *b).norm() < 1e-12);
        }
    }

    #[test]
    fn split_is_stable_and_proportional() {
        assert_eq!(split_of("a", 7, 1), split_of("a", 7, 1));
        let counts = (0..10_000u64).fold([0usize; 3], |mut acc, id| {
            acc[split_of("rec", id, 42) as usize] += 1;
            acc
        });
        assert!((6700..7300).contains(&counts[0]), "{counts:?}");
        assert!((1800..2200).contains(&counts[1]), "{counts:?}");
        assert!((800..1200).contains(&counts[2]), "{counts:?}");
    }

    #[test]
    fn manifest_round_trip() {
        let refs = vec![SampleRef {
            dataset: "ngsim".into(),
            source: "a.csv".into(),
            recording_id: "a".into(),
            ego_id: 3,
            frame: 40,
        }];
        let mut buf = Vec::new();
        write_manifest(&mut buf, &refs).unwrap();
        assert_eq!(read_manifest(buf.as_slice()).unwrap(), refs);
        assert_eq!(refs[0].scene_id(), "ngsim:a:3:40");
    }
}
