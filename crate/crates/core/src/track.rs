//! Raw vehicle tracks of one recording in canonical units.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;

pub type VehicleId = u64;

/// Frame rates accepted from recordings.
pub const SUPPORTED_RATES: [u32; 3] = [5, 10, 25];

/// Seconds between consecutive frames once a table is resampled to 5 Hz.
pub const FRAME_PERIOD_S: f64 = 0.2;

/// One observation of one vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackRow {
    pub frame: i64,
    pub vehicle_id: VehicleId,
    /// Longitudinal road-frame position, meters.
    pub x: f64,
    /// Lateral road-frame position (positive to the left), meters.
    pub y: f64,
    pub lane_id: i32,
}

impl TrackRow {
    pub fn position(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

/// All rows of one recording, sorted by `(vehicle_id, frame)`.
///
/// Frame indices are in units of the table's own `rate_hz`; after
/// [`crate::resample::resample`] consecutive frames are one 5 Hz step apart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackTable {
    pub recording_id: String,
    pub rows: Vec<TrackRow>,
    pub rate_hz: u32,
    /// Travel sign of the table's x axis; loaders normalize to +1.
    pub direction: i8,
}

impl TrackTable {
    /// Sorts rows and checks the table invariants.
    pub fn new(recording_id: impl Into<String>, mut rows: Vec<TrackRow>, rate_hz: u32) -> Result<Self> {
        rows.sort_by_key(|r| (r.vehicle_id, r.frame));
        let table = Self {
            recording_id: recording_id.into(),
            rows,
            rate_hz,
            direction: 1,
        };
        table.validate()?;
        Ok(table)
    }

    pub fn validate(&self) -> Result<()> {
        if !SUPPORTED_RATES.contains(&self.rate_hz) {
            return Err(Error::Data(format!("unsupported frame rate {} Hz", self.rate_hz)));
        }
        for pair in self.rows.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            if a.vehicle_id == b.vehicle_id && b.frame <= a.frame {
                return Err(Error::Vehicle {
                    vehicle_id: a.vehicle_id,
                    reason: format!("frame {} does not follow frame {}", b.frame, a.frame),
                });
            }
            if a.vehicle_id > b.vehicle_id {
                return Err(Error::Data("rows are not sorted by vehicle id".into()));
            }
        }
        if let Some(r) = self.rows.iter().find(|r| !r.position().is_finite()) {
            return Err(Error::Vehicle {
                vehicle_id: r.vehicle_id,
                reason: format!("non-finite position at frame {}", r.frame),
            });
        }
        Ok(())
    }

    pub fn vehicle_ids(&self) -> Vec<VehicleId> {
        let mut ids: Vec<_> = self.rows.iter().map(|r| r.vehicle_id).collect();
        ids.dedup();
        ids
    }

    /// Rows of one vehicle, in frame order.
    pub fn vehicle_rows(&self, id: VehicleId) -> &[TrackRow] {
        let start = self.rows.partition_point(|r| r.vehicle_id < id);
        let end = self.rows.partition_point(|r| r.vehicle_id <= id);
        &self.rows[start..end]
    }

    /// Median lateral position per lane id.
    pub fn lane_medians(&self) -> BTreeMap<i32, f64> {
        let mut by_lane: BTreeMap<i32, Vec<f64>> = BTreeMap::new();
        for r in &self.rows {
            by_lane.entry(r.lane_id).or_default().push(r.y);
        }
        by_lane
            .into_iter()
            .map(|(lane, mut ys)| {
                ys.sort_by(f64::total_cmp);
                let n = ys.len();
                let median = if n % 2 == 1 { ys[n / 2] } else { 0.5 * (ys[n / 2 - 1] + ys[n / 2]) };
                (lane, median)
            })
            .collect()
    }

    /// Absolute lateral distance between medians of adjacent lane ids.
    pub fn implied_lane_widths(&self) -> Vec<f64> {
        let medians: Vec<_> = self.lane_medians().into_iter().collect();
        medians
            .windows(2)
            .filter(|w| w[1].0 == w[0].0 + 1)
            .map(|w| (w[1].1 - w[0].1).abs())
            .collect()
    }

    pub fn max_abs_coordinate(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.x.abs().max(r.y.abs()))
            .fold(0.0, f64::max)
    }
}

/// The contiguous-lookup view of one vehicle's track.
#[derive(Debug, Clone)]
pub struct VehicleTrack {
    pub id: VehicleId,
    frames: Vec<i64>,
    positions: Vec<Point>,
    lanes: Vec<i32>,
}

impl VehicleTrack {
    fn from_rows(rows: &[TrackRow]) -> Self {
        Self {
            id: rows[0].vehicle_id,
            frames: rows.iter().map(|r| r.frame).collect(),
            positions: rows.iter().map(TrackRow::position).collect(),
            lanes: rows.iter().map(|r| r.lane_id).collect(),
        }
    }

    pub fn first_frame(&self) -> i64 {
        self.frames[0]
    }

    pub fn last_frame(&self) -> i64 {
        *self.frames.last().expect("tracks are never empty")
    }

    pub fn frames(&self) -> &[i64] {
        &self.frames
    }

    fn offset_of(&self, frame: i64) -> Option<usize> {
        self.frames.binary_search(&frame).ok()
    }

    pub fn position_at(&self, frame: i64) -> Option<Point> {
        self.offset_of(frame).map(|i| self.positions[i])
    }

    pub fn lane_at(&self, frame: i64) -> Option<i32> {
        self.offset_of(frame).map(|i| self.lanes[i])
    }

    /// Index range covering `first..=last` if every frame in it is present.
    fn contiguous(&self, first: i64, last: i64) -> Option<std::ops::Range<usize>> {
        let start = self.offset_of(first)?;
        let len = usize::try_from(last - first).ok()? + 1;
        let end = start + len;
        (end <= self.frames.len() && self.frames[end - 1] == last).then_some(start..end)
    }

    pub fn covers(&self, first: i64, last: i64) -> bool {
        self.contiguous(first, last).is_some()
    }

    /// Positions for every frame in `first..=last` (inclusive), if contiguous.
    pub fn positions(&self, first: i64, last: i64) -> Option<&[Point]> {
        self.contiguous(first, last).map(|r| &self.positions[r])
    }

    pub fn lanes(&self, first: i64, last: i64) -> Option<&[i32]> {
        self.contiguous(first, last).map(|r| &self.lanes[r])
    }
}

/// Per-vehicle and per-frame lookup over a [`TrackTable`].
#[derive(Debug, Clone)]
pub struct TrackIndex {
    pub recording_id: String,
    pub rate_hz: u32,
    vehicles: Vec<VehicleTrack>,
    by_id: HashMap<VehicleId, usize>,
    by_frame: BTreeMap<i64, Vec<usize>>,
}

impl TrackIndex {
    pub fn new(table: &TrackTable) -> Self {
        let mut vehicles = Vec::new();
        let mut start = 0;
        while start < table.rows.len() {
            let id = table.rows[start].vehicle_id;
            let end = start + table.rows[start..].partition_point(|r| r.vehicle_id == id);
            vehicles.push(VehicleTrack::from_rows(&table.rows[start..end]));
            start = end;
        }
        let by_id = vehicles.iter().enumerate().map(|(i, v)| (v.id, i)).collect();
        let mut by_frame: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
        for (i, v) in vehicles.iter().enumerate() {
            for &f in &v.frames {
                by_frame.entry(f).or_default().push(i);
            }
        }
        Self {
            recording_id: table.recording_id.clone(),
            rate_hz: table.rate_hz,
            vehicles,
            by_id,
            by_frame,
        }
    }

    pub fn vehicles(&self) -> &[VehicleTrack] {
        &self.vehicles
    }

    pub fn vehicle(&self, id: VehicleId) -> Option<&VehicleTrack> {
        self.by_id.get(&id).map(|&i| &self.vehicles[i])
    }

    /// Vehicles observed at `frame`, in vehicle-id order.
    pub fn present_at(&self, frame: i64) -> impl Iterator<Item = &VehicleTrack> {
        self.by_frame
            .get(&frame)
            .into_iter()
            .flatten()
            .map(move |&i| &self.vehicles[i])
    }
}
