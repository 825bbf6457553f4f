//! highD recording reader (`NN_tracks.csv`, `NN_tracksMeta.csv`, `NN_recordingMeta.csv`).
//!
//! highD positions are image-aligned bounding-box corners in meters: `x`
//! grows to the right, `y` grows downwards. The upper carriageway
//! (`drivingDirection = 1`) travels towards −x, the lower one
//! (`drivingDirection = 2`) towards +x. Both are brought into a frame where
//! x is the travel direction and y points left: the lower carriageway only
//! flips y, the upper one is rotated by 180°. Lane ids of the upper
//! carriageway are renumbered so that ids grow to the right on both.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use crate::dataset::csv_util::{field, int_field, Columns};
use crate::error::{Error, Result};
use crate::track::{TrackRow, TrackTable, VehicleId};

pub const HIGHD_RATE_HZ: u32 = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Carriageway {
    /// `drivingDirection = 1`, towards −x in the image.
    Upper,
    /// `drivingDirection = 2`, towards +x in the image.
    Lower,
}

impl Carriageway {
    fn from_code(code: i64, vehicle_id: VehicleId) -> Result<Self> {
        match code {
            1 => Ok(Self::Upper),
            2 => Ok(Self::Lower),
            other => Err(Error::Vehicle {
                vehicle_id,
                reason: format!("unknown driving direction code {other}"),
            }),
        }
    }
}

/// Locates the single recording in `dir` and loads it.
pub fn load_highd(dir: &Path) -> Result<TrackTable> {
    let ids = recording_ids(dir)?;
    match ids.as_slice() {
        [id] => load_highd_recording(dir, id),
        [] => Err(Error::Data(format!("no *_tracks.csv in {}", dir.display()))),
        _ => Err(Error::Data(format!(
            "{} holds {} recordings; use load_highd_recording",
            dir.display(),
            ids.len()
        ))),
    }
}

/// Recording ids (`NN` prefixes) with a tracks file in `dir`, sorted.
pub fn recording_ids(dir: &Path) -> Result<Vec<String>> {
    let mut ids = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let name = entry?.file_name().to_string_lossy().into_owned();
        if let Some(id) = name.strip_suffix("_tracks.csv") {
            ids.push(id.to_string());
        }
    }
    ids.sort();
    Ok(ids)
}

fn recording_file(dir: &Path, id: &str, suffix: &str) -> PathBuf {
    dir.join(format!("{id}_{suffix}.csv"))
}

pub fn load_highd_recording(dir: &Path, id: &str) -> Result<TrackTable> {
    let rate = read_frame_rate(&recording_file(dir, id, "recordingMeta"))?;
    let directions = read_directions(&recording_file(dir, id, "tracksMeta"))?;
    let raw = read_tracks(&recording_file(dir, id, "tracks"))?;
    normalize(format!("highd-{id}"), rate, &directions, raw)
}

fn reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?)
}

fn read_frame_rate(path: &Path) -> Result<u32> {
    let mut rdr = reader(path)?;
    let cols = Columns::new(rdr.headers()?);
    let rate = cols.require("frameRate")?;
    let record = rdr
        .records()
        .next()
        .ok_or_else(|| Error::Schema(format!("{} has no rows", path.display())))??;
    let hz = int_field(&record, rate, "frameRate")?;
    if hz != i64::from(HIGHD_RATE_HZ) {
        return Err(Error::Data(format!("highD frame rate {hz} Hz, expected {HIGHD_RATE_HZ}")));
    }
    Ok(HIGHD_RATE_HZ)
}

fn read_directions(path: &Path) -> Result<HashMap<VehicleId, Carriageway>> {
    let mut rdr = reader(path)?;
    let cols = Columns::new(rdr.headers()?);
    let id = cols.require("id")?;
    let dir = cols.require("drivingDirection")?;
    let mut out = HashMap::new();
    for record in rdr.records() {
        let record = record?;
        let vehicle_id = int_field(&record, id, "id")? as VehicleId;
        let code = int_field(&record, dir, "drivingDirection")?;
        out.insert(vehicle_id, Carriageway::from_code(code, vehicle_id)?);
    }
    Ok(out)
}

struct RawRow {
    frame: i64,
    id: VehicleId,
    cx: f64,
    cy: f64,
    lane: i32,
}

fn read_tracks(path: &Path) -> Result<Vec<RawRow>> {
    let mut rdr = reader(path)?;
    let cols = Columns::new(rdr.headers()?);
    let frame = cols.require("frame")?;
    let id = cols.require("id")?;
    let x = cols.require("x")?;
    let y = cols.require("y")?;
    let width = cols.require("width")?;
    let height = cols.require("height")?;
    let lane = cols.require("laneId")?;

    let mut last_frame: HashMap<VehicleId, i64> = HashMap::new();
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let vehicle_id = int_field(&record, id, "id")? as VehicleId;
        let f = int_field(&record, frame, "frame")?;
        if let Some(prev) = last_frame.insert(vehicle_id, f) {
            if f <= prev {
                return Err(Error::Vehicle {
                    vehicle_id,
                    reason: format!("non-monotonic frames: {f} after {prev}"),
                });
            }
        }
        let (x, y): (f64, f64) = (field(&record, x, "x")?, field(&record, y, "y")?);
        let (w, h): (f64, f64) = (field(&record, width, "width")?, field(&record, height, "height")?);
        rows.push(RawRow {
            frame: f,
            id: vehicle_id,
            cx: x + 0.5 * w,
            cy: y + 0.5 * h,
            lane: int_field(&record, lane, "laneId")? as i32,
        });
    }
    Ok(rows)
}

fn normalize(
    recording_id: String,
    rate_hz: u32,
    directions: &HashMap<VehicleId, Carriageway>,
    raw: Vec<RawRow>,
) -> Result<TrackTable> {
    let way = |id: VehicleId| {
        directions.get(&id).copied().ok_or_else(|| Error::Vehicle {
            vehicle_id: id,
            reason: "missing from tracksMeta".into(),
        })
    };
    let mut x_ref = f64::NEG_INFINITY;
    let (mut upper_lo, mut upper_hi) = (i32::MAX, i32::MIN);
    for r in &raw {
        if way(r.id)? == Carriageway::Upper {
            upper_lo = upper_lo.min(r.lane);
            upper_hi = upper_hi.max(r.lane);
        }
        x_ref = x_ref.max(r.cx);
    }
    let rows = raw
        .iter()
        .map(|r| {
            Ok(match way(r.id)? {
                Carriageway::Lower => TrackRow {
                    frame: r.frame,
                    vehicle_id: r.id,
                    x: r.cx,
                    y: -r.cy,
                    lane_id: r.lane,
                },
                Carriageway::Upper => TrackRow {
                    frame: r.frame,
                    vehicle_id: r.id,
                    x: x_ref - r.cx,
                    y: r.cy,
                    lane_id: upper_lo + upper_hi - r.lane,
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    TrackTable::new(recording_id, rows, rate_hz)
}
