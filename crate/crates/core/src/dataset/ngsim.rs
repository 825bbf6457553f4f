//! NGSIM trajectory CSV reader (US-101 / I-80 column schema).

use std::collections::HashMap;
use std::path::Path;

use crate::dataset::csv_util::{field, int_field, Columns};
use crate::error::{Error, Result};
use crate::track::{TrackRow, TrackTable, VehicleId};

pub const FEET_TO_METERS: f64 = 0.3048;
pub const NGSIM_RATE_HZ: u32 = 10;
/// No NGSIM study site spans more than this, in meters.
pub const MAX_SITE_SPAN_M: f64 = 3000.0;

const VEHICLE: &str = "Vehicle_ID";
const FRAME: &str = "Frame_ID";
const LOCAL_X: &str = "Local_X";
const LOCAL_Y: &str = "Local_Y";
const LANE: &str = "Lane_ID";

/// Loads one NGSIM file. `Local_Y` (feet along the road) becomes `x`;
/// `Local_X` (feet from the left road edge) becomes `y = -Local_X`, so
/// that `y` points left.
pub fn load_ngsim(path: &Path) -> Result<TrackTable> {
    let recording_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "ngsim".into());
    let reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)?;
    read_ngsim(recording_id, reader)
}

pub fn read_ngsim<R: std::io::Read>(recording_id: String, mut reader: csv::Reader<R>) -> Result<TrackTable> {
    let cols = Columns::new(reader.headers()?);
    let vehicle = cols.require(VEHICLE)?;
    let frame = cols.require(FRAME)?;
    let local_x = cols.require(LOCAL_X)?;
    let local_y = cols.require(LOCAL_Y)?;
    let lane = cols.require(LANE)?;

    let mut last_frame: HashMap<VehicleId, i64> = HashMap::new();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let vehicle_id = int_field(&record, vehicle, VEHICLE)? as VehicleId;
        let frame = int_field(&record, frame, FRAME)?;
        if let Some(prev) = last_frame.insert(vehicle_id, frame) {
            if frame <= prev {
                return Err(Error::Vehicle {
                    vehicle_id,
                    reason: format!("non-monotonic frames: {frame} after {prev}"),
                });
            }
        }
        let lx: f64 = field(&record, local_x, LOCAL_X)?;
        let ly: f64 = field(&record, local_y, LOCAL_Y)?;
        rows.push(TrackRow {
            frame,
            vehicle_id,
            x: ly * FEET_TO_METERS,
            y: -lx * FEET_TO_METERS,
            lane_id: int_field(&record, lane, LANE)? as i32,
        });
    }
    if rows.is_empty() {
        return Err(Error::Schema("file contains no rows".into()));
    }
    let table = TrackTable::new(recording_id, rows, NGSIM_RATE_HZ)?;
    let span = table.max_abs_coordinate();
    if span > MAX_SITE_SPAN_M {
        return Err(Error::Data(format!(
            "coordinate magnitude {span:.1} m exceeds the {MAX_SITE_SPAN_M} m site span; wrong units?"
        )));
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(text: &str) -> Result<TrackTable> {
        let reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        read_ngsim("toy".into(), reader)
    }

    #[test]
    fn converts_feet() {
        let t = read("Vehicle_ID,Frame_ID,Local_X,Local_Y,Lane_ID\n1,10,6,200,2\n").unwrap();
        assert_eq!(t.rate_hz, 10);
        assert!((t.rows[0].x - 60.96).abs() < 1e-12);
        assert!((t.rows[0].y + 6.0 * 0.3048).abs() < 1e-12);
        assert_eq!(t.rows[0].lane_id, 2);
    }

    #[test]
    fn empty_file_is_schema_error() {
        assert!(matches!(read(""), Err(Error::MissingColumn(_))));
        assert!(matches!(
            read("Vehicle_ID,Frame_ID,Local_X,Local_Y,Lane_ID\n"),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn missing_column_is_named() {
        let err = read("Vehicle_ID,Frame_ID,Local_X,Lane_ID\n1,1,1,1\n").unwrap_err();
        assert!(matches!(err, Error::MissingColumn(ref c) if c == "Local_Y"), "{err}");
    }

    #[test]
    fn non_monotonic_frames_cite_vehicle() {
        let err = read("Vehicle_ID,Frame_ID,Local_X,Local_Y,Lane_ID\n7,2,1,1,1\n7,1,1,2,1\n").unwrap_err();
        assert!(matches!(err, Error::Vehicle { vehicle_id: 7, .. }), "{err}");
    }

    #[test]
    fn implausible_span_rejected() {
        let err = read("Vehicle_ID,Frame_ID,Local_X,Local_Y,Lane_ID\n1,1,1,20000,1\n").unwrap_err();
        assert!(matches!(err, Error::Data(_)));
    }
}
