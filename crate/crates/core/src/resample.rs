use crate::error::{Error, Result};
use crate::track::TrackTable;

/// Decimates a table to `target_hz`.
///
/// Frames are kept on a recording-wide phase (the earliest frame of the
/// recording) so that all vehicles stay co-sampled; kept frames are
/// renumbered in units of the new rate. A vehicle that starts on-phase keeps
/// every `rate_hz / target_hz`-th frame from its first one.
pub fn resample(table: &TrackTable, target_hz: u32) -> Result<TrackTable> {
    if target_hz == 0 || table.rate_hz % target_hz != 0 {
        return Err(Error::UnsupportedRate { from: table.rate_hz, to: target_hz });
    }
    let stride = i64::from(table.rate_hz / target_hz);
    if stride == 1 {
        return Ok(table.clone());
    }
    let phase = table.rows.iter().map(|r| r.frame).min().unwrap_or(0);
    let rows = table
        .rows
        .iter()
        .filter(|r| (r.frame - phase).rem_euclid(stride) == 0)
        .map(|r| {
            let mut r = *r;
            r.frame = (r.frame - phase) / stride;
            r
        })
        .collect();
    Ok(TrackTable {
        recording_id: table.recording_id.clone(),
        rows,
        rate_hz: target_hz,
        direction: table.direction,
    })
}
