//! Scripted yield scenarios: an ego either cuts in front of a follower in the
//! adjacent lane or keeps its lane, and the follower brakes exactly when the
//! cut-in leaves it less than the threshold time gap.
//!
//! Histories are constant-speed and identical in distribution for both ego
//! choices, so only the ego's future plan tells the two outcomes apart.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::maneuver::Lateral;
use crate::plan::{build_candidate, Behavior, EgoState, LongitudinalBehavior};
use crate::sample::{HISTORY_LEN, FUTURE_LEN};
use crate::track::{TrackRow, TrackTable, VehicleId, FRAME_PERIOD_S};

pub const EGO_ID: VehicleId = 1;
pub const FOLLOWER_ID: VehicleId = 2;
pub const LEADER_ID: VehicleId = 3;

/// Current frame of every scenario; frames run `0..=CURRENT + 25`.
pub const CURRENT_FRAME: i64 = HISTORY_LEN as i64 - 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YieldConfig {
    pub lane_width: f64,
    /// Follower deceleration when it yields, m/s².
    pub brake_decel: f64,
    /// Cut-ins with a time gap (distance / follower speed) below this make
    /// the follower yield.
    pub gap_threshold_s: f64,
    pub cut_in_probability: f64,
    pub follower_speed: (f64, f64),
    /// Ego speed minus follower speed.
    pub speed_delta: (f64, f64),
    /// Longitudinal distance from the follower up to the ego.
    pub follower_distance: (f64, f64),
    pub leader_distance: (f64, f64),
    pub cut_in_durations: [f64; 3],
}

impl Default for YieldConfig {
    fn default() -> Self {
        Self {
            lane_width: 3.7,
            brake_decel: 2.0,
            gap_threshold_s: 1.5,
            cut_in_probability: 0.5,
            follower_speed: (12.0, 20.0),
            speed_delta: (-1.0, 1.0),
            follower_distance: (6.0, 30.0),
            leader_distance: (8.0, 25.0),
            cut_in_durations: [2.5, 3.5, 4.5],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct YieldCase {
    pub table: TrackTable,
    pub ego_id: VehicleId,
    pub follower_id: VehicleId,
    pub frame: i64,
    pub cut_in: bool,
    pub follower_brakes: bool,
}

const EGO_LANE: i32 = 2;
const TARGET_LANE: i32 = 3;

fn straight_rows(id: VehicleId, lane: i32, at_current: Point, speed: f64) -> Vec<TrackRow> {
    (0..=CURRENT_FRAME + FUTURE_LEN as i64)
        .map(|f| {
            let dt = (f - CURRENT_FRAME) as f64 * FRAME_PERIOD_S;
            TrackRow { frame: f, vehicle_id: id, x: at_current.x + speed * dt, y: at_current.y, lane_id: lane }
        })
        .collect()
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

fn generate_case(index: usize, rng: &mut ChaCha8Rng, config: &YieldConfig) -> Result<YieldCase> {
    let v_f = uniform(rng, config.follower_speed);
    let v_e = v_f + uniform(rng, config.speed_delta);
    let d = uniform(rng, config.follower_distance);
    let leader_gap = uniform(rng, config.leader_distance);
    let cut_in = rng.random::<f64>() < config.cut_in_probability;
    let duration = config.cut_in_durations[rng.random_range(0..config.cut_in_durations.len())];
    let follower_brakes = cut_in && d / v_f < config.gap_threshold_s;

    let ego_now = Point::new(200.0, 0.0);
    let follower_now = Point::new(ego_now.x - d, -config.lane_width);
    let leader_now = Point::new(ego_now.x + leader_gap, -config.lane_width);

    let mut rows = Vec::new();
    let behavior = Behavior {
        lateral: if cut_in { Lateral::Right } else { Lateral::Keep },
        longitudinal: LongitudinalBehavior::Maintain,
    };
    let plan = build_candidate(&EgoState { position: ego_now, speed: v_e }, behavior, config.lane_width, duration)?;
    let boundary = -0.5 * config.lane_width;
    for mut r in straight_rows(EGO_ID, EGO_LANE, ego_now, v_e) {
        if r.frame > CURRENT_FRAME {
            let p = plan.trajectory[(r.frame - CURRENT_FRAME - 1) as usize];
            r.x = p.x;
            r.y = p.y;
            r.lane_id = if p.y < boundary { TARGET_LANE } else { EGO_LANE };
        }
        rows.push(r);
    }
    for mut r in straight_rows(FOLLOWER_ID, TARGET_LANE, follower_now, v_f) {
        if follower_brakes && r.frame > CURRENT_FRAME {
            let t = (r.frame - CURRENT_FRAME) as f64 * FRAME_PERIOD_S;
            let t_stop = v_f / config.brake_decel;
            let tt = t.min(t_stop);
            r.x = follower_now.x + v_f * tt - 0.5 * config.brake_decel * tt * tt;
        }
        rows.push(r);
    }
    rows.extend(straight_rows(LEADER_ID, TARGET_LANE, leader_now, v_f + 0.5 * (v_e - v_f).abs()));

    Ok(YieldCase {
        table: TrackTable::new(format!("yield-{index:05}"), rows, 5)?,
        ego_id: EGO_ID,
        follower_id: FOLLOWER_ID,
        frame: CURRENT_FRAME,
        cut_in,
        follower_brakes,
    })
}

/// `count` scenarios, deterministic in `seed`.
pub fn generate_yield_cases(seed: u64, count: usize, config: &YieldConfig) -> Result<Vec<YieldCase>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|i| generate_case(i, &mut rng, config)).collect()
}

/// Parses `seed=<u64>,count=<usize>` (either key optional).
pub fn parse_source(source: &str) -> Result<(u64, usize)> {
    let (mut seed, mut count) = (0u64, 2000usize);
    for part in source.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Error::Invalid(format!("bad synthetic source entry `{part}`")))?;
        let bad = |_| Error::Invalid(format!("bad value in `{part}`"));
        match k.trim() {
            "seed" => seed = v.trim().parse().map_err(bad)?,
            "count" => count = v.trim().parse().map_err(bad)?,
            other => return Err(Error::Invalid(format!("unknown synthetic source key `{other}`"))),
        }
    }
    Ok((seed, count))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maneuver::Longitudinal;
    use crate::sample::{build_sample_at, SampleConfig, SkipReport};
    use crate::track::TrackIndex;

    #[test]
    fn deterministic_and_follows_rule() {
        let config = YieldConfig::default();
        let a = generate_yield_cases(5, 200, &config).unwrap();
        assert_eq!(a, generate_yield_cases(5, 200, &config).unwrap());
        let brakes = a.iter().filter(|c| c.follower_brakes).count();
        assert!(brakes > 30 && brakes < 120, "{brakes}");
        assert!(a.iter().all(|c| !c.follower_brakes || c.cut_in));
    }

    #[test]
    fn samples_label_the_follower() {
        let sample_config = SampleConfig::default();
        for case in generate_yield_cases(11, 50, &YieldConfig::default()).unwrap() {
            let index = TrackIndex::new(&case.table);
            let mut report = SkipReport::default();
            let s = build_sample_at(&index, case.ego_id, case.frame, &sample_config, &mut report).unwrap();
            s.validate(&sample_config.grid).unwrap();
            let follower = s.targets.iter().find(|t| t.vehicle_id() == FOLLOWER_ID).expect("follower is a target");
            let expected = if case.follower_brakes { Longitudinal::Brake } else { Longitudinal::Normal };
            assert_eq!(follower.maneuver.longitudinal, expected);
            assert!(follower.ego_cell.is_some());
        }
    }

    #[test]
    fn source_parsing() {
        assert_eq!(parse_source("seed=3,count=10").unwrap(), (3, 10));
        assert_eq!(parse_source("").unwrap(), (0, 2000));
        assert!(parse_source("seed=x").is_err());
        assert!(parse_source("size=3").is_err());
    }
}
