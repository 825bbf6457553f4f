//! The six maneuver classes and the ground-truth labeling heuristic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sample::{HISTORY_LEN, FUTURE_LEN};
use crate::track::{VehicleTrack, FRAME_PERIOD_S};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lateral {
    Keep,
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Longitudinal {
    Normal,
    Brake,
}

impl Lateral {
    pub const ALL: [Lateral; 3] = [Lateral::Keep, Lateral::Left, Lateral::Right];

    pub fn index(self) -> usize {
        self as usize
    }

    /// +1 for left (positive y), −1 for right, 0 for keep.
    pub fn sign(self) -> f64 {
        match self {
            Lateral::Keep => 0.0,
            Lateral::Left => 1.0,
            Lateral::Right => -1.0,
        }
    }
}

impl Longitudinal {
    pub const ALL: [Longitudinal; 2] = [Longitudinal::Normal, Longitudinal::Brake];

    pub fn index(self) -> usize {
        self as usize
    }
}

pub const NUM_LATERAL: usize = 3;
pub const NUM_LONGITUDINAL: usize = 2;
pub const NUM_MANEUVERS: usize = NUM_LATERAL * NUM_LONGITUDINAL;

/// One of the six lateral × longitudinal classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ManeuverLabel {
    pub lateral: Lateral,
    pub longitudinal: Longitudinal,
}

impl ManeuverLabel {
    pub const fn new(lateral: Lateral, longitudinal: Longitudinal) -> Self {
        Self { lateral, longitudinal }
    }

    /// Zero-based class index, `2 * lateral + longitudinal`.
    pub fn index(self) -> usize {
        NUM_LONGITUDINAL * self.lateral.index() + self.longitudinal.index()
    }

    /// One-based class number `k ∈ 1..=6`.
    pub fn class_number(self) -> usize {
        self.index() + 1
    }

    pub fn from_index(index: usize) -> Option<Self> {
        (index < NUM_MANEUVERS).then(|| {
            Self::new(
                Lateral::ALL[index / NUM_LONGITUDINAL],
                Longitudinal::ALL[index % NUM_LONGITUDINAL],
            )
        })
    }

    pub fn all() -> impl Iterator<Item = ManeuverLabel> {
        (0..NUM_MANEUVERS).filter_map(Self::from_index)
    }
}

/// Which way lane ids run relative to the driver. Differs between sites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LaneConvention {
    pub left_is_decreasing: bool,
}

impl Default for LaneConvention {
    fn default() -> Self {
        Self { left_is_decreasing: true }
    }
}

impl LaneConvention {
    fn lateral_of(self, from: i32, to: i32) -> Lateral {
        match (to < from) == self.left_is_decreasing {
            true => Lateral::Left,
            false => Lateral::Right,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelConfig {
    pub lanes: LaneConvention,
    /// Future/history mean-speed ratio below which the class is `Brake`.
    pub brake_ratio: f64,
    /// Lateral speed (m/s) towards the new lane that marks a lane change
    /// seen in the history window as still in progress at `t`.
    pub ongoing_lateral_speed: f64,
}

impl Default for LabelConfig {
    fn default() -> Self {
        Self {
            lanes: LaneConvention::default(),
            brake_ratio: 0.8,
            ongoing_lateral_speed: 0.2,
        }
    }
}

fn mean_speed(points: &[crate::geometry::Point]) -> f64 {
    let steps = points.len().saturating_sub(1);
    if steps == 0 {
        return 0.0;
    }
    let dist: f64 = points.windows(2).map(|w| (w[1] - w[0]).norm()).sum();
    dist / (steps as f64 * FRAME_PERIOD_S)
}

/// Labels the maneuver of `track` around the 5 Hz frame `t`.
///
/// Lateral: the first lane-id change in `(t, t+5 s]` decides; failing that,
/// a change inside `[t−3 s, t]` whose lateral motion is still heading into
/// the new lane over the last second labels that direction. Longitudinal:
/// `Brake` when the mean future speed is below `brake_ratio` times the mean
/// history speed.
pub fn label_maneuver(track: &VehicleTrack, t: i64, config: &LabelConfig) -> Result<ManeuverLabel> {
    let first = t - (HISTORY_LEN as i64 - 1);
    let last = t + FUTURE_LEN as i64;
    let (Some(lanes), Some(points)) = (track.lanes(first, last), track.positions(first, last)) else {
        return Err(Error::Label(format!(
            "vehicle {} does not cover frames {first}..={last}",
            track.id
        )));
    };
    let now = HISTORY_LEN - 1;

    let future_change = lanes[now..]
        .windows(2)
        .find(|w| w[0] != w[1])
        .map(|w| config.lanes.lateral_of(w[0], w[1]));
    let lateral = future_change.unwrap_or_else(|| {
        let (past, current) = (lanes[0], lanes[now]);
        if past == current {
            return Lateral::Keep;
        }
        let direction = config.lanes.lateral_of(past, current);
        let last_second = &points[now - 5..=now];
        let lateral_speed = (last_second[5].y - last_second[0].y) / (5.0 * FRAME_PERIOD_S);
        if lateral_speed * direction.sign() >= config.ongoing_lateral_speed {
            direction
        } else {
            Lateral::Keep
        }
    });

    let history_speed = mean_speed(&points[..=now]);
    let future_speed = mean_speed(&points[now..]);
    let longitudinal = if future_speed < config.brake_ratio * history_speed {
        Longitudinal::Brake
    } else {
        Longitudinal::Normal
    };
    Ok(ManeuverLabel::new(lateral, longitudinal))
}
