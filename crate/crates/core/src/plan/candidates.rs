//! Behavior-menu candidate plans for the ego vehicle.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::maneuver::Lateral;
use crate::plan::spline::{fit_waypoints, sample_spline, QuinticSpline};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LongitudinalBehavior {
    Accelerate,
    Maintain,
    Decelerate,
}

impl LongitudinalBehavior {
    pub const ALL: [LongitudinalBehavior; 3] = [
        LongitudinalBehavior::Accelerate,
        LongitudinalBehavior::Maintain,
        LongitudinalBehavior::Decelerate,
    ];

    /// Constant acceleration, m/s².
    pub fn acceleration(self) -> f64 {
        match self {
            LongitudinalBehavior::Accelerate => 1.0,
            LongitudinalBehavior::Maintain => 0.0,
            LongitudinalBehavior::Decelerate => -1.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Behavior {
    pub lateral: Lateral,
    pub longitudinal: LongitudinalBehavior,
}

/// Lane-change durations allowed as aggressiveness, seconds.
pub const DURATION_RANGE: std::ops::RangeInclusive<f64> = 2.0..=5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateMenu {
    pub laterals: Vec<Lateral>,
    pub longitudinals: Vec<LongitudinalBehavior>,
    /// Lane-change durations; shorter is more aggressive.
    pub durations: Vec<f64>,
}

impl Default for CandidateMenu {
    fn default() -> Self {
        Self {
            laterals: Lateral::ALL.to_vec(),
            longitudinals: LongitudinalBehavior::ALL.to_vec(),
            durations: vec![2.5, 3.5, 4.5],
        }
    }
}

impl CandidateMenu {
    pub fn validate(&self) -> Result<()> {
        if self.laterals.is_empty() || self.longitudinals.is_empty() || self.durations.is_empty() {
            return Err(Error::Invalid("candidate menus must be non-empty".into()));
        }
        if let Some(d) = self.durations.iter().find(|d| !DURATION_RANGE.contains(*d)) {
            return Err(Error::Invalid(format!("lane-change duration {d} s outside [2, 5] s")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.laterals.len() * self.longitudinals.len() * self.durations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Ego state at the planning instant; travel is along +x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EgoState {
    pub position: Point,
    /// Longitudinal speed, m/s.
    pub speed: f64,
}

/// Closed-form ego motion for one behavior, as an offset from the start.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BehaviorProfile {
    pub speed: f64,
    pub acceleration: f64,
    /// Signed terminal lateral offset, meters.
    pub lateral_offset: f64,
    pub duration: f64,
}

/// `10τ³ − 15τ⁴ + 6τ⁵`: zero velocity and acceleration at both ends.
fn ease(tau: f64) -> f64 {
    let tau = tau.clamp(0.0, 1.0);
    tau * tau * tau * (10.0 + tau * (-15.0 + 6.0 * tau))
}

fn ease_rate(tau: f64) -> f64 {
    if !(0.0..=1.0).contains(&tau) {
        return 0.0;
    }
    30.0 * tau * tau * (1.0 - tau) * (1.0 - tau)
}

impl BehaviorProfile {
    pub fn new(speed: f64, behavior: Behavior, lane_width: f64, duration: f64) -> Self {
        Self {
            speed,
            acceleration: behavior.longitudinal.acceleration(),
            lateral_offset: behavior.lateral.sign() * lane_width,
            duration,
        }
    }

    /// Distance travelled by `t`; speed is clipped at zero.
    pub fn longitudinal(&self, t: f64) -> f64 {
        if self.acceleration < 0.0 {
            let stop = self.speed / -self.acceleration;
            let t = t.min(stop);
            return self.speed * t + 0.5 * self.acceleration * t * t;
        }
        self.speed * t + 0.5 * self.acceleration * t * t
    }

    pub fn longitudinal_speed(&self, t: f64) -> f64 {
        (self.speed + self.acceleration * t).max(0.0)
    }

    pub fn lateral(&self, t: f64) -> f64 {
        self.lateral_offset * ease(t / self.duration)
    }

    pub fn lateral_velocity(&self, t: f64) -> f64 {
        self.lateral_offset * ease_rate(t / self.duration) / self.duration
    }

    pub fn offset(&self, t: f64) -> Point {
        Point::new(self.longitudinal(t), self.lateral(t))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidatePlan {
    pub behavior: Behavior,
    /// Lane-change duration, seconds.
    pub aggressiveness: f64,
    /// Current position plus the five 1 Hz waypoints the spline passes through.
    pub knots: [Point; 6],
    pub spline: QuinticSpline,
    /// The spline at t = 0.2, 0.4, …, 5.0 s.
    pub trajectory: Vec<Point>,
}

pub fn build_candidate(ego: &EgoState, behavior: Behavior, lane_width: f64, duration: f64) -> Result<CandidatePlan> {
    let profile = BehaviorProfile::new(ego.speed, behavior, lane_width, duration);
    let knots: [Point; 6] = std::array::from_fn(|i| ego.position + profile.offset(i as f64));
    let spline = fit_waypoints(&knots)?;
    Ok(CandidatePlan {
        behavior,
        aggressiveness: duration,
        knots,
        trajectory: sample_spline(&spline, 5),
        spline,
    })
}

/// A source of candidate ego plans, selectable by name.
pub trait PlanGenerator: Send + Sync {
    fn name(&self) -> &'static str;

    fn generate(&self, ego: &EgoState, lane_width: f64, menu: &CandidateMenu) -> Result<Vec<CandidatePlan>>;
}

/// Constant-acceleration longitudinal profiles crossed with quintic-ease
/// lane changes, one plan per menu combination.
#[derive(Debug, Default, Clone, Copy)]
pub struct BehaviorMenuPlanner;

impl PlanGenerator for BehaviorMenuPlanner {
    fn name(&self) -> &'static str {
        "mpdm"
    }

    fn generate(&self, ego: &EgoState, lane_width: f64, menu: &CandidateMenu) -> Result<Vec<CandidatePlan>> {
        generate_candidates(ego, lane_width, menu)
    }
}

/// One plan per (lateral, longitudinal, duration) in menu order.
pub fn generate_candidates(ego: &EgoState, lane_width: f64, menu: &CandidateMenu) -> Result<Vec<CandidatePlan>> {
    menu.validate()?;
    if !(ego.speed >= 0.0) || !ego.position.is_finite() {
        return Err(Error::Invalid(format!("ego speed {} must be non-negative", ego.speed)));
    }
    if !(lane_width > 0.0) {
        return Err(Error::Invalid(format!("lane width {lane_width} must be positive")));
    }
    let mut plans = Vec::with_capacity(menu.len());
    for &lateral in &menu.laterals {
        for &longitudinal in &menu.longitudinals {
            for &duration in &menu.durations {
                plans.push(build_candidate(ego, Behavior { lateral, longitudinal }, lane_width, duration)?);
            }
        }
    }
    Ok(plans)
}
