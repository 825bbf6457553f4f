//! JSON plan exchange: behavior tag, aggressiveness, knots and sampled points.
//! The sampled points are authoritative; knots are provenance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::plan::candidates::{Behavior, CandidatePlan};
use crate::sample::FUTURE_LEN;

/// Unit tags carried by every trajectory payload.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Units {
    pub length: String,
    pub time: String,
}

impl Default for Units {
    fn default() -> Self {
        Self { length: "m".into(), time: "s".into() }
    }
}

impl Units {
    pub fn check(&self) -> Result<()> {
        if self.length != "m" || self.time != "s" {
            return Err(Error::Invalid(format!(
                "unsupported units ({}, {}); expected (m, s)",
                self.length, self.time
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanExchange {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub behavior: Option<Behavior>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aggressiveness: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub knots: Option<Vec<Point>>,
    pub points: Vec<Point>,
    #[serde(default)]
    pub units: Units,
}

impl From<&CandidatePlan> for PlanExchange {
    fn from(plan: &CandidatePlan) -> Self {
        Self {
            behavior: Some(plan.behavior),
            aggressiveness: Some(plan.aggressiveness),
            knots: Some(plan.knots.to_vec()),
            points: plan.trajectory.clone(),
            units: Units::default(),
        }
    }
}

impl PlanExchange {
    /// Raw points wrapped with default units.
    pub fn from_points(points: Vec<Point>) -> Self {
        Self { behavior: None, aggressiveness: None, knots: None, points, units: Units::default() }
    }

    /// The 25 sampled points, after checking shape and units.
    pub fn validated_points(&self) -> Result<&[Point]> {
        self.units.check()?;
        if self.points.len() != FUTURE_LEN {
            return Err(Error::Invalid(format!(
                "plan has {} points, expected {FUTURE_LEN}",
                self.points.len()
            )));
        }
        if let Some(k) = &self.knots {
            if k.len() != 6 {
                return Err(Error::Invalid(format!("plan has {} knots, expected 6", k.len())));
            }
        }
        if self.points.iter().any(|p| !p.is_finite()) {
            return Err(Error::Invalid("plan contains non-finite points".into()));
        }
        Ok(&self.points)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wire_shape() {
        let plan = PlanExchange::from_points(vec![Point::new(1.0, 2.0); 25]);
        let json = serde_json::to_value(&plan).unwrap();
        assert_eq!(json["points"][0], serde_json::json!([1.0, 2.0]));
        assert_eq!(json["units"]["length"], "m");
        let back: PlanExchange = serde_json::from_value(json).unwrap();
        assert_eq!(back, plan);
        assert!(back.validated_points().is_ok());
    }

    #[test]
    fn rejects_wrong_length_and_units() {
        assert!(PlanExchange::from_points(vec![Point::ZERO; 24]).validated_points().is_err());
        let mut feet = PlanExchange::from_points(vec![Point::ZERO; 25]);
        feet.units.length = "ft".into();
        assert!(feet.validated_points().is_err());
    }
}
