use serde::{Deserialize, Serialize};

use crate::geometry::Point;
use crate::prediction::PredictionSet;
use crate::track::VehicleId;

/// Axis-aligned vehicle rectangle, meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Footprint {
    pub length: f64,
    pub width: f64,
}

impl Default for Footprint {
    fn default() -> Self {
        Self { length: 5.0, width: 2.0 }
    }
}

/// Strict overlap of two equal footprints centered at `a` and `b`.
pub fn footprints_overlap(a: Point, b: Point, footprint: &Footprint) -> bool {
    (a.x - b.x).abs() < footprint.length && (a.y - b.y).abs() < footprint.width
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollisionPair {
    pub target_id: VehicleId,
    /// First overlapping future frame, `1..=25`.
    pub frame: usize,
    /// Midpoint between the two centers at that frame.
    pub point: Point,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollisionReport {
    pub pairs: Vec<CollisionPair>,
    pub clear: bool,
}

/// Checks the ego plan against each target's most probable mean trajectory.
pub fn collision_check(plan: &[Point], predictions: &PredictionSet, footprint: &Footprint) -> CollisionReport {
    let mut pairs = Vec::new();
    for target in &predictions.targets {
        let means = target.best_means();
        let hit = plan
            .iter()
            .zip(&means)
            .enumerate()
            .find(|(_, (e, t))| footprints_overlap(**e, **t, footprint));
        if let Some((k, (e, t))) = hit {
            pairs.push(CollisionPair {
                target_id: target.vehicle_id,
                frame: k + 1,
                point: (*e + *t) * 0.5,
            });
        }
    }
    CollisionReport { clear: pairs.is_empty(), pairs }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Cell;
    use crate::prediction::{GaussianStep, TargetPrediction};

    fn target(id: VehicleId, means: &[Point]) -> TargetPrediction {
        let steps: Vec<_> = means
            .iter()
            .map(|&mu| GaussianStep { delta: Point::ZERO, sigma: Point::new(1.0, 1.0), rho: 0.0, mu })
            .collect();
        TargetPrediction {
            vehicle_id: id,
            cell: Cell::new(0, 0),
            last_observed: Point::ZERO,
            lateral_probs: [1.0, 0.0, 0.0],
            longitudinal_probs: [1.0, 0.0],
            maneuver_probs: [1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            trajectories: vec![steps; 6],
        }
    }

    fn line(x0: f64, y: f64, step: f64) -> Vec<Point> {
        (1..=25).map(|k| Point::new(x0 + step * k as f64, y)).collect()
    }

    #[test]
    fn identical_trajectories_collide_immediately() {
        let plan = line(0.0, 0.0, 4.0);
        let r = collision_check(&plan, &PredictionSet { targets: vec![target(3, &plan)] }, &Footprint::default());
        assert!(!r.clear);
        assert_eq!(r.pairs[0].frame, 1);
        assert_eq!(r.pairs[0].point, plan[0]);
    }

    #[test]
    fn lateral_offset_is_clear() {
        let plan = line(0.0, 0.0, 4.0);
        let other = line(0.0, 10.0, 4.0);
        let r = collision_check(&plan, &PredictionSet { targets: vec![target(3, &other)] }, &Footprint::default());
        assert!(r.clear && r.pairs.is_empty());
    }

    #[test]
    fn closing_on_stopped_target() {
        // ego at 2 m/s from 6 m behind a stationary target
        let plan: Vec<_> = (1..=25).map(|k| Point::new(-6.0 + 0.4 * k as f64, 0.0)).collect();
        let stopped = vec![Point::ZERO; 25];
        let expected = (1..=25).find(|&k| (6.0 - 0.4 * k as f64) < 5.0).unwrap();
        let r = collision_check(&plan, &PredictionSet { targets: vec![target(9, &stopped)] }, &Footprint::default());
        assert_eq!(expected, 3);
        assert_eq!(r.pairs[0].frame, expected);
    }

    #[test]
    fn overlap_is_symmetric() {
        let f = Footprint::default();
        let a = Point::new(1.0, 0.3);
        for b in [Point::new(5.9, 0.0), Point::new(-3.0, 1.9), Point::new(0.0, 2.5)] {
            assert_eq!(footprints_overlap(a, b, &f), footprints_overlap(b, a, &f));
        }
    }
}
