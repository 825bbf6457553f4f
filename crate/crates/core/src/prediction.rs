//! Plain-data form of the maneuver-based mixture predictions.

use serde::{Deserialize, Serialize};

use crate::geometry::Point;
use crate::grid::Cell;
use crate::maneuver::{ManeuverLabel, NUM_MANEUVERS};
use crate::track::VehicleId;

/// Bivariate Gaussian over one future location.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianStep {
    /// Displacement from the previous step, meters.
    pub delta: Point,
    /// Standard deviations (σx, σy), meters.
    pub sigma: Point,
    pub rho: f64,
    /// Mean position, meters.
    pub mu: Point,
}

impl GaussianStep {
    pub fn is_proper(&self) -> bool {
        self.sigma.x > 0.0 && self.sigma.y > 0.0 && self.rho.abs() < 1.0 && self.mu.is_finite()
    }
}

/// `μ^{t+T} = x^t + Σ_{τ≤T} δ^{t+τ}`, written into each step's `mu`.
pub fn integrate_displacements(last_observed: Point, steps: &mut [GaussianStep]) {
    let mut mu = last_observed;
    for step in steps {
        mu += step.delta;
        step.mu = mu;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetPrediction {
    pub vehicle_id: VehicleId,
    pub cell: Cell,
    pub last_observed: Point,
    pub lateral_probs: [f64; 3],
    pub longitudinal_probs: [f64; 2],
    /// Joint probabilities indexed by [`ManeuverLabel::index`].
    pub maneuver_probs: [f64; NUM_MANEUVERS],
    /// One 25-step trajectory per maneuver, same indexing.
    pub trajectories: Vec<Vec<GaussianStep>>,
}

impl TargetPrediction {
    /// Maneuver with the highest joint probability (lowest index on ties).
    pub fn best_maneuver(&self) -> ManeuverLabel {
        let mut best = 0;
        for k in 1..NUM_MANEUVERS {
            if self.maneuver_probs[k] > self.maneuver_probs[best] {
                best = k;
            }
        }
        ManeuverLabel::from_index(best).expect("index in range")
    }

    pub fn trajectory(&self, maneuver: ManeuverLabel) -> &[GaussianStep] {
        &self.trajectories[maneuver.index()]
    }

    /// Gaussian means of the most probable maneuver.
    pub fn best_means(&self) -> Vec<Point> {
        self.trajectory(self.best_maneuver()).iter().map(|s| s.mu).collect()
    }
}

/// Per-target predictions of one scene, in the sample's target order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PredictionSet {
    pub targets: Vec<TargetPrediction>,
}

/// Joint maneuver probabilities from the two heads.
pub fn joint_probabilities(lateral: &[f64; 3], longitudinal: &[f64; 2]) -> [f64; NUM_MANEUVERS] {
    let mut joint = [0.0; NUM_MANEUVERS];
    for m in ManeuverLabel::all() {
        joint[m.index()] = lateral[m.lateral.index()] * longitudinal[m.longitudinal.index()];
    }
    joint
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step(dx: f64, dy: f64) -> GaussianStep {
        GaussianStep { delta: Point::new(dx, dy), sigma: Point::new(1.0, 1.0), rho: 0.0, mu: Point::ZERO }
    }

    #[test]
    fn integrate_example() {
        let mut steps = vec![step(1.0, 0.0), step(1.0, 0.1)];
        integrate_displacements(Point::new(10.0, 2.0), &mut steps);
        assert_eq!(steps[0].mu, Point::new(11.0, 2.0));
        assert!((steps[1].mu - Point::new(12.0, 2.1)).norm() < 1e-12);
    }

    #[test]
    fn zero_displacements_stay_put() {
        let mut steps = vec![step(0.0, 0.0); 25];
        integrate_displacements(Point::new(3.0, -1.0), &mut steps);
        assert!(steps.iter().all(|s| s.mu == Point::new(3.0, -1.0)));
    }

    #[test]
    fn joint_products() {
        let j = joint_probabilities(&[0.5, 0.3, 0.2], &[0.6, 0.4]);
        assert!((j.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let max = j.iter().cloned().fold(f64::MIN, f64::max);
        assert!((max - 0.30).abs() < 1e-12);
        let u = joint_probabilities(&[1.0 / 3.0; 3], &[0.5; 2]);
        assert!(u.iter().all(|p| (p - 1.0 / 6.0).abs() < 1e-12));
    }
}
