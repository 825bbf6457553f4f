//! Bivariate Gaussian likelihoods, the training NLL and per-horizon metrics.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::maneuver::ManeuverLabel;
use crate::prediction::{GaussianStep, PredictionSet, TargetPrediction};

/// Inside density evaluation σ is floored and |ρ| capped at these values.
pub const SIGMA_FLOOR: f64 = 1e-3;
pub const RHO_LIMIT: f64 = 0.999;

/// Future frames (5 Hz) reported as the 1 s … 5 s horizons.
pub const HORIZON_FRAMES: [usize; 5] = [5, 10, 15, 20, 25];

/// `log N(y; μ, σ, ρ)` with the documented σ floor and ρ cap.
pub fn bivariate_log_density(step: &GaussianStep, y: Point) -> f64 {
    let sx = step.sigma.x.max(SIGMA_FLOOR);
    let sy = step.sigma.y.max(SIGMA_FLOOR);
    let rho = step.rho.clamp(-RHO_LIMIT, RHO_LIMIT);
    let zx = (y.x - step.mu.x) / sx;
    let zy = (y.y - step.mu.y) / sy;
    let one_minus = 1.0 - rho * rho;
    -(2.0 * PI).ln() - sx.ln() - sy.ln() - 0.5 * one_minus.ln()
        - (zx * zx + zy * zy - 2.0 * rho * zx * zy) / (2.0 * one_minus)
}

fn check_proper(step: &GaussianStep) -> Result<()> {
    if step.sigma.x <= 0.0 || step.sigma.y <= 0.0 || step.rho.abs() >= 1.0 || !step.mu.is_finite() {
        return Err(Error::Invalid(format!(
            "improper Gaussian: sigma ({}, {}), rho {}",
            step.sigma.x, step.sigma.y, step.rho
        )));
    }
    Ok(())
}

/// `log P_Θ(Y | m)`: sum of per-step log densities over the common length.
pub fn trajectory_log_likelihood(steps: &[GaussianStep], truth: &[Point]) -> Result<f64> {
    if steps.len() != truth.len() {
        return Err(Error::Invalid(format!("{} steps for {} truth points", steps.len(), truth.len())));
    }
    steps.iter().zip(truth).try_fold(0.0, |acc, (s, &y)| {
        check_proper(s)?;
        Ok(acc + bivariate_log_density(s, y))
    })
}

/// The truth a target is scored against.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetTruth {
    pub future: Vec<Point>,
    pub maneuver: ManeuverLabel,
}

/// `−log(P_Θ(Y | m_true) P(m_true))` for one target.
pub fn target_nll(pred: &TargetPrediction, truth: &TargetTruth) -> Result<f64> {
    let steps = pred.trajectory(truth.maneuver);
    let steps = &steps[..truth.future.len().min(steps.len())];
    let ll = trajectory_log_likelihood(steps, &truth.future)?;
    Ok(-(ll + pred.maneuver_probs[truth.maneuver.index()].ln()))
}

/// Summed negative log likelihood over all targets of a scene.
pub fn nll_loss(predictions: &PredictionSet, truths: &[TargetTruth]) -> Result<f64> {
    if predictions.targets.len() != truths.len() {
        return Err(Error::Invalid(format!(
            "{} predictions for {} truths",
            predictions.targets.len(),
            truths.len()
        )));
    }
    predictions
        .targets
        .iter()
        .zip(truths)
        .try_fold(0.0, |acc, (p, t)| Ok(acc + target_nll(p, t)?))
}

/// `−log Σ_k P(m_k) N(y; Θ_k at future step `step`)` via log-sum-exp.
pub fn mixture_nll_at(pred: &TargetPrediction, step: usize, y: Point) -> f64 {
    let terms: Vec<f64> = pred
        .trajectories
        .iter()
        .zip(pred.maneuver_probs)
        .filter(|(_, p)| *p > 0.0)
        .map(|(traj, p)| p.ln() + bivariate_log_density(&traj[step], y))
        .collect();
    let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return f64::INFINITY;
    }
    -(max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln())
}

/// RMSE and NLL at the 1…5 s horizons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonMetrics {
    pub rmse: [f64; 5],
    pub nll: [f64; 5],
    pub count: usize,
}

/// Global mean-then-root accumulation over every target of every sample.
#[derive(Debug, Clone, Default)]
pub struct MetricAccumulator {
    squared_error: [f64; 5],
    nll: [f64; 5],
    count: usize,
}

impl MetricAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Adds one target given its point predictions, optional per-horizon
    /// NLL values, and truth.
    pub fn add_raw(&mut self, means: &[Point], nll: [f64; 5], truth: &[Point]) {
        for (h, &frame) in HORIZON_FRAMES.iter().enumerate() {
            let e = means[frame - 1] - truth[frame - 1];
            self.squared_error[h] += e.x * e.x + e.y * e.y;
            self.nll[h] += nll[h];
        }
        self.count += 1;
    }

    /// Scores the argmax-maneuver means for RMSE and the full mixture for NLL.
    pub fn add_target(&mut self, pred: &TargetPrediction, truth: &[Point]) {
        let means = pred.best_means();
        let nll = HORIZON_FRAMES.map(|f| mixture_nll_at(pred, f - 1, truth[f - 1]));
        self.add_raw(&means, nll, truth);
    }

    pub fn merge(&mut self, other: &MetricAccumulator) {
        for h in 0..5 {
            self.squared_error[h] += other.squared_error[h];
            self.nll[h] += other.nll[h];
        }
        self.count += other.count;
    }

    pub fn finish(&self) -> Result<HorizonMetrics> {
        if self.count == 0 {
            return Err(Error::Invalid("no targets to evaluate".into()));
        }
        let n = self.count as f64;
        Ok(HorizonMetrics {
            rmse: self.squared_error.map(|s| (s / n).sqrt()),
            nll: self.nll.map(|s| s / n),
            count: self.count,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Cell;
    use crate::maneuver::{Lateral, Longitudinal};
    use crate::prediction::joint_probabilities;

    fn unit_step(mu: Point, sigma: f64) -> GaussianStep {
        GaussianStep { delta: Point::ZERO, sigma: Point::new(sigma, sigma), rho: 0.0, mu }
    }

    fn single_mode(steps: Vec<GaussianStep>) -> TargetPrediction {
        let mut probs = [0.0; 6];
        probs[0] = 1.0;
        TargetPrediction {
            vehicle_id: 1,
            cell: Cell::new(0, 0),
            last_observed: Point::ZERO,
            lateral_probs: [1.0, 0.0, 0.0],
            longitudinal_probs: [1.0, 0.0],
            maneuver_probs: probs,
            trajectories: vec![steps; 6],
        }
    }

    const KEEP: ManeuverLabel = ManeuverLabel::new(Lateral::Keep, Longitudinal::Normal);

    #[test]
    fn peak_of_standard_density() {
        let y = Point::new(1.0, 2.0);
        let set = PredictionSet { targets: vec![single_mode(vec![unit_step(y, 1.0)])] };
        let loss = nll_loss(&set, &[TargetTruth { future: vec![y], maneuver: KEEP }]).unwrap();
        assert!((loss - (2.0 * PI).ln()).abs() < 1e-12);
        assert!((loss - 1.8379).abs() < 1e-4);
    }

    #[test]
    fn doubling_sigma_adds_log4() {
        let y = Point::new(0.5, 0.5);
        let truth = [TargetTruth { future: vec![y], maneuver: KEEP }];
        let a = nll_loss(&PredictionSet { targets: vec![single_mode(vec![unit_step(y, 1.0)])] }, &truth).unwrap();
        let b = nll_loss(&PredictionSet { targets: vec![single_mode(vec![unit_step(y, 2.0)])] }, &truth).unwrap();
        assert!((b - a - 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn empty_scene_has_zero_loss() {
        assert_eq!(nll_loss(&PredictionSet::default(), &[]).unwrap(), 0.0);
    }

    #[test]
    fn improper_parameters_rejected() {
        let mut s = unit_step(Point::ZERO, 1.0);
        s.rho = 1.0;
        assert!(trajectory_log_likelihood(&[s], &[Point::ZERO]).is_err());
        s.rho = 0.0;
        s.sigma.x = 0.0;
        assert!(trajectory_log_likelihood(&[s], &[Point::ZERO]).is_err());
    }

    #[test]
    fn density_matches_closed_form_with_correlation() {
        let s = GaussianStep { delta: Point::ZERO, sigma: Point::new(2.0, 0.5), rho: 0.6, mu: Point::new(1.0, -1.0) };
        let y = Point::new(2.0, -0.5);
        // Σ = [[4, 0.6], [0.6, 0.25]]
        let (a, b, d) = (4.0, 0.6, 0.25);
        let det: f64 = a * d - b * b;
        let (dx, dy) = (1.0, 0.5);
        let q = (d * dx * dx - 2.0 * b * dx * dy + a * dy * dy) / det;
        let expected = -(2.0 * PI).ln() - 0.5 * det.ln() - 0.5 * q;
        assert!((bivariate_log_density(&s, y) - expected).abs() < 1e-12);
    }

    #[test]
    fn mixture_collapse_and_negligible_mode() {
        let y = Point::new(0.0, 0.0);
        let single = single_mode(vec![unit_step(y, 1.0)]);
        assert!((mixture_nll_at(&single, 0, y) - (2.0 * PI).ln()).abs() < 1e-12);

        let mut twin = single.clone();
        twin.maneuver_probs = [0.5, 0.5, 0.0, 0.0, 0.0, 0.0];
        assert!((mixture_nll_at(&twin, 0, y) - mixture_nll_at(&single, 0, y)).abs() < 1e-12);

        let mut far = single.clone();
        far.maneuver_probs = [1.0 - 1e-9, 1e-9, 0.0, 0.0, 0.0, 0.0];
        far.trajectories[1] = vec![unit_step(Point::new(1e3, 1e3), 1.0)];
        assert!((mixture_nll_at(&far, 0, y) - mixture_nll_at(&single, 0, y)).abs() < 1e-8);
    }

    #[test]
    fn mixture_is_stable_for_extreme_sigma() {
        for sigma in [1e-3, 1.0, 1e3] {
            let mut p = single_mode(vec![unit_step(Point::ZERO, sigma)]);
            p.maneuver_probs = joint_probabilities(&[0.2, 0.3, 0.5], &[0.9, 0.1]);
            let v = mixture_nll_at(&p, 0, Point::new(5.0, -5.0));
            assert!(v.is_finite(), "sigma {sigma}: {v}");
        }
    }

    #[test]
    fn rmse_oracles() {
        let truth = vec![Point::ZERO; 25];
        let mut acc = MetricAccumulator::new();
        let mut means = truth.clone();
        means[24] = Point::new(3.0, 4.0);
        acc.add_raw(&means, [0.0; 5], &truth);
        let m = acc.finish().unwrap();
        assert!((m.rmse[4] - 5.0).abs() < 1e-12);
        assert_eq!(m.rmse[0], 0.0);

        let mut acc = MetricAccumulator::new();
        let mut a = truth.clone();
        a[24] = Point::new(3.0, 0.0);
        let mut b = truth.clone();
        b[24] = Point::new(0.0, 4.0);
        acc.add_raw(&a, [0.0; 5], &truth);
        acc.add_raw(&b, [0.0; 5], &truth);
        assert!((acc.finish().unwrap().rmse[4] - 12.5f64.sqrt()).abs() < 1e-12);

        assert!(MetricAccumulator::new().finish().is_err());
    }
}
