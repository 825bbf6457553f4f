//! Per-horizon RMSE and NLL over a sample set.

use pip_core::metrics::{HorizonMetrics, MetricAccumulator};
use pip_core::prediction::PredictionSet;
use pip_core::sample::{SceneSample, TargetEntry};

use crate::batch::SceneInput;
use crate::error::Result;
use crate::network::PipNetwork;
use crate::plan_source::PlanSource;

pub const EVAL_BATCH: usize = 64;

/// Predictions for every sample with its plan from `plans`.
pub fn predict_samples(network: &PipNetwork, samples: &[SceneSample], plans: &dyn PlanSource) -> Result<Vec<PredictionSet>> {
    let mut out = Vec::with_capacity(samples.len());
    for chunk in samples.chunks(EVAL_BATCH) {
        let plan_points = chunk.iter().map(|s| plans.plan(s)).collect::<Result<Vec<_>>>()?;
        let inputs: Vec<SceneInput> =
            chunk.iter().zip(&plan_points).map(|(sample, plan)| SceneInput { sample, plan }).collect();
        out.extend(network.predict(&inputs)?);
    }
    Ok(out)
}

/// Scores the targets accepted by `keep`: argmax-maneuver means for RMSE,
/// the full mixture for NLL.
pub fn evaluate_filtered(
    network: &PipNetwork,
    samples: &[SceneSample],
    plans: &dyn PlanSource,
    keep: impl Fn(&SceneSample, &TargetEntry) -> bool,
) -> Result<HorizonMetrics> {
    let predictions = predict_samples(network, samples, plans)?;
    let mut acc = MetricAccumulator::new();
    for (sample, set) in samples.iter().zip(&predictions) {
        for (target, pred) in sample.targets.iter().zip(&set.targets) {
            if keep(sample, target) {
                acc.add_target(pred, &target.future.points);
            }
        }
    }
    Ok(acc.finish()?)
}

pub fn evaluate(network: &PipNetwork, samples: &[SceneSample], plans: &dyn PlanSource) -> Result<HorizonMetrics> {
    evaluate_filtered(network, samples, plans, |_, _| true)
}

pub fn evaluate_rmse(network: &PipNetwork, samples: &[SceneSample], plans: &dyn PlanSource) -> Result<[f64; 5]> {
    Ok(evaluate(network, samples, plans)?.rmse)
}

pub fn evaluate_nll(network: &PipNetwork, samples: &[SceneSample], plans: &dyn PlanSource) -> Result<[f64; 5]> {
    Ok(evaluate(network, samples, plans)?.nll)
}
