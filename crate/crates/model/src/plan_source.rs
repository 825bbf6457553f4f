//! Where the ego plan fed to the network comes from.

use std::sync::Arc;

use pip_core::plan::{downsample_to_knots, fit_waypoints, sample_spline};
use pip_core::registry::Registry;
use pip_core::sample::SceneSample;
use pip_core::Point;

use crate::error::Result;

pub trait PlanSource: Send + Sync {
    fn name(&self) -> &'static str;

    /// 25 road-frame points at 5 Hz after the sample's current frame.
    fn plan(&self, sample: &SceneSample) -> Result<Vec<Point>>;
}

/// The ego's recorded future, as used in training.
pub struct TruthPlan;

impl PlanSource for TruthPlan {
    fn name(&self) -> &'static str {
        "truth"
    }

    fn plan(&self, sample: &SceneSample) -> Result<Vec<Point>> {
        Ok(sample.ego_plan.points.clone())
    }
}

/// The recorded future downsampled to 1 Hz and re-interpolated with a
/// quintic spline, as used in evaluation.
pub struct SplinePlan;

impl PlanSource for SplinePlan {
    fn name(&self) -> &'static str {
        "spline"
    }

    fn plan(&self, sample: &SceneSample) -> Result<Vec<Point>> {
        let knots = downsample_to_knots(sample.ego_history.last(), &sample.ego_plan.points)?;
        Ok(sample_spline(&fit_waypoints(&knots)?, 5))
    }
}

/// `truth` and `spline`.
pub fn plan_source_registry() -> Registry<dyn PlanSource> {
    let mut r: Registry<dyn PlanSource> = Registry::new("plan source");
    for s in [Arc::new(TruthPlan) as Arc<dyn PlanSource>, Arc::new(SplinePlan)] {
        r.register(s.name(), s);
    }
    r
}
