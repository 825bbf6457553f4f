#![allow(dead_code)]

use candle_core::DType;
use pip_core::dataset::{DatasetLoader, SyntheticYieldLoader};
use pip_core::grid::Cell;
use pip_core::sample::{SampleConfig, SceneSample};
use pip_core::Point;
use pip_model::{variant_registry, ModelConfig, PipNetwork};

pub fn yield_samples(seed: u64, count: usize) -> Vec<SceneSample> {
    SyntheticYieldLoader.samples(&format!("seed={seed},count={count}"), &SampleConfig::default()).unwrap().0
}

pub fn network(variant: &str, config: ModelConfig, seed: u64, dtype: DType) -> PipNetwork {
    PipNetwork::new(config, variant_registry().get(variant).unwrap().as_ref(), seed, dtype).unwrap()
}

/// A yield scene with a third target: a copy of the follower one lane over.
pub fn three_target_sample() -> SceneSample {
    let mut s = yield_samples(3, 1).remove(0);
    let mut extra = s.targets[0].clone();
    let shift = Point::new(-4.0, -3.7);
    extra.history.vehicle_id = 99;
    extra.future.vehicle_id = 99;
    for p in extra.history.points.iter_mut().chain(extra.future.points.iter_mut()) {
        *p = *p + shift;
    }
    extra.cell = Cell::new(extra.cell.row + 1, extra.cell.col + 1);
    extra.neighbors.clear();
    extra.ego_cell = None;
    s.targets.push(extra);
    s
}

/// A plan that leaves the ego's current position with the given per-step offset.
pub fn straight_plan(sample: &SceneSample, step: Point) -> Vec<Point> {
    let start = sample.ego_history.last();
    (1..=25).map(|k| start + step * k as f64).collect()
}
