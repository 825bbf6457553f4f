mod common;

use candle_core::DType;
use pip_core::Point;
use pip_model::error::ModelError;
use pip_model::train::{train, TrainConfig};
use pip_model::{Decode, ModelConfig, SceneInput};

fn quick(variant: &str, steps: usize) -> TrainConfig {
    TrainConfig {
        variant: variant.into(),
        preset: "tiny".into(),
        batch_size: 4,
        epochs: 100,
        max_steps: Some(steps),
        learning_rate: 3e-3,
        seed: 7,
        ..Default::default()
    }
}

#[test]
fn fixed_seed_gives_identical_loss_curves() {
    let samples = common::yield_samples(30, 12);
    let a = train(&quick("pip", 8), &samples).unwrap();
    let b = train(&quick("pip", 8), &samples).unwrap();
    assert_eq!(a.losses.len(), 8);
    assert_eq!(a.losses, b.losses);
    let c = train(&TrainConfig { seed: 8, ..quick("pip", 8) }, &samples).unwrap();
    assert_ne!(a.losses, c.losses);
}

#[test]
fn every_variant_reduces_its_loss() {
    let samples = common::yield_samples(31, 8);
    for variant in ["pip", "pip-noplan", "pip-nofusion"] {
        let config = TrainConfig { batch_size: 8, ..quick(variant, 60) };
        let out = train(&config, &samples).unwrap();
        let head: f64 = out.losses[..5].iter().sum::<f64>() / 5.0;
        let tail: f64 = out.losses[55..].iter().sum::<f64>() / 5.0;
        assert!(tail < 0.7 * head, "{variant}: {head} -> {tail}");
    }
}

#[test]
fn checkpoints_and_loss_log_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = dir.path().join("model.safetensors");
    let log = dir.path().join("loss.tsv");
    let config = TrainConfig {
        checkpoint: Some(ckpt.clone()),
        checkpoint_every: 2,
        loss_log: Some(log.clone()),
        ..quick("pip-noplan", 5)
    };
    let out = train(&config, &common::yield_samples(32, 8)).unwrap();
    let manifest = pip_model::checkpoint::read_manifest(&ckpt).unwrap();
    assert_eq!(manifest.variant, "pip-noplan");
    assert_eq!(manifest.training.unwrap().steps, 5);
    let lines: Vec<String> = std::fs::read_to_string(&log).unwrap().lines().map(String::from).collect();
    assert_eq!(lines.len(), 5);
    let last: f64 = lines[4].split('\t').nth(1).unwrap().parse().unwrap();
    assert_eq!(last, out.losses[4]);
    assert!(!dir.path().join("model.partial").exists());
}

#[test]
fn non_finite_loss_stops_training_with_a_dump() {
    let dir = tempfile::tempdir().unwrap();
    let mut samples = common::yield_samples(33, 4);
    for s in &mut samples {
        s.targets[0].future.points[10] = Point::new(f64::NAN, 0.0);
    }
    let config = TrainConfig { dump_dir: Some(dir.path().to_path_buf()), ..quick("pip", 3) };
    match train(&config, &samples) {
        Err(ModelError::NonFinite { step, dump }) => {
            assert_eq!(step, 0);
            assert!(std::path::Path::new(&dump).exists(), "{dump}");
        }
        other => panic!("expected a non-finite error, got {:?}", other.map(|o| o.losses)),
    }
}

#[test]
fn training_needs_targets() {
    let mut samples = common::yield_samples(34, 2);
    samples.iter_mut().for_each(|s| s.targets.clear());
    assert!(train(&quick("pip", 2), &samples).is_err());
}

#[test]
fn mean_reduction_scales_only_the_trajectory_term() {
    use pip_model::loss::{target_nll, training_loss, TrajectoryReduction};
    let samples = common::yield_samples(12, 3);
    let inputs: Vec<SceneInput> = samples.iter().map(|s| SceneInput { sample: s, plan: &s.ego_plan.points }).collect();
    let net = common::network("pip", ModelConfig::tiny(), 3, DType::F64);
    let batch = net.batch(&inputs).unwrap();
    let out = net.forward(&batch, Decode::Truth).unwrap();
    let scalar = |r| training_loss(&out, &batch, r).unwrap().to_scalar::<f64>().unwrap();
    // Oracle: class term c = -log P(m) per target; trajectory term = nll - c.
    let nll: Vec<f64> = target_nll(&out, &batch).unwrap().to_vec1().unwrap();
    let pick = |lp: &candle_core::Tensor, idx: &candle_core::Tensor| -> Vec<f64> {
        lp.gather(&idx.unsqueeze(1).unwrap(), 1).unwrap().squeeze(1).unwrap().to_vec1().unwrap()
    };
    let lat = pick(&out.lateral_log_probs, &batch.lateral);
    let lon = pick(&out.longitudinal_log_probs, &batch.longitudinal);
    let weights: Vec<f64> = batch.weights.to_vec1().unwrap();
    let expected: f64 = (0..nll.len())
        .map(|i| {
            let class = -(lat[i] + lon[i]);
            weights[i] * ((nll[i] - class) / 25.0 + class)
        })
        .sum();
    assert!((scalar(TrajectoryReduction::Mean) - expected).abs() < 1e-9 * expected.abs().max(1.0));
    let sum: f64 = nll.iter().zip(&weights).map(|(n, w)| n * w).sum();
    assert!((scalar(TrajectoryReduction::Sum) - sum).abs() < 1e-9 * sum.abs().max(1.0));
}
