mod common;

use candle_core::{DType, Tensor};
use pip_core::prediction::PredictionSet;
use pip_core::sample::SceneSample;
use pip_core::Point;
use pip_model::params::ParamStore;
use pip_model::{variant_registry, Decode, ModelConfig, PipNetwork, SceneInput};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn predict(net: &PipNetwork, sample: &SceneSample, plan: &[Point]) -> PredictionSet {
    net.predict(&[SceneInput { sample, plan }]).unwrap().remove(0)
}

fn max_abs(t: Tensor) -> f64 {
    t.abs().unwrap().max_all().unwrap().to_dtype(DType::F64).unwrap().to_scalar().unwrap()
}

fn random_plan(rng: &mut ChaCha8Rng, sample: &SceneSample) -> Vec<Point> {
    let step = Point::new(rng.random_range(0.5..6.0), rng.random_range(-0.4..0.4));
    common::straight_plan(sample, step)
}

#[test]
fn plan_encoder_reads_the_sequence_in_order() {
    let net = common::network("pip", ModelConfig::compact(), 1, DType::F64);
    let seq: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin()).collect();
    let forward = Tensor::from_vec(seq, (1, 2, 25), &candle_core::Device::Cpu).unwrap();
    let idx: Vec<u32> = (0..25u32).rev().collect();
    let reversed = forward.index_select(&Tensor::new(idx.as_slice(), &candle_core::Device::Cpu).unwrap(), 2).unwrap();
    let a = net.encode_planning(&forward).unwrap();
    let b = net.encode_planning(&reversed).unwrap();
    assert!(max_abs((a - b).unwrap()) > 1e-6);
}

#[test]
fn planning_changes_pip_predictions() {
    let sample = common::yield_samples(4, 1).remove(0);
    assert!(sample.targets.iter().any(|t| t.ego_cell.is_some()));
    let net = common::network("pip", ModelConfig::compact(), 1, DType::F32);
    let slow = predict(&net, &sample, &common::straight_plan(&sample, Point::new(1.0, 0.0)));
    let fast = predict(&net, &sample, &common::straight_plan(&sample, Point::new(5.0, -0.3)));
    assert_ne!(slow, fast);
}

#[test]
fn no_plan_variant_ignores_the_plan() {
    let sample = common::yield_samples(4, 1).remove(0);
    let net = common::network("pip-noplan", ModelConfig::compact(), 1, DType::F32);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let reference = predict(&net, &sample, &sample.ego_plan.points);
    for _ in 0..10 {
        assert_eq!(predict(&net, &sample, &random_plan(&mut rng, &sample)), reference);
    }
}

#[test]
fn projection_fusion_does_not_mix_targets() {
    let config = ModelConfig::tiny();
    let mut params = ParamStore::new(2, DType::F64);
    let fusion = variant_registry().get("pip-nofusion").unwrap().build_fusion(&mut params, 7, &config, (25, 5)).unwrap();
    let dev = candle_core::Device::Cpu;
    let slots = Tensor::new(&[12u32, 40, 61], &dev).unwrap();
    let base = Tensor::randn(0.0, 1.0, (3, 7), &dev).unwrap();
    let mut perturbed: Vec<Vec<f64>> = base.to_vec2().unwrap();
    perturbed[1] = vec![5.0; 7];
    perturbed[2] = vec![-3.0; 7];
    let perturbed = Tensor::new(perturbed, &dev).unwrap();
    let a = fusion.fuse(&base, &slots, 1).unwrap().get(0).unwrap();
    let b = fusion.fuse(&perturbed, &slots, 1).unwrap().get(0).unwrap();
    assert_eq!(max_abs((a - b).unwrap()), 0.0);

    let mut params = ParamStore::new(2, DType::F64);
    let fcn = variant_registry().get("pip").unwrap().build_fusion(&mut params, 7, &config, (25, 5)).unwrap();
    let a = fcn.fuse(&base, &slots, 1).unwrap().get(0).unwrap();
    let b = fcn.fuse(&perturbed, &slots, 1).unwrap().get(0).unwrap();
    assert!(max_abs((a - b).unwrap()) > 0.0, "slot 12 is within reach of slot 40 for the fcn");
}

#[test]
fn maneuver_conditioning_changes_trajectories() {
    let samples = common::yield_samples(6, 2);
    let net = common::network("pip", ModelConfig::compact(), 3, DType::F64);
    let inputs: Vec<SceneInput> = samples.iter().map(|s| SceneInput { sample: s, plan: &s.ego_plan.points }).collect();
    let out = net.forward(&net.batch(&inputs).unwrap(), Decode::All).unwrap();
    let n = out.mu.dim(0).unwrap();
    assert_eq!(out.mu.dims(), &[n, 6, 25, 2]);
    for i in 0..n {
        for a in 0..6 {
            for b in a + 1..6 {
                let d = max_abs((out.mu.get(i).unwrap().get(a).unwrap() - out.mu.get(i).unwrap().get(b).unwrap()).unwrap());
                assert!(d > 1e-9, "target {i}: maneuvers {a} and {b} decode identically");
            }
        }
    }
}

#[test]
fn one_entry_per_target_with_full_mixtures() {
    let sample = common::three_target_sample();
    for variant in ["pip", "pip-noplan", "pip-nofusion"] {
        let net = common::network(variant, ModelConfig::tiny(), 0, DType::F32);
        let set = predict(&net, &sample, &sample.ego_plan.points);
        assert_eq!(set.targets.len(), 3, "{variant}");
        for (t, entry) in set.targets.iter().zip(&sample.targets) {
            assert_eq!(t.vehicle_id, entry.vehicle_id());
            assert_eq!(t.cell, entry.cell);
            assert_eq!(t.trajectories.len(), 6);
            assert!(t.trajectories.iter().all(|tr| tr.len() == 25));
            assert!((t.maneuver_probs.iter().sum::<f64>() - 1.0).abs() < 1e-6);
            assert!((t.lateral_probs.iter().sum::<f64>() - 1.0).abs() < 1e-6);
            assert!((t.longitudinal_probs.iter().sum::<f64>() - 1.0).abs() < 1e-6);
            let first = &t.trajectories[0][0];
            assert_eq!(first.mu, t.last_observed + first.delta);
        }
    }
}

#[test]
fn seeded_networks_are_deterministic() {
    let sample = common::yield_samples(9, 1).remove(0);
    let a = common::network("pip", ModelConfig::compact(), 11, DType::F32);
    let b = common::network("pip", ModelConfig::compact(), 11, DType::F32);
    let c = common::network("pip", ModelConfig::compact(), 12, DType::F32);
    let plan = &sample.ego_plan.points;
    assert_eq!(predict(&a, &sample, plan), predict(&b, &sample, plan));
    assert_eq!(predict(&a, &sample, plan), predict(&a, &sample, plan));
    assert_ne!(predict(&a, &sample, plan), predict(&c, &sample, plan));
}

#[test]
fn outputs_stay_finite_on_adversarial_scenes() {
    let net = common::network("pip", ModelConfig::compact(), 0, DType::F32);
    let base = common::yield_samples(13, 1).remove(0);

    let mut far = base.clone();
    let offset = Point::new(1.0e5, -2.0e4);
    for p in far.ego_history.points.iter_mut().chain(far.ego_plan.points.iter_mut()) {
        *p = *p + offset;
    }
    for t in &mut far.targets {
        for p in t.history.points.iter_mut().chain(t.future.points.iter_mut()) {
            *p = *p + offset;
        }
        for n in &mut t.neighbors {
            for p in n.history.points.iter_mut() {
                *p = *p + offset;
            }
        }
    }

    let mut parked = base.clone();
    for t in &mut parked.targets {
        let here = t.current();
        t.history.points.iter_mut().for_each(|p| *p = here);
        t.neighbors.clear();
        t.ego_cell = None;
    }

    let mut lone = base.clone();
    lone.targets.truncate(1);

    let mut empty = base.clone();
    empty.targets.clear();

    for (name, sample) in [("far", &far), ("parked", &parked), ("lone", &lone), ("base", &base)] {
        let huge: Vec<Point> = (1..=25).map(|k| sample.ego_history.last() + Point::new(60.0 * k as f64, 0.0)).collect();
        for plan in [&sample.ego_plan.points, &huge] {
            let set = predict(&net, sample, plan);
            assert_eq!(set.targets.len(), sample.targets.len());
            for t in &set.targets {
                assert!(t.maneuver_probs.iter().all(|p| p.is_finite() && *p >= 0.0), "{name}");
                for step in t.trajectories.iter().flatten() {
                    assert!(step.mu.is_finite() && step.sigma.is_finite(), "{name}: {step:?}");
                    assert!(step.sigma.x > 0.0 && step.sigma.y > 0.0 && step.rho.abs() < 1.0, "{name}: {step:?}");
                }
            }
        }
    }
    assert!(predict(&net, &empty, &empty.ego_plan.points).targets.is_empty());
    let far_set = predict(&net, &far, &far.ego_plan.points);
    let base_set = predict(&net, &base, &base.ego_plan.points);
    for (a, b) in far_set.targets.iter().zip(&base_set.targets) {
        for (p, q) in a.maneuver_probs.iter().zip(&b.maneuver_probs) {
            assert!((p - q).abs() < 1e-6, "inputs are translation invariant");
        }
    }
}

#[test]
fn malformed_plans_are_rejected() {
    let sample = common::yield_samples(4, 1).remove(0);
    let net = common::network("pip", ModelConfig::tiny(), 0, DType::F32);
    let short = &sample.ego_plan.points[..24];
    assert!(net.predict(&[SceneInput { sample: &sample, plan: short }]).is_err());
}
