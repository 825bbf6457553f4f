mod common;

use candle_core::DType;
use pip_model::gradcheck::{gradient_check, warm_up};
use pip_model::{ModelConfig, SceneInput};

#[test]
fn analytic_gradients_match_central_differences() {
    let samples = common::yield_samples(21, 1);
    let inputs: Vec<SceneInput> = samples.iter().map(|s| SceneInput { sample: s, plan: &s.ego_plan.points }).collect();
    for variant in ["pip", "pip-nofusion"] {
        let started = std::time::Instant::now();
        let net = common::network(variant, ModelConfig::tiny(), 5, DType::F64);
        let batch = net.batch(&inputs).unwrap();
        let loss = warm_up(&net, &batch, 100, 1e-2).unwrap();
        assert!(loss < 1e3, "{variant}: warm-up left the loss at {loss}");
        let report = gradient_check(&net, &batch, 1e-5, 1e-5).unwrap();
        assert_eq!(report.checked, net.num_parameters());
        eprintln!("{variant}: {} parameters, worst {:.2e} at {}", report.checked, report.worst_relative_error, report.worst);
        assert!(report.worst_relative_error < 1e-3, "{variant}: {report:?}");
        assert!(started.elapsed().as_secs() < 60, "{variant} took {:?}", started.elapsed());
    }
}
