mod common;

use candle_core::DType;
use pip_core::metrics::HorizonMetrics;
use pip_core::sample::Split;
use pip_model::checkpoint::{manifest_of, TrainingInfo};
use pip_model::report::{EvalReport, ReportEntry};
use pip_model::ModelConfig;

fn entry(variant: &str, source: &str, scale: f64) -> ReportEntry {
    let net = common::network(variant, ModelConfig::tiny(), 0, DType::F32);
    let info = TrainingInfo { dataset: "synthetic-yield".into(), source: source.into(), split_seed: 0, seed: 0, steps: 10 };
    ReportEntry {
        checkpoint: format!("{variant}.safetensors"),
        manifest: manifest_of(&net, Some(&info)),
        metrics: HorizonMetrics { rmse: [1.0, 2.0, 3.0, 4.0, 5.0].map(|x| x * scale), nll: [0.5, 1.0, 1.5, 2.0, 2.5], count: 9 },
    }
}

fn entries() -> Vec<ReportEntry> {
    vec![entry("pip", "seed=0", 0.5), entry("pip-noplan", "seed=0", 1.0), entry("pip-nofusion", "seed=0", 0.8)]
}

#[test]
fn columns_follow_the_variant_order() {
    let report = EvalReport::build(Split::Test, "spline", entries()).unwrap();
    let names: Vec<&str> = report.columns.iter().map(|c| c.variant.as_str()).collect();
    assert_eq!(names, ["pip-noplan", "pip-nofusion", "pip"]);
    let text = report.to_text();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 11);
    assert!(lines[0].starts_with("Metric"));
    assert!(lines[1].starts_with("RMSE 1s") && lines[10].starts_with("NLL 5s"));
    assert!(lines[5].ends_with("2.50"), "{}", lines[5]);
}

#[test]
fn output_is_byte_identical_across_runs() {
    let a = EvalReport::build(Split::Test, "spline", entries()).unwrap();
    let mut shuffled = entries();
    shuffled.reverse();
    let b = EvalReport::build(Split::Test, "spline", shuffled).unwrap();
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    assert_eq!(a.to_text(), b.to_text());
    let back: EvalReport = serde_json::from_str(&a.to_json().unwrap()).unwrap();
    assert_eq!(back, a);
}

#[test]
fn split_mismatch_is_an_error() {
    let mut mixed = entries();
    mixed.push(entry("pip", "seed=1", 0.4));
    let err = EvalReport::build(Split::Test, "spline", mixed).unwrap_err().to_string();
    assert!(err.contains("split mismatch"), "{err}");
    assert!(EvalReport::build(Split::Test, "spline", vec![]).is_err());
}
