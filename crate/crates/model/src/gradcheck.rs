//! Central-difference check of the backpropagated training-loss gradient.

use candle_core::Tensor;
use candle_nn::{AdamW, Optimizer, ParamsAdamW};

use crate::batch::Batch;
use crate::error::Result;
use crate::loss::{batch_loss, maneuver_log_prob, step_log_density};
use crate::network::{Decode, PipNetwork};

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheck {
    pub checked: usize,
    pub worst_relative_error: f64,
    /// Parameter and element of the worst error, with both estimates.
    pub worst: String,
}

/// Takes `steps` AdamW steps on `batch` and returns the final loss. A fresh
/// network's loss is O(1e4), where f64 roundoff alone puts ~1e-7 of noise into
/// an ε = 1e-5 central difference; a few steps bring it to O(100).
pub fn warm_up(network: &PipNetwork, batch: &Batch, steps: usize, learning_rate: f64) -> Result<f64> {
    let vars = network.vars().iter().map(|(_, v)| v.clone()).collect();
    let mut opt = AdamW::new(vars, ParamsAdamW { lr: learning_rate, weight_decay: 0.0, ..Default::default() })?;
    let mut last = f64::NAN;
    for _ in 0..steps {
        let loss = batch_loss(&network.forward(batch, Decode::Truth)?, batch)?;
        last = loss.to_dtype(candle_core::DType::F64)?.to_scalar()?;
        opt.backward_step(&loss)?;
    }
    Ok(last)
}

/// The weighted per-step and per-maneuver terms whose sum is [`batch_loss`].
/// Differencing term by term keeps the roundoff of the O(100) total out
/// of the numeric estimate.
fn loss_terms(network: &PipNetwork, batch: &Batch) -> Result<Vec<f64>> {
    let out = network.forward(batch, Decode::Truth)?;
    let w = &batch.weights;
    let steps = step_log_density(&out, batch)?.broadcast_mul(&w.unsqueeze(1)?)?.neg()?;
    let classes = (maneuver_log_prob(&out, batch)? * w)?.neg()?;
    let terms = Tensor::cat(&[steps.flatten_all()?, classes], 0)?;
    Ok(terms.to_dtype(candle_core::DType::F64)?.to_vec1()?)
}

/// Compares every scalar parameter's analytic gradient with
/// `(L(θ+ε) − L(θ−ε)) / 2ε`. The relative error divides by
/// `max(|analytic|, |numeric|, floor)`. Parameters are restored afterwards.
pub fn gradient_check(network: &PipNetwork, batch: &Batch, eps: f64, floor: f64) -> Result<GradCheck> {
    let grads = batch_loss(&network.forward(batch, Decode::Truth)?, batch)?.backward()?;
    let mut report = GradCheck { checked: 0, worst_relative_error: 0.0, worst: String::new() };
    for (name, var) in network.vars() {
        let analytic: Vec<f64> = match grads.get(var.as_tensor()) {
            Some(g) => g.to_dtype(candle_core::DType::F64)?.flatten_all()?.to_vec1()?,
            None => vec![0.0; var.elem_count()],
        };
        let base: Vec<f64> = var.as_tensor().to_dtype(candle_core::DType::F64)?.flatten_all()?.to_vec1()?;
        let set = |values: &[f64]| -> Result<()> {
            let t = Tensor::from_slice(values, var.dims(), var.device())?.to_dtype(var.dtype())?;
            Ok(var.set(&t)?)
        };
        let mut values = base.clone();
        for i in 0..values.len() {
            values[i] = base[i] + eps;
            set(&values)?;
            let up = loss_terms(network, batch)?;
            values[i] = base[i] - eps;
            set(&values)?;
            let down = loss_terms(network, batch)?;
            values[i] = base[i];
            let numeric = up.iter().zip(&down).map(|(u, d)| u - d).sum::<f64>() / (2.0 * eps);
            let rel = (numeric - analytic[i]).abs() / numeric.abs().max(analytic[i].abs()).max(floor);
            if rel > report.worst_relative_error || report.checked == 0 {
                report.worst_relative_error = rel;
                report.worst = format!("{name}[{i}]: analytic {:.6e}, numeric {numeric:.6e}", analytic[i]);
            }
            report.checked += 1;
        }
        set(&base)?;
    }
    Ok(report)
}
