//! The training objective in tensor form.

use std::f64::consts::PI;

use candle_core::Tensor;
use serde::{Deserialize, Serialize};

use pip_core::metrics::{RHO_LIMIT, SIGMA_FLOOR};
use pip_core::sample::FUTURE_LEN;

use crate::batch::Batch;
use crate::error::{contract, Result};
use crate::network::Output;

/// `(N_t)` negative log-likelihoods `−log P_Θ(Y | m_true) − log P(m_true)`
/// from an output decoded with [`crate::network::Decode::Truth`].
pub fn target_nll(out: &Output, batch: &Batch) -> Result<Tensor> {
    weighted_target_nll(out, batch, 1.0)
}

/// [`target_nll`] with the trajectory log-likelihood scaled by `trajectory_weight`.
pub fn weighted_target_nll(out: &Output, batch: &Batch, trajectory_weight: f64) -> Result<Tensor> {
    let ll = (step_log_density(out, batch)?.sum(1)? * trajectory_weight)?;
    Ok((ll + maneuver_log_prob(out, batch)?)?.neg()?)
}

/// `(N_t, 25)` log densities of the recorded future under the decoded maneuver.
pub fn step_log_density(out: &Output, batch: &Batch) -> Result<Tensor> {
    if out.mu.dim(1)? != 1 {
        return contract("the loss needs exactly one decoded maneuver per target");
    }
    let mu = out.mu.squeeze(1)?;
    let sigma = out.sigma.squeeze(1)?.maximum(SIGMA_FLOOR)?;
    let rho = out.rho.squeeze(1)?.clamp(-RHO_LIMIT, RHO_LIMIT)?;
    let diff = (&batch.futures - mu)?;
    let z = (diff / &sigma)?;
    let zx = z.narrow(2, 0, 1)?.squeeze(2)?;
    let zy = z.narrow(2, 1, 1)?.squeeze(2)?;
    let one_minus = (1.0 - rho.sqr()?)?;
    let quad = ((zx.sqr()? + zy.sqr()?)? - ((&zx * &zy)? * &rho)?.affine(2.0, 0.0)?)?;
    Ok(((sigma.log()?.sum(2)?.neg()? - (2.0 * PI).ln())? - (one_minus.log()? * 0.5)?)?
        .sub(&(quad / one_minus.affine(2.0, 0.0)?)?)?)
}

/// `(N_t)` log probability of the recorded lateral and longitudinal classes.
pub fn maneuver_log_prob(out: &Output, batch: &Batch) -> Result<Tensor> {
    let pick = |lp: &Tensor, idx: &Tensor| -> Result<Tensor> { Ok(lp.gather(&idx.unsqueeze(1)?, 1)?.squeeze(1)?) };
    let lat = pick(&out.lateral_log_probs, &batch.lateral)?;
    let lon = pick(&out.longitudinal_log_probs, &batch.longitudinal)?;
    Ok((lat + lon)?)
}

/// Scalar loss: per-target NLL averaged over each sample's targets, then
/// over the samples of the batch.
pub fn batch_loss(out: &Output, batch: &Batch) -> Result<Tensor> {
    training_loss(out, batch, TrajectoryReduction::Sum)
}

/// How the 25 per-step log densities enter the training objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrajectoryReduction {
    /// The trajectory log likelihood itself.
    #[default]
    Sum,
    /// The per-step average, which weighs the maneuver terms 25 times more.
    Mean,
}

/// [`batch_loss`] under the given reduction.
pub fn training_loss(out: &Output, batch: &Batch, reduction: TrajectoryReduction) -> Result<Tensor> {
    let weight = match reduction {
        TrajectoryReduction::Sum => 1.0,
        TrajectoryReduction::Mean => 1.0 / FUTURE_LEN as f64,
    };
    Ok((weighted_target_nll(out, batch, weight)? * &batch.weights)?.sum_all()?)
}
