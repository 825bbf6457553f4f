//! Training configuration and the optimization loop.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use candle_nn::{AdamW, Optimizer, ParamsAdamW};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use pip_core::sample::SceneSample;

use crate::batch::SceneInput;
use crate::checkpoint::{self, TrainingInfo};
use crate::config::ModelConfig;
use crate::error::{ModelError, Result};
use crate::loss::{training_loss, TrajectoryReduction};
use crate::network::{Decode, PipNetwork};
use crate::plan_source::plan_source_registry;
use crate::variant::variant_registry;

/// Flat key-value training configuration (TOML).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Dataset loader name.
    pub dataset: String,
    /// Loader source: a path, or `seed=..,count=..` for synthetic data.
    pub source: String,
    pub split_seed: u64,
    pub variant: String,
    /// Width preset: `standard`, `compact` or `tiny`.
    pub preset: String,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Multiplicative learning-rate decay applied after every epoch.
    pub lr_decay: f64,
    pub epochs: usize,
    /// Stops early after this many optimizer steps.
    pub max_steps: Option<usize>,
    /// Global gradient-norm clip.
    pub grad_clip: f64,
    /// `sum` minimizes the scene NLL as scored; `mean` averages the
    /// trajectory term over the 25 steps.
    pub trajectory_reduction: TrajectoryReduction,
    /// Seeds parameter initialization and batch order.
    pub seed: u64,
    /// Must be `truth`: the recorded ego future is the training plan.
    pub plan_source: String,
    /// Plan source used when this checkpoint is evaluated.
    pub eval_plan_source: String,
    pub checkpoint: Option<PathBuf>,
    /// Steps between intermediate checkpoints; 0 saves only at the end.
    pub checkpoint_every: usize,
    /// Per-step losses are appended here as `step<TAB>loss` lines.
    pub loss_log: Option<PathBuf>,
    /// Where a batch with a non-finite loss is written.
    pub dump_dir: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            dataset: "synthetic-yield".into(),
            source: "seed=0,count=2000".into(),
            split_seed: 0,
            variant: "pip".into(),
            preset: "standard".into(),
            batch_size: 32,
            learning_rate: 1e-3,
            lr_decay: 1.0,
            epochs: 10,
            max_steps: None,
            grad_clip: 10.0,
            trajectory_reduction: TrajectoryReduction::Sum,
            seed: 0,
            plan_source: "truth".into(),
            eval_plan_source: "spline".into(),
            checkpoint: None,
            checkpoint_every: 0,
            loss_log: None,
            dump_dir: None,
        }
    }
}

impl TrainConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| ModelError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.plan_source != "truth" {
            return Err(ModelError::Config(format!(
                "plan_source must be `truth` during training, got `{}`",
                self.plan_source
            )));
        }
        plan_source_registry().get(&self.eval_plan_source)?;
        variant_registry().get(&self.variant)?;
        ModelConfig::preset(&self.preset)?;
        if self.batch_size == 0 {
            return Err(ModelError::Config("batch_size must be positive".into()));
        }
        if !(self.learning_rate > 0.0) || !(self.lr_decay > 0.0) || !(self.grad_clip > 0.0) {
            return Err(ModelError::Config("learning_rate, lr_decay and grad_clip must be positive".into()));
        }
        Ok(())
    }

    pub fn training_info(&self, steps: usize) -> TrainingInfo {
        TrainingInfo {
            dataset: self.dataset.clone(),
            source: self.source.clone(),
            split_seed: self.split_seed,
            seed: self.seed,
            steps,
        }
    }

    pub fn build_network(&self) -> Result<PipNetwork> {
        let variant = variant_registry().get(&self.variant)?;
        PipNetwork::new(ModelConfig::preset(&self.preset)?, variant.as_ref(), self.seed, candle_core::DType::F32)
    }
}

pub struct TrainOutcome {
    pub network: PipNetwork,
    /// Loss after every optimizer step.
    pub losses: Vec<f64>,
}

/// Global L2 norm of all gradients; rescales them in place above `clip`.
fn clip_gradients(network: &PipNetwork, grads: &mut candle_core::backprop::GradStore, clip: f64) -> Result<f64> {
    let mut total = 0.0;
    for (_, var) in network.vars() {
        if let Some(g) = grads.get(var.as_tensor()) {
            total += g.sqr()?.sum_all()?.to_dtype(candle_core::DType::F64)?.to_scalar::<f64>()?;
        }
    }
    let norm = total.sqrt();
    if norm > clip {
        let scale = clip / norm;
        for (_, var) in network.vars() {
            if let Some(g) = grads.remove(var.as_tensor()) {
                grads.insert(var.as_tensor(), (g * scale)?);
            }
        }
    }
    Ok(norm)
}

fn dump_batch(dir: Option<&Path>, step: usize, samples: &[&SceneSample]) -> String {
    let dir = dir.map(Path::to_path_buf).unwrap_or_else(std::env::temp_dir);
    let path = dir.join(format!("nonfinite-batch-step{step}.json"));
    let written = std::fs::create_dir_all(&dir)
        .ok()
        .and_then(|_| serde_json::to_vec_pretty(samples).ok())
        .and_then(|bytes| std::fs::write(&path, bytes).ok());
    match written {
        Some(()) => path.display().to_string(),
        None => format!("(could not write {})", path.display()),
    }
}

/// Trains `network` on the samples that have at least one target.
/// Deterministic for a fixed `config.seed`.
pub fn train_network(network: PipNetwork, config: &TrainConfig, samples: &[SceneSample]) -> Result<TrainOutcome> {
    config.validate()?;
    let usable: Vec<&SceneSample> = samples.iter().filter(|s| !s.targets.is_empty()).collect();
    if usable.is_empty() {
        return Err(ModelError::Config("no training samples with targets".into()));
    }
    let vars = network.vars().iter().map(|(_, v)| v.clone()).collect();
    let mut opt = AdamW::new(vars, ParamsAdamW { lr: config.learning_rate, weight_decay: 0.0, ..Default::default() })?;
    let mut log = match &config.loss_log {
        Some(p) => Some(std::io::BufWriter::new(std::fs::File::create(p)?)),
        None => None,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut order: Vec<usize> = (0..usable.len()).collect();
    let mut losses = Vec::new();
    let max_steps = config.max_steps.unwrap_or(usize::MAX);

    'epochs: for epoch in 0..config.epochs {
        opt.set_learning_rate(config.learning_rate * config.lr_decay.powi(epoch as i32));
        order.shuffle(&mut rng);
        for chunk in order.chunks(config.batch_size) {
            if losses.len() >= max_steps {
                break 'epochs;
            }
            let batch_samples: Vec<&SceneSample> = chunk.iter().map(|&i| usable[i]).collect();
            let inputs: Vec<SceneInput> =
                batch_samples.iter().map(|s| SceneInput { sample: s, plan: &s.ego_plan.points }).collect();
            let batch = network.batch(&inputs)?;
            let loss = training_loss(&network.forward(&batch, Decode::Truth)?, &batch, config.trajectory_reduction)?;
            let value = loss.to_dtype(candle_core::DType::F64)?.to_scalar::<f64>()?;
            let step = losses.len();
            if !value.is_finite() {
                let dump = dump_batch(config.dump_dir.as_deref(), step, &batch_samples);
                return Err(ModelError::NonFinite { step, dump });
            }
            let mut grads = loss.backward()?;
            clip_gradients(&network, &mut grads, config.grad_clip)?;
            opt.step(&grads)?;
            losses.push(value);
            if let Some(w) = log.as_mut() {
                writeln!(w, "{step}\t{value}")?;
            }
            if let (Some(path), true) = (&config.checkpoint, config.checkpoint_every > 0) {
                if (step + 1) % config.checkpoint_every == 0 {
                    checkpoint::save(&network, Some(&config.training_info(step + 1)), path)?;
                }
            }
        }
        log::info!("epoch {epoch}: last loss {:.4}", losses.last().copied().unwrap_or(f64::NAN));
    }
    if let Some(path) = &config.checkpoint {
        checkpoint::save(&network, Some(&config.training_info(losses.len())), path)?;
    }
    if let Some(mut w) = log {
        w.flush()?;
    }
    Ok(TrainOutcome { network, losses })
}

/// Builds the configured network and trains it.
pub fn train(config: &TrainConfig, samples: &[SceneSample]) -> Result<TrainOutcome> {
    train_network(config.build_network()?, config, samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parses_and_validates() {
        let c = TrainConfig::from_toml("variant = \"pip-noplan\"\nepochs = 2\nbatch_size = 8\n").unwrap();
        assert_eq!(c.variant, "pip-noplan");
        assert_eq!(c.learning_rate, 1e-3);
        assert!(TrainConfig::from_toml("plan_source = \"spline\"").is_err());
        assert!(TrainConfig::from_toml("variant = \"lstm\"").is_err());
        assert!(TrainConfig::from_toml("epochs = 1\nunknown_key = 3").is_err());
        assert_eq!(c.trajectory_reduction, TrajectoryReduction::Sum);
        let mean = TrainConfig::from_toml("trajectory_reduction = \"mean\"").unwrap();
        assert_eq!(mean.trajectory_reduction, TrajectoryReduction::Mean);
        assert!(TrainConfig::from_toml("trajectory_reduction = \"max\"").is_err());
    }
}
