//! The forward pass: trajectory encoders, planning-coupled social pooling,
//! target fusion and maneuver-conditioned Gaussian decoding.

use candle_core::{DType, Device, Tensor, Var};

use pip_core::grid::GridSpec;
use pip_core::maneuver::{ManeuverLabel, NUM_LATERAL, NUM_LONGITUDINAL, NUM_MANEUVERS};
use pip_core::prediction::{joint_probabilities, GaussianStep, PredictionSet, TargetPrediction};
use pip_core::sample::{FUTURE_LEN, HISTORY_LEN};
use pip_core::Point;

use crate::batch::{Batch, SceneInput};
use crate::config::ModelConfig;
use crate::error::{contract, Result};
use crate::fusion::{scatter_to_grid, TargetFusion};
use crate::layers::{leaky_relu, log_softmax, row_max_pool, Conv3x3, Linear, Lstm, TemporalConv};
use crate::params::ParamStore;
use crate::variant::ModelVariant;

/// Two valid 3×3 convolutions then a row-pair max-pool.
struct SocialBranch {
    first: Conv3x3,
    second: Conv3x3,
}

impl SocialBranch {
    fn new(params: &mut ParamStore, name: &str, input: usize, config: &ModelConfig) -> Result<Self> {
        Ok(Self {
            first: Conv3x3::new(params, &format!("{name}.conv1"), input, config.social[0], 0)?,
            second: Conv3x3::new(params, &format!("{name}.conv2"), config.social[0], config.social[1], 0)?,
        })
    }

    fn forward(&self, grid: &Tensor) -> Result<Tensor> {
        let x = leaky_relu(&self.first.forward(grid)?)?;
        let x = leaky_relu(&self.second.forward(&x)?)?;
        row_max_pool(&x)
    }
}

/// Row count after the two valid convolutions and the two row pools.
fn pooled_rows(rows: usize) -> usize {
    (rows - 4).div_ceil(2).div_ceil(2)
}

pub struct PipNetwork {
    config: ModelConfig,
    variant: &'static str,
    uses_plan: bool,
    grid: GridSpec,
    params: ParamStore,
    history_embed: TemporalConv,
    history_lstm: Lstm,
    plan_embed: Option<TemporalConv>,
    plan_lstm: Option<Lstm>,
    observation: SocialBranch,
    planning: Option<SocialBranch>,
    dynamics: Linear,
    fusion: Box<dyn TargetFusion>,
    lateral_head: Linear,
    longitudinal_head: Linear,
    decoder: Lstm,
    output: Linear,
}

/// Which maneuver classes to decode per target.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decode {
    /// Only the labeled class (training).
    Truth,
    /// All six classes in [`ManeuverLabel::index`] order.
    All,
}

/// Raw network outputs for a batch.
pub struct Output {
    /// `(N_t, 3)` and `(N_t, 2)` log-probabilities.
    pub lateral_log_probs: Tensor,
    pub longitudinal_log_probs: Tensor,
    /// `(N_t, M, 25, 2)` displacements, meters.
    pub delta: Tensor,
    /// `(N_t, M, 25, 2)` means relative to the last observed position.
    pub mu: Tensor,
    /// `(N_t, M, 25, 2)` standard deviations.
    pub sigma: Tensor,
    /// `(N_t, M, 25)` correlations.
    pub rho: Tensor,
}

impl PipNetwork {
    pub fn new(config: ModelConfig, variant: &dyn ModelVariant, seed: u64, dtype: DType) -> Result<Self> {
        config.validate()?;
        let grid = GridSpec::default();
        let mut p = ParamStore::new(seed, dtype);
        let uses_plan = variant.uses_plan();
        let history_embed = TemporalConv::new(&mut p, "history.embed", 2, config.embed, 3)?;
        let history_lstm = Lstm::new(&mut p, "history.lstm", config.embed, config.encoder)?;
        let (plan_embed, plan_lstm, planning) = if uses_plan {
            (
                Some(TemporalConv::new(&mut p, "plan.embed", 2, config.embed, 3)?),
                Some(Lstm::new(&mut p, "plan.lstm", config.embed, config.encoder)?),
                Some(SocialBranch::new(&mut p, "social.planning", config.encoder, &config)?),
            )
        } else {
            (None, None, None)
        };
        let observation = SocialBranch::new(&mut p, "social.observation", config.encoder, &config)?;
        let dynamics = Linear::new(&mut p, "dynamics", config.encoder, config.dynamics)?;
        let branches = if uses_plan { 2 } else { 1 };
        let target_dim = branches * config.social[1] * pooled_rows(grid.rows) + config.dynamics;
        let fusion = variant.build_fusion(&mut p, target_dim, &config, (grid.rows, grid.cols))?;
        let fused = fusion.output_dim();
        let lateral_head = Linear::new(&mut p, "head.lateral", fused, NUM_LATERAL)?;
        let longitudinal_head = Linear::new(&mut p, "head.longitudinal", fused, NUM_LONGITUDINAL)?;
        let decoder = Lstm::new(&mut p, "decoder.lstm", fused + NUM_LATERAL + NUM_LONGITUDINAL, config.decoder)?;
        let output = Linear::new(&mut p, "decoder.output", config.decoder, 5)?;
        Ok(Self {
            config,
            variant: variant.name(),
            uses_plan,
            grid,
            params: p,
            history_embed,
            history_lstm,
            plan_embed,
            plan_lstm,
            observation,
            planning,
            dynamics,
            fusion,
            lateral_head,
            longitudinal_head,
            decoder,
            output,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn variant(&self) -> &'static str {
        self.variant
    }

    pub fn uses_plan(&self) -> bool {
        self.uses_plan
    }

    pub fn fusion_name(&self) -> &'static str {
        self.fusion.name()
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn dtype(&self) -> DType {
        self.params.dtype()
    }

    pub fn vars(&self) -> &[(String, Var)] {
        self.params.vars()
    }

    pub fn num_parameters(&self) -> usize {
        self.params.num_scalars()
    }

    pub fn batch(&self, inputs: &[SceneInput]) -> Result<Batch> {
        Batch::new(inputs, &self.grid, self.uses_plan, self.config.input_scale, self.dtype())
    }

    fn embed(conv: &TemporalConv, seq: &Tensor) -> Result<Tensor> {
        Ok(leaky_relu(&conv.forward(seq)?)?.transpose(1, 2)?.contiguous()?)
    }

    /// `(N, 2, 16)` relative histories to `(N, H_enc)` motion encodings.
    pub fn encode_history(&self, seq: &Tensor) -> Result<Tensor> {
        if seq.dim(2)? != HISTORY_LEN {
            return contract(format!("history of {} steps, expected {HISTORY_LEN}", seq.dim(2)?));
        }
        self.history_lstm.last_hidden(&Self::embed(&self.history_embed, seq)?)
    }

    /// `(N, 2, 25)` relative plans, front to back, to `(N, H_enc)`. The LSTM
    /// reads the plan from its last step to its first.
    pub fn encode_planning(&self, seq: &Tensor) -> Result<Tensor> {
        let (Some(embed), Some(lstm)) = (&self.plan_embed, &self.plan_lstm) else {
            return contract(format!("variant {} has no planning encoder", self.variant));
        };
        if seq.dim(2)? != FUTURE_LEN {
            return contract(format!("plan of {} steps, expected {FUTURE_LEN}", seq.dim(2)?));
        }
        let reversed: Vec<u32> = (0..FUTURE_LEN as u32).rev().collect();
        let reversed = Tensor::new(reversed.as_slice(), seq.device())?;
        lstm.last_hidden(&Self::embed(embed, &seq.index_select(&reversed, 2)?)?)
    }

    fn social_tensor(&self, entries: &Option<(Tensor, Tensor)>, encode: impl Fn(&Tensor) -> Result<Tensor>, n: usize) -> Result<Tensor> {
        let (rows, cols) = (self.grid.rows, self.grid.cols);
        match entries {
            Some((seq, slots)) => scatter_to_grid(&encode(seq)?, slots, n, rows, cols),
            None => Ok(Tensor::zeros((n, rows, cols, self.config.encoder), self.dtype(), &Device::Cpu)?),
        }
    }

    /// `(N_t, dim T)` target encodings: merged social encoding and dynamics.
    pub fn target_encodings(&self, batch: &Batch) -> Result<Tensor> {
        let n = batch.num_targets();
        let observation = self.social_tensor(&batch.neighbors, |s| self.encode_history(s), n)?;
        let mut branches = vec![self.observation.forward(&observation)?];
        if let Some(planning) = &self.planning {
            let tensor = self.social_tensor(&batch.plans, |s| self.encode_planning(s), n)?;
            branches.push(planning.forward(&tensor)?);
        }
        let social = row_max_pool(&Tensor::cat(&branches, 3)?)?.flatten_from(1)?;
        let dynamics = leaky_relu(&self.dynamics.forward(&self.encode_history(&batch.central)?)?)?;
        Ok(Tensor::cat(&[social, dynamics], 1)?)
    }

    /// `(N_t, C)` fused target encodings.
    pub fn fused_encodings(&self, batch: &Batch) -> Result<Tensor> {
        let t = self.target_encodings(batch)?;
        self.fusion.fuse(&t, &batch.target_slots, batch.num_samples)
    }

    fn one_hots(&self, labels: &[(u32, u32)]) -> Result<Tensor> {
        let width = NUM_LATERAL + NUM_LONGITUDINAL;
        let mut v = vec![0.0f64; labels.len() * width];
        for (i, &(lat, lon)) in labels.iter().enumerate() {
            v[i * width + lat as usize] = 1.0;
            v[i * width + NUM_LATERAL + lon as usize] = 1.0;
        }
        Ok(Tensor::from_vec(v, (labels.len(), width), &Device::Cpu)?.to_dtype(self.dtype())?)
    }

    pub fn forward(&self, batch: &Batch, decode: Decode) -> Result<Output> {
        let n = batch.num_targets();
        if n == 0 {
            return contract("batch has no targets");
        }
        let fused = self.fused_encodings(batch)?;
        let lateral_log_probs = log_softmax(&self.lateral_head.forward(&fused)?)?;
        let longitudinal_log_probs = log_softmax(&self.longitudinal_head.forward(&fused)?)?;

        let (per_target, inputs, labels) = match decode {
            Decode::Truth => {
                let labels: Vec<_> = batch.lateral.to_vec1::<u32>()?.into_iter().zip(batch.longitudinal.to_vec1::<u32>()?).collect();
                (1, fused, labels)
            }
            Decode::All => {
                let repeat: Vec<u32> = (0..n as u32).flat_map(|i| std::iter::repeat_n(i, NUM_MANEUVERS)).collect();
                let repeat = Tensor::new(repeat.as_slice(), &Device::Cpu)?;
                let labels: Vec<_> = (0..n)
                    .flat_map(|_| ManeuverLabel::all())
                    .map(|m| (m.lateral.index() as u32, m.longitudinal.index() as u32))
                    .collect();
                (NUM_MANEUVERS, fused.index_select(&repeat, 0)?, labels)
            }
        };
        let x = Tensor::cat(&[inputs, self.one_hots(&labels)?], 1)?;
        let rows = labels.len();
        let hidden = self.decoder.unroll_constant(&x, FUTURE_LEN)?;
        let raw = self
            .output
            .forward(&hidden.reshape((rows * FUTURE_LEN, self.config.decoder))?)?
            .reshape((n, per_target, FUTURE_LEN, 5))?;
        // Displacements are emitted in the scaled input units.
        let delta = (raw.narrow(3, 0, 2)? / self.config.input_scale)?;
        let sigma = raw.narrow(3, 2, 2)?.exp()?;
        let rho = raw.narrow(3, 4, 1)?.squeeze(3)?.tanh()?;
        let mu = delta.cumsum(2)?;
        Ok(Output { lateral_log_probs, longitudinal_log_probs, delta, mu, sigma, rho })
    }

    /// Plan-conditioned predictions for every target of every input, in
    /// road-frame meters.
    pub fn predict(&self, inputs: &[SceneInput]) -> Result<Vec<PredictionSet>> {
        let mut sets: Vec<PredictionSet> = inputs.iter().map(|_| PredictionSet::default()).collect();
        let batch = self.batch(inputs)?;
        if batch.num_targets() == 0 {
            return Ok(sets);
        }
        let out = self.forward(&batch, Decode::All)?;
        let f64s = |t: &Tensor| -> Result<Vec<f64>> { Ok(t.to_dtype(DType::F64)?.flatten_all()?.to_vec1()?) };
        let (lat, lon) = (f64s(&out.lateral_log_probs)?, f64s(&out.longitudinal_log_probs)?);
        let (delta, sigma, rho) = (f64s(&out.delta)?, f64s(&out.sigma)?, f64s(&out.rho)?);
        let steps_per_target = NUM_MANEUVERS * FUTURE_LEN;
        for (i, meta) in batch.targets.iter().enumerate() {
            let lateral_probs = normalized(&lat[i * 3..i * 3 + 3]);
            let longitudinal_probs = normalized(&lon[i * 2..i * 2 + 2]);
            let trajectories = (0..NUM_MANEUVERS)
                .map(|m| {
                    let mut steps: Vec<GaussianStep> = (0..FUTURE_LEN)
                        .map(|k| {
                            let j = i * steps_per_target + m * FUTURE_LEN + k;
                            GaussianStep {
                                delta: Point::new(delta[2 * j], delta[2 * j + 1]),
                                sigma: Point::new(sigma[2 * j], sigma[2 * j + 1]),
                                rho: rho[j],
                                mu: Point::ZERO,
                            }
                        })
                        .collect();
                    pip_core::prediction::integrate_displacements(meta.last_observed, &mut steps);
                    steps
                })
                .collect();
            sets[meta.sample].targets.push(TargetPrediction {
                vehicle_id: meta.vehicle_id,
                cell: meta.cell,
                last_observed: meta.last_observed,
                lateral_probs,
                longitudinal_probs,
                maneuver_probs: joint_probabilities(&lateral_probs, &longitudinal_probs),
                trajectories,
            });
        }
        Ok(sets)
    }
}

/// Softmax of log-probabilities, renormalized in f64.
fn normalized<const N: usize>(log_probs: &[f64]) -> [f64; N] {
    let max = log_probs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut p = [0.0; N];
    for (k, lp) in log_probs.iter().enumerate() {
        p[k] = (lp - max).exp();
    }
    let total: f64 = p.iter().sum();
    p.map(|x| x / total)
}
