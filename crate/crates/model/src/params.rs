//! Named trainable parameters with seeded initialization.

use candle_core::{DType, Device, Tensor, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{contract, Result};

/// Every trainable tensor of a network, in creation order.
pub struct ParamStore {
    dtype: DType,
    device: Device,
    rng: ChaCha8Rng,
    vars: Vec<(String, Var)>,
}

impl ParamStore {
    pub fn new(seed: u64, dtype: DType) -> Self {
        Self { dtype, device: Device::Cpu, rng: ChaCha8Rng::seed_from_u64(seed), vars: Vec::new() }
    }

    pub fn dtype(&self) -> DType {
        self.dtype
    }

    pub fn device(&self) -> &Device {
        &self.device
    }

    /// A new parameter drawn from U(−bound, bound).
    pub fn uniform(&mut self, name: &str, shape: &[usize], bound: f64) -> Result<Tensor> {
        self.uniform_offset(name, shape, bound, |_| 0.0)
    }

    /// Like [`Self::uniform`], with `offset(i)` added to flat element `i`.
    pub fn uniform_offset(&mut self, name: &str, shape: &[usize], bound: f64, offset: impl Fn(usize) -> f64) -> Result<Tensor> {
        if self.vars.iter().any(|(n, _)| n == name) {
            return contract(format!("duplicate parameter {name}"));
        }
        let n: usize = shape.iter().product();
        let values: Vec<f64> = (0..n).map(|i| bound * (2.0 * self.rng.random::<f64>() - 1.0) + offset(i)).collect();
        let t = Tensor::from_vec(values, shape, &self.device)?.to_dtype(self.dtype)?;
        let var = Var::from_tensor(&t)?;
        let out = var.as_tensor().clone();
        self.vars.push((name.to_string(), var));
        Ok(out)
    }

    pub fn vars(&self) -> &[(String, Var)] {
        &self.vars
    }

    pub fn num_scalars(&self) -> usize {
        self.vars.iter().map(|(_, v)| v.elem_count()).sum()
    }
}
