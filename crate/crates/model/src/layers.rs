//! The handful of layers the network is built from.

use candle_core::{Tensor, D};

use crate::error::{contract, Result};
use crate::params::ParamStore;

pub const LEAKY_SLOPE: f64 = 0.1;

pub fn leaky_relu(x: &Tensor) -> Result<Tensor> {
    Ok(x.maximum(&(x * LEAKY_SLOPE)?)?)
}

/// Max over consecutive row pairs of an `(N, H, W, C)` grid. An odd last
/// row is paired with itself.
///
/// Built from `maximum` rather than `max_pool2d`, whose backward pass
/// mis-scales gradients in the candle version in use.
pub fn row_max_pool(x: &Tensor) -> Result<Tensor> {
    let (n, h, w, c) = x.dims4()?;
    let x = if h % 2 == 1 { x.pad_with_same(1, 0, 1)? } else { x.clone() };
    let pairs = x.reshape((n, h.div_ceil(2), 2, w, c))?;
    let a = pairs.narrow(2, 0, 1)?;
    let b = pairs.narrow(2, 1, 1)?;
    Ok(a.maximum(&b)?.squeeze(2)?)
}

/// Nearest-neighbor doubling of the row axis, cropped to `rows`.
pub fn upsample_rows(x: &Tensor, rows: usize) -> Result<Tensor> {
    let (n, h, w, c) = x.dims4()?;
    if rows > 2 * h {
        return contract(format!("cannot upsample {h} rows to {rows}"));
    }
    let up = x.unsqueeze(2)?.broadcast_as((n, h, 2, w, c))?.contiguous()?.reshape((n, 2 * h, w, c))?;
    Ok(up.narrow(1, 0, rows)?)
}

pub struct Linear {
    weight: Tensor,
    bias: Tensor,
}

impl Linear {
    pub fn new(params: &mut ParamStore, name: &str, input: usize, output: usize) -> Result<Self> {
        let bound = 1.0 / (input as f64).sqrt();
        Ok(Self {
            weight: params.uniform(&format!("{name}.weight"), &[output, input], bound)?,
            bias: params.uniform(&format!("{name}.bias"), &[output], bound)?,
        })
    }

    /// `(N, in) -> (N, out)`.
    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        Ok(x.matmul(&self.weight.t()?)?.broadcast_add(&self.bias)?)
    }
}

/// Same-padded temporal convolution over `(N, C, T)`.
///
/// Both convolutions are sums of per-offset matmuls over shifted views:
/// candle's CPU convolution backward goes through a slow transposed
/// convolution. Weights are stored as `(offset, in, out)`.
pub struct TemporalConv {
    weight: Tensor,
    bias: Tensor,
    kernel: usize,
}

fn sum_all(terms: Vec<Tensor>) -> Result<Tensor> {
    let mut it = terms.into_iter();
    let mut acc = it.next().ok_or_else(|| crate::error::ModelError::Contract("empty sum".into()))?;
    for t in it {
        acc = (acc + t)?;
    }
    Ok(acc)
}

impl TemporalConv {
    pub fn new(params: &mut ParamStore, name: &str, input: usize, output: usize, kernel: usize) -> Result<Self> {
        let bound = 1.0 / ((input * kernel) as f64).sqrt();
        Ok(Self {
            weight: params.uniform(&format!("{name}.weight"), &[kernel, input, output], bound)?,
            bias: params.uniform(&format!("{name}.bias"), &[output], bound)?,
            kernel,
        })
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let (n, c, t) = x.dims3()?;
        let k = self.kernel;
        if t < k {
            return contract(format!("sequence of {t} steps is shorter than the kernel ({k})"));
        }
        let rows = x.transpose(1, 2)?.pad_with_zeros(1, k / 2, k - 1 - k / 2)?;
        let terms = (0..k)
            .map(|j| Ok(rows.narrow(1, j, t)?.reshape((n * t, c))?.matmul(&self.weight.get(j)?)?))
            .collect::<Result<Vec<_>>>()?;
        let y = sum_all(terms)?.broadcast_add(&self.bias)?;
        Ok(y.reshape((n, t, ()))?.transpose(1, 2)?)
    }
}

/// 3×3 convolution over a channels-last `(N, H, W, C)` grid.
pub struct Conv3x3 {
    weight: Tensor,
    bias: Tensor,
    padding: usize,
}

impl Conv3x3 {
    pub fn new(params: &mut ParamStore, name: &str, input: usize, output: usize, padding: usize) -> Result<Self> {
        let bound = 1.0 / ((input * 9) as f64).sqrt();
        Ok(Self {
            weight: params.uniform(&format!("{name}.weight"), &[9, input, output], bound)?,
            bias: params.uniform(&format!("{name}.bias"), &[output], bound)?,
            padding,
        })
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let (n, h, w, c) = x.dims4()?;
        let p = self.padding;
        if h + 2 * p < 3 || w + 2 * p < 3 {
            return contract(format!("{h}×{w} input is smaller than the 3×3 kernel"));
        }
        let x = if p > 0 { x.pad_with_zeros(1, p, p)?.pad_with_zeros(2, p, p)? } else { x.clone() };
        let (ho, wo) = (h + 2 * p - 2, w + 2 * p - 2);
        let mut terms = Vec::with_capacity(9);
        for dy in 0..3 {
            for dx in 0..3 {
                let view = x.narrow(1, dy, ho)?.narrow(2, dx, wo)?.reshape((n * ho * wo, c))?;
                terms.push(view.matmul(&self.weight.get(dy * 3 + dx)?)?);
            }
        }
        let y = sum_all(terms)?.broadcast_add(&self.bias)?;
        Ok(y.reshape((n, ho, wo, ()))?)
    }
}

/// Single-layer LSTM with gate order (input, forget, cell, output).
pub struct Lstm {
    w_ih: Tensor,
    w_hh: Tensor,
    bias: Tensor,
    hidden: usize,
}

/// Initial forget-gate bias, so a fresh cell keeps most of its state.
const FORGET_BIAS: f64 = 1.0;

impl Lstm {
    pub fn new(params: &mut ParamStore, name: &str, input: usize, hidden: usize) -> Result<Self> {
        let bound = 1.0 / (hidden as f64).sqrt();
        Ok(Self {
            w_ih: params.uniform(&format!("{name}.w_ih"), &[4 * hidden, input], bound)?,
            w_hh: params.uniform(&format!("{name}.w_hh"), &[4 * hidden, hidden], bound)?,
            bias: params.uniform_offset(&format!("{name}.bias"), &[4 * hidden], bound, |i| {
                if (hidden..2 * hidden).contains(&i) { FORGET_BIAS } else { 0.0 }
            })?,
            hidden,
        })
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    fn step(&self, x_proj: &Tensor, h: &Tensor, c: &Tensor) -> Result<(Tensor, Tensor)> {
        let gates = (x_proj + h.matmul(&self.w_hh.t()?)?)?;
        let hs = self.hidden;
        let i = candle_nn::ops::sigmoid(&gates.narrow(1, 0, hs)?)?;
        let f = candle_nn::ops::sigmoid(&gates.narrow(1, hs, hs)?)?;
        let g = gates.narrow(1, 2 * hs, hs)?.tanh()?;
        let o = candle_nn::ops::sigmoid(&gates.narrow(1, 3 * hs, hs)?)?;
        let c = ((f * c)? + (i * g)?)?;
        let h = (o * c.tanh()?)?;
        Ok((h, c))
    }

    fn zeros(&self, n: usize, like: &Tensor) -> Result<Tensor> {
        Ok(Tensor::zeros((n, self.hidden), like.dtype(), like.device())?)
    }

    /// Final hidden state after consuming `(N, T, in)` front to back.
    pub fn last_hidden(&self, xs: &Tensor) -> Result<Tensor> {
        let (n, t, d) = xs.dims3()?;
        let proj = xs
            .reshape((n * t, d))?
            .matmul(&self.w_ih.t()?)?
            .broadcast_add(&self.bias)?
            .reshape((n, t, 4 * self.hidden))?;
        let mut h = self.zeros(n, xs)?;
        let mut c = h.clone();
        for k in 0..t {
            (h, c) = self.step(&proj.narrow(1, k, 1)?.squeeze(1)?, &h, &c)?;
        }
        Ok(h)
    }

    /// Hidden states `(N, steps, H)` when the same `(N, in)` input is fed at
    /// every step.
    pub fn unroll_constant(&self, x: &Tensor, steps: usize) -> Result<Tensor> {
        let proj = x.matmul(&self.w_ih.t()?)?.broadcast_add(&self.bias)?;
        let mut h = self.zeros(x.dim(0)?, x)?;
        let mut c = h.clone();
        let mut out = Vec::with_capacity(steps);
        for _ in 0..steps {
            (h, c) = self.step(&proj, &h, &c)?;
            out.push(h.clone());
        }
        Ok(Tensor::stack(&out, 1)?)
    }
}

/// `log_softmax` over the last axis.
pub fn log_softmax(x: &Tensor) -> Result<Tensor> {
    Ok(candle_nn::ops::log_softmax(x, D::Minus1)?)
}
