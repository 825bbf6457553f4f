//! Target fusion strategies: how per-target encodings are combined across
//! the ego-centric target area before decoding.

use candle_core::Tensor;

use crate::config::ModelConfig;
use crate::error::{contract, Result};
use crate::layers::{leaky_relu, row_max_pool, upsample_rows, Conv3x3, Linear};
use crate::params::ParamStore;

pub trait TargetFusion: Send + Sync {
    fn name(&self) -> &'static str;

    fn output_dim(&self) -> usize;

    /// `targets` is `(N, C_in)`; `slots` holds each target's flat index
    /// `sample * cells + cell` into a `(num_samples, rows, cols)` grid.
    fn fuse(&self, targets: &Tensor, slots: &Tensor, num_samples: usize) -> Result<Tensor>;
}

/// Writes `(N, C)` rows into the flat slots of a `(G, rows, cols, C)` grid;
/// untouched cells are zero.
pub fn scatter_to_grid(values: &Tensor, slots: &Tensor, groups: usize, rows: usize, cols: usize) -> Result<Tensor> {
    let c = values.dim(1)?;
    let zeros = Tensor::zeros((groups * rows * cols, c), values.dtype(), values.device())?;
    let flat = zeros.index_add(slots, values, 0)?;
    Ok(flat.reshape((groups, rows, cols, c))?)
}

/// Inverse of [`scatter_to_grid`] for the given slots.
pub fn gather_from_grid(grid: &Tensor, slots: &Tensor) -> Result<Tensor> {
    let (g, rows, cols, c) = grid.dims4()?;
    let flat = grid.reshape((g * rows * cols, c))?;
    Ok(flat.index_select(slots, 0)?)
}

/// Symmetric fully-convolutional encoder–decoder over the target grid with
/// two row-halving stages and element-wise-sum skips; the output keeps the
/// input's spatial shape.
pub struct FcnFusion {
    rows: usize,
    cols: usize,
    enc1: Conv3x3,
    enc2: Conv3x3,
    bottleneck: Conv3x3,
    dec2: Conv3x3,
    dec1: Conv3x3,
    out: usize,
}

impl FcnFusion {
    pub fn new(params: &mut ParamStore, input: usize, config: &ModelConfig, rows: usize, cols: usize) -> Result<Self> {
        let [c1, c2] = config.fusion;
        Ok(Self {
            rows,
            cols,
            enc1: Conv3x3::new(params, "fusion.enc1", input, c1, 1)?,
            enc2: Conv3x3::new(params, "fusion.enc2", c1, c2, 1)?,
            bottleneck: Conv3x3::new(params, "fusion.bottleneck", c2, c1, 1)?,
            dec2: Conv3x3::new(params, "fusion.dec2", c1, c2, 1)?,
            dec1: Conv3x3::new(params, "fusion.dec1", c2, c1, 1)?,
            out: c1,
        })
    }

    /// `(G, C_in, rows, cols) -> (G, C_out, rows, cols)`.
    pub fn fuse_grid(&self, grid: &Tensor) -> Result<Tensor> {
        let (_, rows, cols, _) = grid.dims4()?;
        if (rows, cols) != (self.rows, self.cols) {
            return contract(format!("fusion expects a {}×{} grid, got {rows}×{cols}", self.rows, self.cols));
        }
        let e1 = leaky_relu(&self.enc1.forward(grid)?)?;
        let e2 = leaky_relu(&self.enc2.forward(&row_max_pool(&e1)?)?)?;
        let b = leaky_relu(&self.bottleneck.forward(&row_max_pool(&e2)?)?)?;
        let d2 = (leaky_relu(&self.dec2.forward(&upsample_rows(&b, e2.dim(1)?)?)?)? + e2)?;
        let d1 = (leaky_relu(&self.dec1.forward(&upsample_rows(&d2, rows)?)?)? + e1)?;
        Ok(d1)
    }
}

impl TargetFusion for FcnFusion {
    fn name(&self) -> &'static str {
        "fcn"
    }

    fn output_dim(&self) -> usize {
        self.out
    }

    fn fuse(&self, targets: &Tensor, slots: &Tensor, num_samples: usize) -> Result<Tensor> {
        let grid = scatter_to_grid(targets, slots, num_samples, self.rows, self.cols)?;
        gather_from_grid(&self.fuse_grid(&grid)?, slots)
    }
}

/// No cross-target coupling: each encoding is only projected to the
/// decoder's width.
pub struct ProjectionFusion {
    proj: Linear,
    out: usize,
}

impl ProjectionFusion {
    pub fn new(params: &mut ParamStore, input: usize, config: &ModelConfig) -> Result<Self> {
        let out = config.fusion[0];
        Ok(Self { proj: Linear::new(params, "fusion.proj", input, out)?, out })
    }
}

impl TargetFusion for ProjectionFusion {
    fn name(&self) -> &'static str {
        "projection"
    }

    fn output_dim(&self) -> usize {
        self.out
    }

    fn fuse(&self, targets: &Tensor, _slots: &Tensor, _num_samples: usize) -> Result<Tensor> {
        leaky_relu(&self.proj.forward(targets)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use candle_core::{DType, Device};

    fn grid_with(cells: &[(usize, usize, f64)], channels: usize) -> Tensor {
        let mut v = vec![0.0f64; channels * 125];
        for &(r, c, x) in cells {
            for k in 0..channels {
                v[(r * 5 + c) * channels + k] = x + k as f64 * 0.1;
            }
        }
        Tensor::from_vec(v, (1, 25, 5, channels), &Device::Cpu).unwrap()
    }

    fn fcn() -> FcnFusion {
        let mut p = ParamStore::new(3, DType::F64);
        FcnFusion::new(&mut p, 6, &ModelConfig::tiny(), 25, 5).unwrap()
    }

    #[test]
    fn shape_is_preserved_and_zero_input_is_finite() {
        let f = fcn();
        let y = f.fuse_grid(&grid_with(&[], 6)).unwrap();
        assert_eq!(y.dims(), &[1, 25, 5, 4]);
        let v: Vec<f64> = y.flatten_all().unwrap().to_vec1().unwrap();
        assert!(v.iter().all(|x| x.is_finite()));
        assert!(f.fuse_grid(&Tensor::zeros((1, 24, 5, 6), DType::F64, &Device::Cpu).unwrap()).is_err());
    }

    #[test]
    fn neighboring_targets_are_coupled() {
        let f = fcn();
        let at = |g: &Tensor, r: usize, c: usize| -> Vec<f64> {
            g.narrow(1, r, 1).unwrap().narrow(2, c, 1).unwrap().flatten_all().unwrap().to_vec1().unwrap()
        };
        let base = f.fuse_grid(&grid_with(&[(10, 2, 1.0), (13, 1, -0.5)], 6)).unwrap();
        let moved = f.fuse_grid(&grid_with(&[(10, 2, 3.0), (13, 1, -0.5)], 6)).unwrap();
        assert_ne!(at(&base, 13, 1), at(&moved, 13, 1));
    }

    #[test]
    fn scatter_gather_inverse() {
        let values = Tensor::from_vec((0..12).map(f64::from).collect::<Vec<_>>(), (4, 3), &Device::Cpu).unwrap();
        let slots = Tensor::new(&[0u32, 7, 124, 130], &Device::Cpu).unwrap();
        let grid = scatter_to_grid(&values, &slots, 2, 25, 5).unwrap();
        assert_eq!(grid.dims(), &[2, 25, 5, 3]);
        let back = gather_from_grid(&grid, &slots).unwrap();
        assert_eq!(back.to_vec2::<f64>().unwrap(), values.to_vec2::<f64>().unwrap());
    }
}
