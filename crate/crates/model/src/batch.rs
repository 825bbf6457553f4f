//! Packing scene samples into the index and sequence tensors the network
//! consumes. All trajectories are expressed relative to the current
//! position of the target they belong to.

use candle_core::{DType, Device, Tensor};

use pip_core::grid::{Cell, GridSpec};
use pip_core::sample::{SceneSample, FUTURE_LEN, HISTORY_LEN};
use pip_core::{Point, VehicleId};

use crate::error::{contract, Result};

/// One scene plus the ego plan (25 road-frame points) to condition on.
#[derive(Debug, Clone, Copy)]
pub struct SceneInput<'a> {
    pub sample: &'a SceneSample,
    pub plan: &'a [Point],
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetMeta {
    pub sample: usize,
    pub vehicle_id: VehicleId,
    pub cell: Cell,
    pub last_observed: Point,
}

pub struct Batch {
    pub num_samples: usize,
    pub targets: Vec<TargetMeta>,
    /// `(N_t, 2, 16)` target histories.
    pub central: Tensor,
    /// `(N_n, 2, 16)` neighbor and ego histories with their slots in the
    /// per-target grids.
    pub neighbors: Option<(Tensor, Tensor)>,
    /// `(N_p, 2, 25)` ego plans (front to back) with their slots at the
    /// ego's cell in the per-target grids.
    pub plans: Option<(Tensor, Tensor)>,
    /// `(N_t)` slots of the targets in the per-sample target grids.
    pub target_slots: Tensor,
    /// `(N_t, 25, 2)` true futures, meters.
    pub futures: Tensor,
    pub lateral: Tensor,
    pub longitudinal: Tensor,
    /// `(N_t)` loss weights: mean over a sample's targets, then over samples.
    pub weights: Tensor,
}

/// Channel-major `(2, len)` layout of relative, scaled points.
fn push_sequence(out: &mut Vec<f64>, points: &[Point], center: Point, scale: f64) {
    out.extend(points.iter().map(|p| (p.x - center.x) * scale));
    out.extend(points.iter().map(|p| (p.y - center.y) * scale));
}

fn tensor(values: Vec<f64>, shape: &[usize], dtype: DType) -> Result<Tensor> {
    Ok(Tensor::from_vec(values, shape, &Device::Cpu)?.to_dtype(dtype)?)
}

fn index(values: Vec<u32>) -> Result<Tensor> {
    let n = values.len();
    Ok(Tensor::from_vec(values, n, &Device::Cpu)?)
}

impl Batch {
    pub fn new(inputs: &[SceneInput], grid: &GridSpec, with_plan: bool, scale: f64, dtype: DType) -> Result<Self> {
        let cells = grid.num_cells();
        let (mut central, mut nbr, mut nbr_slots, mut plan, mut plan_slots) = (vec![], vec![], vec![], vec![], vec![]);
        let (mut target_slots, mut futures, mut lat, mut lon, mut weights) = (vec![], vec![], vec![], vec![], vec![]);
        let mut targets = Vec::new();
        let nonempty = inputs.iter().filter(|i| !i.sample.targets.is_empty()).count().max(1);

        for (si, input) in inputs.iter().enumerate() {
            let s = input.sample;
            if with_plan && input.plan.len() != FUTURE_LEN {
                return contract(format!("plan has {} points, expected {FUTURE_LEN}", input.plan.len()));
            }
            if s.ego_history.len() != HISTORY_LEN {
                return contract(format!("ego history has {} points, expected {HISTORY_LEN}", s.ego_history.len()));
            }
            for t in &s.targets {
                let ti = targets.len();
                if t.history.len() != HISTORY_LEN || t.future.len() != FUTURE_LEN {
                    return contract(format!("target {} has malformed segments", t.vehicle_id()));
                }
                let center = t.current();
                push_sequence(&mut central, &t.history.points, center, scale);
                let grid_base = (ti * cells) as u32;
                for n in &t.neighbors {
                    push_sequence(&mut nbr, &n.history.points, center, scale);
                    nbr_slots.push(grid_base + grid.flat(n.cell) as u32);
                }
                match t.ego_cell {
                    Some(cell) => {
                        push_sequence(&mut nbr, &s.ego_history.points, center, scale);
                        nbr_slots.push(grid_base + grid.flat(cell) as u32);
                        if with_plan {
                            push_sequence(&mut plan, input.plan, center, scale);
                            plan_slots.push(grid_base + grid.flat(cell) as u32);
                        }
                    }
                    None if with_plan => {
                        log::debug!("ego outside the neighbor area of target {}; empty planning tensor", t.vehicle_id());
                    }
                    None => {}
                }
                target_slots.push((si * cells + grid.flat(t.cell)) as u32);
                for p in &t.future.points {
                    futures.push(p.x - center.x);
                    futures.push(p.y - center.y);
                }
                lat.push(t.maneuver.lateral.index() as u32);
                lon.push(t.maneuver.longitudinal.index() as u32);
                weights.push(1.0 / (s.targets.len() * nonempty) as f64);
                targets.push(TargetMeta { sample: si, vehicle_id: t.vehicle_id(), cell: t.cell, last_observed: center });
            }
        }

        let nt = targets.len();
        let (nn, np) = (nbr_slots.len(), plan_slots.len());
        Ok(Self {
            num_samples: inputs.len(),
            neighbors: match nn {
                0 => None,
                _ => Some((tensor(nbr, &[nn, 2, HISTORY_LEN], dtype)?, index(nbr_slots)?)),
            },
            plans: match np {
                0 => None,
                _ => Some((tensor(plan, &[np, 2, FUTURE_LEN], dtype)?, index(plan_slots)?)),
            },
            central: tensor(central, &[nt, 2, HISTORY_LEN], dtype)?,
            target_slots: index(target_slots)?,
            futures: tensor(futures, &[nt, FUTURE_LEN, 2], dtype)?,
            lateral: index(lat)?,
            longitudinal: index(lon)?,
            weights: tensor(weights, &[nt], dtype)?,
            targets,
        })
    }

    pub fn num_targets(&self) -> usize {
        self.targets.len()
    }
}
