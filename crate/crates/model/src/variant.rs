//! Named network variants: the full model and its two ablations.

use std::sync::Arc;

use pip_core::registry::Registry;

use crate::config::ModelConfig;
use crate::error::Result;
use crate::fusion::{FcnFusion, ProjectionFusion, TargetFusion};
use crate::params::ParamStore;

pub trait ModelVariant: Send + Sync {
    fn name(&self) -> &'static str;

    /// Whether the planning tensor is part of the social encoding.
    fn uses_plan(&self) -> bool;

    fn build_fusion(
        &self,
        params: &mut ParamStore,
        input: usize,
        config: &ModelConfig,
        grid: (usize, usize),
    ) -> Result<Box<dyn TargetFusion>>;
}

pub struct Pip;
pub struct PipNoPlan;
pub struct PipNoFusion;

fn fcn(params: &mut ParamStore, input: usize, config: &ModelConfig, grid: (usize, usize)) -> Result<Box<dyn TargetFusion>> {
    Ok(Box::new(FcnFusion::new(params, input, config, grid.0, grid.1)?))
}

impl ModelVariant for Pip {
    fn name(&self) -> &'static str {
        "pip"
    }
    fn uses_plan(&self) -> bool {
        true
    }
    fn build_fusion(&self, p: &mut ParamStore, input: usize, c: &ModelConfig, grid: (usize, usize)) -> Result<Box<dyn TargetFusion>> {
        fcn(p, input, c, grid)
    }
}

impl ModelVariant for PipNoPlan {
    fn name(&self) -> &'static str {
        "pip-noplan"
    }
    fn uses_plan(&self) -> bool {
        false
    }
    fn build_fusion(&self, p: &mut ParamStore, input: usize, c: &ModelConfig, grid: (usize, usize)) -> Result<Box<dyn TargetFusion>> {
        fcn(p, input, c, grid)
    }
}

impl ModelVariant for PipNoFusion {
    fn name(&self) -> &'static str {
        "pip-nofusion"
    }
    fn uses_plan(&self) -> bool {
        true
    }
    fn build_fusion(&self, p: &mut ParamStore, input: usize, c: &ModelConfig, _grid: (usize, usize)) -> Result<Box<dyn TargetFusion>> {
        Ok(Box::new(ProjectionFusion::new(p, input, c)?))
    }
}

/// `pip`, `pip-noplan`, `pip-nofusion`.
pub fn variant_registry() -> Registry<dyn ModelVariant> {
    let mut r: Registry<dyn ModelVariant> = Registry::new("model variant");
    for v in [Arc::new(Pip) as Arc<dyn ModelVariant>, Arc::new(PipNoPlan), Arc::new(PipNoFusion)] {
        r.register(v.name(), v);
    }
    r
}
