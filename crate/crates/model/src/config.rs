//! Network widths.

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};

/// Layer widths of one network instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Temporal-convolution embedding channels.
    pub embed: usize,
    /// History and planning LSTM width.
    pub encoder: usize,
    /// Dynamics encoding width.
    pub dynamics: usize,
    /// Decoder LSTM width.
    pub decoder: usize,
    /// Channels after the first and second 3×3 convolution of each social branch.
    pub social: [usize; 2],
    /// Fusion FCN channels at full and half row resolution.
    pub fusion: [usize; 2],
    /// Meters are multiplied by this before the embedding layers.
    pub input_scale: f64,
}

impl ModelConfig {
    pub const fn standard() -> Self {
        Self { embed: 32, encoder: 64, dynamics: 32, decoder: 128, social: [64, 16], fusion: [128, 256], input_scale: 0.1 }
    }

    /// Quarter-cost widths for CPU-bound benchmark runs.
    pub const fn compact() -> Self {
        Self { embed: 16, encoder: 32, dynamics: 16, decoder: 64, social: [32, 8], fusion: [64, 128], input_scale: 0.1 }
    }

    /// Miniature widths for finite-difference gradient checks.
    pub const fn tiny() -> Self {
        Self { embed: 4, encoder: 8, dynamics: 4, decoder: 8, social: [2, 2], fusion: [4, 4], input_scale: 0.1 }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "standard" => Ok(Self::standard()),
            "compact" => Ok(Self::compact()),
            "tiny" => Ok(Self::tiny()),
            other => Err(ModelError::Config(format!("unknown model preset `{other}` (standard, compact, tiny)"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let widths = [self.embed, self.encoder, self.dynamics, self.decoder, self.social[0], self.social[1], self.fusion[0], self.fusion[1]];
        if widths.contains(&0) {
            return Err(ModelError::Config("layer widths must be positive".into()));
        }
        if !(self.input_scale > 0.0 && self.input_scale.is_finite()) {
            return Err(ModelError::Config("input_scale must be positive".into()));
        }
        Ok(())
    }
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self::standard()
    }
}
