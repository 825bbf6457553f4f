//! Side-by-side evaluation table of the model variants.

use serde::{Deserialize, Serialize};

use pip_core::metrics::HorizonMetrics;
use pip_core::sample::Split;

use crate::checkpoint::Manifest;
use crate::error::{ModelError, Result};

/// Column order of the table.
pub const VARIANT_ORDER: [&str; 3] = ["pip-noplan", "pip-nofusion", "pip"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportColumn {
    pub variant: String,
    pub checkpoint: String,
    pub metrics: HorizonMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub dataset: String,
    pub source: String,
    pub split: Split,
    pub split_seed: u64,
    pub plan_source: String,
    pub columns: Vec<ReportColumn>,
}

/// One evaluated checkpoint.
pub struct ReportEntry {
    pub checkpoint: String,
    pub manifest: Manifest,
    pub metrics: HorizonMetrics,
}

fn rank(variant: &str) -> usize {
    VARIANT_ORDER.iter().position(|v| *v == variant).unwrap_or(VARIANT_ORDER.len())
}

impl EvalReport {
    /// Checks that every checkpoint was trained on the same dataset and split.
    pub fn build(split: Split, plan_source: &str, mut entries: Vec<ReportEntry>) -> Result<Self> {
        let Some(first) = entries.first() else {
            return Err(ModelError::Config("report needs at least one checkpoint".into()));
        };
        let key = |e: &ReportEntry| e.manifest.training.as_ref().map(|t| (t.dataset.clone(), t.source.clone(), t.split_seed));
        let reference = key(first).ok_or_else(|| ModelError::Config(format!("{} has no training record", first.checkpoint)))?;
        for e in &entries {
            if key(e).as_ref() != Some(&reference) {
                return Err(ModelError::Config(format!(
                    "split mismatch: {} was trained on {:?}, {} on {:?}",
                    first.checkpoint,
                    reference,
                    e.checkpoint,
                    key(e)
                )));
            }
        }
        entries.sort_by(|a, b| rank(&a.manifest.variant).cmp(&rank(&b.manifest.variant)).then(a.checkpoint.cmp(&b.checkpoint)));
        let (dataset, source, split_seed) = reference;
        Ok(Self {
            dataset,
            source,
            split,
            split_seed,
            plan_source: plan_source.to_string(),
            columns: entries
                .into_iter()
                .map(|e| ReportColumn { variant: e.manifest.variant, checkpoint: e.checkpoint, metrics: e.metrics })
                .collect(),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Ten metric rows (RMSE then NLL, 1 s to 5 s), one column per variant.
    pub fn to_text(&self) -> String {
        let width = self.columns.iter().map(|c| c.variant.len()).max().unwrap_or(0).max(10);
        let mut out = format!("{:<10}", "Metric");
        for c in &self.columns {
            out.push_str(&format!("  {:>width$}", c.variant));
        }
        out.push('\n');
        for (label, pick) in [("RMSE", 0), ("NLL", 1)] {
            for h in 0..5 {
                out.push_str(&format!("{:<10}", format!("{label} {}s", h + 1)));
                for c in &self.columns {
                    let v = if pick == 0 { c.metrics.rmse[h] } else { c.metrics.nll[h] };
                    out.push_str(&format!("  {v:>width$.2}"));
                }
                out.push('\n');
            }
        }
        out
    }
}
