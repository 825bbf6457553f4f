//! Recording readers, selectable by dataset name.

mod csv_util;
pub mod highd;
pub mod ngsim;
pub mod synthetic;

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use crate::error::{Error, Result};
use crate::maneuver::LaneConvention;
use crate::resample::resample;
use crate::sample::{build_sample_at, build_samples_all, SampleConfig, SampleRef, SceneSample, SkipReport};
use crate::track::{TrackIndex, TrackTable, VehicleId};

pub use highd::{load_highd, load_highd_recording};
pub use ngsim::load_ngsim;

/// Turns a dataset source string into raw recordings.
pub trait DatasetLoader: Send + Sync {
    fn name(&self) -> &'static str;

    /// All recordings named by `source` (a path or a parameter string).
    fn load(&self, source: &str) -> Result<Vec<TrackTable>>;

    fn lane_convention(&self) -> LaneConvention {
        LaneConvention::default()
    }

    /// `config` with this dataset's lane convention applied.
    fn sample_config(&self, config: &SampleConfig) -> SampleConfig {
        let mut config = *config;
        config.labels.lanes = self.lane_convention();
        config
    }

    /// Resamples to 5 Hz and cuts every ego-centric sample.
    fn samples(&self, source: &str, config: &SampleConfig) -> Result<(Vec<SceneSample>, SkipReport)> {
        let tables = self.load(source)?.iter().map(|t| resample(t, 5)).collect::<Result<Vec<_>>>()?;
        build_samples_all(&tables, &self.sample_config(config))
    }
}

/// A manifest sample plus the lane context needed to draw it.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedScene {
    pub sample: SceneSample,
    /// Lane id at the current frame of every vehicle in the sample.
    pub lanes: BTreeMap<VehicleId, i32>,
    /// Median lateral position per lane id over the recording.
    pub lane_centers: BTreeMap<i32, f64>,
}

/// Rebuilds the scenes named by manifest references, in reference order.
/// Each `(dataset, source)` pair is loaded once.
pub fn resolve_scenes(
    loaders: &crate::registry::Registry<dyn DatasetLoader>,
    refs: &[SampleRef],
    config: &SampleConfig,
) -> Result<Vec<ResolvedScene>> {
    type Recordings = HashMap<String, (TrackIndex, BTreeMap<i32, f64>)>;
    let mut cache: HashMap<(String, String), Recordings> = HashMap::new();
    let mut out = Vec::with_capacity(refs.len());
    for r in refs {
        let loader = loaders.get(&r.dataset)?;
        let key = (r.dataset.clone(), r.source.clone());
        if !cache.contains_key(&key) {
            let mut by_id = HashMap::new();
            for table in loader.load(&r.source)? {
                let table = resample(&table, 5)?;
                by_id.insert(table.recording_id.clone(), (TrackIndex::new(&table), table.lane_medians()));
            }
            cache.insert(key.clone(), by_id);
        }
        let (index, lane_centers) = cache[&key]
            .get(&r.recording_id)
            .ok_or_else(|| Error::Data(format!("{}: no recording {}", r.source, r.recording_id)))?;
        let mut report = SkipReport::default();
        let sample = build_sample_at(index, r.ego_id, r.frame, &loader.sample_config(config), &mut report)
            .ok_or_else(|| Error::Data(format!("{} does not resolve to a sample", r.scene_id())))?;
        let ids = std::iter::once(sample.ego_id())
            .chain(sample.targets.iter().map(|t| t.vehicle_id()))
            .chain(sample.targets.iter().flat_map(|t| t.neighbors.iter().map(|n| n.history.vehicle_id)));
        let lanes = ids
            .filter_map(|id| Some((id, index.vehicle(id)?.lane_at(r.frame)?)))
            .collect();
        out.push(ResolvedScene { sample, lanes, lane_centers: lane_centers.clone() });
    }
    Ok(out)
}

/// The samples of [`resolve_scenes`].
pub fn resolve_refs(
    loaders: &crate::registry::Registry<dyn DatasetLoader>,
    refs: &[SampleRef],
    config: &SampleConfig,
) -> Result<Vec<SceneSample>> {
    Ok(resolve_scenes(loaders, refs, config)?.into_iter().map(|s| s.sample).collect())
}

/// A CSV file, or a directory whose `*.csv` files are each one recording.
pub struct NgsimLoader;

impl DatasetLoader for NgsimLoader {
    fn name(&self) -> &'static str {
        "ngsim"
    }

    fn load(&self, source: &str) -> Result<Vec<TrackTable>> {
        let path = Path::new(source);
        if !path.is_dir() {
            return Ok(vec![load_ngsim(path)?]);
        }
        let mut files: Vec<_> = std::fs::read_dir(path)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "csv"))
            .collect();
        files.sort();
        if files.is_empty() {
            return Err(Error::Data(format!("no .csv files in {source}")));
        }
        files.iter().map(|f| load_ngsim(f)).collect()
    }
}

/// A directory holding one or more highD recordings.
pub struct HighdLoader;

impl DatasetLoader for HighdLoader {
    fn name(&self) -> &'static str {
        "highd"
    }

    fn load(&self, source: &str) -> Result<Vec<TrackTable>> {
        let dir = Path::new(source);
        let ids = highd::recording_ids(dir)?;
        if ids.is_empty() {
            return Err(Error::Data(format!("no highD recordings in {source}")));
        }
        ids.iter().map(|id| load_highd_recording(dir, id)).collect()
    }
}

/// Scripted yield scenarios; source is `seed=<n>,count=<n>`.
pub struct SyntheticYieldLoader;

impl DatasetLoader for SyntheticYieldLoader {
    fn name(&self) -> &'static str {
        "synthetic-yield"
    }

    fn load(&self, source: &str) -> Result<Vec<TrackTable>> {
        let (seed, count) = synthetic::parse_source(source)?;
        let cases = synthetic::generate_yield_cases(seed, count, &synthetic::YieldConfig::default())?;
        Ok(cases.into_iter().map(|c| c.table).collect())
    }

    /// One sample per scenario: the scripted ego at the scripted frame.
    fn samples(&self, source: &str, config: &SampleConfig) -> Result<(Vec<SceneSample>, SkipReport)> {
        let config = self.sample_config(config);
        let mut report = SkipReport::default();
        let mut samples = Vec::new();
        for table in self.load(source)? {
            let index = TrackIndex::new(&table);
            let ego: VehicleId = synthetic::EGO_ID;
            match build_sample_at(&index, ego, synthetic::CURRENT_FRAME, &config, &mut report) {
                Some(s) => samples.push(s),
                None => report.vehicles_without_coverage += 1,
            }
        }
        Ok((samples, report))
    }
}
