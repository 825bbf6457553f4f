//! Read-only scene snapshot built from a sample manifest.

use std::collections::HashMap;
use std::io::BufReader;
use std::path::Path;

use pip_core::dataset::{resolve_scenes, DatasetLoader, ResolvedScene};
use pip_core::registry::Registry;
use pip_core::sample::{read_manifest, SampleConfig, SampleRef};

pub struct StoredScene {
    pub id: String,
    pub dataset: String,
    pub scene: ResolvedScene,
}

/// Scenes in manifest order, addressable by scene id.
#[derive(Default)]
pub struct SceneStore {
    scenes: Vec<StoredScene>,
    by_id: HashMap<String, usize>,
}

impl SceneStore {
    /// Later duplicates of a scene id are dropped.
    pub fn new(scenes: impl IntoIterator<Item = (String, ResolvedScene)>) -> Self {
        let mut store = Self::default();
        for (dataset, scene) in scenes {
            let id = scene.sample.sample_ref(&dataset, "").scene_id();
            if store.by_id.contains_key(&id) {
                log::warn!("duplicate scene {id} ignored");
                continue;
            }
            store.by_id.insert(id.clone(), store.scenes.len());
            store.scenes.push(StoredScene { id, dataset, scene });
        }
        store
    }

    pub fn from_refs(
        loaders: &Registry<dyn DatasetLoader>,
        refs: &[SampleRef],
        config: &SampleConfig,
    ) -> pip_core::Result<Self> {
        let scenes = resolve_scenes(loaders, refs, config)?;
        Ok(Self::new(refs.iter().map(|r| r.dataset.clone()).zip(scenes)))
    }

    pub fn from_manifest(loaders: &Registry<dyn DatasetLoader>, path: &Path) -> pip_core::Result<Self> {
        let refs = read_manifest(BufReader::new(std::fs::File::open(path)?))?;
        Self::from_refs(loaders, &refs, &SampleConfig::default())
    }

    pub fn len(&self) -> usize {
        self.scenes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenes.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&StoredScene> {
        self.by_id.get(id).map(|&i| &self.scenes[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = &StoredScene> {
        self.scenes.iter()
    }

    pub fn has_dataset(&self, dataset: &str) -> bool {
        self.scenes.iter().any(|s| s.dataset == dataset)
    }
}
