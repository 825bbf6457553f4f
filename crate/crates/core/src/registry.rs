//! Name-keyed registries of interchangeable strategies.

use std::sync::Arc;

use crate::dataset::{DatasetLoader, HighdLoader, NgsimLoader, SyntheticYieldLoader};
use crate::error::{Error, Result};
use crate::plan::{BehaviorMenuPlanner, PlanGenerator};

pub struct Registry<T: ?Sized> {
    kind: &'static str,
    entries: Vec<(&'static str, Arc<T>)>,
}

impl<T: ?Sized> Registry<T> {
    pub fn new(kind: &'static str) -> Self {
        Self { kind, entries: Vec::new() }
    }

    /// Adds or replaces the entry under `name`.
    pub fn register(&mut self, name: &'static str, item: Arc<T>) -> &mut Self {
        self.entries.retain(|(n, _)| *n != name);
        self.entries.push((name, item));
        self
    }

    pub fn get(&self, name: &str) -> Result<Arc<T>> {
        self.entries
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, item)| Arc::clone(item))
            .ok_or_else(|| Error::Unknown {
                kind: self.kind,
                name: name.to_string(),
                known: self.names().join(", "),
            })
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.iter().any(|(n, _)| *n == name)
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|(n, _)| *n).collect()
    }
}

/// `ngsim`, `highd` and `synthetic-yield`.
pub fn dataset_registry() -> Registry<dyn DatasetLoader> {
    let mut r: Registry<dyn DatasetLoader> = Registry::new("dataset");
    for loader in [
        Arc::new(NgsimLoader) as Arc<dyn DatasetLoader>,
        Arc::new(HighdLoader),
        Arc::new(SyntheticYieldLoader),
    ] {
        r.register(loader.name(), loader);
    }
    r
}

/// `mpdm`: the behavior-menu planner.
pub fn plan_generator_registry() -> Registry<dyn PlanGenerator> {
    let mut r: Registry<dyn PlanGenerator> = Registry::new("plan generator");
    let planner: Arc<dyn PlanGenerator> = Arc::new(BehaviorMenuPlanner);
    r.register(planner.name(), planner);
    r
}
