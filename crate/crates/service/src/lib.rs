//! The what-if HTTP service: a read-only scene store, candidate-plan
//! generation and plan-conditioned prediction with collision checks.

pub mod api;
pub mod error;
pub mod routes;
pub mod store;

use std::path::Path;
use std::sync::Arc;

use pip_model::checkpoint::{self, Manifest};
use pip_model::PipNetwork;

pub use error::{ApiError, ApiResult};
pub use routes::router;
pub use store::SceneStore;

/// A checkpoint loaded at startup; never mutated afterwards.
pub struct LoadedModel {
    pub network: PipNetwork,
    pub manifest: Manifest,
    pub checkpoint: String,
}

impl LoadedModel {
    pub fn load(path: &Path) -> pip_model::Result<Self> {
        let (network, manifest) = checkpoint::load(path)?;
        Ok(Self { network, manifest, checkpoint: path.display().to_string() })
    }

    pub fn from_network(network: PipNetwork, checkpoint: &str) -> Self {
        let manifest = checkpoint::manifest_of(&network, None);
        Self { network, manifest, checkpoint: checkpoint.to_string() }
    }
}

#[derive(Clone)]
pub struct AppState {
    pub scenes: Arc<SceneStore>,
    pub model: Option<Arc<LoadedModel>>,
}

impl AppState {
    pub fn new(scenes: SceneStore, model: Option<LoadedModel>) -> Self {
        Self { scenes: Arc::new(scenes), model: model.map(Arc::new) }
    }
}

/// Serves `state` on a bound listener until it fails or ctrl-c.
pub async fn serve_on(listener: tokio::net::TcpListener, state: AppState) -> std::io::Result<()> {
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
