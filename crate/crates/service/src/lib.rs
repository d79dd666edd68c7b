//! HTTP API over a dengue surveillance data directory.
//!
//! Read endpoints serve report payloads computed from an immutable
//! [`Snapshot`]. Mutations are serialized through one writer, persisted, and
//! then published as a fresh snapshot, so readers never see a half-applied
//! change.

mod config;
mod error;
mod routes;

use std::collections::HashMap;
use std::future::Future;
use std::net::SocketAddr;
use std::sync::{Arc, RwLock};

use dengue_core::reports::Snapshot;
use dengue_core::Workspace;
use tokio::net::TcpListener;

pub use config::{ApiConfig, DATA_DIR_ENV};
pub use error::{ApiEnvelope, ApiError, ErrorBody, Status, API_VERSION};
pub use routes::{router, ReviewRequest, VoteRequest, DEFAULT_PAGE_LIMIT};

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("config: {0}")]
    Config(String),
    #[error("refusing to start: {0}")]
    Store(#[from] dengue_core::Error),
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: SocketAddr, source: std::io::Error },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Cached outcome of a mutating request, keyed by its request id.
#[derive(Debug, Clone)]
struct Replay {
    fingerprint: String,
    status: axum::http::StatusCode,
    envelope: ApiEnvelope,
}

#[derive(Debug, Default)]
struct Writer {
    replays: HashMap<String, Replay>,
}

/// Shared service state.
#[derive(Debug)]
pub struct AppState {
    workspace: Workspace,
    snapshot: RwLock<Arc<Snapshot>>,
    writer: tokio::sync::Mutex<Writer>,
    read_only: bool,
}

impl AppState {
    /// Opens the data directory and loads every store. Any unreadable or
    /// corrupt file is an error naming that file.
    pub fn load(config: &ApiConfig) -> Result<Arc<AppState>, ServiceError> {
        let workspace = Workspace::open(&config.data_dir).map_err(dengue_core::Error::from)?;
        let snapshot = Snapshot::load(&workspace)?;
        Ok(Arc::new(AppState {
            workspace,
            snapshot: RwLock::new(Arc::new(snapshot)),
            writer: tokio::sync::Mutex::new(Writer::default()),
            read_only: config.read_only,
        }))
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        self.snapshot.read().expect("snapshot lock poisoned").clone()
    }

    fn publish(&self, next: Snapshot) {
        *self.snapshot.write().expect("snapshot lock poisoned") = Arc::new(next);
    }
}

/// Binds and serves until `shutdown` resolves.
pub async fn serve(config: ApiConfig, shutdown: impl Future<Output = ()> + Send + 'static) -> Result<(), ServiceError> {
    let state = AppState::load(&config)?;
    let listener = TcpListener::bind(config.bind)
        .await
        .map_err(|source| ServiceError::Bind { addr: config.bind, source })?;
    tracing::info!(addr = %listener.local_addr()?, data_dir = %config.data_dir.display(), read_only = config.read_only, "listening");
    axum::serve(listener, router(state, &config)).with_graceful_shutdown(shutdown).await?;
    tracing::info!("stopped");
    Ok(())
}

/// Resolves on Ctrl-C, or SIGTERM on Unix.
pub async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {}
        _ = term => {}
    }
}
