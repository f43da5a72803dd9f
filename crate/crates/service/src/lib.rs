//! Human-in-the-loop curation service for mnemex: a single-writer engine over
//! the episodic and semantic stores, an append-only audit log with snapshots,
//! and an HTTP/JSON API.

pub mod engine;
pub mod error;
pub mod http;
pub mod llm;
pub mod log;
pub mod state;
pub mod timeline;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

pub use engine::{Engine, EngineBuilder, InsertRequest};
pub use error::{LogError, ServiceError};
pub use http::router;
pub use state::{EventKind, MemoryState, Mutation};
pub use timeline::{NodeStatus, TimelineNode};

pub const DEFAULT_ADDR: &str = "127.0.0.1:7878";
pub const DEFAULT_DATA_DIR: &str = "mnemex-data";

/// `MNEMEX_ADDR`, falling back to [`DEFAULT_ADDR`].
pub fn addr_from_env() -> String {
    std::env::var("MNEMEX_ADDR").unwrap_or_else(|_| DEFAULT_ADDR.to_string())
}

/// `MNEMEX_DATA_DIR`, falling back to [`DEFAULT_DATA_DIR`].
pub fn data_dir_from_env() -> PathBuf {
    std::env::var_os("MNEMEX_DATA_DIR").map_or_else(|| PathBuf::from(DEFAULT_DATA_DIR), PathBuf::from)
}

/// Binds `addr` and serves until `shutdown` resolves.
pub async fn serve_until(
    addr: &str,
    engine: Arc<Engine>,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    let local: SocketAddr = listener.local_addr()?;
    tracing::info!(%local, "mnemex service listening");
    axum::serve(listener, router(engine)).with_graceful_shutdown(shutdown).await
}

/// Serves until Ctrl-C.
pub async fn serve(addr: &str, engine: Arc<Engine>) -> std::io::Result<()> {
    serve_until(addr, engine, async {
        let _ = tokio::signal::ctrl_c().await;
    })
    .await
}
