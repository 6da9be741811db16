//! HTTP API over qualnet projects.
//!
//! Projects live in memory behind a per-project mutation lock and are saved
//! to `<data_dir>/<id>.qualnet.json` after every change. Reads are served
//! from the last committed snapshot. Pipeline runs are background jobs
//! polled through `GET /jobs/{job}`.

pub mod config;
pub mod error;
pub mod routes;
pub mod state;

use std::sync::Arc;

use axum::extract::{Request, State};
use axum::http::header;
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::Router;
use qualnet_core::provider::Backend;

pub use config::ServiceConfig;
pub use error::{ApiError, ErrorCode};
pub use state::{AppState, Job, JobState};

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error("{0}")]
    Setup(String),
    #[error("bind {addr}: {source}")]
    Bind {
        addr: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

async fn require_token(State(token): State<Arc<String>>, request: Request, next: Next) -> Response {
    let expected = format!("Bearer {token}");
    let ok = request
        .headers()
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v == expected);
    if ok {
        next.run(request).await
    } else {
        ApiError::new(ErrorCode::Unauthorized, "missing or wrong bearer token").into_response()
    }
}

/// The full application: routes plus the optional shared-token check.
pub fn app(state: AppState) -> Router {
    let token = state.config().auth_token.clone();
    let router = routes::router(state);
    match token {
        Some(t) => router.layer(middleware::from_fn_with_state(Arc::new(t), require_token)),
        None => router,
    }
}

/// Builds the state from `config` with the given backend.
pub fn open(config: ServiceConfig, backend: Arc<dyn Backend>) -> Result<AppState, ServeError> {
    AppState::open(config, backend).map_err(|e| ServeError::Setup(e.message))
}

/// Serves until Ctrl-C.
pub async fn serve(config: ServiceConfig) -> Result<(), ServeError> {
    let backend = config
        .provider
        .build()
        .map_err(|e| ServeError::Setup(format!("provider: {e}")))?;
    let addr = config.bind.clone();
    let state = open(config, backend)?;
    let listener = tokio::net::TcpListener::bind(&addr)
        .await
        .map_err(|source| ServeError::Bind { addr: addr.clone(), source })?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, app(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
