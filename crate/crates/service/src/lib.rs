//! HTTP API over a ranking session, its image corpus and evolved runs.

mod api;
mod corpus;
mod error;
mod runs;
mod session;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use anyhow::Context;
use axum::Router;
use tower_http::services::ServeDir;

pub use api::{AppState, RATER_HEADER};
pub use corpus::{Asset, Corpus};
pub use error::ApiError;
pub use runs::{GridCell, GridView};
pub use session::{OutcomeLine, Progress, ScoreLine, Session};

pub const OUTCOME_LOG: &str = "outcomes.jsonl";
pub const SCORE_LOG: &str = "scores.jsonl";

#[derive(Clone, Debug)]
pub struct ServiceConfig {
    pub host: String,
    pub port: u16,
    /// Image corpus; the outcome and score logs live here too.
    pub corpus: PathBuf,
    /// Directory whose subdirectories are evolution runs.
    pub runs: Option<PathBuf>,
    /// Static UI files served at `/`.
    pub ui: Option<PathBuf>,
    pub rd_threshold: f64,
    /// Seed for pair selection.
    pub seed: u64,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            host: "127.0.0.1".into(),
            port: 8080,
            corpus: PathBuf::from("corpus"),
            runs: None,
            ui: None,
            rd_threshold: qdart_core::ranking::DEFAULT_RD_THRESHOLD,
            seed: 0,
        }
    }
}

/// Loads the corpus and replays the session logs.
pub fn open_state(cfg: &ServiceConfig) -> anyhow::Result<AppState> {
    let corpus = Corpus::load(&cfg.corpus)?;
    let session = Session::open(corpus.ids(), cfg.corpus.join(OUTCOME_LOG), cfg.corpus.join(SCORE_LOG), cfg.rd_threshold, cfg.seed)?;
    Ok(AppState { corpus, runs: cfg.runs.clone(), session: Mutex::new(session) })
}

pub fn router(state: AppState, ui: Option<PathBuf>) -> Router {
    let app = api::routes(Arc::new(state));
    match ui {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app,
    }
}

/// Serves until Ctrl-C. Every write is flushed when it is acknowledged, so
/// shutdown loses nothing.
pub async fn serve(cfg: ServiceConfig) -> anyhow::Result<()> {
    let state = open_state(&cfg)?;
    let images = state.corpus.images.len();
    let addr: SocketAddr =
        format!("{}:{}", cfg.host, cfg.port).parse().with_context(|| format!("invalid address {}:{}", cfg.host, cfg.port))?;
    let listener =
        tokio::net::TcpListener::bind(addr).await.with_context(|| format!("cannot bind {addr} (is the port already in use?)"))?;
    tracing::info!("serving {images} images from {} on http://{addr}", cfg.corpus.display());
    axum::serve(listener, router(state, cfg.ui.clone()))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
            tracing::info!("shutting down");
        })
        .await
        .context("server error")
}
