use std::sync::{Arc, Mutex, MutexGuard};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, HeaderMap};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use qdart_core::ranking::{MatchResult, RatedImage};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::corpus::Corpus;
use crate::error::ApiError;
use crate::runs::{grid_view, list_runs, plain_name, run_dir};
use crate::session::{Progress, Session};

/// Header naming the rater; writers without it share one identity.
pub const RATER_HEADER: &str = "x-rater-id";
const DEFAULT_RATER: &str = "default";

pub struct AppState {
    pub corpus: Corpus,
    pub runs: Option<std::path::PathBuf>,
    pub session: Mutex<Session>,
}

pub type Shared = Arc<AppState>;

impl AppState {
    fn session(&self) -> MutexGuard<'_, Session> {
        self.session.lock().unwrap_or_else(|p| p.into_inner())
    }
}

pub fn routes(state: Shared) -> Router {
    Router::new()
        .route("/api/pair", get(pair))
        .route("/api/outcome", post(outcome))
        .route("/api/score", post(score))
        .route("/api/ratings", get(ratings))
        .route("/api/image/{file}", get(image))
        .route("/api/runs", get(runs))
        .route("/api/grid/{run_id}", get(grid))
        .route("/api/runs/{run_id}/artifacts/{file}", get(run_artifact))
        .with_state(state)
}

fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::BadRequest(format!("invalid request body: {e}")))
}

fn rater(headers: &HeaderMap) -> String {
    headers.get(RATER_HEADER).and_then(|v| v.to_str().ok()).unwrap_or(DEFAULT_RATER).to_string()
}

#[derive(Serialize)]
struct ImageRef {
    id: String,
    png_url: String,
    svg_url: Option<String>,
}

fn image_ref(corpus: &Corpus, id: &str) -> ImageRef {
    let svg = corpus.images.get(id).and_then(|a| a.svg.as_ref());
    ImageRef { id: id.to_string(), png_url: format!("/api/image/{id}.png"), svg_url: svg.map(|_| format!("/api/image/{id}.svg")) }
}

#[derive(Serialize)]
struct PairResponse {
    a: ImageRef,
    b: ImageRef,
    progress: Progress,
}

async fn pair(State(st): State<Shared>) -> Result<Json<PairResponse>, ApiError> {
    let session = st.session();
    let (a, b) = session.pair()?;
    Ok(Json(PairResponse { a: image_ref(&st.corpus, &a), b: image_ref(&st.corpus, &b), progress: session.progress() }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OutcomeRequest {
    a: String,
    b: String,
    result: MatchResult,
    #[serde(default)]
    token: Option<String>,
}

#[derive(Serialize)]
struct OutcomeResponse {
    recorded: bool,
    a: RatedImage,
    b: RatedImage,
    progress: Progress,
}

async fn outcome(State(st): State<Shared>, headers: HeaderMap, body: Bytes) -> Result<Json<OutcomeResponse>, ApiError> {
    let req: OutcomeRequest = parse(&body)?;
    let mut session = st.session();
    for (field, id) in [("a", &req.a), ("b", &req.b)] {
        if !st.corpus.images.contains_key(id) {
            return Err(ApiError::BadRequest(format!("field `{field}`: unknown image `{id}`")));
        }
    }
    let recorded = session.record(&rater(&headers), req.a.clone(), req.b.clone(), req.result, req.token)?;
    let rating = |id: &str| session.rating(id).expect("validated id");
    Ok(Json(OutcomeResponse { recorded, a: rating(&req.a), b: rating(&req.b), progress: session.progress() }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScoreRequest {
    id: String,
    score: f64,
    #[serde(default)]
    token: Option<String>,
}

async fn score(State(st): State<Shared>, headers: HeaderMap, body: Bytes) -> Result<Json<Value>, ApiError> {
    let req: ScoreRequest = parse(&body)?;
    let mut session = st.session();
    let recorded = session.score(&rater(&headers), req.id.clone(), req.score, req.token)?;
    Ok(Json(json!({ "recorded": recorded, "image": session.rating(&req.id) })))
}

async fn ratings(State(st): State<Shared>) -> Json<Value> {
    let session = st.session();
    Json(json!({ "ratings": session.ratings(), "progress": session.progress() }))
}

fn content_type(ext: &str) -> Option<&'static str> {
    match ext {
        "png" => Some("image/png"),
        "svg" => Some("image/svg+xml"),
        _ => None,
    }
}

async fn send_file(path: std::path::PathBuf, mime: &'static str) -> Result<Response, ApiError> {
    let bytes = tokio::fs::read(&path).await.map_err(|e| ApiError::Internal(format!("cannot read {}: {e}", path.display())))?;
    Ok(([(header::CONTENT_TYPE, mime)], bytes).into_response())
}

async fn image(State(st): State<Shared>, Path(file): Path<String>) -> Result<Response, ApiError> {
    let not_found = || ApiError::NotFound(format!("unknown image `{file}`"));
    let (id, ext) = file.rsplit_once('.').ok_or_else(not_found)?;
    let mime = content_type(ext).ok_or_else(not_found)?;
    let asset = st.corpus.images.get(id).ok_or_else(not_found)?;
    let path = if ext == "png" { Some(asset.png.clone()) } else { asset.svg.clone() };
    send_file(path.ok_or_else(not_found)?, mime).await
}

async fn runs(State(st): State<Shared>) -> Json<Value> {
    Json(json!({ "runs": list_runs(st.runs.as_deref()) }))
}

async fn grid(State(st): State<Shared>, Path(run_id): Path<String>) -> Result<Response, ApiError> {
    let dir = run_dir(st.runs.as_deref(), &run_id)?;
    let view = tokio::task::spawn_blocking(move || grid_view(&dir, &run_id)).await.map_err(|e| ApiError::Internal(e.to_string()))??;
    Ok(Json(view).into_response())
}

async fn run_artifact(State(st): State<Shared>, Path((run_id, file)): Path<(String, String)>) -> Result<Response, ApiError> {
    let dir = run_dir(st.runs.as_deref(), &run_id)?;
    let not_found = || ApiError::NotFound(format!("unknown artifact `{file}` in run `{run_id}`"));
    let mime = file.rsplit_once('.').and_then(|(_, ext)| content_type(ext)).ok_or_else(not_found)?;
    let path = dir.join(qdart_core::qd::ARTIFACT_DIR).join(&file);
    if !plain_name(&file) || !path.is_file() {
        return Err(not_found());
    }
    send_file(path, mime).await
}
