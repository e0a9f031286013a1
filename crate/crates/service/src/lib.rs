//! HTTP/JSON service over detection runs and ACH matrices.
//!
//! Every route lives under `/api`. Matrix mutations are serialized per
//! matrix and guarded by the matrix revision; storage is a directory of
//! JSON documents written atomically.

mod error;
mod run;
mod store;

use std::collections::{BTreeMap, BTreeSet};
use std::future::Future;
use std::net::{IpAddr, SocketAddr};
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{FromRequest, Path, Query, Request, State};
use axum::http::StatusCode;
use axum::response::IntoResponse;
use axum::routing::{delete, get, post, put};
use axum::{Json, Router};
use cwb_core::ach::{
    evidence_from_detection, inconsistency_score, rank_hypotheses, sensitivity, AchMatrix, ConsistencyRating,
    DetectionDefaults, EvidenceItem, EvidenceSource, GoldenQuestion, Hypothesis, Level, RankedHypothesis, ScoreTable,
};
use cwb_core::metrics::render_table;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub use error::ApiError;
pub use run::{RunPrediction, RunSummary, StoredRun};
pub use store::{check_id, Store};

pub const DEFAULT_PORT: u16 = 8080;
pub const DEFAULT_PAGE_SIZE: usize = 50;
pub const MAX_PAGE_SIZE: usize = 1000;

pub type AppState = Arc<Store>;

/// JSON body extractor whose rejections are 400 [`ApiError`]s.
pub struct Body<T>(pub T);

impl<S, T> FromRequest<S> for Body<T>
where
    Json<T>: FromRequest<S, Rejection = JsonRejection>,
    S: Send + Sync,
{
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        match Json::<T>::from_request(req, state).await {
            Ok(Json(v)) => Ok(Body(v)),
            Err(r) => Err(ApiError::bad_request("malformed_body", r.body_text())),
        }
    }
}

fn query<T>(q: Result<Query<T>, QueryRejection>) -> Result<T, ApiError> {
    q.map(|Query(v)| v).map_err(|r| ApiError::bad_request("malformed_query", r.body_text()))
}

pub fn router(state: AppState) -> Router {
    let api = Router::new()
        .route("/health", get(health))
        .route("/matrices", get(list_matrices).post(create_matrix))
        .route("/matrices/{id}", get(get_matrix))
        .route("/matrices/{id}/hypotheses", post(add_hypothesis))
        .route("/matrices/{id}/evidence", post(add_evidence))
        .route("/matrices/{id}/evidence/{evidence_id}", delete(delete_evidence))
        .route("/matrices/{id}/ratings", put(put_rating))
        .route("/matrices/{id}/score_table", put(put_score_table))
        .route("/matrices/{id}/scores", get(scores))
        .route("/matrices/{id}/sensitivity", get(matrix_sensitivity))
        .route("/runs", get(list_runs))
        .route("/runs/{id}/report", get(run_report))
        .route("/runs/{id}/detections", get(detections))
        .route("/runs/{id}/detections/{sample_id}/promote", post(promote));
    Router::new()
        .nest("/api", api)
        .fallback(|| async { ApiError::not_found("no_route", "no such endpoint") })
        .with_state(state)
}

#[derive(Clone, Debug)]
pub struct ServeConfig {
    pub host: IpAddr,
    pub port: u16,
    pub data_dir: PathBuf,
}

/// Opens storage and binds the listener; fails if the directory is not
/// writable or the port is taken.
pub async fn bind(cfg: &ServeConfig) -> std::io::Result<(tokio::net::TcpListener, AppState)> {
    let store = Store::open(&cfg.data_dir)
        .map_err(|e| std::io::Error::new(e.kind(), format!("data dir {}: {e}", cfg.data_dir.display())))?;
    let listener = tokio::net::TcpListener::bind(SocketAddr::new(cfg.host, cfg.port))
        .await
        .map_err(|e| std::io::Error::new(e.kind(), format!("bind {}:{}: {e}", cfg.host, cfg.port)))?;
    Ok((listener, Arc::new(store)))
}

pub async fn serve(
    listener: tokio::net::TcpListener,
    state: AppState,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(state)).with_graceful_shutdown(shutdown).await
}

async fn health() -> Json<Value> {
    Json(json!({ "status": "ok" }))
}

#[derive(Serialize)]
struct MatrixSummary {
    id: String,
    title: String,
    revision: u64,
    hypotheses: usize,
    evidence: usize,
}

async fn list_matrices(State(store): State<AppState>) -> Result<Json<Vec<MatrixSummary>>, ApiError> {
    let list = store
        .matrices()?
        .into_iter()
        .map(|m| MatrixSummary {
            hypotheses: m.hypotheses.len(),
            evidence: m.evidence.len(),
            id: m.id,
            title: m.title,
            revision: m.revision,
        })
        .collect();
    Ok(Json(list))
}

#[derive(Deserialize)]
struct NewMatrix {
    id: Option<String>,
    #[serde(default)]
    title: String,
}

async fn create_matrix(
    State(store): State<AppState>,
    Body(body): Body<NewMatrix>,
) -> Result<(StatusCode, Json<AchMatrix>), ApiError> {
    let m = store.create_matrix(body.id, body.title).await?;
    Ok((StatusCode::CREATED, Json(m)))
}

async fn get_matrix(State(store): State<AppState>, Path(id): Path<String>) -> Result<Json<AchMatrix>, ApiError> {
    Ok(Json(store.matrix(&id)?))
}

fn next_id<V>(prefix: &str, taken: &BTreeMap<String, V>) -> String {
    (taken.len() + 1..).map(|n| format!("{prefix}{n}")).find(|id| !taken.contains_key(id)).expect("unbounded")
}

#[derive(Deserialize)]
struct NewHypothesis {
    id: Option<String>,
    statement: String,
    revision: Option<u64>,
}

async fn add_hypothesis(
    State(store): State<AppState>,
    Path(id): Path<String>,
    Body(body): Body<NewHypothesis>,
) -> Result<(StatusCode, Json<AchMatrix>), ApiError> {
    if let Some(hid) = &body.id {
        check_id("hypothesis", hid)?;
    }
    let (m, _) = store
        .update_matrix(&id, body.revision, |m| {
            let hid = body.id.unwrap_or_else(|| next_id("H", &m.hypotheses));
            Ok(m.add_hypothesis(Hypothesis { id: hid, statement: body.statement })?)
        })
        .await?;
    Ok((StatusCode::CREATED, Json(m)))
}

fn medium() -> Level {
    Level::Medium
}

#[derive(Deserialize)]
struct NewEvidence {
    id: Option<String>,
    description: String,
    #[serde(default = "medium")]
    credibility: Level,
    #[serde(default = "medium")]
    relevance: Level,
    #[serde(default)]
    question_tags: BTreeSet<GoldenQuestion>,
    revision: Option<u64>,
}

async fn add_evidence(
    State(store): State<AppState>,
    Path(id): Path<String>,
    Body(body): Body<NewEvidence>,
) -> Result<(StatusCode, Json<AchMatrix>), ApiError> {
    if let Some(eid) = &body.id {
        check_id("evidence", eid)?;
    }
    let (m, _) = store
        .update_matrix(&id, body.revision, |m| {
            let item = EvidenceItem {
                id: body.id.unwrap_or_else(|| next_id("E", &m.evidence)),
                description: body.description,
                credibility: body.credibility,
                relevance: body.relevance,
                question_tags: body.question_tags,
                source: EvidenceSource::Manual,
                detection_ref: None,
            };
            Ok(m.add_evidence(item)?)
        })
        .await?;
    Ok((StatusCode::CREATED, Json(m)))
}

#[derive(Deserialize)]
struct RevisionQuery {
    revision: Option<u64>,
}

async fn delete_evidence(
    State(store): State<AppState>,
    Path((id, evidence_id)): Path<(String, String)>,
    q: Result<Query<RevisionQuery>, QueryRejection>,
) -> Result<Json<AchMatrix>, ApiError> {
    let q = query(q)?;
    let (m, _) = store.update_matrix(&id, q.revision, |m| Ok(m.remove_evidence(&evidence_id).map(|_| ())?)).await?;
    Ok(Json(m))
}

#[derive(Deserialize)]
struct RatingUpdate {
    evidence_id: String,
    hypothesis_id: String,
    rating: ConsistencyRating,
    revision: u64,
}

async fn put_rating(
    State(store): State<AppState>,
    Path(id): Path<String>,
    Body(body): Body<RatingUpdate>,
) -> Result<Json<AchMatrix>, ApiError> {
    let (m, _) = store
        .update_matrix(&id, Some(body.revision), |m| {
            Ok(m.set_rating(&body.evidence_id, &body.hypothesis_id, body.rating)?)
        })
        .await?;
    Ok(Json(m))
}

#[derive(Deserialize)]
struct ScoreTableUpdate {
    score_table: ScoreTable,
    revision: u64,
}

async fn put_score_table(
    State(store): State<AppState>,
    Path(id): Path<String>,
    Body(body): Body<ScoreTableUpdate>,
) -> Result<Json<AchMatrix>, ApiError> {
    let (m, _) = store.update_matrix(&id, Some(body.revision), |m| Ok(m.set_score_table(body.score_table)?)).await?;
    Ok(Json(m))
}

#[derive(Serialize, Deserialize, Debug, PartialEq)]
pub struct ScoresResponse {
    pub matrix_id: String,
    pub revision: u64,
    pub score_table: ScoreTable,
    pub raw: BTreeMap<String, f64>,
    pub normalized: BTreeMap<String, f64>,
    pub ranking: Vec<RankedHypothesis>,
}

pub fn scores_for(m: &AchMatrix) -> Result<ScoresResponse, ApiError> {
    let ranking = if m.hypotheses.is_empty() { Vec::new() } else { rank_hypotheses(m)? };
    Ok(ScoresResponse {
        matrix_id: m.id.clone(),
        revision: m.revision,
        score_table: m.score_table,
        raw: ranking.iter().map(|r| (r.id.clone(), r.score)).collect(),
        normalized: ranking.iter().map(|r| (r.id.clone(), r.confidence)).collect(),
        ranking,
    })
}

async fn scores(State(store): State<AppState>, Path(id): Path<String>) -> Result<Json<ScoresResponse>, ApiError> {
    Ok(Json(scores_for(&store.matrix(&id)?)?))
}

#[derive(Deserialize)]
struct SensitivityQuery {
    hypothesis: Option<String>,
}

async fn matrix_sensitivity(
    State(store): State<AppState>,
    Path(id): Path<String>,
    q: Result<Query<SensitivityQuery>, QueryRejection>,
) -> Result<Json<Value>, ApiError> {
    let h = query(q)?.hypothesis.ok_or_else(|| ApiError::bad_request("missing_parameter", "hypothesis is required"))?;
    let m = store.matrix(&id)?;
    let items = sensitivity(&m, &h)?;
    let score = inconsistency_score(&m, &h)?;
    Ok(Json(json!({ "matrix_id": m.id, "revision": m.revision, "hypothesis": h, "score": score, "items": items })))
}

async fn list_runs(State(store): State<AppState>) -> Result<Json<Vec<RunSummary>>, ApiError> {
    Ok(Json(store.runs()?.iter().map(StoredRun::summary).collect()))
}

async fn run_report(State(store): State<AppState>, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    let run = store.run(&id)?;
    let table = render_table(&[(run.model.clone(), run.report.clone())]);
    Ok(Json(json!({
        "run_id": run.id,
        "model": run.model,
        "dataset": run.dataset,
        "created_at": run.created_at,
        "report": run.report,
        "table": table,
    })))
}

#[derive(Deserialize)]
struct DetectionQuery {
    min_score: Option<f64>,
    page: Option<usize>,
    page_size: Option<usize>,
}

#[derive(Serialize, Deserialize, Debug, PartialEq)]
pub struct DetectionPage {
    pub run_id: String,
    pub min_score: f64,
    pub total: usize,
    pub page: usize,
    pub page_size: usize,
    pub items: Vec<RunPrediction>,
}

async fn detections(
    State(store): State<AppState>,
    Path(id): Path<String>,
    q: Result<Query<DetectionQuery>, QueryRejection>,
) -> Result<Json<DetectionPage>, ApiError> {
    let q = query(q)?;
    let min_score = q.min_score.unwrap_or(0.0);
    if !min_score.is_finite() {
        return Err(ApiError::bad_request("invalid", "min_score must be finite"));
    }
    let page = q.page.unwrap_or(1);
    let page_size = q.page_size.unwrap_or(DEFAULT_PAGE_SIZE);
    if page == 0 || page_size == 0 || page_size > MAX_PAGE_SIZE {
        return Err(ApiError::bad_request("invalid", format!("page starts at 1; page_size in 1..={MAX_PAGE_SIZE}")));
    }
    let run = store.run(&id)?;
    let all = run.detections(min_score);
    let items = all.iter().skip((page - 1) * page_size).take(page_size).map(|p| (*p).clone()).collect();
    Ok(Json(DetectionPage { run_id: run.id.clone(), min_score, total: all.len(), page, page_size, items }))
}

#[derive(Deserialize)]
struct PromoteRequest {
    matrix_id: String,
    #[serde(default)]
    participants: Vec<String>,
    credibility: Option<Level>,
    relevance: Option<Level>,
    question_tags: Option<BTreeSet<GoldenQuestion>>,
    revision: Option<u64>,
}

/// Stable evidence id for a promoted detection.
pub fn promoted_evidence_id(run_id: &str, sample_id: &str) -> String {
    format!("det:{run_id}:{sample_id}")
}

async fn promote(
    State(store): State<AppState>,
    Path((run_id, sample_id)): Path<(String, String)>,
    Body(body): Body<PromoteRequest>,
) -> Result<(StatusCode, Json<Value>), ApiError> {
    let run = store.run(&run_id)?;
    if run.prediction(&sample_id).is_none() {
        return Err(ApiError::not_found("unknown_sample", format!("run {run_id:?} has no sample {sample_id:?}")));
    }
    let base = DetectionDefaults::default();
    let defaults = DetectionDefaults {
        credibility: body.credibility.unwrap_or(base.credibility),
        relevance: body.relevance.unwrap_or(base.relevance),
        question_tags: body.question_tags.unwrap_or(base.question_tags),
    };
    let reference = format!("{run_id}/{sample_id}");
    let (m, item) = store
        .update_matrix(&body.matrix_id, body.revision, |m| {
            if m.evidence.values().any(|e| e.detection_ref.as_deref() == Some(reference.as_str())) {
                return Err(ApiError::conflict(
                    "duplicate_promotion",
                    format!("sample {sample_id:?} of run {run_id:?} is already evidence in this matrix"),
                ));
            }
            let id = promoted_evidence_id(&run_id, &sample_id);
            let item = evidence_from_detection(id, &reference, &body.participants, &defaults, |_| true)?;
            m.add_evidence(item.clone())?;
            Ok(item)
        })
        .await?;
    Ok((StatusCode::CREATED, Json(json!({ "evidence": item, "revision": m.revision, "matrix_id": m.id }))))
}

impl IntoResponse for ScoresResponse {
    fn into_response(self) -> axum::response::Response {
        Json(self).into_response()
    }
}
