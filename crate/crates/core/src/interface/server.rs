//! Embedded JSON service.
//!
//! | route | |
//! |---|---|
//! | `POST /api/estimate` | one interval or Shoemaker test |
//! | `POST /api/simulate` | coverage table; large runs (or `?async=true`) return `202` and a job id |
//! | `GET /api/jobs/{id}` | job status and results |
//! | `GET /api/optimal-p?dist=..[&step=..]` | `p` minimising the squared IQR ratio ASV |
//! | `GET /api/distributions` | families and parameter schemas |
//!
//! Errors are `{"code", "message"}` with status 400 (invalid request),
//! 422 (method precondition failed on the data) or 404 (unknown job).

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::sync::Semaphore;

use crate::distributions::{families, FamilyInfo, GRAMMAR_HINT};
use crate::error::Error;
use crate::interface::api::{self, EstimateRequest, RequestError};
use crate::simulation::{self, SimCellResult, SimConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServerLimits {
    pub max_trials: u32,
    pub max_cells: usize,
    /// Runs drawing more observations than this become background jobs.
    pub sync_workload: u64,
    pub max_concurrent_jobs: usize,
    pub workers: usize,
}

impl Default for ServerLimits {
    fn default() -> Self {
        ServerLimits {
            max_trials: 100_000,
            max_cells: 256,
            sync_workload: 2_000_000,
            max_concurrent_jobs: 2,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum JobStatus {
    Queued,
    Running,
    Done,
    Failed,
}

#[derive(Debug, Clone, Serialize)]
pub struct ApiError {
    pub code: String,
    pub message: String,
    #[serde(skip)]
    pub status: StatusCode,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError { code: code.into(), message: message.into(), status }
    }

    fn invalid(e: &Error) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, e.code(), e.to_string())
    }
}

impl From<RequestError> for ApiError {
    fn from(e: RequestError) -> Self {
        match e {
            RequestError::Invalid(e) => ApiError::invalid(&e),
            RequestError::Precondition(e) => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.code(), e.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self)).into_response()
    }
}

struct Job {
    status: JobStatus,
    progress: Arc<AtomicU64>,
    total: u64,
    results: Option<Arc<Vec<SimCellResult>>>,
    error: Option<ApiError>,
}

#[derive(Clone)]
pub struct AppState {
    limits: ServerLimits,
    jobs: Arc<Mutex<HashMap<u64, Job>>>,
    next_job: Arc<AtomicU64>,
    permits: Arc<Semaphore>,
}

impl AppState {
    pub fn new(limits: ServerLimits) -> Self {
        AppState {
            limits,
            jobs: Arc::default(),
            next_job: Arc::new(AtomicU64::new(1)),
            permits: Arc::new(Semaphore::new(limits.max_concurrent_jobs.max(1))),
        }
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/estimate", post(estimate))
        .route("/api/simulate", post(simulate))
        .route("/api/jobs/{id}", get(job))
        .route("/api/optimal-p", get(optimal_p))
        .route("/api/distributions", get(distributions))
        .with_state(state)
}

pub async fn serve(addr: &str, limits: ServerLimits) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(AppState::new(limits))).await
}

fn parse_json<T: serde::de::DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "invalid_json", e.to_string()))
}

async fn estimate(body: Bytes) -> Result<Json<api::EstimateOutput>, ApiError> {
    let request: EstimateRequest = parse_json(&body)?;
    Ok(Json(request.run()?))
}

#[derive(Debug, Deserialize)]
struct SimulateQuery {
    #[serde(default, rename = "async")]
    background: bool,
}

#[derive(Serialize)]
struct SimulateDone {
    status: JobStatus,
    results: Arc<Vec<SimCellResult>>,
}

#[derive(Serialize)]
struct JobView {
    job_id: String,
    status: JobStatus,
    completed_trials: u64,
    total_trials: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    results: Option<Arc<Vec<SimCellResult>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<ApiError>,
}

fn run_error(e: Error) -> ApiError {
    match e {
        Error::Config(_) | Error::Parse(_) => ApiError::invalid(&e),
        other => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, other.code(), other.to_string()),
    }
}

async fn run_blocking(
    state: &AppState,
    config: SimConfig,
    progress: Arc<AtomicU64>,
    on_start: impl FnOnce(),
) -> Result<Vec<SimCellResult>, ApiError> {
    let _permit = state.permits.clone().acquire_owned().await.expect("semaphore open");
    on_start();
    let workers = state.limits.workers;
    tokio::task::spawn_blocking(move || simulation::run_table_observed(&config, workers, &progress))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
        .map_err(run_error)
}

async fn simulate(
    State(state): State<AppState>,
    Query(query): Query<SimulateQuery>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let value: serde_json::Value = parse_json(&body)?;
    let config = SimConfig::from_json_value(value).map_err(|e| ApiError::invalid(&e))?;
    if config.trials > state.limits.max_trials {
        return Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            "limit",
            format!("trials {} exceed the server cap of {}", config.trials, state.limits.max_trials),
        ));
    }
    if config.cell_count() > state.limits.max_cells {
        return Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            "limit",
            format!("{} cells exceed the server cap of {}", config.cell_count(), state.limits.max_cells),
        ));
    }
    let progress = Arc::new(AtomicU64::new(0));
    if !query.background && config.workload() <= state.limits.sync_workload {
        let results = run_blocking(&state, config, progress, || {}).await?;
        return Ok(Json(SimulateDone { status: JobStatus::Done, results: Arc::new(results) }).into_response());
    }

    let id = state.next_job.fetch_add(1, Ordering::Relaxed);
    let total = config.trials as u64 * config.sample_sizes.len() as u64;
    state.jobs.lock().expect("job store").insert(
        id,
        Job { status: JobStatus::Queued, progress: progress.clone(), total, results: None, error: None },
    );
    let worker_state = state.clone();
    tokio::spawn(async move {
        let outcome = run_blocking(&worker_state, config, progress, || {
            if let Some(job) = worker_state.jobs.lock().expect("job store").get_mut(&id) {
                job.status = JobStatus::Running;
            }
        })
        .await;
        let mut jobs = worker_state.jobs.lock().expect("job store");
        if let Some(job) = jobs.get_mut(&id) {
            match outcome {
                Ok(results) => {
                    job.status = JobStatus::Done;
                    job.results = Some(Arc::new(results));
                }
                Err(e) => {
                    job.status = JobStatus::Failed;
                    job.error = Some(e);
                }
            }
        }
    });
    let body = serde_json::json!({ "job_id": id.to_string(), "status": "queued" });
    Ok((StatusCode::ACCEPTED, Json(body)).into_response())
}

async fn job(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<JobView>, ApiError> {
    let not_found = || ApiError::new(StatusCode::NOT_FOUND, "not_found", format!("no job '{id}'"));
    let key: u64 = id.parse().map_err(|_| not_found())?;
    let jobs = state.jobs.lock().expect("job store");
    let job = jobs.get(&key).ok_or_else(not_found)?;
    Ok(Json(JobView {
        job_id: id.clone(),
        status: job.status.clone(),
        completed_trials: job.progress.load(Ordering::Relaxed),
        total_trials: job.total,
        results: job.results.clone(),
        error: job.error.clone(),
    }))
}

#[derive(Debug, Deserialize)]
struct OptimalPQuery {
    dist: Option<String>,
    step: Option<f64>,
}

async fn optimal_p(Query(q): Query<OptimalPQuery>) -> Result<Json<api::OptimalPOutput>, ApiError> {
    let dist = q.dist.ok_or_else(|| {
        ApiError::new(StatusCode::BAD_REQUEST, "parse", format!("missing query parameter 'dist': {GRAMMAR_HINT}"))
    })?;
    let step = q.step.unwrap_or(crate::asymptotics::DEFAULT_GRID_STEP);
    let out = tokio::task::spawn_blocking(move || api::optimal_p(&dist, step))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))??;
    Ok(Json(out))
}

#[derive(Serialize)]
struct DistributionsView {
    grammar: &'static str,
    families: Vec<FamilyInfo>,
}

async fn distributions() -> Json<DistributionsView> {
    Json(DistributionsView { grammar: GRAMMAR_HINT, families: families() })
}
