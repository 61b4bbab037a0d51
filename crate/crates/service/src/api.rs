//! JSON-over-HTTP interface to review sessions.

use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use ontoclean_core::eval::{load_benchmark, EvalError, BENCHMARK_NAMES};
use ontoclean_core::labeler::{
    label_ontology, LabelerError, LlmConfig, LlmError, PromptConfig, PromptStrategy, Representation,
};
use ontoclean_core::{parse_taxonomy, Labeling, MetaProperty, Sign, TaxonomyFormat};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::session::{MergeMode, Session, SessionError, SessionStore};

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<SessionStore>,
    /// Used by label runs that do not carry their own LLM settings.
    pub default_llm: Option<LlmConfig>,
}

impl AppState {
    pub fn new(store: SessionStore, default_llm: Option<LlmConfig>) -> Self {
        Self {
            store: Arc::new(store),
            default_llm,
        }
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/benchmarks", get(benchmarks))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/labels/{class}", put(set_label))
        .route("/sessions/{id}/label-run", post(label_run))
        .route("/sessions/{id}/guidance", post(add_guidance))
        .route("/sessions/{id}/violations", get(violations))
        .route("/sessions/{id}/accuracy", get(accuracy))
        .route("/sessions/{id}/save", post(save))
        .with_state(state)
}

#[derive(Debug)]
pub enum ApiError {
    Session(SessionError),
    Body(String),
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        Self::Session(e)
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        Self::Body(e.body_text())
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error_code: String,
    pub message: String,
}

fn classify(e: &SessionError) -> (StatusCode, &'static str) {
    use SessionError as S;
    match e {
        S::NotFound(_) => (StatusCode::NOT_FOUND, "session_not_found"),
        S::UnknownClass(_) => (StatusCode::NOT_FOUND, "unknown_class"),
        S::IllegalValue(_) => (StatusCode::UNPROCESSABLE_ENTITY, "illegal_value"),
        S::EmptyGuidance => (StatusCode::UNPROCESSABLE_ENTITY, "empty_guidance"),
        S::NoGoldLabels => (StatusCode::CONFLICT, "no_gold_labels"),
        S::Taxonomy(_) => (StatusCode::UNPROCESSABLE_ENTITY, "invalid_taxonomy"),
        S::Labeler(LabelerError::Llm(LlmError::AuthError { .. })) => (StatusCode::BAD_GATEWAY, "llm_auth_error"),
        S::Labeler(LabelerError::Llm(LlmError::RateLimited { .. })) => {
            (StatusCode::SERVICE_UNAVAILABLE, "llm_rate_limited")
        }
        S::Labeler(LabelerError::Llm(LlmError::InvalidConfig(_))) => {
            (StatusCode::UNPROCESSABLE_ENTITY, "invalid_llm_config")
        }
        S::Labeler(LabelerError::Llm(_)) => (StatusCode::BAD_GATEWAY, "llm_error"),
        S::Labeler(LabelerError::EmptyResponse { .. }) => (StatusCode::BAD_GATEWAY, "llm_empty_response"),
        S::Labeler(LabelerError::InvalidPrompt(_)) => (StatusCode::UNPROCESSABLE_ENTITY, "invalid_prompt"),
        S::Benchmark(EvalError::UnknownBenchmark(_)) => (StatusCode::NOT_FOUND, "unknown_benchmark"),
        S::Benchmark(_) => (StatusCode::INTERNAL_SERVER_ERROR, "benchmark_error"),
        S::Invalid(_) => (StatusCode::UNPROCESSABLE_ENTITY, "invalid_session"),
        S::Io { line: Some(_), .. } => (StatusCode::UNPROCESSABLE_ENTITY, "corrupt_session_file"),
        S::Io { .. } => (StatusCode::INTERNAL_SERVER_ERROR, "io_error"),
        S::BadRequest(_) => (StatusCode::BAD_REQUEST, "bad_request"),
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, code, message) = match self {
            Self::Session(e) => {
                let (status, code) = classify(&e);
                (status, code, e.to_string())
            }
            Self::Body(message) => (StatusCode::BAD_REQUEST, "bad_request", message),
        };
        if status.is_server_error() {
            tracing::error!(code, %message, "request failed");
        }
        let body = ErrorBody {
            error_code: code.to_owned(),
            message,
        };
        (status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

async fn healthz() -> Json<Value> {
    Json(json!({"status": "ok"}))
}

async fn benchmarks() -> ApiResult<Json<Value>> {
    let mut out = Vec::new();
    for name in BENCHMARK_NAMES {
        let b = load_benchmark(name).map_err(SessionError::from)?;
        out.push(json!({
            "name": b.name,
            "class_count": b.taxonomy.len(),
            "sources": b.manifest.sources,
        }));
    }
    Ok(Json(Value::Array(out)))
}

/// Exactly one of `taxonomy`, `benchmark` or `saved` must be given.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    /// Taxonomy text in `format` (JSON when omitted and the text starts with `{`).
    pub taxonomy: Option<String>,
    pub format: Option<TaxonomyFormat>,
    pub gold: Option<Labeling>,
    /// Bundled benchmark name; its gold labels are attached.
    pub benchmark: Option<String>,
    /// Id of a session previously saved in the data directory.
    pub saved: Option<String>,
}

async fn create_session(
    State(state): State<AppState>,
    body: Result<Json<CreateSession>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<Session>)> {
    let Json(req) = body?;
    let sources = [req.taxonomy.is_some(), req.benchmark.is_some(), req.saved.is_some()];
    if sources.iter().filter(|&&s| s).count() != 1 {
        return Err(SessionError::BadRequest("give exactly one of taxonomy, benchmark or saved".into()).into());
    }
    let session = if let Some(id) = req.saved {
        let handle = state.store.load(&id)?;
        let s = handle.read().unwrap().clone();
        s
    } else {
        let id = SessionStore::new_id();
        let session = if let Some(name) = req.benchmark {
            Session::from_benchmark(id, &name)?
        } else {
            let text = req.taxonomy.unwrap_or_default();
            let format = req.format.unwrap_or(if text.trim_start().starts_with('{') {
                TaxonomyFormat::Json
            } else {
                TaxonomyFormat::Indented
            });
            let t = parse_taxonomy(&text, format).map_err(SessionError::from)?;
            Session::new(id, t, req.gold)?
        };
        state.store.insert(session.clone());
        session
    };
    Ok((StatusCode::CREATED, Json(session)))
}

async fn get_session(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Session>> {
    Ok(Json(state.store.read(&id, Session::clone)?))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetLabel {
    pub property: MetaProperty,
    /// `null` clears the value.
    pub value: Option<Sign>,
}

async fn set_label(
    State(state): State<AppState>,
    Path((id, class)): Path<(String, String)>,
    body: Result<Json<SetLabel>, JsonRejection>,
) -> ApiResult<Json<Value>> {
    let Json(req) = body?;
    let out = state.store.update(&id, |s| {
        s.set_label(&class, req.property, req.value)?;
        Ok(json!({
            "class": class,
            "labels": s.labeling.get(&class).copied().unwrap_or_default(),
            "violations": s.violations,
        }))
    })?;
    Ok(Json(out))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelRun {
    /// Defaults to a zero-shot prompt over the flat representation.
    pub prompt: Option<PromptConfig>,
    /// Defaults to the service's configured endpoint and model.
    pub llm: Option<LlmConfig>,
    #[serde(default)]
    pub mode: MergeMode,
}

async fn label_run(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<LabelRun>, JsonRejection>,
) -> ApiResult<Json<Value>> {
    let Json(req) = body?;
    let lc = req
        .llm
        .or_else(|| state.default_llm.clone())
        .ok_or_else(|| SessionError::BadRequest("no LLM configured for this service; pass llm".into()))?
        .with_env_key();
    let pc = req
        .prompt
        .unwrap_or_else(|| PromptConfig::new(PromptStrategy::ZeroShot, Representation::Flat));
    let (taxonomy, pc) = state
        .store
        .read(&id, |s| (s.taxonomy.clone(), s.effective_prompt(&pc)))?;

    // The LLM call runs without holding the session lock.
    let call = {
        let (pc, lc) = (pc.clone(), lc.clone());
        tokio::task::spawn_blocking(move || label_ontology(&taxonomy, &pc, &lc))
    };
    let result = call
        .await
        .map_err(|e| SessionError::BadRequest(format!("labelling task failed: {e}")))?
        .map_err(SessionError::from)?;

    let out = state.store.update(&id, |s| {
        let summary = s.apply_labels(&result, req.mode, &pc, &lc)?.clone();
        Ok(json!({"summary": summary, "violations": s.violations}))
    })?;
    Ok(Json(out))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Guidance {
    pub text: String,
}

async fn add_guidance(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<Guidance>, JsonRejection>,
) -> ApiResult<Json<Value>> {
    let Json(req) = body?;
    let history = state.store.update(&id, |s| {
        s.add_guidance(&req.text)?;
        Ok(s.guidance_history.clone())
    })?;
    Ok(Json(json!({"guidance_history": history})))
}

async fn violations(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    Ok(Json(state.store.read(&id, |s| json!(s.violations))?))
}

async fn accuracy(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let report = state.store.read(&id, Session::accuracy)??;
    Ok(Json(json!(report)))
}

async fn save(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let store = state.store.clone();
    let path = tokio::task::spawn_blocking(move || store.save(&id))
        .await
        .map_err(|e| SessionError::BadRequest(format!("save task failed: {e}")))??;
    Ok(Json(json!({"path": path})))
}

/// Binds and serves until the process is stopped.
pub async fn serve(state: AppState, addr: std::net::SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(state)).await
}
