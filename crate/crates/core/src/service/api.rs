use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};

use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::oneshot;

use super::{run_query, ConfigError, ExampleEntry, RunError, ServiceConfig};
use crate::compiler::{compile, CoordinateProperties, SparqlQueryText};
use crate::discovery::{CatalogCache, SensorCatalog};
use crate::endpoint::{EndpointClient, EndpointError};
use crate::model::{
    apply_mutation, parse_query_with_default_limit, AbstractQuery, Diagnostic, QueryParseError, Severity,
    ValidationReport,
};
use crate::nlu::{classify, respond};
use crate::table::ResultTable;

pub struct AppState {
    pub config: ServiceConfig,
    client: EndpointClient,
    coords: CoordinateProperties,
    discovery_override: Option<SparqlQueryText>,
    examples: Vec<ExampleEntry>,
    catalog: CatalogCache,
    ready: AtomicBool,
    sessions: Mutex<HashMap<String, Arc<tokio::sync::Mutex<AbstractQuery>>>>,
}

impl AppState {
    pub fn new(config: ServiceConfig) -> Result<Self, ConfigError> {
        config.check()?;
        let client = EndpointClient::new(config.endpoint.clone()).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(AppState {
            coords: config.coordinates(),
            discovery_override: config.discovery_override(),
            examples: config.examples()?,
            client,
            catalog: CatalogCache::default(),
            ready: AtomicBool::new(false),
            sessions: Mutex::new(HashMap::new()),
            config,
        })
    }

    /// First catalog load. The service reports ready afterwards whether or
    /// not discovery succeeded.
    pub async fn warm_up(&self) {
        if let Err(e) = self.catalog.get(&self.client, self.discovery_override.as_ref()).await {
            tracing::warn!("initial discovery failed: {e}");
        }
        self.ready.store(true, Ordering::SeqCst);
    }

    fn empty_query(&self) -> AbstractQuery {
        AbstractQuery {
            limit: self.config.default_limit,
            ..AbstractQuery::empty()
        }
    }

    fn session(&self, id: &str) -> Arc<tokio::sync::Mutex<AbstractQuery>> {
        let mut sessions = self.sessions.lock().expect("session lock");
        sessions
            .entry(id.to_string())
            .or_insert_with(|| Arc::new(tokio::sync::Mutex::new(self.empty_query())))
            .clone()
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/sensors", get(sensors))
        .route("/api/compile", post(compile_doc))
        .route("/api/query", post(query_doc))
        .route("/api/chat", post(chat))
        .route("/api/examples", get(examples))
        .route("/api/health", get(health))
        .with_state(state)
}

/// A service running in the background on its own listener; stops when
/// dropped.
pub struct RunningService {
    pub addr: SocketAddr,
    pub state: Arc<AppState>,
    shutdown: Option<oneshot::Sender<()>>,
}

impl RunningService {
    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }
}

impl Drop for RunningService {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
    }
}

/// Binds `config.listenAddress` and serves in a spawned task.
pub async fn start(config: ServiceConfig) -> Result<RunningService, ConfigError> {
    let state = Arc::new(AppState::new(config)?);
    let listener = tokio::net::TcpListener::bind(&state.config.listen_address)
        .await
        .map_err(|source| ConfigError::Io {
            path: state.config.listen_address.clone(),
            source,
        })?;
    let addr = listener.local_addr().map_err(|source| ConfigError::Io {
        path: state.config.listen_address.clone(),
        source,
    })?;
    let warm = state.clone();
    tokio::spawn(async move { warm.warm_up().await });
    let (tx, rx) = oneshot::channel::<()>();
    let app = router(state.clone());
    tokio::spawn(async move {
        let _ = axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = rx.await;
            })
            .await;
    });
    Ok(RunningService {
        addr,
        state,
        shutdown: Some(tx),
    })
}

/// Serves until Ctrl-C.
pub async fn serve(config: ServiceConfig) -> Result<(), ConfigError> {
    let running = start(config).await?;
    tracing::info!("listening on {}", running.base_url());
    let _ = tokio::signal::ctrl_c().await;
    drop(running);
    Ok(())
}

fn error(status: StatusCode, kind: &str, message: String, diagnostics: Option<&[Diagnostic]>) -> Response {
    let mut body = json!({ "error": kind, "message": message });
    if let Some(d) = diagnostics {
        body["diagnostics"] = json!(d);
    }
    (status, Json(body)).into_response()
}

fn parse_error(e: QueryParseError) -> Response {
    match &e {
        QueryParseError::Syntax { .. } => error(StatusCode::BAD_REQUEST, "MalformedJson", e.to_string(), None),
        QueryParseError::Schema { path, message } => {
            let d = Diagnostic {
                severity: Severity::Fatal,
                code: "schema",
                path: path.clone(),
                message: message.clone(),
            };
            error(StatusCode::UNPROCESSABLE_ENTITY, "SchemaError", e.to_string(), Some(&[d]))
        }
    }
}

fn invalid(report: &ValidationReport) -> Response {
    error(
        StatusCode::UNPROCESSABLE_ENTITY,
        "ValidationFailed",
        "document has fatal diagnostics".into(),
        Some(&report.diagnostics),
    )
}

fn endpoint_error(e: &EndpointError) -> Response {
    let kind = match e {
        EndpointError::Config(_) => "ConfigError",
        EndpointError::Network(_) => "NetworkError",
        EndpointError::Endpoint { .. } => "EndpointError",
        EndpointError::Decode(_) => "DecodeError",
    };
    error(StatusCode::BAD_GATEWAY, kind, e.to_string(), None)
}

fn run_error(e: &RunError) -> Response {
    match e {
        RunError::Validation(report) => invalid(report),
        RunError::Compile(c) => error(StatusCode::UNPROCESSABLE_ENTITY, "CompileError", c.to_string(), None),
        RunError::Endpoint(e) => endpoint_error(e),
    }
}

async fn sensors(State(state): State<Arc<AppState>>) -> Response {
    match state.catalog.get(&state.client, state.discovery_override.as_ref()).await {
        Ok(catalog) => Json(catalog.as_ref().clone()).into_response(),
        Err(crate::discovery::DiscoveryError::Endpoint(e)) => endpoint_error(&e),
        Err(e) => error(StatusCode::BAD_GATEWAY, "DiscoveryError", e.to_string(), None),
    }
}

async fn compile_doc(State(state): State<Arc<AppState>>, body: String) -> Response {
    let q = match parse_query_with_default_limit(&body, state.config.default_limit) {
        Ok(q) => q,
        Err(e) => return parse_error(e),
    };
    match compile(&q, &state.coords) {
        Ok(sparql) => Json(json!({ "sparql": sparql.text })).into_response(),
        Err(e) => run_error(&e.into()),
    }
}

async fn query_doc(State(state): State<Arc<AppState>>, body: String) -> Response {
    let q = match parse_query_with_default_limit(&body, state.config.default_limit) {
        Ok(q) => q,
        Err(e) => return parse_error(e),
    };
    match run_query(&state.client, &q, &state.coords).await {
        Ok((sparql, table)) => Json(QueryResponse {
            sparql: sparql.text,
            table,
        })
        .into_response(),
        Err(e) => run_error(&e),
    }
}

#[derive(Serialize)]
struct QueryResponse {
    sparql: String,
    table: ResultTable,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct ChatResponse {
    reply: String,
    query: AbstractQuery,
    trigger_search: bool,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct ChatRequest {
    session_id: Option<String>,
    message: String,
}

async fn chat(State(state): State<Arc<AppState>>, body: String) -> Response {
    let request: ChatRequest = match serde_json::from_str(&body) {
        Ok(r) => r,
        Err(e) => return error(StatusCode::BAD_REQUEST, "MalformedJson", e.to_string(), None),
    };
    let catalog = match state.catalog.get(&state.client, state.discovery_override.as_ref()).await {
        Ok(c) => c,
        Err(e) => {
            tracing::warn!("discovery failed during chat: {e}");
            state.catalog.latest().unwrap_or_else(|| {
                Arc::new(SensorCatalog {
                    sensors: Vec::new(),
                    fetched_at: crate::model::Timestamp::from_datetime(chrono::Utc::now()),
                    source_url: state.config.endpoint.url.clone(),
                })
            })
        }
    };

    let session = request.session_id.as_deref().map(|id| state.session(id));
    let mut guard = match &session {
        Some(s) => Some(s.lock().await),
        None => None,
    };
    let current = guard.as_deref().cloned().unwrap_or_else(|| state.empty_query());

    let frame = classify(&request.message, &catalog);
    let outcome = respond(&frame, &current, &catalog, &state.coords);
    let mut next = current;
    for m in &outcome.mutations {
        next = apply_mutation(&next, m).expect("chat outcomes are pre-validated");
    }
    if let Some(g) = guard.as_deref_mut() {
        *g = next.clone();
    }
    Json(ChatResponse {
        reply: outcome.reply,
        query: next,
        trigger_search: outcome.trigger_search,
    })
    .into_response()
}

async fn examples(State(state): State<Arc<AppState>>) -> Json<Vec<ExampleEntry>> {
    Json(state.examples.clone())
}

async fn health(State(state): State<Arc<AppState>>) -> Response {
    if state.ready.load(Ordering::SeqCst) {
        Json(json!({ "status": "ok" })).into_response()
    } else {
        (StatusCode::SERVICE_UNAVAILABLE, Json(json!({ "status": "starting" }))).into_response()
    }
}
