//! HTTP/JSON API over a fixed catalog and network.
//!
//! Every endpoint is a thin adapter over a library call. Combinations and
//! goals are accepted as DSL text or as structured trees. Errors come back
//! as `{code, message, location?}` with 400 for malformed or invalid input
//! and 422 when a well-formed request cannot be evaluated.

use std::collections::{BTreeMap, BTreeSet};
use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State as AxumState;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use patternforge::composition::{bind, Combination, DEFAULT_ITERATION_CAP};
use patternforge::expr::Goal;
use patternforge::{evaluate, plan, verify, Candidate, Catalog, Error, Limits, Network, Ranking, State, Value};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tower_http::cors::CorsLayer;

pub const BIND_ENV: &str = "PATTERNFORGE_BIND";

/// Startup snapshot shared by all requests.
pub struct Snapshot {
    pub catalog: Catalog,
    pub network: Network,
}

type Shared = Arc<Snapshot>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location: Option<serde_json::Value>,
    #[serde(skip)]
    pub status: u16,
}

impl ApiError {
    fn invalid_request(message: impl Into<String>) -> Self {
        ApiError {
            code: "INVALID_REQUEST".into(),
            message: message.into(),
            location: None,
            status: 400,
        }
    }
}

/// Codes for requests that are well-formed but cannot be evaluated.
const UNPROCESSABLE: &[&str] = &[
    "ITERATION_LIMIT",
    "PARALLEL_CONFLICT",
    "DIVISION_BY_ZERO",
    "TABLE_DOMAIN",
    "NON_FINITE",
];

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let code = e.code();
        let location = match e.root() {
            Error::Parse(p) => Some(json!({"column": p.column(), "near": p.near(), "text": p.source})),
            Error::BadPath(path) => Some(json!({ "path": path })),
            _ => None,
        };
        ApiError {
            code: code.to_string(),
            message: e.to_string(),
            location,
            status: if UNPROCESSABLE.contains(&code) { 422 } else { 400 },
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::invalid_request(e.to_string()))
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum CombinationInput {
    Text(String),
    Tree(Combination),
}

impl CombinationInput {
    fn bind(&self, catalog: &Catalog) -> Result<Combination, Error> {
        match self {
            CombinationInput::Text(t) => catalog.parse_combination(t),
            CombinationInput::Tree(c) => bind(c, catalog),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum GoalInput {
    Text(String),
    Tree(Goal),
}

impl GoalInput {
    fn bind(&self, catalog: &Catalog) -> Result<Goal, Error> {
        match self {
            GoalInput::Text(t) => catalog.parse_goal(t),
            GoalInput::Tree(g) => catalog.bind_goal(g),
        }
    }
}

fn bind_state(raw: BTreeMap<String, Value>, catalog: &Catalog) -> Result<State, Error> {
    catalog.validate_state(raw)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EvaluateRequest {
    state: BTreeMap<String, Value>,
    combination: CombinationInput,
    iteration_cap: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct VerifyRequest {
    state: BTreeMap<String, Value>,
    combination: CombinationInput,
    goal: GoalInput,
    iteration_cap: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckRequest {
    combination: CombinationInput,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SuccessorsRequest {
    #[serde(default)]
    prefix_atoms: Vec<String>,
    #[serde(default)]
    artifacts: BTreeSet<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanRequest {
    state: BTreeMap<String, Value>,
    goal: GoalInput,
    #[serde(default)]
    limits: Limits,
    #[serde(default)]
    ranking: Ranking,
    #[serde(default)]
    artifacts: BTreeSet<String>,
}

#[derive(Serialize)]
pub struct PlanResponse {
    pub candidates: Vec<Candidate>,
}

fn cap(requested: Option<usize>) -> Result<usize, ApiError> {
    match requested {
        Some(0) => Err(ApiError::invalid_request("iteration_cap must be positive")),
        Some(n) => Ok(n),
        None => Ok(DEFAULT_ITERATION_CAP),
    }
}

async fn get_catalog(AxumState(snap): AxumState<Shared>) -> Json<serde_json::Value> {
    Json(json!(snap.catalog.to_document()))
}

async fn get_network(AxumState(snap): AxumState<Shared>) -> Json<serde_json::Value> {
    Json(json!(snap.network.to_document()))
}

async fn post_evaluate(AxumState(snap): AxumState<Shared>, body: Bytes) -> ApiResult<serde_json::Value> {
    let req: EvaluateRequest = parse_body(&body)?;
    let c = &snap.catalog;
    let comb = req.combination.bind(c)?;
    let state = bind_state(req.state, c)?;
    let ev = evaluate(&comb, &state, c, cap(req.iteration_cap)?)?;
    Ok(Json(json!(ev)))
}

async fn post_verify(AxumState(snap): AxumState<Shared>, body: Bytes) -> ApiResult<serde_json::Value> {
    let req: VerifyRequest = parse_body(&body)?;
    let c = &snap.catalog;
    let comb = req.combination.bind(c)?;
    let goal = req.goal.bind(c)?;
    let state = bind_state(req.state, c)?;
    let report = verify(&comb, &state, &goal, c, cap(req.iteration_cap)?)?;
    Ok(Json(json!(report)))
}

async fn post_check(AxumState(snap): AxumState<Shared>, body: Bytes) -> ApiResult<serde_json::Value> {
    let req: CheckRequest = parse_body(&body)?;
    let comb = req.combination.bind(&snap.catalog)?;
    let violations = snap.network.check_combination(&snap.catalog, &comb);
    Ok(Json(json!({ "violations": violations })))
}

async fn post_successors(AxumState(snap): AxumState<Shared>, body: Bytes) -> ApiResult<serde_json::Value> {
    let req: SuccessorsRequest = parse_body(&body)?;
    for id in &req.prefix_atoms {
        snap.catalog.pattern(id)?;
    }
    let mut available = snap.network.initial_artifacts.clone();
    available.extend(req.artifacts);
    let prefix: Vec<&str> = req.prefix_atoms.iter().map(String::as_str).collect();
    let ids = snap.network.allowed_successors(&snap.catalog, &prefix, &available);
    Ok(Json(json!({ "pattern_ids": ids })))
}

async fn post_plan(AxumState(snap): AxumState<Shared>, body: Bytes) -> ApiResult<PlanResponse> {
    let req: PlanRequest = parse_body(&body)?;
    let task = tokio::task::spawn_blocking(move || -> Result<PlanResponse, ApiError> {
        let c = &snap.catalog;
        let goal = req.goal.bind(c)?;
        let state = bind_state(req.state, c)?;
        let net = snap.network.with_artifacts(req.artifacts);
        let candidates = plan(c, &net, &state, &goal, &req.limits, &req.ranking)?;
        Ok(PlanResponse { candidates })
    });
    match task.await {
        Ok(result) => result.map(Json),
        Err(e) => Err(ApiError {
            code: "INTERNAL".into(),
            message: e.to_string(),
            location: None,
            status: 500,
        }),
    }
}

async fn not_found() -> ApiError {
    ApiError {
        code: "NOT_FOUND".into(),
        message: "no such endpoint".into(),
        location: None,
        status: 404,
    }
}

pub fn router(catalog: Catalog, network: Network) -> Router {
    let snap: Shared = Arc::new(Snapshot { catalog, network });
    Router::new()
        .route("/api/catalog", get(get_catalog))
        .route("/api/network", get(get_network))
        .route("/api/evaluate", post(post_evaluate))
        .route("/api/verify", post(post_verify))
        .route("/api/check", post(post_check))
        .route("/api/successors", post(post_successors))
        .route("/api/plan", post(post_plan))
        .fallback(not_found)
        .layer(CorsLayer::permissive())
        .with_state(snap)
}

/// Address to listen on: `PATTERNFORGE_BIND` (an IP) or loopback.
pub fn bind_address(port: u16) -> Result<SocketAddr, String> {
    let ip = match std::env::var(BIND_ENV) {
        Ok(text) => text
            .parse::<IpAddr>()
            .map_err(|e| format!("{BIND_ENV}={text}: {e}"))?,
        Err(_) => IpAddr::V4(Ipv4Addr::LOCALHOST),
    };
    Ok(SocketAddr::new(ip, port))
}

/// Serves `app` until Ctrl-C.
pub async fn serve(app: Router, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
