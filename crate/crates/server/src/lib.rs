//! HTTP/JSON front end for a loaded [`HybridIndex`].
//!
//! Routes:
//! - `GET  /health`        index summary
//! - `GET  /v1/params`     the server's default fusion parameters
//! - `GET  /v1/docs/{id}`  one FAQ entry
//! - `POST /v1/query`      one query, one ranked list
//! - `POST /v1/batch`      many queries, JSON results plus a TREC run
//! - `POST /v1/eval`       score a TREC run against qrels

use std::future::Future;
use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use faqsearch_core::api::{
    BatchRequest, BatchResponse, DocResponse, ErrorBody, EvalRequest, EvalResponse, Health, QueryRequest, QueryResponse,
};
use faqsearch_core::evalkit::{metrics, parse_qrels, parse_run, RunFile};
use faqsearch_core::{retrieve, retrieve_batch, EmbeddingProvider, Error, FusionParams, HybridIndex, Query};
use tokio::net::TcpListener;

/// Shared, read-only state behind every request.
pub struct AppState {
    index: HybridIndex,
    provider: Option<Box<dyn EmbeddingProvider>>,
    defaults: FusionParams,
    threads: usize,
}

impl AppState {
    /// Uses the index's built-in query embedder when it has one; otherwise
    /// dense-dependent modes are refused.
    pub fn new(index: HybridIndex, defaults: FusionParams) -> Self {
        let provider = index
            .builtin_provider()
            .map(|p| Box::new(p) as Box<dyn EmbeddingProvider>);
        AppState {
            index,
            provider,
            defaults,
            threads: 0,
        }
    }

    pub fn with_provider(mut self, provider: Box<dyn EmbeddingProvider>) -> Self {
        self.provider = Some(provider);
        self
    }

    /// Worker threads for batch requests (0 = one per core).
    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = threads;
        self
    }

    fn provider(&self) -> Option<&dyn EmbeddingProvider> {
        self.provider.as_deref()
    }

    fn response(&self, result: faqsearch_core::FusedResult) -> QueryResponse {
        QueryResponse::from_result(result, |id| {
            self.index
                .ordinal(id)
                .map(|o| self.index.doc(o).question.clone())
                .unwrap_or_default()
        })
    }
}

/// An engine error rendered as a JSON body with a fitting status code.
#[derive(Debug)]
pub struct ApiError(StatusCode, String);

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::UnknownDoc(_) => StatusCode::NOT_FOUND,
            Error::Io { .. } | Error::Integrity(_) => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        ApiError(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(ErrorBody { error: self.1 })).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/v1/params", get(params))
        .route("/v1/docs/:id", get(doc))
        .route("/v1/query", post(query))
        .route("/v1/batch", post(batch))
        .route("/v1/eval", post(eval))
        .with_state(state)
}

/// Serves `state` on `listener` until `shutdown` resolves.
pub async fn serve(
    listener: TcpListener,
    state: Arc<AppState>,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    if let Ok(addr) = listener.local_addr() {
        tracing::info!(%addr, docs = state.index.len(), "serving");
    }
    axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown)
        .await
}

/// Runs CPU-bound work off the async executor.
async fn blocking<T: Send + 'static>(
    state: &Arc<AppState>,
    f: impl FnOnce(&AppState) -> Result<T, ApiError> + Send + 'static,
) -> Result<T, ApiError> {
    let state = Arc::clone(state);
    tokio::task::spawn_blocking(move || f(&state))
        .await
        .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
}

async fn health(State(state): State<Arc<AppState>>) -> Json<Health> {
    let dense = state.index.dense();
    Json(Health {
        status: "ok".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        docs: state.index.len(),
        provider: dense.provider().into(),
        dim: dense.dim(),
        dense_queries: state.provider.is_some(),
    })
}

async fn params(State(state): State<Arc<AppState>>) -> Json<FusionParams> {
    Json(state.defaults.clone())
}

async fn doc(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<DocResponse> {
    let ordinal = state.index.ordinal(&id).ok_or(Error::UnknownDoc(id))?;
    Ok(Json(state.index.doc(ordinal).clone()))
}

async fn query(State(state): State<Arc<AppState>>, Json(req): Json<QueryRequest>) -> ApiResult<QueryResponse> {
    let resp = blocking(&state, move |s| {
        let params = req.params.unwrap_or_else(|| s.defaults.clone());
        let q = Query::new(req.id.unwrap_or_else(|| "q".into()), req.text);
        let result = retrieve(&s.index, s.provider(), &q, &params, req.mode)?;
        Ok(s.response(result))
    })
    .await?;
    Ok(Json(resp))
}

async fn batch(State(state): State<Arc<AppState>>, Json(req): Json<BatchRequest>) -> ApiResult<BatchResponse> {
    let resp = blocking(&state, move |s| {
        let params = req.params.unwrap_or_else(|| s.defaults.clone());
        let results = retrieve_batch(&s.index, s.provider(), &req.queries, &params, req.mode, s.threads)?;
        let tag = req.tag.unwrap_or_else(|| req.mode.to_string());
        let run = RunFile::from_results(&results, &tag).to_trec();
        let results = results.into_iter().map(|r| s.response(r)).collect();
        Ok(BatchResponse { results, run })
    })
    .await?;
    Ok(Json(resp))
}

async fn eval(State(state): State<Arc<AppState>>, Json(req): Json<EvalRequest>) -> ApiResult<EvalResponse> {
    let report = blocking(&state, move |_| {
        let run = parse_run(&req.run)?;
        let qrels = parse_qrels(&req.qrels)?;
        Ok(metrics(&run, &qrels, &req.cutoffs)?)
    })
    .await?;
    Ok(Json(report))
}
