//! Async client for the faqsearch HTTP service.

use faqsearch_core::api::{
    BatchRequest, BatchResponse, DocResponse, ErrorBody, EvalRequest, EvalResponse, Health, QueryRequest, QueryResponse,
};
use faqsearch_core::FusionParams;
use serde::de::DeserializeOwned;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("request to {url} failed: {source}")]
    Transport {
        url: String,
        #[source]
        source: reqwest::Error,
    },

    /// The server answered with a non-success status.
    #[error("server returned {status}: {message}")]
    Api { status: u16, message: String },
}

impl ClientError {
    /// True when the server rejected the request's content (4xx).
    pub fn is_rejection(&self) -> bool {
        matches!(self, ClientError::Api { status, .. } if (400..500).contains(status))
    }
}

pub type Result<T> = std::result::Result<T, ClientError>;

#[derive(Debug, Clone)]
pub struct Client {
    base: String,
    http: reqwest::Client,
}

impl Client {
    /// `base` is the server root, e.g. `http://127.0.0.1:7700`.
    pub fn new(base: impl Into<String>) -> Self {
        Client {
            base: base.into().trim_end_matches('/').to_string(),
            http: reqwest::Client::new(),
        }
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    pub async fn health(&self) -> Result<Health> {
        self.get("/health").await
    }

    pub async fn params(&self) -> Result<FusionParams> {
        self.get("/v1/params").await
    }

    pub async fn doc(&self, id: &str) -> Result<DocResponse> {
        self.get(&format!("/v1/docs/{}", encode_segment(id))).await
    }

    pub async fn query(&self, req: &QueryRequest) -> Result<QueryResponse> {
        self.post("/v1/query", req).await
    }

    pub async fn batch(&self, req: &BatchRequest) -> Result<BatchResponse> {
        self.post("/v1/batch", req).await
    }

    pub async fn eval(&self, req: &EvalRequest) -> Result<EvalResponse> {
        self.post("/v1/eval", req).await
    }

    async fn get<T: DeserializeOwned>(&self, path: &str) -> Result<T> {
        let url = format!("{}{}", self.base, path);
        let resp = self.http.get(&url).send().await;
        decode(url, resp).await
    }

    async fn post<B: Serialize + ?Sized, T: DeserializeOwned>(&self, path: &str, body: &B) -> Result<T> {
        let url = format!("{}{}", self.base, path);
        let resp = self.http.post(&url).json(body).send().await;
        decode(url, resp).await
    }
}

async fn decode<T: DeserializeOwned>(url: String, resp: reqwest::Result<reqwest::Response>) -> Result<T> {
    let transport = |source| ClientError::Transport {
        url: url.clone(),
        source,
    };
    let resp = resp.map_err(transport)?;
    let status = resp.status();
    if status.is_success() {
        return resp.json().await.map_err(transport);
    }
    let text = resp.text().await.unwrap_or_default();
    let message = serde_json::from_str::<ErrorBody>(&text)
        .map(|b| b.error)
        .unwrap_or(text);
    Err(ClientError::Api {
        status: status.as_u16(),
        message,
    })
}

fn encode_segment(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for b in s.bytes() {
        if b.is_ascii_alphanumeric() || b"-._~".contains(&b) {
            out.push(b as char);
        } else {
            out.push_str(&format!("%{b:02X}"));
        }
    }
    out
}
