//! JSON request and response bodies for the HTTP service.

use serde::{Deserialize, Serialize};

use crate::corpus::FaqDoc;
use crate::evalkit::MetricReport;
use crate::fusion::{FusionParams, Query};
use crate::ranking::{FusedResult, Provenance, Ranker};

fn default_mode() -> Ranker {
    Ranker::Rrf
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRequest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub text: String,
    #[serde(default = "default_mode")]
    pub mode: Ranker,
    /// Replaces the server's parameters for this request. Fields left out
    /// take the built-in defaults.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<FusionParams>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hit {
    pub rank: usize,
    pub doc_id: String,
    pub score: f64,
    pub question: String,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryResponse {
    pub query_id: String,
    pub mode: Ranker,
    pub hits: Vec<Hit>,
}

impl QueryResponse {
    pub fn from_result(result: FusedResult, question: impl Fn(&str) -> String) -> Self {
        QueryResponse {
            query_id: result.query_id,
            mode: result.ranker,
            hits: result
                .hits
                .into_iter()
                .enumerate()
                .map(|(i, h)| Hit {
                    rank: i + 1,
                    question: question(&h.doc_id),
                    doc_id: h.doc_id,
                    score: h.score,
                    provenance: h.provenance,
                })
                .collect(),
        }
    }

    pub fn into_result(self) -> FusedResult {
        FusedResult {
            query_id: self.query_id,
            ranker: self.mode,
            hits: self
                .hits
                .into_iter()
                .map(|h| crate::ranking::FusedHit {
                    doc_id: h.doc_id,
                    score: h.score,
                    provenance: h.provenance,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchRequest {
    pub queries: Vec<Query>,
    #[serde(default = "default_mode")]
    pub mode: Ranker,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<FusionParams>,
    /// Run tag for the TREC output; defaults to the mode name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchResponse {
    pub results: Vec<QueryResponse>,
    /// The same results as a TREC run file.
    pub run: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRequest {
    pub run: String,
    pub qrels: String,
    #[serde(default = "default_cutoffs")]
    pub cutoffs: Vec<usize>,
}

fn default_cutoffs() -> Vec<usize> {
    vec![5, 10]
}

pub type EvalResponse = MetricReport;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub version: String,
    pub docs: usize,
    pub provider: String,
    pub dim: usize,
    /// Whether the server can embed arbitrary query text itself.
    pub dense_queries: bool,
}

pub type DocResponse = FaqDoc;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}
