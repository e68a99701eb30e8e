//! Score fusion: query-length damping, the damped linear mix of dense and
//! TF-IDF scores, reciprocal rank fusion with BM25, and the end-to-end
//! retrieval pipeline.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bm25::{DEFAULT_B, DEFAULT_K1};
use crate::dense::EmbeddingProvider;
use crate::error::{Error, Result};
use crate::index::HybridIndex;
use crate::ranking::{top_n, FusedHit, FusedResult, Provenance, RankedList, Ranker};
use crate::textproc::tokenize;
use crate::tfidf::check_unit;

/// How the damping factor splits weight between the dense and TF-IDF legs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DampingMode {
    /// Dense coefficient `alpha + (1 - alpha) * zeta`. Short queries lean
    /// on the dense score.
    #[default]
    AsWritten,
    /// `zeta` and `1 - zeta` swapped: short queries lean on TF-IDF.
    ProseIntent,
}

impl DampingMode {
    pub fn as_str(self) -> &'static str {
        match self {
            DampingMode::AsWritten => "as_written",
            DampingMode::ProseIntent => "prose_intent",
        }
    }
}

impl fmt::Display for DampingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DampingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "as_written" => Ok(DampingMode::AsWritten),
            "prose_intent" => Ok(DampingMode::ProseIntent),
            _ => Err(Error::Invalid {
                what: "damping mode",
                value: s.to_string(),
            }),
        }
    }
}

/// Every retrieval hyperparameter. `alpha` has no default and must be set
/// for the hybrid and rrf modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FusionParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub w: f64,
    pub beta: f64,
    pub rrf_k: f64,
    pub top_n: usize,
    pub top_m: usize,
    pub damping_mode: DampingMode,
    pub k1: f64,
    pub b: f64,
}

impl Default for FusionParams {
    fn default() -> Self {
        FusionParams {
            alpha: None,
            w: 0.5,
            beta: 3.0,
            rrf_k: 60.0,
            top_n: 200,
            top_m: 50,
            damping_mode: DampingMode::AsWritten,
            k1: DEFAULT_K1,
            b: DEFAULT_B,
        }
    }
}

fn positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name,
            value,
            expected: "> 0",
        })
    }
}

impl FusionParams {
    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = Some(alpha);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(a) = self.alpha {
            check_unit("alpha", a)?;
        }
        check_unit("w", self.w)?;
        check_unit("b", self.b)?;
        positive("beta", self.beta)?;
        positive("rrf_k", self.rrf_k)?;
        positive("k1", self.k1)?;
        if self.top_m == 0 || self.top_n < self.top_m {
            return Err(Error::Invalid {
                what: "top_n/top_m (need top_n >= top_m >= 1)",
                value: format!("{}/{}", self.top_n, self.top_m),
            });
        }
        Ok(())
    }

    /// The mixing weight, required by modes that use it.
    pub fn require_alpha(&self) -> Result<f64> {
        self.alpha.ok_or(Error::Invalid {
            what: "alpha (required for hybrid and rrf modes)",
            value: "unset".to_string(),
        })
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let p: FusionParams = toml::from_str(text).map_err(|e| Error::Invalid {
            what: "config file",
            value: e.to_string(),
        })?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("params serialize to toml")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }
}

/// `exp((1 - len_q) / beta)`.
pub fn damping(len_q: usize, beta: f64) -> Result<f64> {
    if len_q == 0 {
        return Err(Error::EmptyQuery);
    }
    positive("beta", beta)?;
    Ok(((1.0 - len_q as f64) / beta).exp())
}

/// `(dense, tfidf)` coefficients of the damped linear combination. They
/// always sum to one.
pub fn hybrid_coefficients(alpha: f64, zeta: f64, mode: DampingMode) -> Result<(f64, f64)> {
    check_unit("alpha", alpha)?;
    // Very long queries underflow zeta to exactly 0.
    if !(0.0..=1.0).contains(&zeta) {
        return Err(Error::OutOfRange {
            name: "zeta",
            value: zeta,
            expected: "[0, 1]",
        });
    }
    let lean = match mode {
        DampingMode::AsWritten => zeta,
        DampingMode::ProseIntent => 1.0 - zeta,
    };
    Ok((alpha + (1.0 - alpha) * lean, (1.0 - alpha) * (1.0 - lean)))
}

pub fn hybrid_score(f_sbert: f64, f_tfidf: f64, alpha: f64, zeta: f64, mode: DampingMode) -> Result<f64> {
    let (s, t) = hybrid_coefficients(alpha, zeta, mode)?;
    Ok(s * f_sbert + t * f_tfidf)
}

/// Reciprocal rank fusion of two lists for the same query. Documents
/// missing from a list get nothing from it. Output is sorted by descending
/// fused score, ties by ascending doc id.
pub fn fuse_rrf(list_a: &RankedList, list_b: &RankedList, k: f64) -> Result<FusedResult> {
    if list_a.query_id != list_b.query_id {
        return Err(Error::QueryMismatch(list_a.query_id.clone(), list_b.query_id.clone()));
    }
    positive("rrf_k", k)?;
    let mut parts: HashMap<&str, (f64, f64, Provenance)> = HashMap::new();
    for (slot, list) in [list_a, list_b].into_iter().enumerate() {
        for (i, (doc, _)) in list.entries.iter().enumerate() {
            let rank = i + 1;
            let e = parts.entry(doc.as_str()).or_insert((0.0, 0.0, Provenance::default()));
            let contribution = 1.0 / (k + rank as f64);
            if slot == 0 {
                e.0 = contribution;
            } else {
                e.1 = contribution;
            }
            e.2.set(list.ranker, rank);
        }
    }
    let mut hits: Vec<FusedHit> = parts
        .into_iter()
        .map(|(doc, (a, b, provenance))| FusedHit {
            doc_id: doc.to_string(),
            score: a + b,
            provenance,
        })
        .collect();
    hits.sort_by(|x, y| y.score.total_cmp(&x.score).then_with(|| x.doc_id.cmp(&y.doc_id)));
    Ok(FusedResult {
        query_id: list_a.query_id.clone(),
        ranker: Ranker::Rrf,
        hits,
    })
}

/// A query to run: identifier plus raw text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub id: String,
    pub text: String,
}

impl Query {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Query {
            id: id.into(),
            text: text.into(),
        }
    }
}

fn needs_dense(mode: Ranker) -> bool {
    matches!(mode, Ranker::Sbert | Ranker::Hybrid | Ranker::Rrf)
}

/// Runs one query through `mode`'s pipeline.
///
/// For `rrf`: dense top-N and TF-IDF top-N form the candidate pool, which
/// is ranked by the damped hybrid score and truncated to N; that list is
/// fused with the BM25 top-N and the first M fused hits are returned.
/// Single-ranker modes return their own top M with native scores.
pub fn retrieve(
    index: &HybridIndex,
    provider: Option<&dyn EmbeddingProvider>,
    query: &Query,
    params: &FusionParams,
    mode: Ranker,
) -> Result<FusedResult> {
    params.validate()?;
    let tokens = tokenize(&query.text);
    if tokens.is_empty() {
        return Err(Error::EmptyQuery);
    }
    let n = params.top_n;
    let ids = |list: &[(usize, f64)], ranker: Ranker| RankedList {
        query_id: query.id.clone(),
        ranker,
        entries: list.iter().map(|&(d, s)| (index.doc(d).id.clone(), s)).collect(),
    };

    let dense = if needs_dense(mode) {
        let provider = provider.ok_or_else(|| Error::Invalid {
            what: "query embedding provider",
            value: format!("none available for {:?}", index.dense().provider()),
        })?;
        if provider.dim() != index.dense().dim() {
            return Err(Error::DimensionMismatch {
                expected: index.dense().dim(),
                actual: provider.dim(),
            });
        }
        let v = provider.embed(&query.text)?;
        Some(index.dense().cosines(&v)?)
    } else {
        None
    };
    let tfidf = if matches!(mode, Ranker::Tfidf | Ranker::Hybrid | Ranker::Rrf) {
        let qv = index.tfidf().vectorize(&tokens);
        Some(index.tfidf().scores(&qv, params.w)?)
    } else {
        None
    };

    let single = |list: Vec<(usize, f64)>, ranker: Ranker| {
        let hits = list
            .into_iter()
            .take(params.top_m)
            .enumerate()
            .map(|(i, (d, s))| {
                let mut provenance = Provenance::default();
                provenance.set(ranker, i + 1);
                FusedHit {
                    doc_id: index.doc(d).id.clone(),
                    score: s,
                    provenance,
                }
            })
            .collect();
        FusedResult {
            query_id: query.id.clone(),
            ranker,
            hits,
        }
    };

    match mode {
        Ranker::Tfidf => Ok(single(top_n(tfidf.unwrap_or_default(), n), mode)),
        Ranker::Sbert => {
            let cos = dense.unwrap_or_default();
            Ok(single(top_n(cos.into_iter().enumerate().collect(), n), mode))
        }
        Ranker::Bm25 => {
            let list = top_n(index.bm25().scores_with(&tokens, params.w, params.k1, params.b)?, n);
            Ok(single(list, mode))
        }
        Ranker::Hybrid | Ranker::Rrf => {
            let alpha = params.require_alpha()?;
            let zeta = damping(tokens.len(), params.beta)?;
            let (cs, ct) = hybrid_coefficients(alpha, zeta, params.damping_mode)?;
            let cos = dense.unwrap_or_default();
            let tfidf_all = tfidf.unwrap_or_default();
            let dense_top = top_n(cos.iter().copied().enumerate().collect(), n);
            let tfidf_top = top_n(tfidf_all.clone(), n);

            let mut tfidf_by_doc = vec![0.0; index.len()];
            for &(d, s) in &tfidf_all {
                tfidf_by_doc[d] = s;
            }
            let mut pool: Vec<usize> = dense_top.iter().chain(&tfidf_top).map(|x| x.0).collect();
            pool.sort_unstable();
            pool.dedup();
            let hybrid = top_n(
                pool.into_iter()
                    .map(|d| (d, cs * cos[d] + ct * tfidf_by_doc[d]))
                    .collect(),
                n,
            );

            let leg_ranks = |list: &[(usize, f64)]| -> HashMap<usize, usize> {
                list.iter().enumerate().map(|(i, &(d, _))| (d, i + 1)).collect()
            };
            let dense_rank = leg_ranks(&dense_top);
            let tfidf_rank = leg_ranks(&tfidf_top);
            let annotate = |hit: &mut FusedHit, d: usize| {
                if let Some(&r) = dense_rank.get(&d) {
                    hit.provenance.set(Ranker::Sbert, r);
                }
                if let Some(&r) = tfidf_rank.get(&d) {
                    hit.provenance.set(Ranker::Tfidf, r);
                }
            };

            let mut result = if mode == Ranker::Hybrid {
                single(hybrid, Ranker::Hybrid)
            } else {
                let bm25 = top_n(index.bm25().scores_with(&tokens, params.w, params.k1, params.b)?, n);
                let mut fused = fuse_rrf(&ids(&hybrid, Ranker::Hybrid), &ids(&bm25, Ranker::Bm25), params.rrf_k)?;
                fused.hits.truncate(params.top_m);
                fused
            };
            for hit in &mut result.hits {
                let d = index.ordinal(&hit.doc_id).expect("hit ids come from the index");
                annotate(hit, d);
            }
            Ok(result)
        }
    }
}

/// Runs a batch of queries on a pool of `threads` workers (0 = rayon's
/// default). Results are in input order regardless of thread count.
pub fn retrieve_batch(
    index: &HybridIndex,
    provider: Option<&dyn EmbeddingProvider>,
    queries: &[Query],
    params: &FusionParams,
    mode: Ranker,
    threads: usize,
) -> Result<Vec<FusedResult>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Invalid {
            what: "thread pool",
            value: e.to_string(),
        })?;
    pool.install(|| {
        queries
            .par_iter()
            .map(|q| retrieve(index, provider, q, params, mode))
            .collect()
    })
}
