use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Sort by descending score, ties by ascending ordinal, keep the first `n`.
pub fn top_n(mut scored: Vec<(usize, f64)>, n: usize) -> Vec<(usize, f64)> {
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    scored.truncate(n);
    scored
}

/// Retrieval pipeline to run for a query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ranker {
    Tfidf,
    Bm25,
    Sbert,
    /// Damped linear combination of dense and TF-IDF scores.
    Hybrid,
    /// Hybrid ranking fused with BM25 by reciprocal rank.
    Rrf,
}

impl Ranker {
    pub const ALL: [Ranker; 5] = [Ranker::Tfidf, Ranker::Bm25, Ranker::Sbert, Ranker::Hybrid, Ranker::Rrf];

    pub fn as_str(self) -> &'static str {
        match self {
            Ranker::Tfidf => "tfidf",
            Ranker::Bm25 => "bm25",
            Ranker::Sbert => "sbert",
            Ranker::Hybrid => "hybrid",
            Ranker::Rrf => "rrf",
        }
    }
}

impl fmt::Display for Ranker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Ranker {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ranker::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| Error::Invalid {
                what: "mode",
                value: s.to_string(),
            })
    }
}

/// One ranker's output for one query. Ranks are implicit and 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    pub query_id: String,
    pub ranker: Ranker,
    pub entries: Vec<(String, f64)>,
}

impl RankedList {
    /// 1-based rank of `doc`, if present.
    pub fn rank_of(&self, doc: &str) -> Option<usize> {
        self.entries.iter().position(|(d, _)| d == doc).map(|i| i + 1)
    }
}

/// Rank of a document in each source list, where applicable.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub tfidf: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub bm25: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sbert: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub hybrid: Option<usize>,
}

impl Provenance {
    pub fn set(&mut self, ranker: Ranker, rank: usize) {
        match ranker {
            Ranker::Tfidf => self.tfidf = Some(rank),
            Ranker::Bm25 => self.bm25 = Some(rank),
            Ranker::Sbert => self.sbert = Some(rank),
            Ranker::Hybrid => self.hybrid = Some(rank),
            Ranker::Rrf => {}
        }
    }

    pub fn get(&self, ranker: Ranker) -> Option<usize> {
        match ranker {
            Ranker::Tfidf => self.tfidf,
            Ranker::Bm25 => self.bm25,
            Ranker::Sbert => self.sbert,
            Ranker::Hybrid => self.hybrid,
            Ranker::Rrf => None,
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for r in [Ranker::Hybrid, Ranker::Sbert, Ranker::Tfidf, Ranker::Bm25] {
            if let Some(rank) = self.get(r) {
                if !first {
                    f.write_str(" ")?;
                }
                write!(f, "{r}:{rank}")?;
                first = false;
            }
        }
        if first {
            f.write_str("-")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusedHit {
    pub doc_id: String,
    pub score: f64,
    pub provenance: Provenance,
}

/// Final ordered output for one query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusedResult {
    pub query_id: String,
    pub ranker: Ranker,
    pub hits: Vec<FusedHit>,
}
