use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use faqsearch_core::dense::{read_embedding_file, PrecomputedEmbedder};
use faqsearch_core::{EmbeddingProvider, Error, HybridIndex, Query};

use crate::error::{CliError, Result};

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

/// Queries file: one `qid<TAB>text` per line; blank lines and lines starting
/// with `#` are skipped.
pub fn parse_queries(text: &str) -> Result<Vec<Query>> {
    let mut seen = HashSet::new();
    let mut queries = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let malformed = |message: &str| Error::Malformed {
            line: i + 1,
            message: message.into(),
        };
        let (id, q) = line
            .split_once('\t')
            .ok_or_else(|| malformed("expected qid<TAB>text"))?;
        let id = id.trim();
        if id.is_empty() {
            return Err(malformed("empty query id").into());
        }
        if !seen.insert(id.to_string()) {
            return Err(malformed(&format!("duplicate query id {id:?}")).into());
        }
        queries.push(Query::new(id, q.trim()));
    }
    Ok(queries)
}

pub fn load_queries(path: &Path) -> Result<Vec<Query>> {
    parse_queries(&read_text(path)?)
}

/// The query embedder to use with `index`: vectors from `embeddings` (keyed
/// by query id) when given, otherwise the index's built-in one, if any.
pub fn provider(
    index: &HybridIndex,
    embeddings: Option<&Path>,
    queries: &[Query],
) -> Result<Option<Box<dyn EmbeddingProvider>>> {
    let Some(path) = embeddings else {
        return Ok(index
            .builtin_provider()
            .map(|p| Box::new(p) as Box<dyn EmbeddingProvider>));
    };
    let file = read_embedding_file(path)?;
    if file.provider != index.dense().provider() {
        return Err(Error::Invalid {
            what: "query embedding provider",
            value: format!("{} (index uses {})", file.provider, index.dense().provider()),
        }
        .into());
    }
    let texts: HashMap<String, String> = queries.iter().map(|q| (q.id.clone(), q.text.clone())).collect();
    if let Some(q) = queries.iter().find(|q| !file.rows.iter().any(|(id, _)| *id == q.id)) {
        return Err(Error::MissingEmbedding(q.id.clone()).into());
    }
    Ok(Some(Box::new(PrecomputedEmbedder::new(file, &texts)?)))
}
