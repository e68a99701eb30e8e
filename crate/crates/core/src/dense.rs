//! Dense question embeddings and exact cosine KNN.
//!
//! Embedding interchange file (UTF-8, one record per line):
//!
//! ```text
//! # faqsearch-embeddings v1 dim=4 provider=all-MiniLM-L6-v2
//! faq-1    0.5 0.5 -0.5 0.5
//! faq-2    1 0 0 0
//! ```
//!
//! The header is the first line. Each record is an id, a tab, and `dim`
//! space-separated decimal floats. Rows are re-normalized to unit length on
//! load, so writers need not be bit-exact.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::corpus::FaqDoc;
use crate::error::{Error, Result};
use crate::ranking::top_n;
use crate::textproc::tokenize;

const MAGIC: &str = "# faqsearch-embeddings v1";

/// Maps text to a fixed-dimension vector.
pub trait EmbeddingProvider: Send + Sync {
    fn dim(&self) -> usize;
    fn tag(&self) -> &str;
    fn embed(&self, text: &str) -> Result<Vec<f64>>;
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

fn unit_or_e1(mut v: Vec<f64>) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        v.iter_mut().for_each(|x| *x = 0.0);
        v[0] = 1.0;
    } else {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    v
}

/// Signed feature hashing of tokens and token bigrams. Deterministic and
/// model-free; it has lexical overlap semantics only.
pub fn hash_embed(text: &str, dim: usize) -> Vec<f64> {
    assert!(dim >= 8, "hash embedding dimension must be at least 8");
    let tokens = tokenize(text);
    let mut v = vec![0.0; dim];
    let mut add = |key: &str| {
        let h = fnv1a(key.as_bytes());
        let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
        v[(h % dim as u64) as usize] += sign;
    };
    let toks = tokens.tokens();
    for t in toks {
        add(t);
    }
    for pair in toks.windows(2) {
        add(&format!("{} {}", pair[0], pair[1]));
    }
    unit_or_e1(v)
}

#[derive(Debug, Clone)]
pub struct HashEmbedder {
    dim: usize,
    tag: String,
}

impl HashEmbedder {
    pub const TAG_PREFIX: &'static str = "hash-v1";

    pub fn new(dim: usize) -> Result<Self> {
        if dim < 8 {
            return Err(Error::OutOfRange {
                name: "dim",
                value: dim as f64,
                expected: ">= 8",
            });
        }
        Ok(HashEmbedder {
            dim,
            tag: format!("{}-d{dim}", Self::TAG_PREFIX),
        })
    }

    /// Recognizes tags produced by [`HashEmbedder::new`].
    pub fn from_tag(tag: &str) -> Option<Self> {
        let dim = tag.strip_prefix(Self::TAG_PREFIX)?.strip_prefix("-d")?.parse().ok()?;
        HashEmbedder::new(dim).ok()
    }
}

impl EmbeddingProvider for HashEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn tag(&self) -> &str {
        &self.tag
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>> {
        Ok(hash_embed(text, self.dim))
    }
}

/// Query vectors computed ahead of time by an external encoder, looked up by
/// exact query text.
#[derive(Debug, Clone)]
pub struct PrecomputedEmbedder {
    dim: usize,
    tag: String,
    vectors: HashMap<String, Vec<f64>>,
}

impl PrecomputedEmbedder {
    /// `texts` maps record ids in `file` to query text.
    pub fn new(file: EmbeddingFile, texts: &HashMap<String, String>) -> Result<Self> {
        let mut vectors = HashMap::new();
        for (id, v) in file.rows {
            if let Some(text) = texts.get(&id) {
                vectors.insert(text.clone(), unit_or_e1(v));
            }
        }
        Ok(PrecomputedEmbedder {
            dim: file.dim,
            tag: file.provider,
            vectors,
        })
    }
}

impl EmbeddingProvider for PrecomputedEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn tag(&self) -> &str {
        &self.tag
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>> {
        self.vectors
            .get(text)
            .cloned()
            .ok_or_else(|| Error::MissingEmbedding(text.to_string()))
    }
}

/// Parsed embedding interchange file, rows in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingFile {
    pub dim: usize,
    pub provider: String,
    pub rows: Vec<(String, Vec<f64>)>,
}

fn parse_header(line: &str) -> Result<(usize, String)> {
    let rest = line
        .strip_prefix(MAGIC)
        .ok_or_else(|| Error::malformed(1, format!("expected header starting with {MAGIC:?}")))?;
    let rest = rest.trim_start();
    let rest = rest
        .strip_prefix("dim=")
        .ok_or_else(|| Error::malformed(1, "header missing dim="))?;
    let (dim, rest) = rest.split_once(' ').unwrap_or((rest, ""));
    let dim: usize = dim
        .parse()
        .map_err(|_| Error::malformed(1, format!("bad dim {dim:?}")))?;
    if dim == 0 {
        return Err(Error::malformed(1, "dim must be positive"));
    }
    let provider = rest
        .trim()
        .strip_prefix("provider=")
        .ok_or_else(|| Error::malformed(1, "header missing provider="))?;
    Ok((dim, provider.to_string()))
}

pub fn parse_embedding_file(text: &str) -> Result<EmbeddingFile> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::malformed(1, "missing header"))?;
    let (dim, provider) = parse_header(header)?;
    let mut rows = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let (id, values) = line
            .split_once('\t')
            .ok_or_else(|| Error::malformed(lineno, "expected <id>\\t<values>"))?;
        if id.is_empty() {
            return Err(Error::malformed(lineno, "empty id"));
        }
        let v: Vec<f64> = values
            .split_ascii_whitespace()
            .map(|x| {
                x.parse::<f64>()
                    .map_err(|_| Error::malformed(lineno, format!("bad number {x:?} in row {id:?}")))
            })
            .collect::<Result<_>>()?;
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: v.len(),
            });
        }
        if let Some(bad) = v.iter().find(|x| !x.is_finite()) {
            return Err(Error::malformed(
                lineno,
                format!("non-finite value {bad} in row {id:?}"),
            ));
        }
        if !seen.insert(id.to_string()) {
            return Err(Error::DuplicateId(id.to_string()));
        }
        rows.push((id.to_string(), v));
    }
    Ok(EmbeddingFile { dim, provider, rows })
}

pub fn read_embedding_file(path: impl AsRef<Path>) -> Result<EmbeddingFile> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_embedding_file(&text)
}

pub fn format_embedding_file(
    dim: usize,
    provider: &str,
    rows: impl IntoIterator<Item = (impl AsRef<str>, impl AsRef<[f64]>)>,
) -> String {
    let mut out = format!("{MAGIC} dim={dim} provider={provider}\n");
    for (id, v) in rows {
        out.push_str(id.as_ref());
        out.push('\t');
        for (j, x) in v.as_ref().iter().enumerate() {
            if j > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{x}");
        }
        out.push('\n');
    }
    out
}

/// Unit-normalized question embeddings, one row per corpus document.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    dim: usize,
    provider: String,
    data: Vec<f64>,
}

impl EmbeddingMatrix {
    /// Align `file` rows to `corpus` order and re-normalize them.
    pub fn from_file(file: &EmbeddingFile, corpus: &[FaqDoc]) -> Result<Self> {
        let by_id: HashMap<&str, &Vec<f64>> = file.rows.iter().map(|(id, v)| (id.as_str(), v)).collect();
        let mut data = Vec::with_capacity(corpus.len() * file.dim);
        for doc in corpus {
            let row = by_id
                .get(doc.id.as_str())
                .ok_or_else(|| Error::MissingEmbedding(doc.id.clone()))?;
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                return Err(Error::Invalid {
                    what: "embedding (zero vector)",
                    value: doc.id.clone(),
                });
            }
            data.extend(row.iter().map(|x| x / norm));
        }
        Ok(EmbeddingMatrix {
            dim: file.dim,
            provider: file.provider.clone(),
            data,
        })
    }

    pub fn from_provider(provider: &dyn EmbeddingProvider, corpus: &[FaqDoc]) -> Result<Self> {
        let dim = provider.dim();
        let mut data = Vec::with_capacity(corpus.len() * dim);
        for doc in corpus {
            let v = provider.embed(&doc.question)?;
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: v.len(),
                });
            }
            data.extend(unit_or_e1(v));
        }
        Ok(EmbeddingMatrix {
            dim,
            provider: provider.tag().to_string(),
            data,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn provider(&self) -> &str {
        &self.provider
    }

    pub fn n_rows(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    /// Cosine of `query` (any norm) against every row.
    pub fn cosines(&self, query: &[f64]) -> Result<Vec<f64>> {
        if query.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: query.len(),
            });
        }
        let norm = query.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Ok(vec![0.0; self.n_rows()]);
        }
        Ok(self
            .rows()
            .map(|r| r.iter().zip(query).map(|(a, b)| a * b).sum::<f64>() / norm)
            .collect())
    }

    /// Exhaustive top-`n` by cosine, ties by ascending row ordinal.
    pub fn knn(&self, query: &[f64], n: usize) -> Result<Vec<(usize, f64)>> {
        let scores = self.cosines(query)?;
        Ok(top_n(scores.into_iter().enumerate().collect(), n))
    }
}

pub fn load_embeddings(path: impl AsRef<Path>, corpus: &[FaqDoc]) -> Result<EmbeddingMatrix> {
    EmbeddingMatrix::from_file(&read_embedding_file(path)?, corpus)
}
