//! TREC interchange formats.
//!
//! Qrels: `query-id 0 doc-id grade`, grade in {0, 1, 2}.
//! Run:   `query-id Q0 doc-id rank score tag`.
//! Fields are whitespace-separated; blank lines are ignored.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::ranking::FusedResult;

pub const MAX_GRADE: u8 = 2;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Qrels {
    judgments: BTreeMap<String, HashMap<String, u8>>,
}

impl Qrels {
    pub fn insert(&mut self, query: &str, doc: &str, grade: u8) -> Result<()> {
        if grade > MAX_GRADE {
            return Err(Error::Invalid {
                what: "grade",
                value: grade.to_string(),
            });
        }
        let q = self.judgments.entry(query.to_string()).or_default();
        if q.insert(doc.to_string(), grade).is_some() {
            return Err(Error::Invalid {
                what: "qrels pair (duplicate)",
                value: format!("{query} {doc}"),
            });
        }
        Ok(())
    }

    pub fn grade(&self, query: &str, doc: &str) -> Option<u8> {
        self.judgments.get(query)?.get(doc).copied()
    }

    pub fn query(&self, query: &str) -> Option<&HashMap<String, u8>> {
        self.judgments.get(query)
    }

    pub fn queries(&self) -> impl Iterator<Item = &str> {
        self.judgments.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.judgments.values().map(HashMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.judgments.is_empty()
    }
}

pub fn parse_qrels(text: &str) -> Result<Qrels> {
    let mut qrels = Qrels::default();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let [query, _iter, doc, grade] = fields[..] else {
            return Err(Error::malformed(
                lineno,
                format!("expected 4 fields, found {}", fields.len()),
            ));
        };
        let grade: u8 = grade
            .parse()
            .ok()
            .filter(|&g| g <= MAX_GRADE)
            .ok_or_else(|| Error::malformed(lineno, format!("grade {grade:?} not in {{0, 1, 2}}")))?;
        qrels
            .insert(query, doc, grade)
            .map_err(|_| Error::malformed(lineno, format!("duplicate judgment for ({query}, {doc})")))?;
    }
    Ok(qrels)
}

pub fn load_qrels(path: impl AsRef<Path>) -> Result<Qrels> {
    let path = path.as_ref();
    parse_qrels(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub doc_id: String,
    pub rank: usize,
    pub score: f64,
    pub tag: String,
}

/// Ranked records per query, in order of first appearance.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunFile {
    queries: Vec<(String, Vec<RunRecord>)>,
}

impl RunFile {
    /// Builds a run from per-query records, validating rank and score
    /// order. Records for a query may arrive in any order.
    pub fn from_queries(queries: Vec<(String, Vec<RunRecord>)>) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut out = Vec::with_capacity(queries.len());
        for (qid, mut records) in queries {
            if !seen.insert(qid.clone()) {
                return Err(Error::Invalid {
                    what: "run (query listed twice)",
                    value: qid,
                });
            }
            records.sort_by_key(|r| r.rank);
            let mut docs = HashSet::new();
            for (i, r) in records.iter().enumerate() {
                if r.rank != i + 1 {
                    return Err(Error::Invalid {
                        what: "run ranks (must be 1..n)",
                        value: format!("query {qid} rank {}", r.rank),
                    });
                }
                if i > 0 && r.score > records[i - 1].score {
                    return Err(Error::Invalid {
                        what: "run scores (must not increase with rank)",
                        value: format!("query {qid} rank {}", r.rank),
                    });
                }
                if !docs.insert(r.doc_id.as_str()) {
                    return Err(Error::Invalid {
                        what: "run (duplicate document)",
                        value: format!("query {qid} doc {}", r.doc_id),
                    });
                }
            }
            out.push((qid, records));
        }
        Ok(RunFile { queries: out })
    }

    pub fn from_results(results: &[FusedResult], tag: &str) -> Self {
        RunFile {
            queries: results
                .iter()
                .map(|r| {
                    let records = r
                        .hits
                        .iter()
                        .enumerate()
                        .map(|(i, h)| RunRecord {
                            doc_id: h.doc_id.clone(),
                            rank: i + 1,
                            score: h.score,
                            tag: tag.to_string(),
                        })
                        .collect();
                    (r.query_id.clone(), records)
                })
                .collect(),
        }
    }

    pub fn queries(&self) -> impl Iterator<Item = (&str, &[RunRecord])> {
        self.queries.iter().map(|(q, r)| (q.as_str(), r.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    pub fn to_trec(&self) -> String {
        let mut out = String::new();
        for (qid, records) in &self.queries {
            for r in records {
                let _ = writeln!(out, "{qid} Q0 {} {} {:.10} {}", r.doc_id, r.rank, r.score, r.tag);
            }
        }
        out
    }
}

pub fn parse_run(text: &str) -> Result<RunFile> {
    let mut order: Vec<String> = Vec::new();
    let mut by_query: HashMap<String, Vec<RunRecord>> = HashMap::new();
    let mut line_of: HashMap<(String, usize), usize> = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let [query, _q0, doc, rank, score, tag] = fields[..] else {
            return Err(Error::malformed(
                lineno,
                format!("expected 6 fields, found {}", fields.len()),
            ));
        };
        let rank: usize = rank
            .parse()
            .ok()
            .filter(|&r| r >= 1)
            .ok_or_else(|| Error::malformed(lineno, format!("bad rank {rank:?}")))?;
        let score: f64 = score
            .parse()
            .ok()
            .filter(|s: &f64| s.is_finite())
            .ok_or_else(|| Error::malformed(lineno, format!("bad score {score:?}")))?;
        if line_of.insert((query.to_string(), rank), lineno).is_some() {
            return Err(Error::malformed(
                lineno,
                format!("duplicate rank {rank} for query {query}"),
            ));
        }
        let records = by_query.entry(query.to_string()).or_insert_with(|| {
            order.push(query.to_string());
            Vec::new()
        });
        if records.iter().any(|r| r.doc_id == doc) {
            return Err(Error::malformed(
                lineno,
                format!("duplicate document {doc} for query {query}"),
            ));
        }
        records.push(RunRecord {
            doc_id: doc.to_string(),
            rank,
            score,
            tag: tag.to_string(),
        });
    }
    let queries = order
        .into_iter()
        .map(|q| {
            let r = by_query.remove(&q).unwrap_or_default();
            (q, r)
        })
        .collect();
    RunFile::from_queries(queries)
}

pub fn load_run(path: impl AsRef<Path>) -> Result<RunFile> {
    let path = path.as_ref();
    parse_run(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}

pub fn format_run(results: &[FusedResult], tag: &str) -> String {
    RunFile::from_results(results, tag).to_trec()
}
