//! FAQ-answer documents, corpus files, and corpus statistics.
//!
//! A corpus file is UTF-8 JSON Lines, one document per line:
//!
//! ```text
//! {"id":"faq-1","question":"Is manual underwriting allowed?","answer":"Yes, ...","category":"underwriting","source":"external"}
//! ```
//!
//! `id`, `question` and `answer` are required; `category` may be omitted or
//! null and `source` (`internal` | `external`) defaults to `external`.
//! Blank lines are skipped.

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textproc::tokenize;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Internal,
    #[default]
    External,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaqDoc {
    pub id: String,
    pub question: String,
    pub answer: String,
    #[serde(default)]
    pub category: Option<String>,
    #[serde(default)]
    pub source: Source,
}

impl FaqDoc {
    pub fn new(id: impl Into<String>, question: impl Into<String>, answer: impl Into<String>) -> Self {
        FaqDoc {
            id: id.into(),
            question: question.into(),
            answer: answer.into(),
            category: None,
            source: Source::External,
        }
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if self.id.trim().is_empty() {
            return Err("empty id".into());
        }
        if self.question.trim().is_empty() {
            return Err(format!("document {:?} has an empty question", self.id));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub n_docs: usize,
    pub avg_question_len: f64,
    pub avg_answer_len: f64,
    pub category_coverage: f64,
}

/// Parse a corpus from JSON Lines text. Line numbers in errors are 1-based.
pub fn parse_corpus(text: &str) -> Result<Vec<FaqDoc>> {
    let mut docs = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let doc: FaqDoc = serde_json::from_str(line).map_err(|e| Error::malformed(lineno, e.to_string()))?;
        doc.validate().map_err(|m| Error::malformed(lineno, m))?;
        if !seen.insert(doc.id.clone()) {
            return Err(Error::DuplicateId(doc.id));
        }
        docs.push(doc);
    }
    Ok(docs)
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<FaqDoc>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(&text)
}

pub fn write_corpus(docs: &[FaqDoc], mut out: impl Write) -> std::io::Result<()> {
    for doc in docs {
        serde_json::to_writer(&mut out, doc)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn compute_stats(corpus: &[FaqDoc]) -> Result<CorpusStats> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let n = corpus.len() as f64;
    let (mut q, mut a, mut cat) = (0usize, 0usize, 0usize);
    for doc in corpus {
        q += tokenize(&doc.question).len();
        a += tokenize(&doc.answer).len();
        cat += usize::from(doc.category.is_some());
    }
    Ok(CorpusStats {
        n_docs: corpus.len(),
        avg_question_len: q as f64 / n,
        avg_answer_len: a as f64 / n,
        category_coverage: cat as f64 / n,
    })
}
