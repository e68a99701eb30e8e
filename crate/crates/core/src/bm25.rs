//! Okapi BM25 over the question and answer fields.
//!
//! Each field is scored as its own collection (own postings, df and average
//! length) and the two field scores are mixed with the same weight `w` used
//! for TF-IDF. Query terms are deduplicated before scoring.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::corpus::FaqDoc;
use crate::error::{Error, Result};
use crate::ranking::top_n;
use crate::textproc::{tokenize, TokenStream};

pub const DEFAULT_K1: f64 = 1.2;
pub const DEFAULT_B: f64 = 0.75;

/// `ln(1 + (n - df + 0.5) / (df + 0.5))`, always positive.
pub fn idf(n_docs: usize, df: usize) -> f64 {
    let (n, df) = (n_docs as f64, df as f64);
    (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "FieldData", into = "FieldData")]
pub struct FieldIndex {
    terms: Vec<String>,
    postings: Vec<Vec<(u32, u32)>>,
    doc_len: Vec<u32>,
    avgdl: f64,
    lookup: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct FieldData {
    avgdl: f64,
    doc_len: Vec<u32>,
    terms: Vec<String>,
    postings: Vec<Vec<(u32, u32)>>,
}

impl From<FieldData> for FieldIndex {
    fn from(d: FieldData) -> Self {
        let lookup = d.terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        FieldIndex {
            terms: d.terms,
            postings: d.postings,
            doc_len: d.doc_len,
            avgdl: d.avgdl,
            lookup,
        }
    }
}

impl From<FieldIndex> for FieldData {
    fn from(f: FieldIndex) -> Self {
        FieldData {
            avgdl: f.avgdl,
            doc_len: f.doc_len,
            terms: f.terms,
            postings: f.postings,
        }
    }
}

impl FieldIndex {
    fn build<'a>(fields: impl Iterator<Item = &'a str>) -> Self {
        let mut map: BTreeMap<String, Vec<(u32, u32)>> = BTreeMap::new();
        let mut doc_len = Vec::new();
        for (doc, text) in fields.enumerate() {
            let tokens = tokenize(text);
            doc_len.push(tokens.len() as u32);
            let mut tf: BTreeMap<String, u32> = BTreeMap::new();
            for t in tokens.into_tokens() {
                *tf.entry(t).or_default() += 1;
            }
            for (t, c) in tf {
                map.entry(t).or_default().push((doc as u32, c));
            }
        }
        let total: u64 = doc_len.iter().map(|&l| u64::from(l)).sum();
        let avgdl = if doc_len.is_empty() {
            0.0
        } else {
            total as f64 / doc_len.len() as f64
        };
        let (terms, postings) = map.into_iter().unzip();
        FieldData {
            avgdl,
            doc_len,
            terms,
            postings,
        }
        .into()
    }

    pub fn avgdl(&self) -> f64 {
        self.avgdl
    }

    pub fn doc_len(&self, doc: usize) -> u32 {
        self.doc_len[doc]
    }

    pub fn df(&self, term: &str) -> usize {
        self.lookup.get(term).map_or(0, |&i| self.postings[i].len())
    }

    fn postings(&self, term: &str) -> &[(u32, u32)] {
        self.lookup.get(term).map_or(&[], |&i| &self.postings[i])
    }

    fn tf(&self, term: &str, doc: usize) -> u32 {
        let p = self.postings(term);
        p.binary_search_by_key(&(doc as u32), |&(d, _)| d).map_or(0, |i| p[i].1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bm25Index {
    k1: f64,
    b: f64,
    n_docs: usize,
    question: FieldIndex,
    answer: FieldIndex,
}

fn term_weight(n_docs: usize, field: &FieldIndex, term: &str, tf: u32, doc: usize, k1: f64, b: f64) -> f64 {
    let tf = f64::from(tf);
    let dl = f64::from(field.doc_len[doc]);
    let norm = k1 * (1.0 - b + b * dl / field.avgdl);
    idf(n_docs, field.df(term)) * tf * (k1 + 1.0) / (tf + norm)
}

fn distinct(query: &TokenStream) -> Vec<&str> {
    let mut seen = HashSet::new();
    query.iter().filter(|t| seen.insert(*t)).collect()
}

impl Bm25Index {
    pub fn build(corpus: &[FaqDoc], k1: f64, b: f64) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        if !(k1 > 0.0 && k1.is_finite()) {
            return Err(Error::OutOfRange {
                name: "k1",
                value: k1,
                expected: "> 0",
            });
        }
        crate::tfidf::check_unit("b", b)?;
        let question = FieldIndex::build(corpus.iter().map(|d| d.question.as_str()));
        if question.avgdl <= 0.0 {
            return Err(Error::NoTokens);
        }
        let answer = FieldIndex::build(corpus.iter().map(|d| d.answer.as_str()));
        Ok(Bm25Index {
            k1,
            b,
            n_docs: corpus.len(),
            question,
            answer,
        })
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn k1(&self) -> f64 {
        self.k1
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn question_field(&self) -> &FieldIndex {
        &self.question
    }

    pub fn answer_field(&self) -> &FieldIndex {
        &self.answer
    }

    fn term_weight(&self, field: &FieldIndex, term: &str, tf: u32, doc: usize) -> f64 {
        term_weight(self.n_docs, field, term, tf, doc, self.k1, self.b)
    }

    fn field_score(&self, field: &FieldIndex, terms: &[&str], doc: usize) -> f64 {
        terms
            .iter()
            .map(|t| match field.tf(t, doc) {
                0 => 0.0,
                tf => self.term_weight(field, t, tf, doc),
            })
            .sum()
    }

    /// `w * bm25_question + (1 - w) * bm25_answer` for one document.
    pub fn score(&self, query: &TokenStream, doc: usize, w: f64) -> Result<f64> {
        crate::tfidf::check_unit("w", w)?;
        if doc >= self.n_docs {
            return Err(Error::UnknownDoc(doc.to_string()));
        }
        let terms = distinct(query);
        Ok(w * self.field_score(&self.question, &terms, doc) + (1.0 - w) * self.field_score(&self.answer, &terms, doc))
    }

    /// Nonzero scores of all matching documents, ascending document order.
    pub fn scores(&self, query: &TokenStream, w: f64) -> Result<Vec<(usize, f64)>> {
        self.scores_with(query, w, self.k1, self.b)
    }

    /// Like [`Bm25Index::scores`] with `k1` and `b` overridden; the postings
    /// and length statistics do not depend on them.
    pub fn scores_with(&self, query: &TokenStream, w: f64, k1: f64, b: f64) -> Result<Vec<(usize, f64)>> {
        crate::tfidf::check_unit("w", w)?;
        let mut acc = vec![0.0; self.n_docs];
        let mut touched = vec![false; self.n_docs];
        for t in distinct(query) {
            for (field, weight) in [(&self.question, w), (&self.answer, 1.0 - w)] {
                for &(d, tf) in field.postings(t) {
                    acc[d as usize] += weight * term_weight(self.n_docs, field, t, tf, d as usize, k1, b);
                    touched[d as usize] = true;
                }
            }
        }
        Ok((0..self.n_docs)
            .filter(|&d| touched[d] && acc[d] > 0.0)
            .map(|d| (d, acc[d]))
            .collect())
    }

    /// Top `top_n` documents by descending score, ties by ascending document
    /// ordinal. Zero-score documents are never returned.
    pub fn rank(&self, query: &TokenStream, w: f64, top_n_docs: usize) -> Result<Vec<(usize, f64)>> {
        Ok(top_n(self.scores(query, w)?, top_n_docs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus() -> Vec<FaqDoc> {
        vec![
            FaqDoc::new("a", "fha loan limits", "limits vary by county"),
            FaqDoc::new("b", "conventional loan", "dti up to fifty"),
            FaqDoc::new("c", "second home reserves", ""),
            FaqDoc::new("d", "manual underwriting", "allowed for fha"),
            FaqDoc::new("e", "fha fha streamline", "refinance program"),
        ]
    }

    #[test]
    fn single_doc_avgdl() {
        let idx = Bm25Index::build(&[FaqDoc::new("a", "one two three", "x")], 1.2, 0.75).unwrap();
        assert_eq!(idx.question_field().avgdl(), 3.0);
        assert_eq!(idx.answer_field().avgdl(), 1.0);
    }

    #[test]
    fn idf_of_ubiquitous_term() {
        let n = 7;
        assert_eq!(idf(n, n), (1.0 + 0.5 / (n as f64 + 0.5)).ln());
        assert!(idf(n, n) > 0.0);
    }

    #[test]
    fn no_match_scores_zero() {
        let idx = Bm25Index::build(&corpus(), 1.2, 0.75).unwrap();
        assert_eq!(idx.score(&tokenize("jumbo"), 0, 0.5).unwrap(), 0.0);
        assert!(idx.rank(&tokenize("jumbo"), 0.5, 10).unwrap().is_empty());
    }

    #[test]
    fn answer_only_term_with_w_one() {
        let idx = Bm25Index::build(&corpus(), 1.2, 0.75).unwrap();
        assert_eq!(idx.score(&tokenize("county"), 0, 1.0).unwrap(), 0.0);
        assert!(idx.score(&tokenize("county"), 0, 0.0).unwrap() > 0.0);
    }

    #[test]
    fn unknown_doc() {
        let idx = Bm25Index::build(&corpus(), 1.2, 0.75).unwrap();
        assert!(matches!(idx.score(&tokenize("fha"), 5, 0.5), Err(Error::UnknownDoc(_))));
    }

    #[test]
    fn rank_single_match_and_truncation() {
        let idx = Bm25Index::build(&corpus(), 1.2, 0.75).unwrap();
        assert_eq!(idx.rank(&tokenize("reserves"), 0.5, 200).unwrap().len(), 1);
        assert!(idx.rank(&tokenize("loan fha home"), 0.5, 200).unwrap().len() <= 5);
        assert_eq!(idx.rank(&tokenize("loan fha home"), 0.5, 2).unwrap().len(), 2);
    }

    #[test]
    fn ties_by_ordinal() {
        let docs = vec![
            FaqDoc::new("a", "rate lock", ""),
            FaqDoc::new("b", "rate lock", ""),
            FaqDoc::new("c", "other", ""),
        ];
        let idx = Bm25Index::build(&docs, 1.2, 0.75).unwrap();
        let r = idx.rank(&tokenize("rate"), 0.5, 10).unwrap();
        assert_eq!(r.iter().map(|x| x.0).collect::<Vec<_>>(), [0, 1]);
        assert_eq!(r[0].1, r[1].1);
    }

    #[test]
    fn rank_agrees_with_exhaustive_scoring() {
        let idx = Bm25Index::build(&corpus(), 1.2, 0.75).unwrap();
        for q in ["fha loan", "home reserves fha", "refinance dti county"] {
            let q = tokenize(q);
            for w in [0.0, 0.5, 1.0] {
                let mut all: Vec<(usize, f64)> = (0..5)
                    .map(|d| (d, idx.score(&q, d, w).unwrap()))
                    .filter(|x| x.1 > 0.0)
                    .collect();
                all.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
                let ranked = idx.rank(&q, w, 10).unwrap();
                assert_eq!(ranked.len(), all.len());
                for (x, y) in ranked.iter().zip(&all) {
                    assert_eq!(x.0, y.0);
                    assert!((x.1 - y.1).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn bad_params() {
        assert!(Bm25Index::build(&corpus(), 0.0, 0.75).is_err());
        assert!(Bm25Index::build(&corpus(), 1.2, 1.5).is_err());
        assert!(matches!(Bm25Index::build(&[], 1.2, 0.75), Err(Error::EmptyCorpus)));
    }
}
