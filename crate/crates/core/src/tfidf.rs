//! TF-IDF vectors for the question and answer fields and the field-weighted
//! cosine score.
//!
//! One vocabulary is fitted over question+answer text, one document per FAQ
//! pair, with smoothed idf `ln((1 + n) / (1 + df)) + 1`. Vectors use raw
//! term counts times idf and are L2-normalized.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::corpus::FaqDoc;
use crate::error::{Error, Result};
use crate::textproc::{tokenize, TokenStream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "VocabularyData", into = "VocabularyData")]
pub struct Vocabulary {
    terms: Vec<String>,
    idf: Vec<f64>,
    n_docs: usize,
    lookup: HashMap<String, u32>,
}

#[derive(Serialize, Deserialize)]
struct VocabularyData {
    n_docs: usize,
    terms: Vec<String>,
    idf: Vec<f64>,
}

impl From<VocabularyData> for Vocabulary {
    fn from(d: VocabularyData) -> Self {
        Vocabulary::from_parts(d.terms, d.idf, d.n_docs)
    }
}

impl From<Vocabulary> for VocabularyData {
    fn from(v: Vocabulary) -> Self {
        VocabularyData {
            n_docs: v.n_docs,
            terms: v.terms,
            idf: v.idf,
        }
    }
}

impl Vocabulary {
    fn from_parts(terms: Vec<String>, idf: Vec<f64>, n_docs: usize) -> Self {
        let lookup = terms.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        Vocabulary {
            terms,
            idf,
            n_docs,
            lookup,
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn index_of(&self, term: &str) -> Option<u32> {
        self.lookup.get(term).copied()
    }

    pub fn term(&self, index: u32) -> &str {
        &self.terms[index as usize]
    }

    pub fn idf(&self, term: &str) -> Option<f64> {
        self.index_of(term).map(|i| self.idf[i as usize])
    }
}

/// Sparse vector with strictly increasing term indices.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SparseVec {
    entries: Vec<(u32, f64)>,
}

impl SparseVec {
    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &SparseVec) -> f64 {
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        let (a, b) = (&self.entries, &other.entries);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += a[i].1 * b[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    /// Cosine similarity; zero if either side is the zero vector.
    pub fn cosine(&self, other: &SparseVec) -> f64 {
        let denom = self.norm() * other.norm();
        if denom == 0.0 {
            0.0
        } else {
            self.dot(other) / denom
        }
    }
}

pub fn fit(corpus: &[FaqDoc]) -> Result<Vocabulary> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    for doc in corpus {
        let mut seen = HashSet::new();
        for t in tokenize(&doc.question)
            .into_tokens()
            .into_iter()
            .chain(tokenize(&doc.answer).into_tokens())
        {
            if seen.insert(t.clone()) {
                *df.entry(t).or_default() += 1;
            }
        }
    }
    if df.is_empty() {
        return Err(Error::NoTokens);
    }
    let n = corpus.len() as f64;
    let (terms, idf) = df
        .into_iter()
        .map(|(t, d)| {
            let idf = ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0;
            (t, idf)
        })
        .unzip();
    Ok(Vocabulary::from_parts(terms, idf, corpus.len()))
}

/// TF-IDF vector for a token stream; out-of-vocabulary tokens are dropped.
pub fn vectorize(vocab: &Vocabulary, tokens: &TokenStream) -> SparseVec {
    let mut counts: BTreeMap<u32, f64> = BTreeMap::new();
    for t in tokens.iter() {
        if let Some(i) = vocab.index_of(t) {
            *counts.entry(i).or_default() += 1.0;
        }
    }
    let mut entries: Vec<(u32, f64)> = counts
        .into_iter()
        .map(|(i, tf)| (i, tf * vocab.idf[i as usize]))
        .collect();
    let norm = entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
    if norm > 0.0 {
        for e in &mut entries {
            e.1 /= norm;
        }
    }
    SparseVec { entries }
}

pub(crate) fn check_unit(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name,
            value,
            expected: "[0, 1]",
        })
    }
}

/// `w * cos(query, question) + (1 - w) * cos(query, answer)`.
pub fn score_tfidf(query: &SparseVec, doc_q: &SparseVec, doc_a: &SparseVec, w: f64) -> Result<f64> {
    check_unit("w", w)?;
    Ok(w * query.cosine(doc_q) + (1.0 - w) * query.cosine(doc_a))
}

/// Fitted vocabulary plus per-document question and answer vectors, with
/// term-major postings for sparse accumulation at query time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "TfidfData", into = "TfidfData")]
pub struct TfidfIndex {
    vocab: Vocabulary,
    questions: Vec<SparseVec>,
    answers: Vec<SparseVec>,
    question_postings: Vec<Vec<(u32, f64)>>,
    answer_postings: Vec<Vec<(u32, f64)>>,
}

#[derive(Serialize, Deserialize)]
struct TfidfData {
    vocabulary: Vocabulary,
    questions: Vec<SparseVec>,
    answers: Vec<SparseVec>,
}

impl From<TfidfData> for TfidfIndex {
    fn from(d: TfidfData) -> Self {
        TfidfIndex::assemble(d.vocabulary, d.questions, d.answers)
    }
}

impl From<TfidfIndex> for TfidfData {
    fn from(i: TfidfIndex) -> Self {
        TfidfData {
            vocabulary: i.vocab,
            questions: i.questions,
            answers: i.answers,
        }
    }
}

fn postings(n_terms: usize, vecs: &[SparseVec]) -> Vec<Vec<(u32, f64)>> {
    let mut out = vec![Vec::new(); n_terms];
    for (doc, v) in vecs.iter().enumerate() {
        for &(t, w) in v.entries() {
            out[t as usize].push((doc as u32, w));
        }
    }
    out
}

impl TfidfIndex {
    pub fn build(corpus: &[FaqDoc]) -> Result<Self> {
        Ok(Self::build_with_vocabulary(fit(corpus)?, corpus))
    }

    /// Vectorizes `corpus` against an already fitted vocabulary.
    pub fn build_with_vocabulary(vocab: Vocabulary, corpus: &[FaqDoc]) -> Self {
        let questions = corpus
            .iter()
            .map(|d| vectorize(&vocab, &tokenize(&d.question)))
            .collect();
        let answers = corpus.iter().map(|d| vectorize(&vocab, &tokenize(&d.answer))).collect();
        Self::assemble(vocab, questions, answers)
    }

    fn assemble(vocab: Vocabulary, questions: Vec<SparseVec>, answers: Vec<SparseVec>) -> Self {
        let question_postings = postings(vocab.len(), &questions);
        let answer_postings = postings(vocab.len(), &answers);
        TfidfIndex {
            vocab,
            questions,
            answers,
            question_postings,
            answer_postings,
        }
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn n_docs(&self) -> usize {
        self.questions.len()
    }

    pub fn question_vec(&self, doc: usize) -> &SparseVec {
        &self.questions[doc]
    }

    pub fn answer_vec(&self, doc: usize) -> &SparseVec {
        &self.answers[doc]
    }

    pub fn vectorize(&self, tokens: &TokenStream) -> SparseVec {
        vectorize(&self.vocab, tokens)
    }

    /// Field-weighted TF-IDF score of every document with a nonzero score,
    /// in ascending document order. `query` must be unit-norm (or zero).
    pub fn scores(&self, query: &SparseVec, w: f64) -> Result<Vec<(usize, f64)>> {
        check_unit("w", w)?;
        let n = self.n_docs();
        let mut q_acc = vec![0.0; n];
        let mut a_acc = vec![0.0; n];
        let mut touched = vec![false; n];
        for &(t, qw) in query.entries() {
            for &(d, dw) in &self.question_postings[t as usize] {
                q_acc[d as usize] += qw * dw;
                touched[d as usize] = true;
            }
            for &(d, dw) in &self.answer_postings[t as usize] {
                a_acc[d as usize] += qw * dw;
                touched[d as usize] = true;
            }
        }
        Ok((0..n)
            .filter(|&d| touched[d])
            .map(|d| (d, w * q_acc[d] + (1.0 - w) * a_acc[d]))
            .filter(|&(_, s)| s > 0.0)
            .collect())
    }
}
