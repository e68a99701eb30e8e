//! Brute-force reimplementation of the scoring pipeline, written directly
//! from the formulas and sharing no code with the engine. Every document is
//! scored; nothing is truncated before the final M.

use std::collections::{BTreeMap, BTreeSet, HashMap};

pub struct Doc {
    pub id: String,
    pub question: String,
    pub answer: String,
    pub embedding: Vec<f64>,
}

pub struct Settings {
    pub alpha: f64,
    pub w: f64,
    pub beta: f64,
    pub k: f64,
    pub k1: f64,
    pub b: f64,
    pub top_m: usize,
    pub prose_intent: bool,
}

pub fn words(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

fn cos_map(a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>) -> f64 {
    let dot: f64 = a.iter().map(|(t, x)| x * b.get(t).unwrap_or(&0.0)).sum();
    let na: f64 = a.values().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.values().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

fn cos_vec(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

pub struct Scores {
    pub dense: Vec<f64>,
    pub tfidf: Vec<f64>,
    pub bm25: Vec<f64>,
    pub hybrid: Vec<f64>,
}

pub fn score_all(docs: &[Doc], query: &str, query_vec: &[f64], s: &Settings) -> Scores {
    let n = docs.len() as f64;
    let q_tokens = words(query);

    // TF-IDF: one document per pair, smoothed idf, raw counts.
    let mut df: HashMap<String, f64> = HashMap::new();
    for d in docs {
        let set: BTreeSet<String> = words(&d.question).into_iter().chain(words(&d.answer)).collect();
        for t in set {
            *df.entry(t).or_default() += 1.0;
        }
    }
    let weigh = |tokens: &[String]| -> BTreeMap<String, f64> {
        let mut m = BTreeMap::new();
        for t in tokens {
            if let Some(d) = df.get(t) {
                *m.entry(t.clone()).or_insert(0.0) += ((1.0 + n) / (1.0 + d)).ln() + 1.0;
            }
        }
        m
    };
    let e_q = weigh(&q_tokens);
    let tfidf: Vec<f64> = docs
        .iter()
        .map(|d| {
            s.w * cos_map(&e_q, &weigh(&words(&d.question))) + (1.0 - s.w) * cos_map(&e_q, &weigh(&words(&d.answer)))
        })
        .collect();

    // BM25 per field, distinct query terms.
    let mut uniq: Vec<String> = Vec::new();
    for t in &q_tokens {
        if !uniq.contains(t) {
            uniq.push(t.clone());
        }
    }
    let field_scores = |field: &dyn Fn(&Doc) -> &str| -> Vec<f64> {
        let toks: Vec<Vec<String>> = docs.iter().map(|d| words(field(d))).collect();
        let avgdl = toks.iter().map(Vec::len).sum::<usize>() as f64 / n;
        toks.iter()
            .map(|dt| {
                uniq.iter()
                    .map(|t| {
                        let tf = dt.iter().filter(|x| *x == t).count() as f64;
                        if tf == 0.0 {
                            return 0.0;
                        }
                        let dfv = toks.iter().filter(|o| o.contains(t)).count() as f64;
                        let idf = (1.0 + (n - dfv + 0.5) / (dfv + 0.5)).ln();
                        idf * tf * (s.k1 + 1.0) / (tf + s.k1 * (1.0 - s.b + s.b * dt.len() as f64 / avgdl))
                    })
                    .sum()
            })
            .collect()
    };
    let bq = field_scores(&|d: &Doc| d.question.as_str());
    let ba = field_scores(&|d: &Doc| d.answer.as_str());
    let bm25: Vec<f64> = bq.iter().zip(&ba).map(|(q, a)| s.w * q + (1.0 - s.w) * a).collect();

    let dense: Vec<f64> = docs.iter().map(|d| cos_vec(query_vec, &d.embedding)).collect();
    let zeta = ((1.0 - q_tokens.len() as f64) / s.beta).exp();
    let z = if s.prose_intent { 1.0 - zeta } else { zeta };
    let hybrid = dense
        .iter()
        .zip(&tfidf)
        .map(|(fs, ft)| (s.alpha + (1.0 - s.alpha) * z) * fs + ((1.0 - s.alpha) * (1.0 - z)) * ft)
        .collect();
    Scores {
        dense,
        tfidf,
        bm25,
        hybrid,
    }
}

/// Descending score, ties by ascending id; `keep_zero` false drops
/// documents scoring exactly 0.
pub fn order(docs: &[Doc], scores: &[f64], keep_zero: bool) -> Vec<(String, f64)> {
    let mut v: Vec<(String, f64)> = docs
        .iter()
        .zip(scores)
        .filter(|(_, &x)| keep_zero || x != 0.0)
        .map(|(d, &x)| (d.id.clone(), x))
        .collect();
    v.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    v
}

pub fn rrf(a: &[(String, f64)], b: &[(String, f64)], k: f64, m: usize) -> Vec<(String, f64)> {
    let mut fused: BTreeMap<String, f64> = BTreeMap::new();
    for list in [a, b] {
        for (i, (id, _)) in list.iter().enumerate() {
            *fused.entry(id.clone()).or_default() += 1.0 / (k + (i + 1) as f64);
        }
    }
    let mut v: Vec<(String, f64)> = fused.into_iter().collect();
    v.sort_by(|x, y| y.1.partial_cmp(&x.1).unwrap().then_with(|| x.0.cmp(&y.0)));
    v.truncate(m);
    v
}

/// Full pipeline: hybrid ranking over every document fused with the BM25
/// ranking of every matching document.
pub fn pipeline(docs: &[Doc], query: &str, query_vec: &[f64], s: &Settings) -> Vec<(String, f64)> {
    let sc = score_all(docs, query, query_vec, s);
    let hybrid = order(docs, &sc.hybrid, true);
    let bm25 = order(docs, &sc.bm25, false);
    rrf(&hybrid, &bm25, s.k, s.top_m)
}
