//! Engine components checked against frozen values from independent
//! brute-force scripts (fixtures/gen_*.py) and in-test reimplementations.

mod common;

use std::collections::HashMap;

use faqsearch_core::bm25::Bm25Index;
use faqsearch_core::dense::{hash_embed, EmbeddingMatrix, HashEmbedder};
use faqsearch_core::ranking::{RankedList, Ranker};
use faqsearch_core::tfidf::{score_tfidf, TfidfIndex};
use faqsearch_core::{fuse_rrf, retrieve, tokenize, FaqDoc, FusionParams, HybridIndex, Query};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

fn lexical_oracle() -> Value {
    serde_json::from_str(include_str!("fixtures/lexical_oracle.json")).unwrap()
}

#[test]
fn tfidf_matches_brute_force_script() {
    let oracle = lexical_oracle();
    let o = &oracle["tfidf_fha_loan"];
    let docs = vec![
        FaqDoc::new(
            "d1",
            "What are FHA loan limits?",
            "FHA loan limits depend on the county.",
        ),
        FaqDoc::new(
            "d2",
            "Is a conventional loan assumable?",
            "Most conventional loans are not assumable.",
        ),
        FaqDoc::new(
            "d3",
            "Minimum credit score for FHA?",
            "The minimum FICO score is 580 for FHA.",
        ),
    ];
    let idx = TfidfIndex::build(&docs).unwrap();
    let vocab = idx.vocabulary();
    let idf = o["idf"].as_object().unwrap();
    assert_eq!(vocab.len(), idf.len());
    for (term, v) in idf {
        assert!((vocab.idf(term).unwrap() - v.as_f64().unwrap()).abs() < 1e-12, "{term}");
    }
    let q = idx.vectorize(&tokenize("fha loan"));
    let weights: HashMap<&str, f64> = q.entries().iter().map(|&(i, w)| (vocab.term(i), w)).collect();
    for (term, v) in o["query_weights"].as_object().unwrap() {
        assert!((weights[term.as_str()] - v.as_f64().unwrap()).abs() < 1e-12);
    }
    for (d, pair) in o["cosines"].as_array().unwrap().iter().enumerate() {
        let (cq, ca) = (pair[0].as_f64().unwrap(), pair[1].as_f64().unwrap());
        for w in [0.0, 0.3, 1.0] {
            let got = score_tfidf(&q, idx.question_vec(d), idx.answer_vec(d), w).unwrap();
            assert!((got - (w * cq + (1.0 - w) * ca)).abs() < 1e-9);
        }
    }
}

#[test]
fn bm25_matches_brute_force_script() {
    let oracle = lexical_oracle();
    let docs = vec![
        FaqDoc::new("a", "fha loan limits", "limits vary by county"),
        FaqDoc::new("b", "conventional loan", "dti up to fifty"),
        FaqDoc::new("c", "second home reserves", ""),
        FaqDoc::new("d", "manual underwriting", "allowed for fha"),
        FaqDoc::new("e", "fha fha streamline", "refinance program"),
    ];
    let idx = Bm25Index::build(&docs, 1.2, 0.75).unwrap();
    for (key, expected) in oracle["bm25"].as_object().unwrap() {
        let (q, w) = key.split_once('|').unwrap();
        let w: f64 = w.parse().unwrap();
        let q = tokenize(q);
        for (d, e) in expected.as_array().unwrap().iter().enumerate() {
            let got = idx.score(&q, d, w).unwrap();
            assert!((got - e.as_f64().unwrap()).abs() < 1e-9, "{key} doc {d}: {got} vs {e}");
        }
    }
}

#[test]
fn hash_embed_disjoint_texts_are_nearly_orthogonal() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let alphabet: Vec<char> = ('a'..='z').collect();
    let word = |rng: &mut ChaCha8Rng| -> String { (0..6).map(|_| *alphabet.choose(rng).unwrap()).collect() };
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let a: Vec<String> = (0..8).map(|_| word(&mut rng)).collect();
        let b: Vec<String> = (0..8).map(|_| word(&mut rng)).filter(|w| !a.contains(w)).collect();
        let va = hash_embed(&a.join(" "), 512);
        let vb = hash_embed(&b.join(" "), 512);
        let cos: f64 = va.iter().zip(&vb).map(|(x, y)| x * y).sum();
        worst = worst.max(cos.abs());
    }
    assert!(worst < 0.2, "max |cos| = {worst}");
}

#[test]
fn knn_matches_exhaustive_sort() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..20 {
        let n = if trial == 0 { 1000 } else { 10 };
        let dim = 16;
        let rows: Vec<(String, Vec<f64>)> = (0..n)
            .map(|i| (format!("d{i:04}"), (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()))
            .collect();
        let docs: Vec<FaqDoc> = rows.iter().map(|(id, _)| FaqDoc::new(id.clone(), "q", "")).collect();
        let text = faqsearch_core::dense::format_embedding_file(dim, "rand", rows.iter().map(|(a, b)| (a, b)));
        let m =
            EmbeddingMatrix::from_file(&faqsearch_core::dense::parse_embedding_file(&text).unwrap(), &docs).unwrap();
        let q: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let qn = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut brute: Vec<(usize, f64)> = rows
            .iter()
            .enumerate()
            .map(|(i, (_, v))| {
                let vn = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                (i, v.iter().zip(&q).map(|(a, b)| a * b).sum::<f64>() / (vn * qn))
            })
            .collect();
        brute.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        let k = 7;
        let got = m.knn(&q, k).unwrap();
        assert_eq!(
            got.iter().map(|x| x.0).collect::<Vec<_>>(),
            brute[..k].iter().map(|x| x.0).collect::<Vec<_>>()
        );
        for (g, b) in got.iter().zip(&brute) {
            assert!((g.1 - b.1).abs() < 1e-12);
            assert!((-1.0..=1.0).contains(&g.1));
        }
    }
}

#[test]
fn rrf_matches_brute_force_on_random_lists() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let universe: Vec<String> = (0..30).map(|i| format!("doc{i:02}")).collect();
    for _ in 0..100 {
        let mut a = universe.clone();
        a.shuffle(&mut rng);
        a.truncate(rng.gen_range(1..=30));
        let mut b = universe.clone();
        b.shuffle(&mut rng);
        b.truncate(rng.gen_range(1..=30));
        let la = RankedList {
            query_id: "q".into(),
            ranker: Ranker::Hybrid,
            entries: a.iter().map(|d| (d.clone(), 0.0)).collect(),
        };
        let lb = RankedList {
            query_id: "q".into(),
            ranker: Ranker::Bm25,
            entries: b.iter().map(|d| (d.clone(), 0.0)).collect(),
        };
        let fused = fuse_rrf(&la, &lb, 60.0).unwrap();
        let a_ranked: Vec<(String, f64)> = a.iter().map(|d| (d.clone(), 0.0)).collect();
        let b_ranked: Vec<(String, f64)> = b.iter().map(|d| (d.clone(), 0.0)).collect();
        let brute = common::oracle::rrf(&a_ranked, &b_ranked, 60.0, usize::MAX);
        assert_eq!(fused.hits.len(), brute.len());
        for (h, (id, s)) in fused.hits.iter().zip(&brute) {
            assert_eq!(&h.doc_id, id);
            assert!((h.score - s).abs() < 1e-15);
            assert_eq!(h.provenance.hybrid, a.iter().position(|d| d == id).map(|p| p + 1));
            assert_eq!(h.provenance.bm25, b.iter().position(|d| d == id).map(|p| p + 1));
        }
    }
}

#[test]
fn single_document_corpus_every_mode() {
    let docs = [FaqDoc::new("only", "Is manual underwriting allowed?", "Yes.")];
    let idx = HybridIndex::build(&docs, &HashEmbedder::new(32).unwrap(), 1.2, 0.75).unwrap();
    let provider = idx.builtin_provider().unwrap();
    let params = FusionParams::default().with_alpha(0.5);
    for mode in Ranker::ALL {
        let r = retrieve(
            &idx,
            Some(&provider),
            &Query::new("q", "underwriting rules"),
            &params,
            mode,
        )
        .unwrap();
        assert_eq!(r.hits.len(), 1, "{mode}");
        assert_eq!(r.hits[0].doc_id, "only");
    }
}

#[test]
fn empty_query_is_rejected() {
    let idx = HybridIndex::build(&common::synthetic_12(), &HashEmbedder::new(32).unwrap(), 1.2, 0.75).unwrap();
    let provider = idx.builtin_provider().unwrap();
    let params = FusionParams::default().with_alpha(0.5);
    let err = retrieve(&idx, Some(&provider), &Query::new("q", " ?! "), &params, Ranker::Rrf).unwrap_err();
    assert!(matches!(err, faqsearch_core::Error::EmptyQuery));
}

#[test]
fn hybrid_requires_alpha() {
    let idx = HybridIndex::build(&common::synthetic_12(), &HashEmbedder::new(32).unwrap(), 1.2, 0.75).unwrap();
    let provider = idx.builtin_provider().unwrap();
    let params = FusionParams::default();
    assert!(retrieve(&idx, Some(&provider), &Query::new("q", "fha"), &params, Ranker::Hybrid).is_err());
    assert!(retrieve(&idx, Some(&provider), &Query::new("q", "fha"), &params, Ranker::Bm25).is_ok());
}

#[test]
fn top_n_truncation_changes_nothing_when_n_covers_corpus() {
    let idx = HybridIndex::build(&common::synthetic_12(), &HashEmbedder::new(64).unwrap(), 1.2, 0.75).unwrap();
    let provider = idx.builtin_provider().unwrap();
    let q = Query::new("q", "maximum DTI for a conventional loan");
    let mut a = FusionParams::default().with_alpha(0.4);
    a.top_m = 12;
    a.top_n = 12;
    let mut b = a.clone();
    b.top_n = 500;
    assert_eq!(
        retrieve(&idx, Some(&provider), &q, &a, Ranker::Rrf).unwrap(),
        retrieve(&idx, Some(&provider), &q, &b, Ranker::Rrf).unwrap()
    );
}
