//! Ranking metrics with trec_eval semantics.
//!
//! Binary metrics count grade >= 1 as relevant. Documents missing from the
//! qrels count as grade 0. nDCG uses gain = grade and a `log2(rank + 1)`
//! discount, with the ideal ranking taken from the query's judgments.
//! Queries with no relevant documents score 0 and still count toward the
//! mean. Per-query values are summed in query-id order, so means do not
//! depend on the order of queries in the run.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::trec::{Qrels, RunFile};
use crate::error::{Error, Result};

const RELEVANT: u8 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    /// Mean reciprocal rank of the first relevant document.
    Mrr,
    /// Average precision over the whole ranking.
    Map,
    /// Average precision truncated at k (trec_eval `map_cut_k`).
    MapAt(usize),
    PrecisionAt(usize),
    RecallAt(usize),
    NdcgAt(usize),
}

impl Metric {
    /// The standard battery for a set of cutoffs: MRR, MAP, and MAP@k,
    /// P@k, R@k, nDCG@k for each k.
    pub fn battery(cutoffs: &[usize]) -> Vec<Metric> {
        let mut out = vec![Metric::Mrr, Metric::Map];
        for ctor in [Metric::MapAt, Metric::PrecisionAt, Metric::RecallAt, Metric::NdcgAt] {
            out.extend(cutoffs.iter().map(|&k| ctor(k)));
        }
        out
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::Mrr => write!(f, "mrr"),
            Metric::Map => write!(f, "map"),
            Metric::MapAt(k) => write!(f, "map@{k}"),
            Metric::PrecisionAt(k) => write!(f, "p@{k}"),
            Metric::RecallAt(k) => write!(f, "recall@{k}"),
            Metric::NdcgAt(k) => write!(f, "ndcg@{k}"),
        }
    }
}

impl FromStr for Metric {
    type Err = Error;

    /// Accepts the display names (`ndcg@10`) and trec_eval names
    /// (`ndcg_cut_10`, `P_5`, `recip_rank`).
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Invalid {
            what: "metric",
            value: s.to_string(),
        };
        let lower = s.to_ascii_lowercase();
        match lower.as_str() {
            "mrr" | "recip_rank" => return Ok(Metric::Mrr),
            "map" => return Ok(Metric::Map),
            _ => {}
        }
        let (name, k) = lower
            .split_once('@')
            .or_else(|| lower.rsplit_once('_'))
            .ok_or_else(bad)?;
        let k: usize = k.parse().ok().filter(|&k| k > 0).ok_or_else(bad)?;
        match name {
            "map" | "map_cut" => Ok(Metric::MapAt(k)),
            "p" | "precision" => Ok(Metric::PrecisionAt(k)),
            "r" | "recall" => Ok(Metric::RecallAt(k)),
            "ndcg" | "ndcg_cut" => Ok(Metric::NdcgAt(k)),
            _ => Err(bad()),
        }
    }
}

impl Serialize for Metric {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Metric {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// nDCG gain function.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gain {
    /// gain = grade, as trec_eval's `ndcg_cut`.
    #[default]
    Linear,
    /// gain = 2^grade - 1.
    Exponential,
}

impl Gain {
    fn of(self, grade: u8) -> f64 {
        match self {
            Gain::Linear => f64::from(grade),
            Gain::Exponential => 2f64.powi(i32::from(grade)) - 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub metrics: Vec<Metric>,
    /// Values in `metrics` order, keyed by query id.
    pub per_query: BTreeMap<String, Vec<f64>>,
    pub mean: Vec<f64>,
}

impl MetricReport {
    pub fn mean_of(&self, metric: Metric) -> Option<f64> {
        self.metrics.iter().position(|&m| m == metric).map(|i| self.mean[i])
    }

    pub fn query_value(&self, query: &str, metric: Metric) -> Option<f64> {
        let i = self.metrics.iter().position(|&m| m == metric)?;
        self.per_query.get(query).map(|v| v[i])
    }

    pub fn n_queries(&self) -> usize {
        self.per_query.len()
    }

    /// trec_eval-style text: `metric <tab> query <tab> value`, with `all`
    /// rows for the means.
    pub fn to_text(&self, per_query: bool) -> String {
        let width = self.metrics.iter().map(|m| m.to_string().len()).max().unwrap_or(0);
        let mut out = String::new();
        if per_query {
            for (q, values) in &self.per_query {
                for (m, v) in self.metrics.iter().zip(values) {
                    out.push_str(&format!("{:<width$}\t{q}\t{v:.4}\n", m.to_string()));
                }
            }
        }
        out.push_str(&format!("{:<width$}\tall\t{}\n", "num_q", self.n_queries()));
        for (m, v) in self.metrics.iter().zip(&self.mean) {
            out.push_str(&format!("{:<width$}\tall\t{v:.4}\n", m.to_string()));
        }
        out
    }
}

fn per_query(ranked: &[&str], judged: &HashMap<String, u8>, metrics: &[Metric], gain: Gain) -> Vec<f64> {
    let grade = |doc: &str| judged.get(doc).copied().unwrap_or(0);
    let grades: Vec<u8> = ranked.iter().map(|d| grade(d)).collect();
    let num_rel = judged.values().filter(|&&g| g >= RELEVANT).count();
    let mut ideal: Vec<u8> = judged.values().copied().filter(|&g| g > 0).collect();
    ideal.sort_unstable_by(|a, b| b.cmp(a));

    let hits_at = |k: usize| grades.iter().take(k).filter(|&&g| g >= RELEVANT).count();
    let ap_at = |k: usize| {
        if num_rel == 0 {
            return 0.0;
        }
        let mut hits = 0;
        let mut sum = 0.0;
        for (i, &g) in grades.iter().take(k).enumerate() {
            if g >= RELEVANT {
                hits += 1;
                sum += hits as f64 / (i + 1) as f64;
            }
        }
        sum / num_rel as f64
    };
    let dcg = |gs: &mut dyn Iterator<Item = u8>, k: usize| -> f64 {
        gs.take(k)
            .enumerate()
            .map(|(i, g)| gain.of(g) / ((i + 2) as f64).log2())
            .sum()
    };

    metrics
        .iter()
        .map(|&m| match m {
            Metric::Mrr => grades
                .iter()
                .position(|&g| g >= RELEVANT)
                .map_or(0.0, |i| 1.0 / (i + 1) as f64),
            Metric::Map => ap_at(grades.len()),
            Metric::MapAt(k) => ap_at(k),
            Metric::PrecisionAt(k) => hits_at(k) as f64 / k as f64,
            Metric::RecallAt(k) => {
                if num_rel == 0 {
                    0.0
                } else {
                    hits_at(k) as f64 / num_rel as f64
                }
            }
            Metric::NdcgAt(k) => {
                let ideal_dcg = dcg(&mut ideal.iter().copied(), k);
                if ideal_dcg == 0.0 {
                    0.0
                } else {
                    dcg(&mut grades.iter().copied(), k) / ideal_dcg
                }
            }
        })
        .collect()
}

/// Evaluates `run` against `qrels` on the given metrics.
pub fn evaluate(run: &RunFile, qrels: &Qrels, metrics: &[Metric], gain: Gain) -> Result<MetricReport> {
    let mut per_q = BTreeMap::new();
    for (qid, records) in run.queries() {
        let judged = qrels.query(qid).ok_or_else(|| Error::UnjudgedQuery(qid.to_string()))?;
        let ranked: Vec<&str> = records.iter().map(|r| r.doc_id.as_str()).collect();
        per_q.insert(qid.to_string(), per_query(&ranked, judged, metrics, gain));
    }
    let n = per_q.len();
    let mean = (0..metrics.len())
        .map(|i| {
            if n == 0 {
                0.0
            } else {
                per_q.values().map(|v: &Vec<f64>| v[i]).sum::<f64>() / n as f64
            }
        })
        .collect();
    Ok(MetricReport {
        metrics: metrics.to_vec(),
        per_query: per_q,
        mean,
    })
}

/// The standard battery ([`Metric::battery`]) with linear nDCG gain.
pub fn metrics(run: &RunFile, qrels: &Qrels, cutoffs: &[usize]) -> Result<MetricReport> {
    evaluate(run, qrels, &Metric::battery(cutoffs), Gain::Linear)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evalkit::trec::{parse_qrels, RunRecord};
    use proptest::prelude::*;

    fn run_of(q: &str, docs: &[&str]) -> RunFile {
        let records = docs
            .iter()
            .enumerate()
            .map(|(i, d)| RunRecord {
                doc_id: d.to_string(),
                rank: i + 1,
                score: -(i as f64),
                tag: "t".into(),
            })
            .collect();
        RunFile::from_queries(vec![(q.to_string(), records)]).unwrap()
    }

    #[test]
    fn reciprocal_rank_second() {
        let qrels = parse_qrels("q 0 b 1\nq 0 a 0\n").unwrap();
        let r = evaluate(&run_of("q", &["a", "b", "c"]), &qrels, &[Metric::Mrr], Gain::Linear).unwrap();
        assert_eq!(r.mean_of(Metric::Mrr), Some(0.5));
    }

    #[test]
    fn ndcg_graded_example() {
        let qrels = parse_qrels("q 0 d1 2\nq 0 d3 1\nq 0 d2 0\n").unwrap();
        let r = evaluate(
            &run_of("q", &["d1", "d2", "d3", "d4", "d5"]),
            &qrels,
            &[Metric::NdcgAt(5)],
            Gain::Linear,
        )
        .unwrap();
        let expected = (2.0 + 1.0 / 4f64.log2()) / (2.0 + 1.0 / 3f64.log2());
        let got = r.mean_of(Metric::NdcgAt(5)).unwrap();
        assert!((got - expected).abs() < 1e-12);
        assert!((got - 0.950234).abs() < 1e-6);
    }

    #[test]
    fn ap_precision_recall_example() {
        let qrels = parse_qrels("q 0 r1 1\nq 0 r2 2\n").unwrap();
        let ms = [Metric::Map, Metric::PrecisionAt(4), Metric::RecallAt(4)];
        let r = evaluate(&run_of("q", &["r1", "n1", "r2", "n2"]), &qrels, &ms, Gain::Linear).unwrap();
        assert!((r.mean_of(Metric::Map).unwrap() - (1.0 + 2.0 / 3.0) / 2.0).abs() < 1e-12);
        assert_eq!(r.mean_of(Metric::PrecisionAt(4)), Some(0.5));
        assert_eq!(r.mean_of(Metric::RecallAt(4)), Some(1.0));
    }

    #[test]
    fn no_relevant_docs_counts_as_zero() {
        let qrels = parse_qrels("q1 0 a 1\nq2 0 b 0\n").unwrap();
        let mut records = run_of("q1", &["a"])
            .queries()
            .map(|(q, r)| (q.to_string(), r.to_vec()))
            .collect::<Vec<_>>();
        records.extend(run_of("q2", &["b"]).queries().map(|(q, r)| (q.to_string(), r.to_vec())));
        let run = RunFile::from_queries(records).unwrap();
        let r = metrics(&run, &qrels, &[5]).unwrap();
        assert_eq!(r.n_queries(), 2);
        assert_eq!(r.mean_of(Metric::Mrr), Some(0.5));
        assert_eq!(r.query_value("q2", Metric::NdcgAt(5)), Some(0.0));
    }

    #[test]
    fn unjudged_query_is_error() {
        let qrels = parse_qrels("q1 0 a 1\n").unwrap();
        assert!(matches!(
            metrics(&run_of("q9", &["a"]), &qrels, &[5]),
            Err(Error::UnjudgedQuery(q)) if q == "q9"
        ));
    }

    #[test]
    fn exponential_gain() {
        let qrels = parse_qrels("q 0 a 1\nq 0 b 2\n").unwrap();
        let r = evaluate(
            &run_of("q", &["a", "b"]),
            &qrels,
            &[Metric::NdcgAt(2)],
            Gain::Exponential,
        )
        .unwrap();
        let expected = (1.0 + 3.0 / 3f64.log2()) / (3.0 + 1.0 / 3f64.log2());
        assert!((r.mean_of(Metric::NdcgAt(2)).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn metric_names() {
        for m in Metric::battery(&[5, 10]) {
            assert_eq!(m.to_string().parse::<Metric>().unwrap(), m);
        }
        assert_eq!("ndcg_cut_10".parse::<Metric>().unwrap(), Metric::NdcgAt(10));
        assert_eq!("P_5".parse::<Metric>().unwrap(), Metric::PrecisionAt(5));
        assert_eq!("recip_rank".parse::<Metric>().unwrap(), Metric::Mrr);
        assert_eq!("map_cut_5".parse::<Metric>().unwrap(), Metric::MapAt(5));
        assert!("ndcg@0".parse::<Metric>().is_err());
        assert!("bpref".parse::<Metric>().is_err());
    }

    fn arb_case() -> impl Strategy<Value = (Vec<u8>, Vec<u8>)> {
        // grades of 20 docs in qrels, and a permutation prefix for the run
        (
            proptest::collection::vec(0u8..=2, 20),
            proptest::collection::vec(0u8..20, 1..20),
        )
    }

    proptest! {
        #[test]
        fn bounds_and_monotone_recall((grades, picks) in arb_case()) {
            let mut qrels = Qrels::default();
            for (i, &g) in grades.iter().enumerate() {
                qrels.insert("q", &format!("d{i}"), g).unwrap();
            }
            let mut seen = std::collections::HashSet::new();
            let docs: Vec<String> = picks.iter().filter(|p| seen.insert(**p)).map(|p| format!("d{p}")).collect();
            let refs: Vec<&str> = docs.iter().map(String::as_str).collect();
            let cutoffs = [1, 3, 5, 10, 20];
            let r = metrics(&run_of("q", &refs), &qrels, &cutoffs).unwrap();
            for &v in &r.mean {
                prop_assert!((0.0..=1.0 + 1e-12).contains(&v));
            }
            let recalls: Vec<f64> = cutoffs.iter().map(|&k| r.mean_of(Metric::RecallAt(k)).unwrap()).collect();
            prop_assert!(recalls.windows(2).all(|w| w[0] <= w[1]));
        }

        #[test]
        fn ideal_ranking_has_unit_ndcg(grades in proptest::collection::vec(0u8..=2, 1..25)) {
            prop_assume!(grades.iter().any(|&g| g > 0));
            let mut qrels = Qrels::default();
            for (i, &g) in grades.iter().enumerate() {
                qrels.insert("q", &format!("d{i}"), g).unwrap();
            }
            let mut order: Vec<usize> = (0..grades.len()).collect();
            order.sort_by(|&a, &b| grades[b].cmp(&grades[a]));
            let docs: Vec<String> = order.iter().map(|i| format!("d{i}")).collect();
            let refs: Vec<&str> = docs.iter().map(String::as_str).collect();
            let r = evaluate(&run_of("q", &refs), &qrels, &[Metric::NdcgAt(5), Metric::NdcgAt(10)], Gain::Linear).unwrap();
            for &v in &r.mean {
                prop_assert!((v - 1.0).abs() < 1e-12);
            }
        }
    }
}
