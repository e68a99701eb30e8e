//! Grid search over the dense/TF-IDF mix `alpha` and the field weight `w`.

use std::collections::HashMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{evaluate, Gain, Metric};
use super::trec::{Qrels, RunFile};
use crate::dense::EmbeddingProvider;
use crate::error::{Error, Result};
use crate::fusion::{retrieve, FusionParams, Query};
use crate::index::HybridIndex;
use crate::ranking::Ranker;

/// `0.0, 0.1, ..., 1.0`, computed as `i / 10` so every value is the
/// closest double to its decimal.
pub fn unit_steps() -> Vec<f64> {
    (0..=10).map(|i| f64::from(i) / 10.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub alphas: Vec<f64>,
    pub ws: Vec<f64>,
    pub modes: Vec<Ranker>,
    pub cutoffs: Vec<usize>,
    pub target: Metric,
    /// Worker threads; 0 lets rayon decide.
    pub threads: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            alphas: unit_steps(),
            ws: unit_steps(),
            modes: vec![Ranker::Tfidf, Ranker::Bm25, Ranker::Hybrid, Ranker::Rrf],
            cutoffs: vec![5, 10],
            target: Metric::NdcgAt(5),
            threads: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub mode: Ranker,
    pub alpha: f64,
    pub w: f64,
    /// Mean metric values, in [`GridReport::metrics`] order.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub params: FusionParams,
    pub provider: String,
    pub n_queries: usize,
    pub metrics: Vec<Metric>,
    pub target: Metric,
    pub rows: Vec<GridRow>,
}

impl GridReport {
    fn target_index(&self) -> usize {
        self.metrics
            .iter()
            .position(|&m| m == self.target)
            .expect("target is part of the metric set")
    }

    /// Best row by the target metric, optionally within one mode. The
    /// first row in table order wins ties.
    pub fn argmax(&self, mode: Option<Ranker>) -> Option<&GridRow> {
        let t = self.target_index();
        self.rows
            .iter()
            .filter(|r| mode.is_none_or(|m| r.mode == m))
            .fold(None, |best: Option<&GridRow>, r| match best {
                Some(b) if b.values[t] >= r.values[t] => Some(b),
                _ => Some(r),
            })
    }

    pub fn rows_for(&self, mode: Ranker) -> impl Iterator<Item = &GridRow> {
        self.rows.iter().filter(move |r| r.mode == mode)
    }

    fn argmax_line(&self, label: &str, row: &GridRow) -> String {
        format!(
            "# argmax\t{label}\tmode={}\talpha={:.1}\tw={:.1}\t{}={:.6}",
            row.mode,
            row.alpha,
            row.w,
            self.target,
            row.values[self.target_index()]
        )
    }

    /// Tab-separated report: commented header with the fixed parameters,
    /// one row per (mode, alpha, w), then argmax lines per mode and overall.
    pub fn to_tsv(&self) -> String {
        let p = &self.params;
        let mut out = String::from("# faqsearch grid report\n");
        let _ = writeln!(
            out,
            "# beta={} rrf_k={} top_n={} top_m={} damping_mode={} k1={} b={} provider={} queries={} target={}",
            p.beta, p.rrf_k, p.top_n, p.top_m, p.damping_mode, p.k1, p.b, self.provider, self.n_queries, self.target
        );
        out.push_str("mode\talpha\tw");
        for m in &self.metrics {
            let _ = write!(out, "\t{m}");
        }
        out.push('\n');
        for r in &self.rows {
            let _ = write!(out, "{}\t{:.1}\t{:.1}", r.mode, r.alpha, r.w);
            for v in &r.values {
                let _ = write!(out, "\t{v:.6}");
            }
            out.push('\n');
        }
        let mut modes: Vec<Ranker> = Vec::new();
        for r in &self.rows {
            if !modes.contains(&r.mode) {
                modes.push(r.mode);
            }
        }
        for m in modes {
            if let Some(best) = self.argmax(Some(m)) {
                out.push_str(&self.argmax_line(m.as_str(), best));
                out.push('\n');
            }
        }
        if let Some(best) = self.argmax(None) {
            out.push_str(&self.argmax_line("all", best));
            out.push('\n');
        }
        out
    }
}

/// Which grid coordinates a mode's output actually depends on.
fn cache_key(mode: Ranker, ai: usize, wi: usize) -> (Ranker, usize, usize) {
    match mode {
        Ranker::Sbert => (mode, 0, 0),
        Ranker::Tfidf | Ranker::Bm25 => (mode, 0, wi),
        Ranker::Hybrid | Ranker::Rrf => (mode, ai, wi),
    }
}

/// Evaluates every (mode, alpha, w) cell. `base` supplies the fixed
/// parameters (beta, rrf_k, N, M, damping mode, k1, b); its alpha and w are
/// overridden per cell.
pub fn grid_search(
    index: &HybridIndex,
    provider: Option<&dyn EmbeddingProvider>,
    queries: &[Query],
    qrels: &Qrels,
    base: &FusionParams,
    spec: &GridSpec,
) -> Result<GridReport> {
    if queries.is_empty() {
        return Err(Error::Invalid {
            what: "grid search queries",
            value: "none".into(),
        });
    }
    let metrics = Metric::battery(&spec.cutoffs);
    let metrics = if metrics.contains(&spec.target) {
        metrics
    } else {
        let mut m = metrics;
        m.push(spec.target);
        m
    };
    let mut cells = Vec::new();
    for &mode in &spec.modes {
        for (ai, &alpha) in spec.alphas.iter().enumerate() {
            for (wi, &w) in spec.ws.iter().enumerate() {
                cells.push((mode, ai, alpha, wi, w));
            }
        }
    }
    let mut keys: Vec<_> = cells
        .iter()
        .map(|&(m, ai, a, wi, w)| (cache_key(m, ai, wi), (m, a, w)))
        .collect();
    keys.sort_by_key(|k| k.0);
    keys.dedup_by_key(|k| k.0);

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.threads)
        .build()
        .map_err(|e| Error::Invalid {
            what: "thread pool",
            value: e.to_string(),
        })?;
    let evaluated: HashMap<_, Vec<f64>> = pool.install(|| {
        keys.par_iter()
            .map(|&(key, (mode, alpha, w))| {
                let mut params = base.clone();
                params.alpha = Some(alpha);
                params.w = w;
                let results = queries
                    .iter()
                    .map(|q| retrieve(index, provider, q, &params, mode))
                    .collect::<Result<Vec<_>>>()?;
                let run = RunFile::from_results(&results, mode.as_str());
                let report = evaluate(&run, qrels, &metrics, Gain::Linear)?;
                Ok((key, report.mean))
            })
            .collect::<Result<_>>()
    })?;

    let rows = cells
        .into_iter()
        .map(|(mode, ai, alpha, wi, w)| GridRow {
            mode,
            alpha,
            w,
            values: evaluated[&cache_key(mode, ai, wi)].clone(),
        })
        .collect();
    Ok(GridReport {
        params: base.clone(),
        provider: index.dense().provider().to_string(),
        n_queries: queries.len(),
        metrics,
        target: spec.target,
        rows,
    })
}
