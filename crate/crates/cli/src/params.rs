use std::path::PathBuf;

use clap::Args;
use faqsearch_core::evalkit::Metric;
use faqsearch_core::{DampingMode, FusionParams, Ranker};

use crate::error::Result;

/// Retrieval hyperparameters. Precedence: built-in defaults, then the
/// `--config` file, then individual flags.
#[derive(Debug, Clone, Default, Args)]
pub struct ParamArgs {
    /// TOML file with any FusionParams fields (alpha, w, beta, rrf_k, top_n,
    /// top_m, damping_mode, k1, b)
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Dense weight in the hybrid mix; no default, required by hybrid and rrf
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Question-field weight for TF-IDF and BM25 [default: 0.5]
    #[arg(long)]
    pub w: Option<f64>,
    /// Query-length damping scale [default: 3]
    #[arg(long)]
    pub beta: Option<f64>,
    /// Reciprocal rank fusion constant [default: 60]
    #[arg(long)]
    pub rrf_k: Option<f64>,
    /// Candidates taken from each index [default: 200]
    #[arg(long)]
    pub top_n: Option<usize>,
    /// Results returned per query [default: 50]
    #[arg(long)]
    pub top_m: Option<usize>,
    /// as_written or prose_intent [default: as_written]
    #[arg(long, value_parser = parse_damping)]
    pub damping_mode: Option<DampingMode>,
    /// BM25 term-frequency saturation [default: 1.2]
    #[arg(long)]
    pub k1: Option<f64>,
    /// BM25 length normalization [default: 0.75]
    #[arg(long)]
    pub b: Option<f64>,
}

impl ParamArgs {
    pub fn is_empty(&self) -> bool {
        self.config.is_none()
            && self.alpha.is_none()
            && self.w.is_none()
            && self.beta.is_none()
            && self.rrf_k.is_none()
            && self.top_n.is_none()
            && self.top_m.is_none()
            && self.damping_mode.is_none()
            && self.k1.is_none()
            && self.b.is_none()
    }

    pub fn resolve(&self) -> Result<FusionParams> {
        let mut p = match &self.config {
            Some(path) => FusionParams::load(path)?,
            None => FusionParams::default(),
        };
        if self.alpha.is_some() {
            p.alpha = self.alpha;
        }
        p.w = self.w.unwrap_or(p.w);
        p.beta = self.beta.unwrap_or(p.beta);
        p.rrf_k = self.rrf_k.unwrap_or(p.rrf_k);
        p.top_n = self.top_n.unwrap_or(p.top_n);
        p.top_m = self.top_m.unwrap_or(p.top_m);
        p.damping_mode = self.damping_mode.unwrap_or(p.damping_mode);
        p.k1 = self.k1.unwrap_or(p.k1);
        p.b = self.b.unwrap_or(p.b);
        p.validate()?;
        Ok(p)
    }
}

pub fn parse_mode(s: &str) -> std::result::Result<Ranker, String> {
    s.parse()
        .map_err(|_| format!("expected one of tfidf, bm25, sbert, hybrid, rrf; got {s:?}"))
}

pub fn parse_metric(s: &str) -> std::result::Result<Metric, String> {
    s.parse()
        .map_err(|_| format!("unknown metric {s:?} (e.g. ndcg@5, p@10, map, mrr)"))
}

fn parse_damping(s: &str) -> std::result::Result<DampingMode, String> {
    s.parse()
        .map_err(|_| format!("expected as_written or prose_intent; got {s:?}"))
}

pub fn parse_cutoff(s: &str) -> std::result::Result<usize, String> {
    match s.trim().parse() {
        Ok(c) if c > 0 => Ok(c),
        _ => Err(format!("expected a positive rank cutoff, got {s:?}")),
    }
}
