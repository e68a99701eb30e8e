use std::fmt::Write;

use faqsearch_core::api::QueryResponse;

const SNIPPET: usize = 60;

fn snippet(text: &str) -> String {
    let mut chars = text.chars();
    let head: String = chars.by_ref().take(SNIPPET).collect();
    if chars.next().is_some() {
        format!("{}...", head.trim_end())
    } else {
        head
    }
}

/// One block per query: header line, then rank, score, doc id, per-ranker
/// provenance and the start of the question.
pub fn human(resp: &QueryResponse, text: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {} [{}] {}", resp.query_id, resp.mode, text);
    if resp.hits.is_empty() {
        out.push_str("  (no results)\n");
        return out;
    }
    let id_width = resp.hits.iter().map(|h| h.doc_id.len()).max().unwrap_or(0).max(6);
    let provenance: Vec<String> = resp.hits.iter().map(|h| h.provenance.to_string()).collect();
    let prov_width = provenance.iter().map(String::len).max().unwrap_or(0).max(10);
    let _ = writeln!(
        out,
        "{:>4}  {:>10}  {:<id_width$}  {:<prov_width$}  question",
        "rank", "score", "doc_id", "provenance"
    );
    for (hit, prov) in resp.hits.iter().zip(&provenance) {
        let _ = writeln!(
            out,
            "{:>4}  {:>10.6}  {:<id_width$}  {:<prov_width$}  {}",
            hit.rank,
            hit.score,
            hit.doc_id,
            prov,
            snippet(&hit.question)
        );
    }
    out
}
