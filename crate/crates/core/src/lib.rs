//! Hybrid FAQ retrieval: TF-IDF and BM25 over question and answer fields,
//! dense question embeddings, a query-length-damped linear mix of dense and
//! TF-IDF cosines, reciprocal rank fusion with BM25, and an evaluation kit
//! that reads and writes TREC qrels/run files.

pub mod api;
pub mod bm25;
pub mod corpus;
pub mod dense;
mod error;
pub mod evalkit;
pub mod fusion;
pub mod index;
pub mod ranking;
pub mod textproc;
pub mod tfidf;

pub use corpus::{compute_stats, load_corpus, CorpusStats, FaqDoc, Source};
pub use dense::{hash_embed, load_embeddings, EmbeddingMatrix, EmbeddingProvider, HashEmbedder};
pub use error::{Error, Result};
pub use fusion::{damping, fuse_rrf, hybrid_score, retrieve, retrieve_batch, DampingMode, FusionParams, Query};
pub use index::HybridIndex;
pub use ranking::{FusedHit, FusedResult, Provenance, RankedList, Ranker};
pub use textproc::{tokenize, TokenStream};
