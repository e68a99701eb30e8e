//! The immutable hybrid index and its on-disk directory form.
//!
//! Layout of an index directory:
//!
//! | file              | contents                                        |
//! | ----------------- | ----------------------------------------------- |
//! | `manifest.json`   | format version, build params, SHA-256 per file  |
//! | `corpus.jsonl`    | corpus snapshot, sorted by document id          |
//! | `tfidf.json`      | vocabulary, idf, question and answer vectors    |
//! | `bm25.json`       | per-field postings and length statistics        |
//! | `embeddings.txt`  | question embeddings, interchange format         |
//!
//! Documents are stored sorted by id, so "ascending document ordinal" and
//! "ascending doc id" are the same tie-break everywhere.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bm25::Bm25Index;
use crate::corpus::{parse_corpus, write_corpus, FaqDoc};
use crate::dense::{format_embedding_file, parse_embedding_file, EmbeddingMatrix, EmbeddingProvider, HashEmbedder};
use crate::error::{Error, Result};
use crate::tfidf::TfidfIndex;

pub const FORMAT_VERSION: u32 = 1;
const FORMAT_NAME: &str = "faqsearch-index";
const MANIFEST: &str = "manifest.json";
const CORPUS: &str = "corpus.jsonl";
const TFIDF: &str = "tfidf.json";
const BM25: &str = "bm25.json";
const EMBEDDINGS: &str = "embeddings.txt";
const LOCK: &str = ".build.lock";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub version: u32,
    pub n_docs: usize,
    pub provider: String,
    pub dim: usize,
    pub k1: f64,
    pub b: f64,
    pub files: BTreeMap<String, String>,
}

#[derive(Debug, Clone)]
pub struct HybridIndex {
    docs: Vec<FaqDoc>,
    ordinals: HashMap<String, usize>,
    tfidf: TfidfIndex,
    bm25: Bm25Index,
    dense: EmbeddingMatrix,
}

fn sorted(corpus: &[FaqDoc]) -> Vec<FaqDoc> {
    let mut docs = corpus.to_vec();
    docs.sort_by(|a, b| a.id.cmp(&b.id));
    docs
}

impl HybridIndex {
    /// Builds every index over `corpus`. `embed` produces the dense matrix
    /// for the id-sorted documents.
    pub fn build_with(
        corpus: &[FaqDoc],
        k1: f64,
        b: f64,
        embed: impl FnOnce(&[FaqDoc]) -> Result<EmbeddingMatrix>,
    ) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let docs = sorted(corpus);
        if let Some(w) = docs.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(Error::DuplicateId(w[0].id.clone()));
        }
        let tfidf = TfidfIndex::build(&docs)?;
        let bm25 = Bm25Index::build(&docs, k1, b)?;
        let dense = embed(&docs)?;
        if dense.n_rows() != docs.len() {
            return Err(Error::Integrity(format!(
                "{} embedding rows for {} documents",
                dense.n_rows(),
                docs.len()
            )));
        }
        Ok(Self::assemble(docs, tfidf, bm25, dense))
    }

    pub fn build(corpus: &[FaqDoc], provider: &dyn EmbeddingProvider, k1: f64, b: f64) -> Result<Self> {
        Self::build_with(corpus, k1, b, |docs| EmbeddingMatrix::from_provider(provider, docs))
    }

    pub fn build_from_embeddings(
        corpus: &[FaqDoc],
        embeddings: &crate::dense::EmbeddingFile,
        k1: f64,
        b: f64,
    ) -> Result<Self> {
        Self::build_with(corpus, k1, b, |docs| EmbeddingMatrix::from_file(embeddings, docs))
    }

    fn assemble(docs: Vec<FaqDoc>, tfidf: TfidfIndex, bm25: Bm25Index, dense: EmbeddingMatrix) -> Self {
        let ordinals = docs.iter().enumerate().map(|(i, d)| (d.id.clone(), i)).collect();
        HybridIndex {
            docs,
            ordinals,
            tfidf,
            bm25,
            dense,
        }
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn docs(&self) -> &[FaqDoc] {
        &self.docs
    }

    pub fn doc(&self, ordinal: usize) -> &FaqDoc {
        &self.docs[ordinal]
    }

    pub fn ordinal(&self, id: &str) -> Option<usize> {
        self.ordinals.get(id).copied()
    }

    pub fn tfidf(&self) -> &TfidfIndex {
        &self.tfidf
    }

    pub fn bm25(&self) -> &Bm25Index {
        &self.bm25
    }

    pub fn dense(&self) -> &EmbeddingMatrix {
        &self.dense
    }

    /// BM25 score of one document by id.
    pub fn score_bm25(&self, query: &crate::textproc::TokenStream, id: &str, w: f64) -> Result<f64> {
        let d = self.ordinal(id).ok_or_else(|| Error::UnknownDoc(id.to_string()))?;
        self.bm25.score(query, d, w)
    }

    /// The provider that can embed queries for this index without outside
    /// help, if any.
    pub fn builtin_provider(&self) -> Option<HashEmbedder> {
        HashEmbedder::from_tag(self.dense.provider()).filter(|e| e.dim() == self.dense.dim())
    }

    fn artifacts(&self) -> Result<Vec<(&'static str, Vec<u8>)>> {
        let mut corpus = Vec::new();
        write_corpus(&self.docs, &mut corpus).map_err(|e| Error::io(CORPUS, e))?;
        let embeddings = format_embedding_file(
            self.dense.dim(),
            self.dense.provider(),
            self.docs.iter().zip(self.dense.rows()).map(|(d, r)| (d.id.as_str(), r)),
        );
        Ok(vec![
            (CORPUS, corpus),
            (TFIDF, to_json(&self.tfidf)?),
            (BM25, to_json(&self.bm25)?),
            (EMBEDDINGS, embeddings.into_bytes()),
        ])
    }

    /// Writes the index to `dir`, creating it if needed. Concurrent builds
    /// into the same directory are refused via a lock file.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<Manifest> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let _lock = BuildLock::acquire(dir)?;
        let mut files = BTreeMap::new();
        for (name, bytes) in self.artifacts()? {
            let path = dir.join(name);
            fs::write(&path, &bytes).map_err(|e| Error::io(&path, e))?;
            files.insert(name.to_string(), hex::encode(Sha256::digest(&bytes)));
        }
        let manifest = Manifest {
            format: FORMAT_NAME.to_string(),
            version: FORMAT_VERSION,
            n_docs: self.len(),
            provider: self.dense.provider().to_string(),
            dim: self.dense.dim(),
            k1: self.bm25.k1(),
            b: self.bm25.b(),
            files,
        };
        let path = dir.join(MANIFEST);
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(manifest)
    }

    /// Opens an index directory, verifying version and checksums.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let read = |name: &str| -> Result<Vec<u8>> {
            let path = dir.join(name);
            fs::read(&path).map_err(|e| Error::io(&path, e))
        };
        let manifest: Manifest =
            serde_json::from_slice(&read(MANIFEST)?).map_err(|e| Error::Integrity(format!("manifest: {e}")))?;
        if manifest.format != FORMAT_NAME || manifest.version != FORMAT_VERSION {
            return Err(Error::Integrity(format!(
                "unsupported index format {} v{} (expected {FORMAT_NAME} v{FORMAT_VERSION})",
                manifest.format, manifest.version
            )));
        }
        let mut blobs = HashMap::new();
        for name in [CORPUS, TFIDF, BM25, EMBEDDINGS] {
            let bytes = read(name)?;
            let expected = manifest
                .files
                .get(name)
                .ok_or_else(|| Error::Integrity(format!("manifest lacks {name}")))?;
            if &hex::encode(Sha256::digest(&bytes)) != expected {
                return Err(Error::Integrity(format!("checksum mismatch for {name}")));
            }
            blobs.insert(name, bytes);
        }
        let text =
            |name: &str| String::from_utf8(blobs[name].clone()).map_err(|e| Error::Integrity(format!("{name}: {e}")));
        let docs = parse_corpus(&text(CORPUS)?)?;
        let tfidf: TfidfIndex =
            serde_json::from_slice(&blobs[TFIDF]).map_err(|e| Error::Integrity(format!("{TFIDF}: {e}")))?;
        let bm25: Bm25Index =
            serde_json::from_slice(&blobs[BM25]).map_err(|e| Error::Integrity(format!("{BM25}: {e}")))?;
        let file = parse_embedding_file(&text(EMBEDDINGS)?)?;
        let dense = EmbeddingMatrix::from_file(&file, &docs)?;
        if docs.len() != manifest.n_docs || tfidf.n_docs() != docs.len() || bm25.n_docs() != docs.len() {
            return Err(Error::Integrity("document counts disagree across artifacts".into()));
        }
        Ok(Self::assemble(docs, tfidf, bm25, dense))
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    serde_json::to_vec(value).map_err(|e| Error::Integrity(e.to_string()))
}

struct BuildLock(PathBuf);

impl BuildLock {
    fn acquire(dir: &Path) -> Result<Self> {
        let path = dir.join(LOCK);
        fs::OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
            .map_err(|e| {
                if e.kind() == std::io::ErrorKind::AlreadyExists {
                    Error::Integrity(format!("another build holds {}", path.display()))
                } else {
                    Error::io(&path, e)
                }
            })?;
        Ok(BuildLock(path))
    }
}

impl Drop for BuildLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}
