mod error;
mod input;
mod output;
mod params;

use std::io::{self, BufRead, IsTerminal, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use faqsearch_client::Client;
use faqsearch_core::api::{BatchRequest, QueryRequest, QueryResponse};
use faqsearch_core::dense::read_embedding_file;
use faqsearch_core::evalkit::{grid_search, load_qrels, load_run, metrics, GridSpec, Metric, RunFile};
use faqsearch_core::{
    compute_stats, load_corpus, retrieve, retrieve_batch, EmbeddingProvider, FusionParams, HashEmbedder, HybridIndex,
    Query, Ranker,
};
use faqsearch_server::AppState;

use crate::error::{CliError, Result};
use crate::params::{parse_cutoff, parse_metric, parse_mode, ParamArgs};

#[derive(Debug, Parser)]
#[command(
    name = "faqsearch",
    version,
    about = "Hybrid FAQ retrieval: build, query, evaluate, tune"
)]
#[command(after_help = "Exit status: 0 success, 2 usage error, 3 invalid input, 4 I/O or network failure.")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build an index directory from a corpus and document embeddings
    Index(IndexArgs),
    /// Run one query, a queries file, or an interactive session
    Query(QueryArgs),
    /// Score a TREC run file against qrels
    Eval(EvalArgs),
    /// Evaluate every (mode, alpha, w) cell and report the best
    Gridsearch(GridArgs),
    /// Serve an index over HTTP/JSON
    Serve(ServeArgs),
    /// Print corpus statistics as JSON
    Stats(StatsArgs),
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("dense").required(true).args(["embeddings", "fallback_dim"]))]
struct IndexArgs {
    /// Corpus in JSON Lines (id, question, answer, optional category and source)
    #[arg(long, value_name = "PATH")]
    corpus: PathBuf,
    /// Document embeddings file covering every corpus id
    #[arg(long, value_name = "PATH")]
    embeddings: Option<PathBuf>,
    /// Use the built-in hashing embedder with this dimension instead
    #[arg(long, value_name = "DIM")]
    fallback_dim: Option<usize>,
    /// Output index directory
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// BM25 k1 recorded in the index
    #[arg(long, default_value_t = faqsearch_core::bm25::DEFAULT_K1)]
    k1: f64,
    /// BM25 b recorded in the index
    #[arg(long, default_value_t = faqsearch_core::bm25::DEFAULT_B)]
    b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Human,
    Run,
    Json,
}

#[derive(Debug, Args)]
struct QueryArgs {
    /// Query text; omit (and omit --queries) for an interactive session
    text: Option<String>,
    /// Index directory
    #[arg(
        long,
        env = "FAQSEARCH_INDEX",
        value_name = "DIR",
        required_unless_present = "server"
    )]
    index: Option<PathBuf>,
    /// Send queries to a running `faqsearch serve` instead of a local index
    #[arg(
        long,
        env = "FAQSEARCH_SERVER",
        value_name = "URL",
        conflicts_with = "query_embeddings"
    )]
    server: Option<String>,
    /// Queries file, one `qid<TAB>text` per line
    #[arg(long, value_name = "PATH", conflicts_with = "text")]
    queries: Option<PathBuf>,
    /// Precomputed query embeddings keyed by query id (needs --queries)
    #[arg(long, value_name = "PATH", requires = "queries")]
    query_embeddings: Option<PathBuf>,
    #[arg(long, value_parser = parse_mode, default_value = "rrf")]
    mode: Ranker,
    #[arg(long, value_enum, default_value_t = Format::Human)]
    format: Format,
    /// Run tag for --format run [default: the mode name]
    #[arg(long)]
    tag: Option<String>,
    /// Worker threads for batches (0 = one per core)
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// TREC run file
    #[arg(long, value_name = "PATH")]
    run: PathBuf,
    /// TREC qrels file (grades 0, 1, 2)
    #[arg(long, value_name = "PATH")]
    qrels: PathBuf,
    /// Rank cutoffs for map, p, recall and ndcg
    #[arg(long, value_parser = parse_cutoff, value_delimiter = ',', default_value = "5,10")]
    cutoffs: Vec<usize>,
    /// Include one row per query
    #[arg(long)]
    per_query: bool,
    /// Also write the report as JSON to this path
    #[arg(long, value_name = "PATH")]
    json: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GridArgs {
    #[arg(long, env = "FAQSEARCH_INDEX", value_name = "DIR")]
    index: PathBuf,
    /// Queries file, one `qid<TAB>text` per line
    #[arg(long, value_name = "PATH")]
    queries: PathBuf,
    #[arg(long, value_name = "PATH")]
    qrels: PathBuf,
    /// Precomputed query embeddings keyed by query id
    #[arg(long, value_name = "PATH")]
    query_embeddings: Option<PathBuf>,
    /// Metric to maximize
    #[arg(long, value_parser = parse_metric, default_value = "ndcg@5")]
    target: Metric,
    /// Comma-separated modes to sweep
    #[arg(long, value_parser = parse_mode, value_delimiter = ',', default_value = "tfidf,bm25,hybrid,rrf")]
    modes: Vec<Ranker>,
    #[arg(long, value_parser = parse_cutoff, value_delimiter = ',', default_value = "5,10")]
    cutoffs: Vec<usize>,
    /// Write the full report here and print only the argmax lines
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long, env = "FAQSEARCH_INDEX", value_name = "DIR")]
    index: PathBuf,
    #[arg(long, default_value = "127.0.0.1:7700")]
    addr: SocketAddr,
    /// Worker threads for batch requests (0 = one per core)
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["corpus", "index"]))]
struct StatsArgs {
    #[arg(long, value_name = "PATH")]
    corpus: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    index: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("faqsearch: {e}");
            e.exit_code()
        }
    }
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Index(a) => cmd_index(a),
        Command::Query(a) => cmd_query(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Gridsearch(a) => cmd_gridsearch(a),
        Command::Serve(a) => cmd_serve(a),
        Command::Stats(a) => cmd_stats(a),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn print(text: &str) -> Result<()> {
    let mut out = io::stdout().lock();
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| CliError::io("<stdout>", e))
}

fn cmd_index(a: IndexArgs) -> Result<ExitCode> {
    let corpus = load_corpus(&a.corpus)?;
    let index = match (&a.embeddings, a.fallback_dim) {
        (Some(path), _) => HybridIndex::build_from_embeddings(&corpus, &read_embedding_file(path)?, a.k1, a.b)?,
        (None, Some(dim)) => HybridIndex::build(&corpus, &HashEmbedder::new(dim)?, a.k1, a.b)?,
        (None, None) => unreachable!("clap requires one of --embeddings, --fallback-dim"),
    };
    let manifest = index.save(&a.out)?;
    eprintln!(
        "indexed {} documents into {} (provider {}, dim {})",
        manifest.n_docs,
        a.out.display(),
        manifest.provider,
        manifest.dim
    );
    Ok(ExitCode::SUCCESS)
}

/// Where queries are answered: in process or by a server. Only one exists
/// per process, so the size difference between variants is irrelevant.
#[allow(clippy::large_enum_variant)]
enum Backend {
    Local {
        index: HybridIndex,
        provider: Option<Box<dyn EmbeddingProvider>>,
        threads: usize,
    },
    Remote {
        client: Client,
        runtime: tokio::runtime::Runtime,
    },
}

impl Backend {
    fn response(index: &HybridIndex, result: faqsearch_core::FusedResult) -> QueryResponse {
        QueryResponse::from_result(result, |id| {
            index
                .ordinal(id)
                .map(|o| index.doc(o).question.clone())
                .unwrap_or_default()
        })
    }

    fn one(&self, q: &Query, params: Option<&FusionParams>, mode: Ranker) -> Result<QueryResponse> {
        match self {
            Backend::Local { index, provider, .. } => {
                let params = params.cloned().unwrap_or_default();
                let result = retrieve(index, provider.as_deref(), q, &params, mode)?;
                Ok(Self::response(index, result))
            }
            Backend::Remote { client, runtime } => {
                let req = QueryRequest {
                    id: Some(q.id.clone()),
                    text: q.text.clone(),
                    mode,
                    params: params.cloned(),
                };
                Ok(runtime.block_on(client.query(&req))?)
            }
        }
    }

    fn batch(&self, queries: &[Query], params: Option<&FusionParams>, mode: Ranker) -> Result<Vec<QueryResponse>> {
        match self {
            Backend::Local {
                index,
                provider,
                threads,
            } => {
                let params = params.cloned().unwrap_or_default();
                let results = retrieve_batch(index, provider.as_deref(), queries, &params, mode, *threads)?;
                Ok(results.into_iter().map(|r| Self::response(index, r)).collect())
            }
            Backend::Remote { client, runtime } => {
                let req = BatchRequest {
                    queries: queries.to_vec(),
                    mode,
                    params: params.cloned(),
                    tag: None,
                };
                Ok(runtime.block_on(client.batch(&req))?.results)
            }
        }
    }
}

fn render(format: Format, tag: &str, queries: &[Query], responses: Vec<QueryResponse>) -> Result<String> {
    Ok(match format {
        Format::Human => queries
            .iter()
            .zip(&responses)
            .map(|(q, r)| output::human(r, &q.text))
            .collect::<Vec<_>>()
            .join("\n"),
        Format::Run => {
            let results: Vec<_> = responses.into_iter().map(QueryResponse::into_result).collect();
            RunFile::from_results(&results, tag).to_trec()
        }
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&responses).expect("responses serialize");
            s.push('\n');
            s
        }
    })
}

fn cmd_query(a: QueryArgs) -> Result<ExitCode> {
    let batch = match &a.queries {
        Some(path) => Some(input::load_queries(path)?),
        None => None,
    };
    let backend = match &a.server {
        Some(url) => {
            let runtime = tokio::runtime::Builder::new_current_thread()
                .enable_all()
                .build()
                .map_err(|e| CliError::io("<runtime>", e))?;
            Backend::Remote {
                client: Client::new(url.clone()),
                runtime,
            }
        }
        None => {
            let dir = a.index.as_ref().expect("clap requires --index without --server");
            let index = HybridIndex::open(dir)?;
            let provider = input::provider(&index, a.query_embeddings.as_deref(), batch.as_deref().unwrap_or(&[]))?;
            Backend::Local {
                index,
                provider,
                threads: a.threads,
            }
        }
    };
    // A server keeps its own defaults unless the caller overrides something.
    let params = if a.server.is_some() && a.params.is_empty() {
        None
    } else {
        Some(a.params.resolve()?)
    };
    let tag = a.tag.clone().unwrap_or_else(|| a.mode.to_string());

    if let Some(queries) = batch {
        let responses = backend.batch(&queries, params.as_ref(), a.mode)?;
        print(&render(a.format, &tag, &queries, responses)?)?;
        return Ok(ExitCode::SUCCESS);
    }
    if let Some(text) = &a.text {
        let q = Query::new("q1", text.as_str());
        let resp = backend.one(&q, params.as_ref(), a.mode)?;
        print(&render(a.format, &tag, &[q], vec![resp])?)?;
        return Ok(ExitCode::SUCCESS);
    }
    repl(&backend, params.as_ref(), a.mode, a.format, &tag)
}

/// Reads one query per line until end of input. Bad queries are reported
/// and skipped.
fn repl(backend: &Backend, params: Option<&FusionParams>, mode: Ranker, format: Format, tag: &str) -> Result<ExitCode> {
    let stdin = io::stdin();
    let interactive = stdin.is_terminal();
    let prompt = || {
        if interactive {
            eprint!("faqsearch> ");
            let _ = io::stderr().flush();
        }
    };
    prompt();
    let mut n = 0;
    for line in stdin.lock().lines() {
        let line = line.map_err(|e| CliError::io("<stdin>", e))?;
        n += 1;
        let q = Query::new(format!("q{n}"), line.trim());
        match backend.one(&q, params, mode) {
            Ok(resp) => print(&render(format, tag, &[q], vec![resp])?)?,
            Err(e) if e.is_validation() => eprintln!("faqsearch: {e}"),
            Err(e) => return Err(e),
        }
        prompt();
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_eval(a: EvalArgs) -> Result<ExitCode> {
    let run = load_run(&a.run)?;
    let qrels = load_qrels(&a.qrels)?;
    let report = metrics(&run, &qrels, &a.cutoffs)?;
    print(&report.to_text(a.per_query))?;
    if let Some(path) = &a.json {
        let mut s = serde_json::to_string_pretty(&report).expect("report serializes");
        s.push('\n');
        write_file(path, &s)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_gridsearch(a: GridArgs) -> Result<ExitCode> {
    let base = a.params.resolve()?;
    let index = HybridIndex::open(&a.index)?;
    let queries = input::load_queries(&a.queries)?;
    let qrels = load_qrels(&a.qrels)?;
    let provider = input::provider(&index, a.query_embeddings.as_deref(), &queries)?;
    let spec = GridSpec {
        modes: a.modes,
        cutoffs: a.cutoffs,
        target: a.target,
        threads: a.threads,
        ..GridSpec::default()
    };
    let report = grid_search(&index, provider.as_deref(), &queries, &qrels, &base, &spec)?;
    let tsv = report.to_tsv();
    match &a.out {
        Some(path) => {
            write_file(path, &tsv)?;
            let argmax: String = tsv
                .lines()
                .filter(|l| l.starts_with("# argmax"))
                .map(|l| format!("{l}\n"))
                .collect();
            print(&argmax)?;
        }
        None => print(&tsv)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_serve(a: ServeArgs) -> Result<ExitCode> {
    tracing_subscriber::fmt().with_writer(io::stderr).init();
    let params = a.params.resolve()?;
    let index = HybridIndex::open(&a.index)?;
    let state = Arc::new(AppState::new(index, params).with_threads(a.threads));
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::io("<runtime>", e))?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(a.addr)
            .await
            .map_err(|e| CliError::io(a.addr.to_string(), e))?;
        let addr = listener.local_addr().map_err(|e| CliError::io(a.addr.to_string(), e))?;
        eprintln!("listening on http://{addr}");
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        faqsearch_server::serve(listener, state, shutdown)
            .await
            .map_err(|e| CliError::io(addr.to_string(), e))
    })?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_stats(a: StatsArgs) -> Result<ExitCode> {
    let stats = match (&a.corpus, &a.index) {
        (Some(path), _) => compute_stats(&load_corpus(path)?)?,
        (None, Some(dir)) => compute_stats(HybridIndex::open(dir)?.docs())?,
        (None, None) => unreachable!("clap requires --corpus or --index"),
    };
    print(&format!(
        "{}\n",
        serde_json::to_string_pretty(&stats).expect("stats serialize")
    ))?;
    Ok(ExitCode::SUCCESS)
}
