//! Subcommands of the `cartograph` binary.

use std::ffi::OsString;
use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::Context;
use cartograph::clustering::{DEFAULT_DPO_K, DEFAULT_MAP_K, DEFAULT_RESTARTS};
use cartograph::corpus::{
    deduplicate, load_corpus, load_stopwords, Corpus, Document, Format, HeuristicExtractor, IngestReport,
};
use cartograph::dpo::{
    answer_corpora, filter_preference_dataset, load_triples, write_triples, DpoOptions, DEFAULT_SHARED_THRESHOLD,
    DEFAULT_TOP_N,
};
use cartograph::embedding::{EmbedOptions, EmbeddedCorpus};
use cartograph::frames::{build_report, load_labels, DEFAULT_COEFFICIENT, DEFAULT_CURVE_COEFFICIENTS};
use cartograph::geometry::{MapModel, MapOptions, DEFAULT_RESOLUTION};
use cartograph::pipeline::{build_topic_map, PipelineOptions};
use cartograph::projection::TsneParams;
use cartograph::topics::{TopicOptions, DEFAULT_CUTOFF_FRACTION, DEFAULT_NAME_TERMS, DEFAULT_RANK_TERMS};
use clap::{Args, CommandFactory, Parser, Subcommand};

use crate::compare::{compare_embedders, CompareReport};
use crate::embedder::{build_provider, embed, sole_cache_embedder};
use crate::frames::{FrameEngine, Poles};
use crate::server::{self, AppState};
use crate::{config, UsageError};

pub const MAP_FILE: &str = "map.json";
pub const INGEST_REPORT_FILE: &str = "ingest_report.json";
pub const OVERLAP_REPORT_FILE: &str = "overlap_report.json";
pub const CHOSEN_MAP_FILE: &str = "chosen_map.json";
pub const DEFAULT_PORT: u16 = 7860;

#[derive(Debug, Parser)]
#[command(name = "cartograph", version, about = "Topic maps, semantic frames and preference-set filtering")]
pub struct Cli {
    /// TOML file of `key = value` flag defaults; flags on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Embed, project, cluster and name topics; writes map.json and ingest_report.json.
    Map(MapArgs),
    /// Cluster one corpus under several embedders and write the pairwise ARI matrix.
    Compare(CompareArgs),
    /// Place documents on two semantic axes and write the frame report.
    Frames(FramesArgs),
    /// Keep preference triples whose chosen answer falls in a topic the rejected side lacks.
    DpoFilter(DpoArgs),
    /// Serve a map and related artifacts over HTTP.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CorpusArgs {
    /// Input layout; inferred from the file extension when omitted.
    #[arg(long)]
    pub format: Option<Format>,
    #[arg(long, default_value = "text")]
    pub text_field: String,
    /// Field holding document ids; records are numbered when omitted.
    #[arg(long)]
    pub id_field: Option<String>,
    /// Drop documents whose normalised text repeats an earlier one.
    #[arg(long)]
    pub dedup: bool,
    /// Newline-separated stopword list replacing the built-in one.
    #[arg(long, value_name = "FILE")]
    pub stopwords: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EmbedderArgs {
    /// Embedding endpoint, or `hash://<dim>[?seed=<n>]` for the offline hashing embedder.
    #[arg(long)]
    pub embedder_url: Option<String>,
    /// Name recorded in caches and artifacts; defaults to the URL.
    #[arg(long)]
    pub embedder_name: Option<String>,
    #[arg(long, default_value_t = 64)]
    pub batch_size: usize,
    /// Batches in flight at once.
    #[arg(long, default_value_t = 4)]
    pub max_concurrent: usize,
    /// JSONL embedding cache, read before and appended after each request.
    #[arg(long, value_name = "FILE")]
    pub cache: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct PipelineArgs {
    /// Number of clusters.
    #[arg(long)]
    pub k: Option<usize>,
    /// Projection seed, also used for k-means unless --cluster-seed is given.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long)]
    pub cluster_seed: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_RESTARTS)]
    pub restarts: usize,
    #[arg(long, default_value_t = 30.0)]
    pub perplexity: f64,
    #[arg(long, default_value_t = 1000)]
    pub iterations: usize,
    /// Fraction of the vocabulary, by document frequency, kept for topic terms.
    #[arg(long, default_value_t = DEFAULT_CUTOFF_FRACTION)]
    pub cutoff_fraction: f64,
    #[arg(long, default_value_t = DEFAULT_NAME_TERMS)]
    pub name_terms: usize,
    #[arg(long, default_value_t = DEFAULT_RANK_TERMS)]
    pub rank_terms: usize,
}

#[derive(Debug, Clone, Args)]
pub struct MapArgs {
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub embedder: EmbedderArgs,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Density grid cells per axis.
    #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
    pub resolution: usize,
    /// Fixed density bandwidth; Scott's rule when omitted.
    #[arg(long)]
    pub bandwidth: Option<f64>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Embedding cache covering the corpus, one embedder per file. Repeatable.
    #[arg(long = "cache", value_name = "FILE")]
    pub caches: Vec<PathBuf>,
    /// Live embedder to include alongside the caches. Repeatable.
    #[arg(long = "embedder-url", value_name = "URL")]
    pub embedder_urls: Vec<String>,
    #[arg(long, default_value_t = 64)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 4)]
    pub max_concurrent: usize,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Output JSON file.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct FramesArgs {
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub embedder: EmbedderArgs,
    /// Horizontal axis as "positive text::negative text".
    #[arg(long)]
    pub axis_x: String,
    /// Vertical axis as "positive text::negative text".
    #[arg(long)]
    pub axis_y: String,
    /// Radius filter: documents within coefficient * max |coordinate| of the centre are dropped.
    #[arg(long, default_value_t = DEFAULT_COEFFICIENT)]
    pub coefficient: f64,
    /// JSONL of {id, label_x, label_y} reference labels for agreement curves.
    #[arg(long, value_name = "FILE")]
    pub labels: Option<PathBuf>,
    /// Coefficients at which agreement is measured.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_CURVE_COEFFICIENTS.to_vec())]
    pub curve: Vec<f64>,
    /// Inclusive token-count buckets such as `0-50,51-200` for per-length agreement.
    #[arg(long, value_delimiter = ',')]
    pub length_buckets: Vec<String>,
    /// Output file; stdout when omitted.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct DpoArgs {
    /// JSONL with `prompt`, `chosen` and `rejected` fields.
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    #[command(flatten)]
    pub embedder: EmbedderArgs,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Shared top terms above which a chosen and a rejected topic overlap.
    #[arg(long, default_value_t = DEFAULT_SHARED_THRESHOLD)]
    pub threshold: usize,
    /// Top terms per topic compared.
    #[arg(long, default_value_t = DEFAULT_TOP_N)]
    pub top_n: usize,
    #[arg(long, value_name = "FILE")]
    pub stopwords: Option<PathBuf>,
    /// Filtered JSONL; the overlap report and chosen-side map go next to it.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ServeArgs {
    /// Map JSON written by `map` or `dpo-filter`.
    #[arg(long, value_name = "FILE")]
    pub map: PathBuf,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, default_value_t = DEFAULT_PORT)]
    pub port: u16,
    /// Report written by `compare`, served at /api/compare.
    #[arg(long, value_name = "FILE")]
    pub compare: Option<PathBuf>,
    /// The corpus behind the map; enables document texts and, with an embedder, live frames.
    #[arg(long, value_name = "FILE")]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub embedder: EmbedderArgs,
    /// Frame requests computed at once.
    #[arg(long, default_value_t = 4)]
    pub frame_workers: usize,
    /// Allowed browser origin; any origin when omitted.
    #[arg(long)]
    pub cors_origin: Option<String>,
}

/// Applies `--config` and parses. Errors carry clap's exit code.
pub fn parse(args: Vec<OsString>) -> Result<Cli, clap::Error> {
    let command = Cli::command();
    let merged = config::merge_config(args.clone(), &command).map_err(|e| {
        Cli::command().error(clap::error::ErrorKind::InvalidValue, format!("{e:#}"))
    })?;
    Cli::try_parse_from(merged)
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Map(args) => run_map(&args),
        Command::Compare(args) => run_compare(&args),
        Command::Frames(args) => run_frames(&args),
        Command::DpoFilter(args) => run_dpo(&args),
        Command::Serve(args) => run_serve(&args),
    }
}

impl CorpusArgs {
    pub fn load(&self, path: &Path) -> anyhow::Result<(Corpus, IngestReport)> {
        let format = self.format.unwrap_or_else(|| infer_format(path));
        let (corpus, mut report) = load_corpus(path, format, &self.text_field, self.id_field.as_deref())
            .with_context(|| format!("loading {}", path.display()))?;
        if !self.dedup {
            return Ok((corpus, report));
        }
        let (corpus, removed) = deduplicate(&corpus);
        report.deduplicated = removed;
        Ok((corpus, report))
    }

    pub fn extractor(&self) -> anyhow::Result<HeuristicExtractor> {
        extractor(self.stopwords.as_deref())
    }
}

fn infer_format(path: &Path) -> Format {
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("csv") => Format::Csv,
        _ => Format::Jsonl,
    }
}

fn extractor(stopwords: Option<&Path>) -> anyhow::Result<HeuristicExtractor> {
    Ok(match stopwords {
        Some(path) => HeuristicExtractor::new(
            load_stopwords(path).with_context(|| format!("reading stopwords {}", path.display()))?,
        ),
        None => HeuristicExtractor::default(),
    })
}

impl EmbedderArgs {
    fn options(&self) -> EmbedOptions {
        EmbedOptions {
            batch_size: self.batch_size,
            max_concurrent_batches: self.max_concurrent,
            cache_path: self.cache.clone(),
        }
    }

    fn has_provider(&self) -> bool {
        self.embedder_url.is_some()
    }

    pub fn embed(&self, corpus: &Corpus) -> anyhow::Result<EmbeddedCorpus> {
        if self.embedder_url.is_none() && self.cache.is_none() {
            return Err(UsageError("pass --embedder-url or --cache".into()).into());
        }
        let provider = build_provider(self.embedder_url.as_deref(), self.embedder_name.as_deref())?;
        embed(corpus, provider.as_ref(), &self.options())
    }
}

impl PipelineArgs {
    pub fn options(&self, default_k: usize) -> PipelineOptions {
        let mut options = PipelineOptions {
            k: self.k.unwrap_or(default_k),
            seed: self.seed,
            cluster_seed: self.cluster_seed,
            tsne: TsneParams {
                perplexity: self.perplexity,
                iterations: self.iterations,
                ..TsneParams::default()
            },
            topics: TopicOptions {
                cutoff_fraction: self.cutoff_fraction,
                name_terms: self.name_terms,
                rank_terms: self.rank_terms,
            },
            ..PipelineOptions::default()
        };
        options.kmeans.restarts = self.restarts;
        options
    }
}

fn ensure_parent(path: &Path) -> anyhow::Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    Ok(())
}

fn write_file(path: &Path, contents: &str) -> anyhow::Result<()> {
    ensure_parent(path)?;
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn pretty<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("artifact serializes")
}

pub fn run_map(args: &MapArgs) -> anyhow::Result<()> {
    let (corpus, report) = args.corpus.load(&args.input)?;
    let extractor = args.corpus.extractor()?;
    let ec = args.embedder.embed(&corpus)?;
    let map = build_topic_map(
        &ec,
        &extractor,
        &args.pipeline.options(DEFAULT_MAP_K),
        &MapOptions {
            resolution: args.resolution,
            bandwidth: args.bandwidth,
        },
    )?;
    write_file(&args.out.join(MAP_FILE), &map.to_json())?;
    write_file(&args.out.join(INGEST_REPORT_FILE), &pretty(&report))?;
    log::info!(
        "wrote {} documents in {} topics to {}",
        map.points.len(),
        map.topics.len(),
        args.out.display()
    );
    Ok(())
}

pub fn run_compare(args: &CompareArgs) -> anyhow::Result<()> {
    let sources = args.caches.len() + args.embedder_urls.len();
    if sources < 2 {
        return Err(UsageError(format!("compare needs at least two embedders (--cache or --embedder-url), got {sources}")).into());
    }
    let (corpus, _) = args.corpus.load(&args.input)?;
    let extractor = args.corpus.extractor()?;
    let mut corpora = Vec::with_capacity(sources);
    for cache in &args.caches {
        let name = sole_cache_embedder(cache)?;
        let provider = build_provider(None, Some(&name))?;
        let options = EmbedOptions {
            batch_size: args.batch_size,
            max_concurrent_batches: args.max_concurrent,
            cache_path: Some(cache.clone()),
        };
        corpora.push(embed(&corpus, provider.as_ref(), &options)?);
    }
    for url in &args.embedder_urls {
        let provider = build_provider(Some(url), None)?;
        let options = EmbedOptions {
            batch_size: args.batch_size,
            max_concurrent_batches: args.max_concurrent,
            cache_path: None,
        };
        corpora.push(embed(&corpus, provider.as_ref(), &options)?);
    }
    let report = compare_embedders(&corpora, &extractor, &args.pipeline.options(DEFAULT_MAP_K))?;
    write_file(&args.out, &report.to_json())
}

fn parse_bucket(spec: &str) -> Result<(usize, usize), UsageError> {
    let bad = || UsageError(format!("length bucket {spec:?} must look like `lo-hi`"));
    let (lo, hi) = spec.trim().split_once('-').ok_or_else(bad)?;
    let lo: usize = lo.trim().parse().map_err(|_| bad())?;
    let hi: usize = hi.trim().parse().map_err(|_| bad())?;
    if lo > hi {
        return Err(bad());
    }
    Ok((lo, hi))
}

pub fn run_frames(args: &FramesArgs) -> anyhow::Result<()> {
    let x = Poles::parse(&args.axis_x).map_err(|e| UsageError(e.to_string()))?;
    let y = Poles::parse(&args.axis_y).map_err(|e| UsageError(e.to_string()))?;
    if !args.embedder.has_provider() {
        return Err(UsageError("frames needs --embedder-url to embed the axis texts".into()).into());
    }
    let buckets = args
        .length_buckets
        .iter()
        .map(|s| parse_bucket(s))
        .collect::<Result<Vec<_>, _>>()?;
    let labels = args.labels.as_deref().map(load_labels).transpose()?;

    let (corpus, _) = args.corpus.load(&args.input)?;
    let ec = args.embedder.embed(&corpus)?;
    let provider = build_provider(args.embedder.embedder_url.as_deref(), args.embedder.embedder_name.as_deref())?;
    let engine = FrameEngine::new(ec, provider);
    let plot = engine.plot(&x, &y, args.coefficient)?;
    let report = build_report(&plot, labels.as_ref(), &args.curve, &buckets)?;
    log::info!("{} of {} documents retained", report.retained, report.total);
    match &args.out {
        Some(path) => write_file(path, &report.to_json()),
        None => {
            println!("{}", report.to_json());
            Ok(())
        }
    }
}

/// Cache ids of one answer side. Both sides share triple ids, so they are
/// namespaced to keep their cache entries apart.
fn side_corpus(corpus: &Corpus, side: &str) -> anyhow::Result<Corpus> {
    let docs = corpus
        .documents()
        .iter()
        .map(|d| Document::new(format!("{side}/{}", d.id), d.text.clone()).expect("text is non-empty"))
        .collect();
    Ok(Corpus::from_documents(docs, corpus.source_path(), corpus.format())?)
}

fn sibling(path: &Path, name: &str) -> PathBuf {
    path.parent().map(|p| p.join(name)).unwrap_or_else(|| PathBuf::from(name))
}

pub fn run_dpo(args: &DpoArgs) -> anyhow::Result<()> {
    let triples = load_triples(&args.input)?;
    let extractor = extractor(args.stopwords.as_deref())?;
    let (chosen, rejected) = answer_corpora(&triples)?;
    let mut sides = Vec::with_capacity(2);
    for (corpus, side) in [(chosen, "chosen"), (rejected, "rejected")] {
        let keyed = args.embedder.embed(&side_corpus(&corpus, side)?)?;
        let name = keyed.embedder_name().to_string();
        sides.push(EmbeddedCorpus::new(corpus, keyed.vectors().to_vec(), name)?);
    }
    let options = DpoOptions {
        pipeline: args.pipeline.options(DEFAULT_DPO_K),
        shared_threshold: args.threshold,
        top_n: args.top_n,
    };
    let outcome = filter_preference_dataset(&triples, &sides[0], &sides[1], &extractor, &options)?;

    ensure_parent(&args.out)?;
    write_triples(&args.out, outcome.retained.iter().map(|&i| &triples[i]))?;
    write_file(&sibling(&args.out, OVERLAP_REPORT_FILE), &outcome.report.to_json())?;
    let map = outcome.chosen.to_map(&sides[0], &MapOptions::default())?;
    write_file(&sibling(&args.out, CHOSEN_MAP_FILE), &map.to_json())?;
    log::info!("kept {} of {} triples", outcome.retained.len(), triples.len());
    Ok(())
}

pub fn load_map(path: &Path) -> anyhow::Result<MapModel> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    MapModel::from_json(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Assembles the server state from `serve` flags.
pub fn build_state(args: &ServeArgs) -> anyhow::Result<AppState> {
    let map = load_map(&args.map)?;
    let compare = args.compare.as_deref().map(CompareReport::load).transpose()?;
    if args.frame_workers == 0 {
        return Err(UsageError("--frame-workers must be at least 1".into()).into());
    }
    let mut state = AppState::new(map, args.frame_workers).with_compare(compare);

    let Some(input) = &args.input else {
        if args.embedder.has_provider() {
            return Err(UsageError("--embedder-url needs --input with the map's corpus".into()).into());
        }
        return Ok(state);
    };
    let (corpus, _) = args.corpus.load(input)?;
    state = state.with_corpus(&corpus)?;
    if args.embedder.has_provider() {
        let ec = args.embedder.embed(&corpus)?;
        let provider = build_provider(args.embedder.embedder_url.as_deref(), args.embedder.embedder_name.as_deref())?;
        state = state.with_frames(FrameEngine::new(ec, provider));
    }
    Ok(state)
}

pub fn run_serve(args: &ServeArgs) -> anyhow::Result<()> {
    let state = Arc::new(build_state(args)?);
    let addr: SocketAddr = format!("{}:{}", args.host, args.port)
        .parse()
        .map_err(|_| UsageError(format!("invalid address {}:{}", args.host, args.port)))?;
    let cors = server::cors_layer(args.cors_origin.as_deref())?;
    let runtime = tokio::runtime::Runtime::new().context("starting runtime")?;
    runtime.block_on(server::serve(state, addr, cors))
}
