//! End-to-end commands: classify, detect, report, synth. Each run writes a
//! machine-readable log (`run.log`, one JSON object per line) into the
//! output directory; warnings never abort a run, errors always do.

pub mod cache;
pub mod synth;

use std::collections::HashMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classify::{
    read_labels_csv, snowball_label, write_labels_csv, write_model_json, FitOptions,
    InfluenceClass, SnowballOptions,
};
use crate::cluster::{emit_report, frame_clusters, top_clusters, TopicCluster};
use crate::error::{Error, Result};
use crate::graph::{
    build_vocabulary, count_cooccurrence, default_origin, partition_frames, CoocMatrix,
    Vocabulary,
};
use crate::ingest::{parse_archive, tokenize_documents, TokenizedDocument};
use crate::score::{
    burst_stats, burstiness_frame, popularity, relevance, threshold_adjacency, ScoreWeights,
};
use cache::{cache_key, CacheReader, CacheWriter};

pub use synth::{run_synth, GroundTruth, PlantedTopic, SynthConfig, SynthOutcome};

/// Both classes in report order: label 0 before label 1.
const CLASSES: [InfluenceClass; 2] = [InfluenceClass::Idi, InfluenceClass::Mdi];

/// Every knob of the classify/detect/report pipeline. Loadable from a JSON
/// file in which any subset of fields may appear; the rest keep defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub input: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub seeds: Option<PathBuf>,
    /// Frame widths in days; one detection pass runs per entry.
    pub granularities: Vec<u32>,
    pub vocab_size: usize,
    /// Weight on popularity in the relevance mix.
    pub alpha: f64,
    /// Weight on burstiness in the relevance mix.
    pub beta: f64,
    /// Relevance percentile kept as graph edges.
    pub percentile: f64,
    /// Clusters kept per class and granularity.
    pub top_k: usize,
    /// Decision threshold on the classifier probability.
    pub threshold: f64,
    /// Accounts labeled per snowball iteration.
    pub batch: usize,
    /// Snowball stops once this many accounts are labeled.
    pub target: usize,
    pub seed: u64,
    pub out: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            input: None,
            labels: None,
            seeds: None,
            granularities: vec![1, 3, 7, 21],
            vocab_size: 5000,
            alpha: 0.5,
            beta: 0.5,
            percentile: 99.0,
            top_k: 50,
            threshold: 0.7,
            batch: 170,
            target: 1750,
            seed: 7,
            out: PathBuf::from("out"),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<PipelineConfig> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_slice(&bytes)
            .map_err(|e| Error::usage(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        if self.granularities.is_empty() {
            return Err(Error::usage("granularity list must not be empty"));
        }
        if self.granularities.iter().any(|&g| g == 0) {
            return Err(Error::usage("granularities must be at least 1 day"));
        }
        let mut seen = std::collections::BTreeSet::new();
        for &g in &self.granularities {
            if !seen.insert(g) {
                return Err(Error::usage(format!("granularity {g} listed twice")));
            }
        }
        if self.vocab_size < 2 {
            return Err(Error::usage("vocab_size must be at least 2"));
        }
        self.weights().validate()?;
        if !(0.0..100.0).contains(&self.percentile) {
            return Err(Error::usage(format!(
                "percentile must be in [0, 100), got {}",
                self.percentile
            )));
        }
        if self.top_k < 1 {
            return Err(Error::usage("top_k must be at least 1"));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::usage(format!(
                "threshold must be strictly between 0 and 1, got {}",
                self.threshold
            )));
        }
        if self.batch < 1 {
            return Err(Error::usage("batch must be at least 1"));
        }
        if self.target < 1 {
            return Err(Error::usage("target must be at least 1"));
        }
        Ok(())
    }

    pub fn weights(&self) -> ScoreWeights {
        ScoreWeights { alpha: self.alpha, beta: self.beta }
    }

    fn input_path(&self) -> Result<&Path> {
        self.input.as_deref().ok_or_else(|| Error::usage("an input archive is required (--input)"))
    }

    fn labels_path(&self) -> Result<&Path> {
        self.labels.as_deref().ok_or_else(|| Error::usage("a labels file is required (--labels)"))
    }

    fn seeds_path(&self) -> Result<&Path> {
        self.seeds.as_deref().ok_or_else(|| Error::usage("a seeds file is required (--seeds)"))
    }
}

/// Command-line values layered over a config file; `None` means the flag
/// was not given, so the file (or default) value stands.
#[derive(Debug, Clone, Default)]
pub struct ConfigOverrides {
    pub input: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub seeds: Option<PathBuf>,
    pub granularities: Option<Vec<u32>>,
    pub vocab_size: Option<usize>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub percentile: Option<f64>,
    pub top_k: Option<usize>,
    pub threshold: Option<f64>,
    pub batch: Option<usize>,
    pub target: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl ConfigOverrides {
    pub fn apply(self, cfg: &mut PipelineConfig) {
        if self.input.is_some() {
            cfg.input = self.input;
        }
        if self.labels.is_some() {
            cfg.labels = self.labels;
        }
        if self.seeds.is_some() {
            cfg.seeds = self.seeds;
        }
        if let Some(v) = self.granularities {
            cfg.granularities = v;
        }
        if let Some(v) = self.vocab_size {
            cfg.vocab_size = v;
        }
        if let Some(v) = self.alpha {
            cfg.alpha = v;
        }
        if let Some(v) = self.beta {
            cfg.beta = v;
        }
        if let Some(v) = self.percentile {
            cfg.percentile = v;
        }
        if let Some(v) = self.top_k {
            cfg.top_k = v;
        }
        if let Some(v) = self.threshold {
            cfg.threshold = v;
        }
        if let Some(v) = self.batch {
            cfg.batch = v;
        }
        if let Some(v) = self.target {
            cfg.target = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.out {
            cfg.out = v;
        }
    }
}

/// File config plus flag overrides, flags winning.
pub fn resolve_config(file: Option<&Path>, overrides: ConfigOverrides) -> Result<PipelineConfig> {
    let mut cfg = match file {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    overrides.apply(&mut cfg);
    Ok(cfg)
}

// ---- run log ----

/// Append-per-event JSONL log. Entries carry no timestamps, so two runs
/// with the same config produce byte-identical logs.
pub struct RunLog {
    path: PathBuf,
    writer: std::io::BufWriter<std::fs::File>,
    failed: Option<std::io::Error>,
}

impl RunLog {
    /// Creates `run.log` in `out_dir`, creating the directory first.
    pub fn create(out_dir: &Path) -> Result<RunLog> {
        std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
        let path = out_dir.join("run.log");
        let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        Ok(RunLog { path, writer: std::io::BufWriter::new(file), failed: None })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn info(&mut self, stage: &str, message: &str) {
        self.push("info", stage, message);
    }

    pub fn warn(&mut self, stage: &str, message: &str) {
        self.push("warn", stage, message);
    }

    pub fn error(&mut self, stage: &str, message: &str) {
        self.push("error", stage, message);
    }

    fn push(&mut self, level: &str, stage: &str, message: &str) {
        if self.failed.is_some() {
            return;
        }
        let entry =
            serde_json::json!({ "stage": stage, "level": level, "message": message });
        if let Err(e) = writeln!(self.writer, "{entry}") {
            self.failed = Some(e);
        }
    }

    /// Flushes and surfaces the first write failure, if any.
    pub fn finish(mut self) -> Result<PathBuf> {
        if let Some(e) = self.failed.take() {
            return Err(Error::io(&self.path, e));
        }
        self.writer.flush().map_err(|e| Error::io(&self.path, e))?;
        Ok(self.path)
    }
}

fn log_config(log: &mut RunLog, cfg: &PipelineConfig) {
    let echo = serde_json::to_string(cfg).unwrap_or_else(|e| format!("unencodable: {e}"));
    log.info("config", &echo);
    log.info("config", &format!("seed={}", cfg.seed));
}

// ---- classify ----

/// Artifacts of one classify run.
#[derive(Debug, Clone)]
pub struct ClassifyOutcome {
    pub labels: PathBuf,
    pub model: PathBuf,
    pub labeled: usize,
    pub fit_passes: usize,
}

/// Ingests the archive, expands labels from the seed set, and writes
/// `labels.csv` plus `model.json` to the output directory.
pub fn run_classify(cfg: &PipelineConfig, log: &mut RunLog) -> Result<ClassifyOutcome> {
    log_config(log, cfg);
    let input = cfg.input_path()?;
    let seeds_path = cfg.seeds_path()?;

    let scan = parse_archive(input)?;
    for s in &scan.skipped {
        log.warn("ingest", &format!("line {}: {}", s.line, s.reason));
    }
    log.info(
        "ingest",
        &format!("parsed {} documents, skipped {} lines", scan.documents.len(), scan.skipped.len()),
    );

    let seeds = read_labels_csv(seeds_path)?;
    log.info("classify", &format!("{} seed labels", seeds.len()));
    let opts = SnowballOptions {
        batch_size: cfg.batch,
        target: cfg.target,
        fit: FitOptions { threshold: cfg.threshold, ..FitOptions::default() },
    };
    let outcome = snowball_label(&scan.documents, &seeds, &opts)?;
    for w in &outcome.warnings {
        log.warn("classify", w);
    }
    log.info(
        "classify",
        &format!("labeled {} accounts in {} fit passes", outcome.labels.len(), outcome.fit_passes),
    );

    let labels_path = cfg.out.join("labels.csv");
    write_labels_csv(&labels_path, &outcome.labels)?;
    let model_path = cfg.out.join("model.json");
    write_model_json(&model_path, &outcome.model)?;
    log.info("emit", &format!("wrote {}", labels_path.display()));
    log.info("emit", &format!("wrote {}", model_path.display()));
    Ok(ClassifyOutcome {
        labels: labels_path,
        model: model_path,
        labeled: outcome.labels.len(),
        fit_passes: outcome.fit_passes,
    })
}

// ---- detect / report ----

/// Artifacts of one detect or report run.
#[derive(Debug, Clone)]
pub struct DetectOutcome {
    pub clusters: PathBuf,
    pub scatter: PathBuf,
    pub cluster_count: usize,
    pub reused_cache: bool,
}

/// Scores one stack of per-frame count matrices and returns every cluster
/// found. Frames whose relevance values cannot support a percentile cut
/// (all equal, or a threshold at the implicit baseline that would make the
/// graph dense) are skipped with a warning.
fn score_stack(
    frames: &[CoocMatrix],
    granularity_days: u32,
    class: InfluenceClass,
    weights: &ScoreWeights,
    percentile: f64,
    log: &mut RunLog,
) -> Result<Vec<TopicCluster>> {
    if frames.is_empty() {
        return Ok(Vec::new());
    }
    let pops = frames.iter().map(popularity).collect::<Result<Vec<_>>>()?;
    let stats = burst_stats(&pops)?;
    let mut clusters = Vec::new();
    for pop in &pops {
        let burst = burstiness_frame(pop, &stats)?;
        let rel = relevance(pop, &burst, weights)?;
        let (adj, warnings) = threshold_adjacency(&rel, percentile)?;
        if !warnings.is_empty() {
            for w in &warnings {
                log.warn(
                    "score",
                    &format!(
                        "class {} granularity {} frame {}: {}",
                        class.as_str(),
                        granularity_days,
                        pop.frame_id,
                        w
                    ),
                );
            }
            log.warn(
                "score",
                &format!(
                    "class {} granularity {} frame {} skipped",
                    class.as_str(),
                    granularity_days,
                    pop.frame_id
                ),
            );
            continue;
        }
        clusters.extend(frame_clusters(&adj, pop, &burst, &rel, granularity_days, class)?);
    }
    Ok(clusters)
}

fn rank_stack(
    clusters: Vec<TopicCluster>,
    granularity_days: u32,
    class: InfluenceClass,
    top_k: usize,
    log: &mut RunLog,
) -> Result<Vec<TopicCluster>> {
    let found = clusters.len();
    let ranked = top_clusters(clusters, top_k)?;
    log.info(
        "cluster",
        &format!(
            "class {} granularity {}: {} clusters, kept {}",
            class.as_str(),
            granularity_days,
            found,
            ranked.len()
        ),
    );
    Ok(ranked)
}

/// Splits tokenized documents by account class. Documents from unlabeled
/// accounts are dropped with a warning.
fn split_by_class(
    docs: Vec<TokenizedDocument>,
    labels: &[crate::classify::LabeledAccount],
    log: &mut RunLog,
) -> (Vec<TokenizedDocument>, Vec<TokenizedDocument>) {
    let mut label_of: HashMap<&str, InfluenceClass> = HashMap::new();
    for l in labels {
        if let Some(prev) = label_of.insert(l.account_id.as_str(), l.label) {
            if prev != l.label {
                log.warn(
                    "graph",
                    &format!(
                        "account {} labeled more than once; keeping label {}",
                        l.account_id,
                        prev.label()
                    ),
                );
                label_of.insert(l.account_id.as_str(), prev);
            }
        }
    }
    let mut idi = Vec::new();
    let mut mdi = Vec::new();
    let mut excluded = 0usize;
    for doc in docs {
        match label_of.get(doc.author_id.as_str()) {
            Some(InfluenceClass::Idi) => idi.push(doc),
            Some(InfluenceClass::Mdi) => mdi.push(doc),
            None => excluded += 1,
        }
    }
    if excluded > 0 {
        log.warn("graph", &format!("excluded {excluded} documents from unlabeled accounts"));
    }
    (idi, mdi)
}

fn class_docs<'a>(
    class: InfluenceClass,
    idi: &'a [TokenizedDocument],
    mdi: &'a [TokenizedDocument],
) -> &'a [TokenizedDocument] {
    match class {
        InfluenceClass::Idi => idi,
        InfluenceClass::Mdi => mdi,
    }
}

/// Counts co-occurrence per frame, caching the matrices, then scores and
/// clusters each (class, granularity) stack and writes the report files.
/// When the cache already holds counts for identical inputs, counting is
/// skipped and the cached matrices are rescored.
pub fn run_detect(cfg: &PipelineConfig, log: &mut RunLog) -> Result<DetectOutcome> {
    log_config(log, cfg);
    let input = cfg.input_path()?;
    let labels_path = cfg.labels_path()?;
    let weights = cfg.weights();
    let cache_dir = cfg.out.join("cache");
    let key = cache_key(input, labels_path, cfg.vocab_size, &cfg.granularities)?;

    let reader = match CacheReader::open(&cache_dir)? {
        Some(r) if r.manifest.key == key => Some(r),
        Some(_) => {
            log.info("cache", "cached counts were built from different inputs; recounting");
            None
        }
        None => None,
    };

    let mut all: Vec<TopicCluster> = Vec::new();
    let vocab: Vocabulary;
    let reused = reader.is_some();

    if let Some(r) = reader {
        log.info("cache", &format!("reusing cached counts for key {key}"));
        vocab = r.vocab()?;
        for (class, gran) in r.stack_index() {
            let frames = r.read_stack(class, gran)?;
            let clusters = score_stack(&frames, gran, class, &weights, cfg.percentile, log)?;
            all.extend(rank_stack(clusters, gran, class, cfg.top_k, log)?);
        }
    } else {
        let scan = parse_archive(input)?;
        for s in &scan.skipped {
            log.warn("ingest", &format!("line {}: {}", s.line, s.reason));
        }
        let labels = read_labels_csv(labels_path)?;
        let (tokenized, empty) = tokenize_documents(&scan.documents);
        log.info(
            "ingest",
            &format!(
                "parsed {} documents ({} without tokens), {} labeled accounts",
                tokenized.len(),
                empty,
                labels.len()
            ),
        );
        let (idi, mdi) = split_by_class(tokenized, &labels, log);
        let included: Vec<TokenizedDocument> =
            idi.iter().chain(mdi.iter()).cloned().collect();
        if included.is_empty() {
            return Err(Error::data("no documents from labeled accounts"));
        }
        vocab = build_vocabulary(&included, cfg.vocab_size)?;
        let origin = default_origin(&included).expect("included is non-empty");
        log.info(
            "graph",
            &format!("vocabulary of {} terms, frame origin {}", vocab.len(), origin),
        );
        drop(included);

        let mut writer = CacheWriter::create(&cache_dir, key.clone(), origin, &vocab)?;
        for class in CLASSES {
            let docs = class_docs(class, &idi, &mdi);
            if docs.is_empty() {
                log.warn(
                    "graph",
                    &format!("class {} has no documents; skipped", class.as_str()),
                );
                continue;
            }
            let by_id: HashMap<&str, &TokenizedDocument> =
                docs.iter().map(|d| (d.doc_id.as_str(), d)).collect();
            for &gran in &cfg.granularities {
                let index = partition_frames(docs, gran, origin)?;
                let mut frames = Vec::with_capacity(index.frame_count());
                for (t, ids) in index.frames.iter().enumerate() {
                    let frame_docs: Vec<&TokenizedDocument> =
                        ids.iter().map(|id| by_id[id.as_str()]).collect();
                    let (m, warnings) = count_cooccurrence(t, &frame_docs, &vocab);
                    for w in warnings {
                        log.warn("graph", &w);
                    }
                    frames.push(m);
                }
                log.info(
                    "graph",
                    &format!(
                        "class {} granularity {}: {} documents over {} frames",
                        class.as_str(),
                        gran,
                        docs.len(),
                        frames.len()
                    ),
                );
                writer.add_stack(class, gran, &frames)?;
                let clusters = score_stack(&frames, gran, class, &weights, cfg.percentile, log)?;
                all.extend(rank_stack(clusters, gran, class, cfg.top_k, log)?);
            }
        }
        writer.finish()?;
        log.info("cache", &format!("wrote counts under {}", cache_dir.display()));
    }

    let cluster_count = all.len();
    let (clusters_csv, scatter_csv) = emit_report(&all, &vocab, &cfg.out)?;
    log.info("report", &format!("wrote {}", clusters_csv.display()));
    log.info("report", &format!("wrote {}", scatter_csv.display()));
    Ok(DetectOutcome {
        clusters: clusters_csv,
        scatter: scatter_csv,
        cluster_count,
        reused_cache: reused,
    })
}

/// Rescores cached count matrices with the current weights, percentile,
/// and top_k, then rewrites the report files. Requires a prior detect run.
pub fn run_report(cfg: &PipelineConfig, log: &mut RunLog) -> Result<DetectOutcome> {
    log_config(log, cfg);
    let cache_dir = cfg.out.join("cache");
    let reader = CacheReader::open(&cache_dir)?.ok_or_else(|| {
        Error::data(format!("no cached counts under {}; run detect first", cache_dir.display()))
    })?;
    log.info("cache", &format!("rescoring counts for key {}", reader.manifest.key));
    let weights = cfg.weights();
    let vocab = reader.vocab()?;
    let mut all = Vec::new();
    for (class, gran) in reader.stack_index() {
        let frames = reader.read_stack(class, gran)?;
        let clusters = score_stack(&frames, gran, class, &weights, cfg.percentile, log)?;
        all.extend(rank_stack(clusters, gran, class, cfg.top_k, log)?);
    }
    let cluster_count = all.len();
    let (clusters_csv, scatter_csv) = emit_report(&all, &vocab, &cfg.out)?;
    log.info("report", &format!("wrote {}", clusters_csv.display()));
    log.info("report", &format!("wrote {}", scatter_csv.display()));
    Ok(DetectOutcome {
        clusters: clusters_csv,
        scatter: scatter_csv,
        cluster_count,
        reused_cache: true,
    })
}
