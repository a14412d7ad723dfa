use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use termburst::pipeline::{
    resolve_config, run_classify, run_detect, run_report, run_synth, ConfigOverrides,
    PipelineConfig, RunLog, SynthConfig,
};

#[derive(Parser)]
#[command(
    name = "termburst",
    version,
    about = "bursty topic detection over tweet archives, split by account influence class"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Expand seed labels over the archive; writes labels.csv and model.json
    Classify(PipelineArgs),
    /// Count, score, and cluster bursty term pairs per class and granularity
    Detect(PipelineArgs),
    /// Re-emit report files from cached counts with current scoring knobs
    Report(PipelineArgs),
    /// Generate a synthetic archive with planted bursty topics
    Synth(SynthArgs),
}

#[derive(Args)]
struct PipelineArgs {
    /// JSON config file; individual flags override its fields
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// JSONL tweet archive
    #[arg(long, value_name = "FILE")]
    input: Option<PathBuf>,
    /// Account labels CSV, as written by classify
    #[arg(long, value_name = "FILE")]
    labels: Option<PathBuf>,
    /// Seed labels CSV for snowball expansion
    #[arg(long, value_name = "FILE")]
    seeds: Option<PathBuf>,
    /// Comma-separated frame widths in days
    #[arg(long, value_delimiter = ',', value_name = "DAYS")]
    granularities: Option<Vec<u32>>,
    /// Maximum vocabulary size
    #[arg(long, value_name = "N")]
    vocab_size: Option<usize>,
    /// Popularity weight in the relevance mix
    #[arg(long, value_name = "W")]
    alpha: Option<f64>,
    /// Burstiness weight in the relevance mix
    #[arg(long, value_name = "W")]
    beta: Option<f64>,
    /// Relevance percentile kept as graph edges
    #[arg(long, value_name = "P")]
    percentile: Option<f64>,
    /// Clusters kept per class and granularity
    #[arg(long, value_name = "K")]
    top_k: Option<usize>,
    /// Decision threshold on the classifier probability
    #[arg(long, value_name = "T")]
    threshold: Option<f64>,
    /// Accounts labeled per snowball iteration
    #[arg(long, value_name = "N")]
    batch: Option<usize>,
    /// Snowball stops once this many accounts are labeled
    #[arg(long, value_name = "N")]
    target: Option<usize>,
    /// RNG seed, recorded in the run log
    #[arg(long, value_name = "SEED")]
    seed: Option<u64>,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// Number of documents to generate
    #[arg(long, value_name = "N")]
    docs: Option<usize>,
    /// Number of planted bursty topics (0 for background only)
    #[arg(long, value_name = "N")]
    topics: Option<usize>,
    /// Corpus span in days
    #[arg(long, value_name = "DAYS")]
    days: Option<u32>,
    /// RNG seed, recorded in the run log
    #[arg(long, value_name = "SEED")]
    seed: Option<u64>,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

impl PipelineArgs {
    fn into_config(self) -> termburst::Result<PipelineConfig> {
        let overrides = ConfigOverrides {
            input: self.input,
            labels: self.labels,
            seeds: self.seeds,
            granularities: self.granularities,
            vocab_size: self.vocab_size,
            alpha: self.alpha,
            beta: self.beta,
            percentile: self.percentile,
            top_k: self.top_k,
            threshold: self.threshold,
            batch: self.batch,
            target: self.target,
            seed: self.seed,
            out: self.out,
        };
        let cfg = resolve_config(self.config.as_deref(), overrides)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> termburst::Result<()> {
    match command {
        Command::Classify(args) => {
            let cfg = args.into_config()?;
            let mut log = RunLog::create(&cfg.out)?;
            let result = run_classify(&cfg, &mut log);
            if let Ok(o) = &result {
                println!("labeled {} accounts in {} fit passes", o.labeled, o.fit_passes);
                println!("wrote {} and {}", o.labels.display(), o.model.display());
            }
            finish(result.map(|_| ()), log)
        }
        Command::Detect(args) => {
            let cfg = args.into_config()?;
            let mut log = RunLog::create(&cfg.out)?;
            let result = run_detect(&cfg, &mut log);
            if let Ok(o) = &result {
                let source = if o.reused_cache { "cached counts" } else { "fresh counts" };
                println!("{} clusters from {source}", o.cluster_count);
                println!("wrote {} and {}", o.clusters.display(), o.scatter.display());
            }
            finish(result.map(|_| ()), log)
        }
        Command::Report(args) => {
            let cfg = args.into_config()?;
            let mut log = RunLog::create(&cfg.out)?;
            let result = run_report(&cfg, &mut log);
            if let Ok(o) = &result {
                println!("{} clusters rescored from cached counts", o.cluster_count);
                println!("wrote {} and {}", o.clusters.display(), o.scatter.display());
            }
            finish(result.map(|_| ()), log)
        }
        Command::Synth(args) => {
            let defaults = SynthConfig::default();
            let cfg = SynthConfig {
                docs: args.docs.unwrap_or(defaults.docs),
                topics: args.topics.unwrap_or(defaults.topics),
                days: args.days.unwrap_or(defaults.days),
                seed: args.seed.unwrap_or(defaults.seed),
                out: args.out.unwrap_or(defaults.out),
            };
            let mut log = RunLog::create(&cfg.out)?;
            let result = run_synth(&cfg, &mut log);
            if let Ok(o) = &result {
                println!(
                    "wrote {} documents with {} planted topics to {}",
                    o.doc_count,
                    o.truth.topics.len(),
                    o.corpus.display()
                );
            }
            finish(result.map(|_| ()), log)
        }
    }
}

/// Logs a terminal error into the run log, flushes it, and keeps the
/// original error as the process outcome.
fn finish(result: termburst::Result<()>, mut log: RunLog) -> termburst::Result<()> {
    if let Err(e) = &result {
        log.error("run", &e.to_string());
    }
    let flushed = log.finish();
    result.and(flushed.map(|_| ()))
}
