//! Synthetic archive generator with planted bursty topics and two account
//! behavior profiles, plus a ground-truth file for evaluating recovery.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use chrono::SecondsFormat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Zipf};
use serde::{Deserialize, Serialize};

use super::RunLog;
use crate::classify::{InfluenceClass, LabelSource, LabeledAccount};
use crate::error::{Error, Result};

/// 2025-01-01T00:00:00Z; day d of a corpus starts at ORIGIN + d*86400.
pub const SYNTH_ORIGIN: i64 = 1_735_689_600;

const DAY_SECONDS: i64 = 86_400;
const ACCOUNTS_PER_CLASS: usize = 30;
const HUBS_PER_CLASS: usize = 5;
const SEEDS_PER_CLASS: usize = 3;
// Background breadth and injection strength are balanced so that inside a
// burst frame the inflated pair-count variance does not push the implicit
// zero-pair baseline past the top percentile: the background must keep
// enough pairs above the baseline to absorb the cut.
const BACKGROUND_TERMS: u64 = 400;
const ZIPF_EXPONENT: f64 = 1.1;
const TOPIC_DOC_SHARE: usize = 20;

/// Knobs for [`run_synth`].
#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub docs: usize,
    pub topics: usize,
    pub days: u32,
    pub seed: u64,
    pub out: PathBuf,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig { docs: 50_000, topics: 10, days: 30, seed: 7, out: PathBuf::from("out") }
    }
}

/// One planted topic: dedicated terms co-injected into documents inside
/// `[start_day, start_day + len_days)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlantedTopic {
    pub terms: Vec<String>,
    pub start_day: u32,
    pub len_days: u32,
    pub user_class: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AccountTruth {
    pub account_id: String,
    pub label: u8,
}

/// Everything the generator decided, for checking detection output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundTruth {
    pub days: u32,
    pub topics: Vec<PlantedTopic>,
    pub accounts: Vec<AccountTruth>,
}

impl GroundTruth {
    pub fn load(path: &Path) -> Result<GroundTruth> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_slice(&bytes)
            .map_err(|e| Error::data(format!("{}: {e}", path.display())))
    }
}

/// Where the generated files landed.
#[derive(Debug, Clone)]
pub struct SynthOutcome {
    pub corpus: PathBuf,
    pub labels: PathBuf,
    pub seeds: PathBuf,
    pub ground_truth: PathBuf,
    pub doc_count: usize,
    pub truth: GroundTruth,
}

struct Account {
    id: String,
    class: InfluenceClass,
    p_reply: f64,
    p_retweet: f64,
    p_url: f64,
    words_lo: usize,
    words_hi: usize,
}

struct Draft {
    ts: i64,
    author: usize,
    text: String,
    retweet_of: Option<usize>,
    reply_to: Option<usize>,
    urls: u32,
}

/// Wire format mirroring what the archive parser reads.
#[derive(Serialize)]
struct WireDoc<'a> {
    id: String,
    user_id: &'a str,
    created_at: String,
    text: &'a str,
    retweet_of_user: Option<&'a str>,
    reply_to_user: Option<&'a str>,
    urls: u32,
}

fn jitter(rng: &mut ChaCha8Rng, base: f64) -> f64 {
    (base * rng.gen_range(0.7..1.3)).clamp(0.0, 1.0)
}

fn make_accounts(rng: &mut ChaCha8Rng) -> Vec<Account> {
    let mut accounts = Vec::with_capacity(2 * ACCOUNTS_PER_CLASS);
    for i in 0..ACCOUNTS_PER_CLASS {
        accounts.push(Account {
            id: format!("u-mdi-{i:02}"),
            class: InfluenceClass::Mdi,
            p_reply: jitter(rng, 0.05),
            p_retweet: jitter(rng, 0.12),
            p_url: jitter(rng, 0.65),
            words_lo: 10,
            words_hi: 16,
        });
    }
    for i in 0..ACCOUNTS_PER_CLASS {
        accounts.push(Account {
            id: format!("u-idi-{i:02}"),
            class: InfluenceClass::Idi,
            p_reply: jitter(rng, 0.45),
            p_retweet: jitter(rng, 0.35),
            p_url: jitter(rng, 0.06),
            words_lo: 4,
            words_hi: 8,
        });
    }
    accounts
}

fn class_range(class: InfluenceClass) -> std::ops::Range<usize> {
    match class {
        InfluenceClass::Mdi => 0..ACCOUNTS_PER_CLASS,
        InfluenceClass::Idi => ACCOUNTS_PER_CLASS..2 * ACCOUNTS_PER_CLASS,
    }
}

/// Retweet targets skew toward the first few accounts of each class, so
/// a handful of hubs collect most mentions and seed expansion can spread.
fn retweet_target(rng: &mut ChaCha8Rng, n_accounts: usize) -> usize {
    if rng.gen_bool(0.7) {
        let hub = rng.gen_range(0..2 * HUBS_PER_CLASS);
        if hub < HUBS_PER_CLASS {
            hub
        } else {
            ACCOUNTS_PER_CLASS + (hub - HUBS_PER_CLASS)
        }
    } else {
        rng.gen_range(0..n_accounts)
    }
}

/// Reply target, retweet target, and url count for one document.
fn engagement(
    rng: &mut ChaCha8Rng,
    account: &Account,
    n_accounts: usize,
) -> (Option<usize>, Option<usize>, u32) {
    let retweet_of =
        if rng.gen_bool(account.p_retweet) { Some(retweet_target(rng, n_accounts)) } else { None };
    let reply_to =
        if rng.gen_bool(account.p_reply) { Some(rng.gen_range(0..n_accounts)) } else { None };
    let urls = Binomial::new(2, account.p_url)
        .expect("p_url is a probability")
        .sample(rng) as u32;
    (retweet_of, reply_to, urls)
}

/// Each topic's window is placed inside its own stratum of the span, so
/// same-class bursts never share a frame and their variance jolts cannot
/// compound. With fewer days than topics the strata collapse to the full
/// span and windows may overlap.
fn plant_topics(rng: &mut ChaCha8Rng, topics: usize, days: u32) -> Vec<PlantedTopic> {
    let mut out = Vec::with_capacity(topics);
    for i in 0..topics {
        let class = if i % 2 == 0 { InfluenceClass::Mdi } else { InfluenceClass::Idi };
        let n_terms = rng.gen_range(5..=8usize);
        let terms = (0..n_terms)
            .map(|k| format!("#t{i:02}{}", (b'a' + k as u8) as char))
            .collect();
        let (lo, width) = if topics as u64 <= days as u64 {
            let lo = (i as u64 * days as u64 / topics as u64) as u32;
            let hi = ((i as u64 + 1) * days as u64 / topics as u64) as u32;
            (lo, hi - lo)
        } else {
            (0, days)
        };
        let len_days = rng.gen_range(1..=3u32).min(width);
        let start_day = lo + rng.gen_range(0..=width - len_days);
        out.push(PlantedTopic {
            terms,
            start_day,
            len_days,
            user_class: class.as_str().to_string(),
        });
    }
    out
}

fn rfc3339(ts: i64) -> String {
    chrono::DateTime::from_timestamp(ts, 0)
        .expect("synthetic timestamps stay in range")
        .to_rfc3339_opts(SecondsFormat::Secs, true)
}

/// Generates the archive, labels, seeds, and ground-truth files. All
/// randomness flows through one generator seeded from `cfg.seed`, so equal
/// configs produce byte-identical files.
pub fn run_synth(cfg: &SynthConfig, log: &mut RunLog) -> Result<SynthOutcome> {
    if cfg.docs < 2 {
        return Err(Error::usage("docs count must be at least 2"));
    }
    if cfg.days < 1 {
        return Err(Error::usage("frame span must be at least 1 day"));
    }
    let topic_budget = (cfg.docs / TOPIC_DOC_SHARE).min(cfg.docs - 2);
    if cfg.topics > 0 && topic_budget < cfg.topics {
        return Err(Error::usage(format!(
            "{} documents are too few to plant {} topics",
            cfg.docs, cfg.topics
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let accounts = make_accounts(&mut rng);
    let n_accounts = accounts.len();
    let topics = plant_topics(&mut rng, cfg.topics, cfg.days);
    let zipf = Zipf::new(BACKGROUND_TERMS, ZIPF_EXPONENT)
        .expect("background term distribution parameters are fixed");

    // Equal injection intensity per burst day: a one-day topic gets one
    // day's worth of documents, not the whole per-topic budget at once.
    let total_burst_days: u32 = topics.iter().map(|t| t.len_days).sum();
    let per_day = if total_burst_days > 0 { topic_budget / total_burst_days as usize } else { 0 };
    if cfg.topics > 0 && per_day == 0 {
        return Err(Error::usage(format!(
            "{} documents are too few to plant {} topics",
            cfg.docs, cfg.topics
        )));
    }
    let planted: usize = topics.iter().map(|t| per_day * t.len_days as usize).sum();
    let background = cfg.docs - planted;
    let mut drafts: Vec<Draft> = Vec::with_capacity(cfg.docs);

    for topic in &topics {
        let class =
            if topic.user_class == "MDI" { InfluenceClass::Mdi } else { InfluenceClass::Idi };
        let authors = class_range(class);
        let text = topic.terms.join(" ");
        for _ in 0..per_day * topic.len_days as usize {
            let author = rng.gen_range(authors.clone());
            let day = topic.start_day + rng.gen_range(0..topic.len_days);
            let sec = rng.gen_range(0..DAY_SECONDS);
            let (retweet_of, reply_to, urls) = engagement(&mut rng, &accounts[author], n_accounts);
            drafts.push(Draft {
                ts: SYNTH_ORIGIN + day as i64 * DAY_SECONDS + sec,
                author,
                text: text.clone(),
                retweet_of,
                reply_to,
                urls,
            });
        }
    }

    for b in 0..background {
        let author = rng.gen_range(0..n_accounts);
        let acct = &accounts[author];
        let day = rng.gen_range(0..cfg.days);
        let sec = rng.gen_range(0..DAY_SECONDS);
        let words = rng.gen_range(acct.words_lo..=acct.words_hi);
        let mut text = String::new();
        for w in 0..words {
            if w > 0 {
                text.push(' ');
            }
            let rank = zipf.sample(&mut rng) as u64;
            text.push_str(&format!("w{rank:04}"));
        }
        let (retweet_of, reply_to, urls) = engagement(&mut rng, acct, n_accounts);
        let mut ts = SYNTH_ORIGIN + day as i64 * DAY_SECONDS + sec;
        // Pin the first and last background documents to the span edges so
        // the frame count always reflects the configured number of days.
        if b == 0 {
            ts = SYNTH_ORIGIN;
        } else if b == background - 1 {
            ts = SYNTH_ORIGIN + cfg.days as i64 * DAY_SECONDS - 1;
        }
        drafts.push(Draft { ts, author, text, retweet_of, reply_to, urls });
    }

    drafts.sort_by_key(|d| d.ts);

    std::fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;
    let corpus_path = cfg.out.join("corpus.jsonl");
    let file = std::fs::File::create(&corpus_path).map_err(|e| Error::io(&corpus_path, e))?;
    let mut w = std::io::BufWriter::new(file);
    for (i, d) in drafts.iter().enumerate() {
        let wire = WireDoc {
            id: format!("doc-{i:06}"),
            user_id: &accounts[d.author].id,
            created_at: rfc3339(d.ts),
            text: &d.text,
            retweet_of_user: d.retweet_of.map(|a| accounts[a].id.as_str()),
            reply_to_user: d.reply_to.map(|a| accounts[a].id.as_str()),
            urls: d.urls,
        };
        let line = serde_json::to_string(&wire)
            .map_err(|e| Error::data(format!("document encode: {e}")))?;
        writeln!(w, "{line}").map_err(|e| Error::io(&corpus_path, e))?;
    }
    w.flush().map_err(|e| Error::io(&corpus_path, e))?;

    let mut labels: Vec<LabeledAccount> = accounts
        .iter()
        .map(|a| LabeledAccount {
            account_id: a.id.clone(),
            label: a.class,
            source: LabelSource::Manual,
            probability: None,
        })
        .collect();
    labels.sort_by(|a, b| a.account_id.cmp(&b.account_id));
    let labels_path = cfg.out.join("labels.csv");
    crate::classify::write_labels_csv(&labels_path, &labels)?;

    let mut seeds: Vec<LabeledAccount> = class_range(InfluenceClass::Mdi)
        .take(SEEDS_PER_CLASS)
        .chain(class_range(InfluenceClass::Idi).take(SEEDS_PER_CLASS))
        .map(|i| LabeledAccount {
            account_id: accounts[i].id.clone(),
            label: accounts[i].class,
            source: LabelSource::Manual,
            probability: None,
        })
        .collect();
    seeds.sort_by(|a, b| a.account_id.cmp(&b.account_id));
    let seeds_path = cfg.out.join("seeds.csv");
    crate::classify::write_labels_csv(&seeds_path, &seeds)?;

    let truth = GroundTruth {
        days: cfg.days,
        topics,
        accounts: labels
            .iter()
            .map(|l| AccountTruth { account_id: l.account_id.clone(), label: l.label.label() })
            .collect(),
    };
    let truth_path = cfg.out.join("ground_truth.json");
    let json = serde_json::to_string_pretty(&truth)
        .map_err(|e| Error::data(format!("ground truth encode: {e}")))?;
    std::fs::write(&truth_path, json).map_err(|e| Error::io(&truth_path, e))?;

    log.info("synth", &format!("seed={}", cfg.seed));
    log.info(
        "synth",
        &format!(
            "wrote {} documents, {} accounts, {} planted topics over {} days",
            drafts.len(),
            n_accounts,
            truth.topics.len(),
            cfg.days
        ),
    );
    Ok(SynthOutcome {
        corpus: corpus_path,
        labels: labels_path,
        seeds: seeds_path,
        ground_truth: truth_path,
        doc_count: drafts.len(),
        truth,
    })
}
