//! Archive parsing, text normalization, and per-account activity stats.
//!
//! The entry format is JSON Lines: one post object per line with fields
//! `id`, `user_id`, `created_at` (ISO-8601 UTC), `text`, `retweet_of_user`,
//! `reply_to_user` (both nullable), and `urls` (integer). Malformed lines
//! are skipped with a warning, not fatal; only an unreadable file aborts.

mod stem;

pub use stem::{stem, stem_fixpoint};

use std::collections::{BTreeMap, HashSet};
use std::io::BufRead;
use std::path::Path;
use std::sync::OnceLock;

use chrono::{DateTime, Utc};
use regex::Regex;
use serde::Deserialize;

use crate::error::{Error, Result};

/// One post from the archive. Timestamps are UTC epoch seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub id: String,
    pub author_id: String,
    pub created_at: i64,
    pub text: String,
    pub retweet_of_author: Option<String>,
    pub reply_to_author: Option<String>,
    pub url_count: u32,
}

/// A document reduced to its normalized tokens. Only constructed for
/// documents whose token list is non-empty.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenizedDocument {
    pub doc_id: String,
    pub author_id: String,
    pub created_at: i64,
    pub tokens: Vec<String>,
}

/// Per-account activity tallies feeding the classifier features.
#[derive(Debug, Clone, PartialEq)]
pub struct AccountStats {
    pub account_id: String,
    pub tweet_count: u32,
    pub retweet_count: u32,
    pub reply_count: u32,
    pub link_count: u32,
    /// Median character count of raw text; mean of the two middle values
    /// when the count is even.
    pub median_length: f64,
}

/// A skipped archive line and why it was skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct LineWarning {
    pub line: usize,
    pub reason: String,
}

/// Result of scanning an archive: parsed documents plus skip diagnostics.
#[derive(Debug, Default)]
pub struct ArchiveScan {
    pub documents: Vec<Document>,
    pub skipped: Vec<LineWarning>,
}

/// Wire format of one archive line.
#[derive(Deserialize)]
struct RawRecord {
    id: String,
    user_id: String,
    created_at: String,
    text: String,
    retweet_of_user: Option<String>,
    reply_to_user: Option<String>,
    urls: u32,
}

/// Parses an ISO-8601 UTC timestamp to epoch seconds.
pub fn parse_timestamp(s: &str) -> std::result::Result<i64, String> {
    DateTime::parse_from_rfc3339(s)
        .map(|dt| dt.with_timezone(&Utc).timestamp())
        .map_err(|e| format!("bad timestamp {s:?}: {e}"))
}

/// Reads a JSONL archive. Malformed lines (bad JSON, bad timestamp,
/// duplicate id) are skipped and reported in `skipped` with their
/// 1-based line number; an unreadable file is the only fatal case.
pub fn parse_archive(path: &Path) -> Result<ArchiveScan> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = std::io::BufReader::new(file);
    let mut scan = ArchiveScan::default();
    let mut seen_ids = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(e) => {
                scan.skipped.push(LineWarning { line: line_no, reason: format!("bad JSON: {e}") });
                continue;
            }
        };
        let created_at = match parse_timestamp(&raw.created_at) {
            Ok(ts) => ts,
            Err(reason) => {
                scan.skipped.push(LineWarning { line: line_no, reason });
                continue;
            }
        };
        if !seen_ids.insert(raw.id.clone()) {
            scan.skipped.push(LineWarning {
                line: line_no,
                reason: format!("duplicate document id {:?}", raw.id),
            });
            continue;
        }
        scan.documents.push(Document {
            id: raw.id,
            author_id: raw.user_id,
            created_at,
            text: raw.text,
            retweet_of_author: raw.retweet_of_user,
            reply_to_author: raw.reply_to_user,
            url_count: raw.urls,
        });
    }
    Ok(scan)
}

static STOPWORDS: OnceLock<HashSet<&'static str>> = OnceLock::new();

/// The bundled stopword list: lowercase words, '#'-comment lines ignored.
pub fn stopwords() -> &'static HashSet<&'static str> {
    STOPWORDS.get_or_init(|| {
        include_str!("stopwords.txt")
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect()
    })
}

pub fn is_stopword(word: &str) -> bool {
    stopwords().contains(word)
}

fn url_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    // http(s) scheme anywhere, plus the platform short-link domain bare.
    RE.get_or_init(|| Regex::new(r"(?i)https?://\S+|\bt\.co/\S+").unwrap())
}

fn mention_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"@\w+").unwrap())
}

fn hashtag_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"#(\w+)").unwrap())
}

/// Normalizes raw post text into tokens: hashtags first (lowercased, '#'
/// kept, never stemmed), then plain words lowercased, punctuation-split,
/// stopword-filtered, and stemmed.
///
/// The stopword filter runs again after stemming because some stems land
/// on list words ("cans" stems to "can"); together with fixpoint stemming
/// this makes the function idempotent on its own space-joined output.
pub fn normalize_text(raw: &str) -> Vec<String> {
    // URLs go first so fragment anchors are not mistaken for hashtags.
    let no_urls = url_re().replace_all(raw, " ");
    let mut tokens: Vec<String> = hashtag_re()
        .captures_iter(&no_urls)
        .map(|c| format!("#{}", c[1].to_lowercase()))
        .collect();
    let cleaned = hashtag_re().replace_all(&no_urls, " ");
    let cleaned = mention_re().replace_all(&cleaned, " ");
    let lowered = cleaned.to_lowercase();
    let spaced: String =
        lowered.chars().map(|c| if c.is_alphanumeric() { c } else { ' ' }).collect();
    for word in spaced.split_whitespace() {
        if is_stopword(word) {
            continue;
        }
        let stemmed = stem_fixpoint(word);
        if !is_stopword(&stemmed) {
            tokens.push(stemmed);
        }
    }
    tokens
}

/// Tokenizes documents, dropping those that normalize to nothing.
/// Returns the kept documents and the drop count.
pub fn tokenize_documents(docs: &[Document]) -> (Vec<TokenizedDocument>, usize) {
    let mut kept = Vec::with_capacity(docs.len());
    let mut dropped = 0usize;
    for doc in docs {
        let tokens = normalize_text(&doc.text);
        if tokens.is_empty() {
            dropped += 1;
        } else {
            kept.push(TokenizedDocument {
                doc_id: doc.id.clone(),
                author_id: doc.author_id.clone(),
                created_at: doc.created_at,
                tokens,
            });
        }
    }
    (kept, dropped)
}

/// Aggregates per-account counts and the median raw text length.
/// Keyed map is ordered so iteration order is reproducible.
pub fn aggregate_account_stats(docs: &[Document]) -> BTreeMap<String, AccountStats> {
    let mut lengths: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    let mut stats: BTreeMap<String, AccountStats> = BTreeMap::new();
    for doc in docs {
        let entry = stats.entry(doc.author_id.clone()).or_insert_with(|| AccountStats {
            account_id: doc.author_id.clone(),
            tweet_count: 0,
            retweet_count: 0,
            reply_count: 0,
            link_count: 0,
            median_length: 0.0,
        });
        entry.tweet_count += 1;
        entry.retweet_count += doc.retweet_of_author.is_some() as u32;
        entry.reply_count += doc.reply_to_author.is_some() as u32;
        entry.link_count += doc.url_count;
        lengths.entry(&doc.author_id).or_default().push(doc.text.chars().count());
    }
    for (account, lens) in lengths {
        stats.get_mut(account).expect("stats entry exists").median_length = median(lens);
    }
    stats
}

fn median(mut values: Vec<usize>) -> f64 {
    assert!(!values.is_empty(), "median of empty set");
    values.sort_unstable();
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2] as f64
    } else {
        (values[n / 2 - 1] + values[n / 2]) as f64 / 2.0
    }
}
