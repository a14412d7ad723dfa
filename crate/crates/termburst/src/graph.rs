//! Vocabulary selection, temporal frame partitioning, and sparse symmetric
//! term co-occurrence counts per frame.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::ingest::TokenizedDocument;

/// Documents with more distinct in-vocabulary terms than this still count
/// every pair; the cap only flags anomalous inputs.
pub const DISTINCT_TERM_CAP: usize = 200;

/// The corpus-wide term list, ranked by total occurrence count descending
/// with ties broken lexicographically ascending. Positions are stable ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    /// Builds directly from an already-ranked term list.
    /// Duplicate terms are rejected.
    pub fn from_terms(terms: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(terms.len());
        for (i, t) in terms.iter().enumerate() {
            if index.insert(t.clone(), i as u32).is_some() {
                return Err(Error::data(format!("duplicate vocabulary term {t:?}")));
            }
        }
        Ok(Vocabulary { terms, index })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn term(&self, id: u32) -> &str {
        &self.terms[id as usize]
    }

    pub fn id(&self, term: &str) -> Option<u32> {
        self.index.get(term).copied()
    }
}

/// Ranks terms by total occurrence count across all documents (multiplicity
/// counted, not document frequency) and keeps the top `max_terms`; ties at
/// the cutoff break lexicographically ascending.
pub fn build_vocabulary(docs: &[TokenizedDocument], max_terms: usize) -> Result<Vocabulary> {
    if max_terms < 2 {
        return Err(Error::usage(format!("max_terms must be at least 2, got {max_terms}")));
    }
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for doc in docs {
        for tok in &doc.tokens {
            *counts.entry(tok.as_str()).or_insert(0) += 1;
        }
    }
    if counts.len() < 2 {
        return Err(Error::VocabularyTooSmall { found: counts.len() });
    }
    let mut ranked: Vec<(&str, u64)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked.truncate(max_terms);
    Vocabulary::from_terms(ranked.into_iter().map(|(t, _)| t.to_string()).collect())
}

const DAY_SECONDS: i64 = 86_400;

/// Midnight UTC of the day containing `ts` (seconds since the epoch).
pub fn midnight_utc(ts: i64) -> i64 {
    ts.div_euclid(DAY_SECONDS) * DAY_SECONDS
}

/// Default frame origin: midnight UTC of the earliest document's day.
/// None when there are no documents.
pub fn default_origin(docs: &[TokenizedDocument]) -> Option<i64> {
    docs.iter().map(|d| d.created_at).min().map(midnight_utc)
}

/// Consecutive half-open time windows of `granularity_days` starting at
/// `origin`, each listing the ids of the documents that fall in it.
/// Intermediate empty frames are retained; trailing empty frames are not
/// represented (the frame count is last non-empty + 1).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameIndex {
    pub granularity_days: u32,
    pub origin: i64,
    pub frames: Vec<Vec<String>>,
}

impl FrameIndex {
    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }
}

/// Assigns each document to frame floor((ts - origin) / width).
pub fn partition_frames(
    docs: &[TokenizedDocument],
    granularity_days: u32,
    origin: i64,
) -> Result<FrameIndex> {
    if granularity_days == 0 {
        return Err(Error::usage("granularity_days must be at least 1"));
    }
    let width = granularity_days as i64 * DAY_SECONDS;
    let mut frames: Vec<Vec<String>> = Vec::new();
    for doc in docs {
        if doc.created_at < origin {
            return Err(Error::DocBeforeOrigin { id: doc.doc_id.clone() });
        }
        let idx = ((doc.created_at - origin) / width) as usize;
        if idx >= frames.len() {
            frames.resize_with(idx + 1, Vec::new);
        }
        frames[idx].push(doc.doc_id.clone());
    }
    Ok(FrameIndex { granularity_days, origin, frames })
}

/// Upper-triangle document-level co-occurrence counts for one frame.
/// Only pairs with count >= 1 are stored; the candidate-pair universe is
/// all n_terms(n_terms-1)/2 unordered pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoocMatrix {
    pub frame_id: usize,
    pub n_terms: u32,
    pub doc_count: u64,
    pub entries: BTreeMap<(u32, u32), u64>,
}

impl CoocMatrix {
    pub fn pair_universe(&self) -> u64 {
        let n = self.n_terms as u64;
        n * n.saturating_sub(1) / 2
    }

    pub fn count(&self, i: u32, j: u32) -> u64 {
        let key = if i < j { (i, j) } else { (j, i) };
        self.entries.get(&key).copied().unwrap_or(0)
    }
}

/// Counts, for every unordered pair of distinct in-vocabulary terms, the
/// number of documents containing both. A pair counts once per document
/// regardless of within-document multiplicity; out-of-vocabulary tokens are
/// ignored. Documents with more than [`DISTINCT_TERM_CAP`] distinct
/// in-vocabulary terms are still counted in full but produce a warning.
pub fn count_cooccurrence(
    frame_id: usize,
    frame_docs: &[&TokenizedDocument],
    vocab: &Vocabulary,
) -> (CoocMatrix, Vec<String>) {
    let mut entries: BTreeMap<(u32, u32), u64> = BTreeMap::new();
    let mut warnings = Vec::new();
    for doc in frame_docs {
        let distinct: BTreeSet<u32> = doc.tokens.iter().filter_map(|t| vocab.id(t)).collect();
        if distinct.len() > DISTINCT_TERM_CAP {
            warnings.push(format!(
                "document {} has {} distinct in-vocabulary terms (cap {})",
                doc.doc_id,
                distinct.len(),
                DISTINCT_TERM_CAP
            ));
        }
        let ids: Vec<u32> = distinct.into_iter().collect();
        for (a, &i) in ids.iter().enumerate() {
            for &j in &ids[a + 1..] {
                *entries.entry((i, j)).or_insert(0) += 1;
            }
        }
    }
    let matrix = CoocMatrix {
        frame_id,
        n_terms: vocab.len() as u32,
        doc_count: frame_docs.len() as u64,
        entries,
    };
    (matrix, warnings)
}

// ---- file formats ----

/// Writes a matrix as a text triplet file: one header line
/// `frame_id n_terms doc_count nnz`, then one `i j count` line per stored
/// pair in ascending (i, j) order. The sort order is part of the format.
pub fn write_cooc_triplets(matrix: &CoocMatrix, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut emit = || -> std::io::Result<()> {
        writeln!(
            w,
            "{} {} {} {}",
            matrix.frame_id,
            matrix.n_terms,
            matrix.doc_count,
            matrix.entries.len()
        )?;
        for (&(i, j), &count) in &matrix.entries {
            writeln!(w, "{i} {j} {count}")?;
        }
        w.flush()
    };
    emit().map_err(|e| Error::io(path, e))
}

/// Reads a triplet file written by [`write_cooc_triplets`], validating the
/// header, bounds, strict (i, j) ordering, and positive counts.
pub fn read_cooc_triplets(path: &Path) -> Result<CoocMatrix> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let bad = |msg: String| Error::data(format!("{}: {msg}", path.display()));

    let header = lines
        .next()
        .ok_or_else(|| bad("missing header".into()))?
        .map_err(|e| Error::io(path, e))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 4 {
        return Err(bad(format!("header must have 4 fields, got {}", fields.len())));
    }
    let frame_id: usize = fields[0].parse().map_err(|_| bad("bad frame_id".into()))?;
    let n_terms: u32 = fields[1].parse().map_err(|_| bad("bad n_terms".into()))?;
    let doc_count: u64 = fields[2].parse().map_err(|_| bad("bad doc_count".into()))?;
    let nnz: usize = fields[3].parse().map_err(|_| bad("bad nnz".into()))?;

    let mut entries = BTreeMap::new();
    let mut last: Option<(u32, u32)> = None;
    for (lineno, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let row = lineno + 2;
        if fields.len() != 3 {
            return Err(bad(format!("line {row}: expected 3 fields")));
        }
        let i: u32 = fields[0].parse().map_err(|_| bad(format!("line {row}: bad i")))?;
        let j: u32 = fields[1].parse().map_err(|_| bad(format!("line {row}: bad j")))?;
        let count: u64 = fields[2].parse().map_err(|_| bad(format!("line {row}: bad count")))?;
        if i >= j || j >= n_terms {
            return Err(bad(format!("line {row}: indices ({i}, {j}) out of range")));
        }
        if count == 0 {
            return Err(bad(format!("line {row}: zero count")));
        }
        if let Some(prev) = last {
            if prev >= (i, j) {
                return Err(bad(format!("line {row}: entries not sorted by (i, j)")));
            }
        }
        last = Some((i, j));
        entries.insert((i, j), count);
    }
    if entries.len() != nnz {
        return Err(bad(format!("header promises nnz {nnz}, found {}", entries.len())));
    }
    Ok(CoocMatrix { frame_id, n_terms, doc_count, entries })
}

/// Writes the vocabulary one term per line, in rank order.
pub fn write_vocab(vocab: &Vocabulary, path: &Path) -> Result<()> {
    let mut out = String::new();
    for t in vocab.terms() {
        out.push_str(t);
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Reads a vocabulary written by [`write_vocab`].
pub fn read_vocab(path: &Path) -> Result<Vocabulary> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let terms: Vec<String> = text.lines().map(str::to_string).collect();
    if terms.len() < 2 {
        return Err(Error::VocabularyTooSmall { found: terms.len() });
    }
    Vocabulary::from_terms(terms).map_err(|e| match e {
        Error::Data(msg) => Error::data(format!("{}: {msg}", path.display())),
        other => other,
    })
}
