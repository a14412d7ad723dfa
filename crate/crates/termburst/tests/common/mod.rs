//! Dense reference implementations and random-instance builders shared by
//! the integration suites. Everything here recomputes results with full
//! N x N upper triangles and no sparsity shortcuts, so the library's
//! sparse-plus-baseline representation can be checked against it.

use std::collections::BTreeSet;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use termburst::graph::Vocabulary;
use termburst::ingest::TokenizedDocument;

/// Index of unordered pair (i, j), i < j, in row-major upper-triangle order.
pub fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

pub fn pair_count(n: usize) -> usize {
    n * (n - 1) / 2
}

/// Document-level pair counts over every unordered pair, zeros included.
pub fn dense_counts(doc_terms: &[BTreeSet<u32>], n: usize) -> Vec<u64> {
    let mut counts = vec![0u64; pair_count(n)];
    for terms in doc_terms {
        let ids: Vec<u32> = terms.iter().copied().collect();
        for (a, &i) in ids.iter().enumerate() {
            for &j in &ids[a + 1..] {
                counts[pair_index(n, i as usize, j as usize)] += 1;
            }
        }
    }
    counts
}

/// Population z-scores across one frame's full pair universe. All-equal
/// input (including the single-pair universe) maps to all zeros.
pub fn dense_zscores(values: &[f64]) -> Vec<f64> {
    let m = values.len() as f64;
    let first = values[0];
    if values.iter().all(|&v| v == first) {
        return vec![0.0; values.len()];
    }
    let mean = values.iter().sum::<f64>() / m;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / m;
    let std = var.sqrt();
    values.iter().map(|v| (v - mean) / std).collect()
}

/// Per-pair z-scores across frames: for each pair, standardize its
/// popularity series over time. Constant series map to zeros.
pub fn dense_burstiness(pop_frames: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let t = pop_frames.len();
    let m = pop_frames[0].len();
    let mut out = vec![vec![0.0; m]; t];
    for p in 0..m {
        let series: Vec<f64> = pop_frames.iter().map(|f| f[p]).collect();
        let z = dense_zscores(&series);
        for (ti, zv) in z.into_iter().enumerate() {
            out[ti][p] = zv;
        }
    }
    out
}

pub fn dense_relevance(pop: &[f64], burst: &[f64], alpha: f64, beta: f64) -> Vec<f64> {
    pop.iter().zip(burst).map(|(p, b)| alpha * p + beta * b).collect()
}

/// Nearest-rank percentile cut: threshold is the k-th smallest value with
/// k = floor(q/100 * M) + 1 (clamped to M); edges are all pairs at or
/// above it, in ascending (i, j) order.
pub fn dense_threshold(values: &[f64], n: usize, percentile: f64) -> (f64, Vec<(u32, u32)>) {
    let m = values.len();
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let k = ((percentile / 100.0 * m as f64).floor() as usize + 1).min(m);
    let threshold = sorted[k - 1];
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if values[pair_index(n, i, j)] >= threshold {
                edges.push((i as u32, j as u32));
            }
        }
    }
    (threshold, edges)
}

/// One random scoring instance: a small vocabulary and per-frame document
/// token sets, kept both as raw id sets (for the dense oracle) and as
/// tokenized documents (for the library pipeline).
pub struct RandomInstance {
    pub vocab: Vocabulary,
    pub frames: Vec<Vec<TokenizedDocument>>,
    pub frame_sets: Vec<Vec<BTreeSet<u32>>>,
}

pub fn random_instance(rng: &mut ChaCha8Rng) -> RandomInstance {
    let n = rng.gen_range(2..=30usize);
    let t = rng.gen_range(1..=5usize);
    let terms: Vec<String> = (0..n).map(|i| format!("t{i:02}")).collect();
    let vocab = Vocabulary::from_terms(terms.clone()).expect("distinct synthetic terms");
    let mut frames = Vec::with_capacity(t);
    let mut frame_sets = Vec::with_capacity(t);
    for f in 0..t {
        let docs = rng.gen_range(0..=200usize);
        let mut frame_docs = Vec::with_capacity(docs);
        let mut sets = Vec::with_capacity(docs);
        for d in 0..docs {
            let len = rng.gen_range(0..=8usize);
            let mut tokens = Vec::with_capacity(len);
            let mut set = BTreeSet::new();
            for _ in 0..len {
                // A sprinkling of out-of-vocabulary tokens must be ignored
                // by both the library and the oracle.
                if rng.gen_bool(0.05) {
                    tokens.push("zzz-out-of-vocab".to_string());
                } else {
                    let id = rng.gen_range(0..n);
                    tokens.push(terms[id].clone());
                    set.insert(id as u32);
                }
            }
            frame_docs.push(TokenizedDocument {
                doc_id: format!("f{f}d{d}"),
                author_id: "a0".into(),
                created_at: 0,
                tokens,
            });
            sets.push(set);
        }
        frames.push(frame_docs);
        frame_sets.push(sets);
    }
    RandomInstance { vocab, frames, frame_sets }
}
