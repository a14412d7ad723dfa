//! Popularity, burstiness, and relevance scoring over sparse co-occurrence
//! counts, plus percentile thresholding into a sparse adjacency graph.
//!
//! Scores are held as a scalar baseline shared by every candidate pair plus
//! explicit per-pair deviations, so the N(N-1)/2 pair universe is never
//! materialized. This representation is forced by the statistics: frame
//! means include the implicit zero pairs, so absent pairs have a nonzero
//! popularity of -mu/sigma.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::CoocMatrix;

/// Which transform produced a [`ScoreMatrix`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreKind {
    Popularity,
    Burstiness,
    Relevance,
}

impl ScoreKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ScoreKind::Popularity => "popularity",
            ScoreKind::Burstiness => "burstiness",
            ScoreKind::Relevance => "relevance",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "popularity" => Some(ScoreKind::Popularity),
            "burstiness" => Some(ScoreKind::Burstiness),
            "relevance" => Some(ScoreKind::Relevance),
            _ => None,
        }
    }
}

/// Per-frame scores for every candidate term pair: pairs stored in
/// `deviations` carry their own value, every other pair holds `baseline`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    pub frame_id: usize,
    pub n_terms: u32,
    pub kind: ScoreKind,
    pub baseline: f64,
    deviations: Vec<((u32, u32), f64)>,
}

impl ScoreMatrix {
    /// Validates, sorts by pair, and wraps the parts. Pairs must be unique,
    /// upper-triangle, in range; all values must be finite.
    pub fn new(
        frame_id: usize,
        n_terms: u32,
        kind: ScoreKind,
        baseline: f64,
        mut deviations: Vec<((u32, u32), f64)>,
    ) -> Result<Self> {
        if !baseline.is_finite() {
            return Err(Error::data(format!("non-finite baseline {baseline}")));
        }
        deviations.sort_by_key(|&(pair, _)| pair);
        for w in deviations.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::data(format!("duplicate pair {:?}", w[0].0)));
            }
        }
        for &((i, j), v) in &deviations {
            if i >= j || j >= n_terms {
                return Err(Error::data(format!("pair ({i}, {j}) out of range for {n_terms} terms")));
            }
            if !v.is_finite() {
                return Err(Error::data(format!("non-finite value for pair ({i}, {j})")));
            }
        }
        Ok(ScoreMatrix { frame_id, n_terms, kind, baseline, deviations })
    }

    pub fn pair_universe(&self) -> u64 {
        let n = self.n_terms as u64;
        n * n.saturating_sub(1) / 2
    }

    /// Score of an unordered pair. Panics if i == j or either is out of range.
    pub fn value(&self, i: u32, j: u32) -> f64 {
        assert!(i != j && i < self.n_terms && j < self.n_terms, "bad pair ({i}, {j})");
        let key = if i < j { (i, j) } else { (j, i) };
        match self.deviations.binary_search_by_key(&key, |&(pair, _)| pair) {
            Ok(pos) => self.deviations[pos].1,
            Err(_) => self.baseline,
        }
    }

    /// Explicitly stored pairs, ascending by (i, j).
    pub fn deviations(&self) -> &[((u32, u32), f64)] {
        &self.deviations
    }

    /// Smallest and largest value over the whole candidate universe.
    /// None when n_terms < 2.
    pub fn candidate_min_max(&self) -> Option<(f64, f64)> {
        let universe = self.pair_universe();
        if universe == 0 {
            return None;
        }
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for &(_, v) in &self.deviations {
            min = min.min(v);
            max = max.max(v);
        }
        if (self.deviations.len() as u64) < universe {
            min = min.min(self.baseline);
            max = max.max(self.baseline);
        }
        Some((min, max))
    }
}

/// Exact integer first and second moments over all candidate pairs
/// (implicit zeros included), so the all-equal case is detected without
/// floating-point tolerance.
fn count_moments(cooc: &CoocMatrix) -> Result<(u128, u128)> {
    let mut s1: u128 = 0;
    let mut s2: u128 = 0;
    for &c in cooc.entries.values() {
        let c = c as u128;
        s1 = s1.checked_add(c).ok_or_else(|| Error::data("co-occurrence counts overflow"))?;
        s2 = c
            .checked_mul(c)
            .and_then(|sq| s2.checked_add(sq))
            .ok_or_else(|| Error::data("co-occurrence counts overflow"))?;
    }
    Ok((s1, s2))
}

/// Standardizes each pair's count against the frame's population mean and
/// std over all N(N-1)/2 candidate pairs. A frame with no variation (all
/// candidate counts equal, e.g. an empty frame) scores 0 everywhere.
pub fn popularity(cooc: &CoocMatrix) -> Result<ScoreMatrix> {
    if cooc.n_terms < 2 {
        return Err(Error::usage(format!("need at least 2 terms, got {}", cooc.n_terms)));
    }
    let m = cooc.pair_universe() as u128;
    let (s1, s2) = count_moments(cooc)?;
    // Population variance * M^2 = M*S2 - S1^2, exact in integers;
    // zero here is the precise all-equal test.
    let numerator = m
        .checked_mul(s2)
        .and_then(|ms2| ms2.checked_sub(s1 * s1))
        .ok_or_else(|| Error::data("co-occurrence counts overflow"))?;
    if numerator == 0 {
        return ScoreMatrix::new(cooc.frame_id, cooc.n_terms, ScoreKind::Popularity, 0.0, Vec::new());
    }
    let m_f = m as f64;
    let mean = s1 as f64 / m_f;
    let std = (numerator as f64 / (m_f * m_f)).sqrt();
    let deviations = cooc
        .entries
        .iter()
        .map(|(&pair, &c)| (pair, (c as f64 - mean) / std))
        .collect();
    ScoreMatrix::new(cooc.frame_id, cooc.n_terms, ScoreKind::Popularity, -mean / std, deviations)
}

/// Per-pair mean and std across a popularity series, precomputed once so
/// frames can be standardized one at a time. Pairs that are baseline in
/// every frame share the baseline-series statistics instead of getting
/// N(N-1)/2 independent entries.
#[derive(Debug, Clone)]
pub struct BurstStats {
    n_terms: u32,
    t_count: usize,
    baseline_mean: f64,
    baseline_std: f64,
    pairs: Vec<((u32, u32), (f64, f64))>,
}

impl BurstStats {
    /// Number of pairs explicit in at least one frame.
    pub fn explicit_pairs(&self) -> usize {
        self.pairs.len()
    }

    pub fn frame_count(&self) -> usize {
        self.t_count
    }
}

/// Population mean and std of a series; std is exactly 0 for a constant
/// series (including T = 1).
fn series_stats(values: &[f64]) -> (f64, f64) {
    let t = values.len() as f64;
    let mut sum = 0.0;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &v in values {
        sum += v;
        min = min.min(v);
        max = max.max(v);
    }
    if min == max {
        return (min, 0.0);
    }
    let mean = sum / t;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / t;
    (mean, var.sqrt())
}

fn check_series(series: &[ScoreMatrix]) -> Result<u32> {
    let first = series.first().ok_or_else(|| Error::usage("empty popularity series"))?;
    for m in series {
        if m.kind != ScoreKind::Popularity {
            return Err(Error::usage(format!(
                "burstiness takes popularity matrices, got {}",
                m.kind.as_str()
            )));
        }
        if m.n_terms != first.n_terms {
            return Err(Error::ShapeMismatch {
                left: format!("{} terms (frame {})", first.n_terms, first.frame_id),
                right: format!("{} terms (frame {})", m.n_terms, m.frame_id),
            });
        }
    }
    Ok(first.n_terms)
}

/// Computes each pair's across-frame mean and std from a popularity series.
pub fn burst_stats(series: &[ScoreMatrix]) -> Result<BurstStats> {
    let n_terms = check_series(series)?;
    let t_count = series.len();
    let baselines: Vec<f64> = series.iter().map(|m| m.baseline).collect();
    let (baseline_mean, baseline_std) = series_stats(&baselines);

    let mut events: HashMap<(u32, u32), Vec<(usize, f64)>> = HashMap::new();
    for (t, m) in series.iter().enumerate() {
        for &(pair, v) in m.deviations() {
            events.entry(pair).or_default().push((t, v));
        }
    }

    let mut buf = vec![0.0f64; t_count];
    let mut pairs: Vec<((u32, u32), (f64, f64))> = events
        .into_iter()
        .map(|(pair, explicit)| {
            buf.copy_from_slice(&baselines);
            for (t, v) in explicit {
                buf[t] = v;
            }
            (pair, series_stats(&buf))
        })
        .collect();
    pairs.sort_by_key(|&(pair, _)| pair);

    Ok(BurstStats { n_terms, t_count, baseline_mean, baseline_std, pairs })
}

/// Standardizes one frame of the popularity series against precomputed
/// per-pair statistics. `frame` must be one of the matrices `stats` was
/// built from. Pairs with a constant series score 0.
pub fn burstiness_frame(frame: &ScoreMatrix, stats: &BurstStats) -> Result<ScoreMatrix> {
    if frame.n_terms != stats.n_terms {
        return Err(Error::ShapeMismatch {
            left: format!("{} terms", stats.n_terms),
            right: format!("{} terms (frame {})", frame.n_terms, frame.frame_id),
        });
    }
    let standardize = |v: f64, mean: f64, std: f64| if std > 0.0 { (v - mean) / std } else { 0.0 };
    let baseline = standardize(frame.baseline, stats.baseline_mean, stats.baseline_std);

    let devs = frame.deviations();
    let mut di = 0;
    let mut out = Vec::with_capacity(stats.pairs.len());
    for &(pair, (mean, std)) in &stats.pairs {
        if di < devs.len() && devs[di].0 < pair {
            return Err(Error::usage(format!(
                "frame {} holds pair {:?} unknown to the series statistics",
                frame.frame_id, devs[di].0
            )));
        }
        let v = if di < devs.len() && devs[di].0 == pair {
            let v = devs[di].1;
            di += 1;
            v
        } else {
            frame.baseline
        };
        out.push((pair, standardize(v, mean, std)));
    }
    if di < devs.len() {
        return Err(Error::usage(format!(
            "frame {} holds pair {:?} unknown to the series statistics",
            frame.frame_id, devs[di].0
        )));
    }
    ScoreMatrix::new(frame.frame_id, frame.n_terms, ScoreKind::Burstiness, baseline, out)
}

/// Standardizes every pair's popularity across the T frames of the series.
/// For each pair, mean and population std are taken over all T values,
/// frames where the pair sits at the baseline included; a constant series
/// (and any T = 1 series) yields 0.
pub fn burstiness(series: &[ScoreMatrix]) -> Result<Vec<ScoreMatrix>> {
    let stats = burst_stats(series)?;
    series.iter().map(|frame| burstiness_frame(frame, &stats)).collect()
}

/// Mixing weights for relevance. Both must be nonnegative and they may not
/// both be zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreWeights {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for ScoreWeights {
    fn default() -> Self {
        ScoreWeights { alpha: 0.5, beta: 0.5 }
    }
}

impl ScoreWeights {
    pub fn validate(&self) -> Result<()> {
        let ok = self.alpha >= 0.0
            && self.beta >= 0.0
            && self.alpha.is_finite()
            && self.beta.is_finite()
            && self.alpha + self.beta > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::usage(format!(
                "weights must be nonnegative and not both zero, got alpha={} beta={}",
                self.alpha, self.beta
            )))
        }
    }
}

/// Value-wise alpha*popularity + beta*burstiness, baselines included; the
/// stored deviations are the union of both inputs' explicit pairs.
pub fn relevance(pop: &ScoreMatrix, burst: &ScoreMatrix, w: &ScoreWeights) -> Result<ScoreMatrix> {
    w.validate()?;
    if pop.kind != ScoreKind::Popularity || burst.kind != ScoreKind::Burstiness {
        return Err(Error::usage(format!(
            "relevance takes (popularity, burstiness), got ({}, {})",
            pop.kind.as_str(),
            burst.kind.as_str()
        )));
    }
    if pop.frame_id != burst.frame_id || pop.n_terms != burst.n_terms {
        return Err(Error::ShapeMismatch {
            left: format!("popularity frame {} with {} terms", pop.frame_id, pop.n_terms),
            right: format!("burstiness frame {} with {} terms", burst.frame_id, burst.n_terms),
        });
    }
    let mix = |p: f64, b: f64| w.alpha * p + w.beta * b;
    let (pd, bd) = (pop.deviations(), burst.deviations());
    let mut out = Vec::with_capacity(pd.len().max(bd.len()));
    let (mut pi, mut bi) = (0, 0);
    while pi < pd.len() || bi < bd.len() {
        let (pair, p, b) = match (pd.get(pi), bd.get(bi)) {
            (Some(&(pp, pv)), Some(&(bp, bv))) => {
                if pp < bp {
                    pi += 1;
                    (pp, pv, burst.baseline)
                } else if bp < pp {
                    bi += 1;
                    (bp, pop.baseline, bv)
                } else {
                    pi += 1;
                    bi += 1;
                    (pp, pv, bv)
                }
            }
            (Some(&(pp, pv)), None) => {
                pi += 1;
                (pp, pv, burst.baseline)
            }
            (None, Some(&(bp, bv))) => {
                bi += 1;
                (bp, pop.baseline, bv)
            }
            (None, None) => unreachable!(),
        };
        out.push((pair, mix(p, b)));
    }
    ScoreMatrix::new(
        pop.frame_id,
        pop.n_terms,
        ScoreKind::Relevance,
        mix(pop.baseline, burst.baseline),
        out,
    )
}

/// Term pairs whose relevance reached the percentile threshold in one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjacencyGraph {
    pub frame_id: usize,
    pub n_terms: u32,
    /// Unordered pairs (i < j), ascending.
    pub edges: Vec<(u32, u32)>,
    pub threshold_value: f64,
}

/// Keeps the pairs whose value is >= the nearest-rank `percentile` of all
/// N(N-1)/2 candidate values (baselines included). The baseline's rank block
/// is located analytically, so the universe is never densified. Returns the
/// graph plus warnings for degenerate thresholds (all values equal, or a
/// threshold at or below the shared baseline, both of which keep every
/// candidate pair on the baseline side).
pub fn threshold_adjacency(
    rel: &ScoreMatrix,
    percentile: f64,
) -> Result<(AdjacencyGraph, Vec<String>)> {
    if !(0.0..100.0).contains(&percentile) {
        return Err(Error::usage(format!("percentile must be in [0, 100), got {percentile}")));
    }
    if rel.n_terms < 2 {
        return Err(Error::usage(format!("need at least 2 terms, got {}", rel.n_terms)));
    }
    let universe = rel.pair_universe();
    let explicit = rel.deviations();
    let outside = universe - explicit.len() as u64;

    let mut sorted: Vec<f64> = explicit.iter().map(|&(_, v)| v).collect();
    sorted.sort_by(f64::total_cmp);

    // Nearest-rank percentile: the k-th smallest value, 1-based.
    let k = ((percentile / 100.0 * universe as f64).floor() as u64 + 1).min(universe);
    let threshold = if outside == 0 {
        sorted[(k - 1) as usize]
    } else {
        let below = sorted.partition_point(|&v| v < rel.baseline) as u64;
        if k <= below {
            sorted[(k - 1) as usize]
        } else if k <= below + outside {
            rel.baseline
        } else {
            sorted[(k - 1 - outside) as usize]
        }
    };

    let mut warnings = Vec::new();
    let (min, max) = rel.candidate_min_max().expect("n_terms >= 2");
    let baseline_kept = outside > 0 && rel.baseline >= threshold;
    if min == max {
        warnings.push(format!(
            "frame {}: all candidate relevance values are equal; keeping every pair",
            rel.frame_id
        ));
    } else if baseline_kept {
        warnings.push(format!(
            "frame {}: threshold {} falls at or below the shared baseline; adjacency is dense",
            rel.frame_id, threshold
        ));
    }

    let mut edges = Vec::new();
    if baseline_kept {
        // Every pair qualifies unless it is explicit and below threshold.
        let mut di = 0;
        for i in 0..rel.n_terms {
            for j in (i + 1)..rel.n_terms {
                let mut keep = true;
                if di < explicit.len() && explicit[di].0 == (i, j) {
                    keep = explicit[di].1 >= threshold;
                    di += 1;
                }
                if keep {
                    edges.push((i, j));
                }
            }
        }
    } else {
        edges.extend(explicit.iter().filter(|&&(_, v)| v >= threshold).map(|&(pair, _)| pair));
    }

    Ok((
        AdjacencyGraph { frame_id: rel.frame_id, n_terms: rel.n_terms, edges, threshold_value: threshold },
        warnings,
    ))
}

// ---- file formats ----

/// Writes a score matrix as a text triplet file: one header line
/// `frame_id n_terms kind baseline nnz`, then one `i j value` line per
/// deviation in ascending (i, j) order.
pub fn write_score_triplets(matrix: &ScoreMatrix, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut emit = || -> std::io::Result<()> {
        writeln!(
            w,
            "{} {} {} {:?} {}",
            matrix.frame_id,
            matrix.n_terms,
            matrix.kind.as_str(),
            matrix.baseline,
            matrix.deviations.len()
        )?;
        for &((i, j), v) in &matrix.deviations {
            writeln!(w, "{i} {j} {v:?}")?;
        }
        w.flush()
    };
    emit().map_err(|e| Error::io(path, e))
}

/// Reads a score matrix written by [`write_score_triplets`].
pub fn read_score_triplets(path: &Path) -> Result<ScoreMatrix> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let bad = |msg: String| Error::data(format!("{}: {msg}", path.display()));

    let header = lines
        .next()
        .ok_or_else(|| bad("missing header".into()))?
        .map_err(|e| Error::io(path, e))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 5 {
        return Err(bad(format!("header must have 5 fields, got {}", fields.len())));
    }
    let frame_id: usize = fields[0].parse().map_err(|_| bad("bad frame_id".into()))?;
    let n_terms: u32 = fields[1].parse().map_err(|_| bad("bad n_terms".into()))?;
    let kind = ScoreKind::parse(fields[2]).ok_or_else(|| bad(format!("bad kind {:?}", fields[2])))?;
    let baseline: f64 = fields[3].parse().map_err(|_| bad("bad baseline".into()))?;
    let nnz: usize = fields[4].parse().map_err(|_| bad("bad nnz".into()))?;

    let mut deviations = Vec::new();
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
        let v: f64 = fields[2].parse().map_err(|_| bad(format!("line {row}: bad value")))?;
        if let Some(prev) = last {
            if prev >= (i, j) {
                return Err(bad(format!("line {row}: entries not sorted by (i, j)")));
            }
        }
        last = Some((i, j));
        deviations.push(((i, j), v));
    }
    if deviations.len() != nnz {
        return Err(bad(format!("header promises nnz {nnz}, found {}", deviations.len())));
    }
    ScoreMatrix::new(frame_id, n_terms, kind, baseline, deviations).map_err(|e| match e {
        Error::Data(msg) => bad(msg),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    fn cooc(n_terms: u32, doc_count: u64, entries: &[((u32, u32), u64)]) -> CoocMatrix {
        CoocMatrix {
            frame_id: 0,
            n_terms,
            doc_count,
            entries: entries.iter().copied().collect::<BTreeMap<_, _>>(),
        }
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    // ---- popularity ----

    #[test]
    fn popularity_matches_hand_computed_values() {
        // mu = 2, sigma = sqrt(2) over counts {4, 1, 1}.
        let m = popularity(&cooc(3, 10, &[((0, 1), 4), ((0, 2), 1), ((1, 2), 1)])).unwrap();
        let s = std::f64::consts::SQRT_2;
        assert!(close(m.value(0, 1), s, 1e-12));
        assert!(close(m.value(0, 2), -s / 2.0, 1e-12));
        assert!(close(m.value(1, 2), -s / 2.0, 1e-12));
        assert!(close(m.baseline, -s, 1e-12));
        assert_eq!(m.kind, ScoreKind::Popularity);
    }

    #[test]
    fn popularity_empty_frame_is_all_zero() {
        let m = popularity(&cooc(4, 0, &[])).unwrap();
        assert_eq!(m.baseline, 0.0);
        assert!(m.deviations().is_empty());
        assert_eq!(m.value(1, 3), 0.0);
    }

    #[test]
    fn popularity_uniform_counts_are_all_zero() {
        let m = popularity(&cooc(3, 5, &[((0, 1), 2), ((0, 2), 2), ((1, 2), 2)])).unwrap();
        assert_eq!(m.baseline, 0.0);
        assert!(m.deviations().is_empty());
    }

    #[test]
    fn popularity_zscore_identities() {
        let m = popularity(&cooc(6, 40, &[((0, 1), 7), ((0, 3), 2), ((2, 4), 1), ((1, 5), 11)]))
            .unwrap();
        let n = m.n_terms;
        let mut values = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                values.push(m.value(i, j));
            }
        }
        let count = values.len() as f64;
        let mean = values.iter().sum::<f64>() / count;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / count;
        assert!(close(mean, 0.0, 1e-9), "mean {mean}");
        assert!(close(var.sqrt(), 1.0, 1e-9), "std {}", var.sqrt());
    }

    #[test]
    fn popularity_rejects_single_term() {
        assert!(matches!(popularity(&cooc(1, 0, &[])), Err(Error::Usage(_))));
    }

    // ---- burstiness ----

    fn pop_matrix(frame_id: usize, n: u32, baseline: f64, devs: &[((u32, u32), f64)]) -> ScoreMatrix {
        ScoreMatrix::new(frame_id, n, ScoreKind::Popularity, baseline, devs.to_vec()).unwrap()
    }

    #[test]
    fn burstiness_matches_hand_computed_series() {
        // Pair (0, 1) has popularity series (0, 0, 3): mu = 1, sigma = sqrt(2).
        let series = vec![
            pop_matrix(0, 3, 0.0, &[]),
            pop_matrix(1, 3, 0.0, &[]),
            pop_matrix(2, 3, 0.0, &[((0, 1), 3.0)]),
        ];
        let out = burstiness(&series).unwrap();
        let s = std::f64::consts::SQRT_2;
        assert!(close(out[2].value(0, 1), s, 1e-12));
        assert!(close(out[0].value(0, 1), -s / 2.0, 1e-12));
        assert!(close(out[1].value(0, 1), -s / 2.0, 1e-12));
        // A pair never explicit rides the constant baseline series.
        assert_eq!(out[0].value(0, 2), 0.0);
        assert_eq!(out[2].value(0, 2), 0.0);
        assert_eq!(out[2].kind, ScoreKind::Burstiness);
        assert_eq!(out[2].frame_id, 2);
    }

    #[test]
    fn burstiness_constant_series_is_zero() {
        let series = vec![
            pop_matrix(0, 3, 1.0, &[((0, 1), 2.0)]),
            pop_matrix(1, 3, 1.0, &[((0, 1), 2.0)]),
            pop_matrix(2, 3, 1.0, &[((0, 1), 2.0)]),
        ];
        let out = burstiness(&series).unwrap();
        for m in &out {
            assert_eq!(m.value(0, 1), 0.0);
            assert_eq!(m.value(1, 2), 0.0);
            assert_eq!(m.baseline, 0.0);
        }
    }

    #[test]
    fn burstiness_single_frame_is_zero() {
        let series = vec![pop_matrix(0, 3, -0.5, &[((0, 1), 2.0)])];
        let out = burstiness(&series).unwrap();
        assert_eq!(out[0].value(0, 1), 0.0);
        assert_eq!(out[0].value(1, 2), 0.0);
    }

    #[test]
    fn burstiness_baseline_pattern_is_standardized() {
        // Baselines (-1, 0, 2); a never-explicit pair scores their z-scores.
        let series = vec![
            pop_matrix(0, 4, -1.0, &[((0, 1), 5.0)]),
            pop_matrix(1, 4, 0.0, &[]),
            pop_matrix(2, 4, 2.0, &[]),
        ];
        let out = burstiness(&series).unwrap();
        let mean = (-1.0 + 0.0 + 2.0) / 3.0;
        let var: f64 =
            ((-1.0 - mean) * (-1.0 - mean) + mean * mean + (2.0 - mean) * (2.0 - mean)) / 3.0;
        let std = var.sqrt();
        for t in 0..3 {
            let expect = (series[t].baseline - mean) / std;
            assert!(close(out[t].value(2, 3), expect, 1e-12), "frame {t}");
        }
    }

    #[test]
    fn burstiness_rejects_mismatched_shapes() {
        let series = vec![pop_matrix(0, 3, 0.0, &[]), pop_matrix(1, 4, 0.0, &[])];
        assert!(matches!(burstiness(&series), Err(Error::ShapeMismatch { .. })));
        assert!(matches!(burstiness(&[]), Err(Error::Usage(_))));
    }

    #[test]
    fn burstiness_frame_rejects_foreign_pairs() {
        let series = vec![pop_matrix(0, 3, 0.0, &[((0, 1), 1.0)]), pop_matrix(1, 3, 0.0, &[])];
        let stats = burst_stats(&series).unwrap();
        let foreign = pop_matrix(0, 3, 0.0, &[((1, 2), 1.0)]);
        assert!(burstiness_frame(&foreign, &stats).is_err());
    }

    // ---- relevance ----

    fn burst_matrix(frame_id: usize, n: u32, baseline: f64, devs: &[((u32, u32), f64)]) -> ScoreMatrix {
        ScoreMatrix::new(frame_id, n, ScoreKind::Burstiness, baseline, devs.to_vec()).unwrap()
    }

    #[test]
    fn relevance_alpha_only_equals_popularity() {
        let pop = pop_matrix(2, 4, -0.4, &[((0, 1), 1.5), ((2, 3), -2.0)]);
        let burst = burst_matrix(2, 4, 9.0, &[((1, 2), 4.0)]);
        let r = relevance(&pop, &burst, &ScoreWeights { alpha: 1.0, beta: 0.0 }).unwrap();
        for i in 0..4 {
            for j in (i + 1)..4 {
                assert_eq!(r.value(i, j), pop.value(i, j));
            }
        }
        assert_eq!(r.kind, ScoreKind::Relevance);
    }

    #[test]
    fn relevance_means_the_two_scores() {
        let pop = pop_matrix(0, 2, 0.0, &[((0, 1), 2.0)]);
        let burst = burst_matrix(0, 2, 0.0, &[((0, 1), 4.0)]);
        let r = relevance(&pop, &burst, &ScoreWeights::default()).unwrap();
        assert!(close(r.value(0, 1), 3.0, 1e-12));
    }

    #[test]
    fn relevance_unions_deviations_and_mixes_baselines() {
        let pop = pop_matrix(0, 3, -1.0, &[((0, 1), 2.0)]);
        let burst = burst_matrix(0, 3, 3.0, &[((1, 2), 5.0)]);
        let w = ScoreWeights { alpha: 0.5, beta: 0.5 };
        let r = relevance(&pop, &burst, &w).unwrap();
        assert_eq!(r.deviations().len(), 2);
        assert!(close(r.value(0, 1), 0.5 * 2.0 + 0.5 * 3.0, 1e-12));
        assert!(close(r.value(1, 2), 0.5 * -1.0 + 0.5 * 5.0, 1e-12));
        assert!(close(r.value(0, 2), 0.5 * -1.0 + 0.5 * 3.0, 1e-12));
        assert!(close(r.baseline, 1.0, 1e-12));
    }

    #[test]
    fn relevance_rejects_bad_weights() {
        let pop = pop_matrix(0, 2, 0.0, &[]);
        let burst = burst_matrix(0, 2, 0.0, &[]);
        for w in [
            ScoreWeights { alpha: 0.0, beta: 0.0 },
            ScoreWeights { alpha: -0.1, beta: 0.5 },
            ScoreWeights { alpha: f64::NAN, beta: 0.5 },
        ] {
            assert!(relevance(&pop, &burst, &w).is_err(), "{w:?}");
        }
    }

    #[test]
    fn relevance_rejects_shape_and_kind_mismatches() {
        let pop = pop_matrix(0, 3, 0.0, &[]);
        let w = ScoreWeights::default();
        assert!(matches!(
            relevance(&pop, &burst_matrix(1, 3, 0.0, &[]), &w),
            Err(Error::ShapeMismatch { .. })
        ));
        assert!(matches!(
            relevance(&pop, &burst_matrix(0, 4, 0.0, &[]), &w),
            Err(Error::ShapeMismatch { .. })
        ));
        assert!(relevance(&pop, &pop, &w).is_err());
    }

    // ---- thresholding ----

    fn rel_matrix(n: u32, baseline: f64, devs: &[((u32, u32), f64)]) -> ScoreMatrix {
        ScoreMatrix::new(0, n, ScoreKind::Relevance, baseline, devs.to_vec()).unwrap()
    }

    /// All candidate values, densified.
    fn densify(rel: &ScoreMatrix) -> Vec<f64> {
        let mut out = Vec::new();
        for i in 0..rel.n_terms {
            for j in (i + 1)..rel.n_terms {
                out.push(rel.value(i, j));
            }
        }
        out
    }

    #[test]
    fn threshold_keeps_top_percentile_of_distinct_values() {
        // 210 distinct values; q = 99 keeps ranks 208..210.
        let mut devs = Vec::new();
        let mut id = 0;
        for i in 0..21u32 {
            for j in (i + 1)..21 {
                devs.push(((i, j), id as f64 * 0.5));
                id += 1;
            }
        }
        let rel = rel_matrix(21, 0.0, &devs);
        let (graph, warnings) = threshold_adjacency(&rel, 99.0).unwrap();
        assert!(warnings.is_empty());
        assert_eq!(graph.edges.len(), 3);
        let mut sorted = densify(&rel);
        sorted.sort_by(f64::total_cmp);
        assert_eq!(graph.threshold_value, sorted[207]);
        assert!(graph.edges.iter().all(|&(i, j)| rel.value(i, j) >= graph.threshold_value));
    }

    #[test]
    fn threshold_all_equal_keeps_everything_and_warns() {
        let rel = rel_matrix(3, 0.0, &[]);
        let (graph, warnings) = threshold_adjacency(&rel, 99.0).unwrap();
        assert_eq!(graph.edges.len(), 3);
        assert!(warnings.iter().any(|w| w.contains("equal")), "{warnings:?}");
    }

    #[test]
    fn threshold_zero_percentile_keeps_everything() {
        let rel = rel_matrix(3, -1.0, &[((0, 1), 4.0), ((1, 2), -9.0)]);
        let (graph, _) = threshold_adjacency(&rel, 0.0).unwrap();
        assert_eq!(graph.edges.len(), 3);
    }

    #[test]
    fn threshold_lands_inside_baseline_block() {
        // Candidates: -5, 1, 1, 1, 1, 5 (baseline 1 four times).
        let rel = rel_matrix(4, 1.0, &[((0, 1), 5.0), ((2, 3), -5.0)]);
        let (graph, warnings) = threshold_adjacency(&rel, 50.0).unwrap();
        assert_eq!(graph.threshold_value, 1.0);
        assert_eq!(graph.edges.len(), 5);
        assert!(warnings.iter().any(|w| w.contains("dense")), "{warnings:?}");
        let (graph, warnings) = threshold_adjacency(&rel, 90.0).unwrap();
        assert_eq!(graph.threshold_value, 5.0);
        assert_eq!(graph.edges, vec![(0, 1)]);
        assert!(warnings.is_empty());
    }

    #[test]
    fn threshold_rejects_bad_percentiles() {
        let rel = rel_matrix(3, 0.0, &[]);
        for q in [100.0, -0.5, f64::NAN] {
            assert!(matches!(threshold_adjacency(&rel, q), Err(Error::Usage(_))), "{q}");
        }
    }

    // ---- persistence ----

    #[test]
    fn score_triplets_round_trip() {
        let m = pop_matrix(3, 5, -0.7071067811865476, &[((0, 4), 1.5), ((2, 3), -0.1)]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scores.txt");
        write_score_triplets(&m, &path).unwrap();
        assert_eq!(read_score_triplets(&path).unwrap(), m);
    }

    #[test]
    fn score_triplets_reject_malformed_files() {
        let dir = tempfile::tempdir().unwrap();
        let cases = [
            ("bad-kind", "0 3 sideways 0.0 0\n"),
            ("unsorted", "0 3 relevance 0.0 2\n1 2 1.0\n0 1 1.0\n"),
            ("diagonal", "0 3 relevance 0.0 1\n1 1 1.0\n"),
            ("nnz-mismatch", "0 3 relevance 0.0 2\n0 1 1.0\n"),
            ("non-finite", "0 3 relevance 0.0 1\n0 1 inf\n"),
        ];
        for (name, contents) in cases {
            let path = dir.path().join(name);
            std::fs::write(&path, contents).unwrap();
            assert!(read_score_triplets(&path).is_err(), "{name} should be rejected");
        }
    }

    // ---- properties ----

    fn arb_cooc() -> impl Strategy<Value = CoocMatrix> {
        (2u32..12, 1u64..30).prop_flat_map(|(n, doc_count)| {
            let universe: Vec<(u32, u32)> =
                (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
            proptest::sample::subsequence(universe.clone(), 0..=universe.len().min(20))
                .prop_flat_map(move |pairs| {
                    let counts = proptest::collection::vec(1..=doc_count, pairs.len());
                    (Just(pairs), counts, Just(n), Just(doc_count))
                })
                .prop_map(|(pairs, counts, n, doc_count)| CoocMatrix {
                    frame_id: 0,
                    n_terms: n,
                    doc_count,
                    entries: pairs.into_iter().zip(counts).collect(),
                })
        })
    }

    fn arb_score(kind: ScoreKind) -> impl Strategy<Value = ScoreMatrix> {
        (2u32..10).prop_flat_map(move |n| {
            let universe: Vec<(u32, u32)> =
                (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
            let len = universe.len();
            (
                proptest::sample::subsequence(universe, 0..=len),
                -3.0..3.0f64,
            )
                .prop_flat_map(move |(pairs, baseline)| {
                    let values = proptest::collection::vec(-5.0..5.0f64, pairs.len());
                    (Just(pairs), values, Just(baseline))
                })
                .prop_map(move |(pairs, values, baseline)| {
                    ScoreMatrix::new(0, n, kind, baseline, pairs.into_iter().zip(values).collect())
                        .unwrap()
                })
        })
    }

    proptest! {
        #[test]
        fn popularity_identities_hold(cooc in arb_cooc()) {
            let m = popularity(&cooc).unwrap();
            let values = densify(&m);
            let count = values.len() as f64;
            let mean = values.iter().sum::<f64>() / count;
            prop_assert!(mean.abs() <= 1e-9, "mean {mean}");
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / count;
            let distinct = values.iter().any(|&v| v != values[0]);
            if distinct {
                prop_assert!((var.sqrt() - 1.0).abs() <= 1e-9, "std {}", var.sqrt());
            } else {
                prop_assert!(values.iter().all(|&v| v == 0.0));
            }
        }

        #[test]
        fn popularity_is_count_scale_invariant(cooc in arb_cooc(), scale in 2u64..6) {
            let scaled = CoocMatrix {
                entries: cooc.entries.iter().map(|(&p, &c)| (p, c * scale)).collect(),
                ..cooc.clone()
            };
            let (a, b) = (popularity(&cooc).unwrap(), popularity(&scaled).unwrap());
            prop_assert!((a.baseline - b.baseline).abs() <= 1e-12);
            for (x, y) in a.deviations().iter().zip(b.deviations()) {
                prop_assert_eq!(x.0, y.0);
                prop_assert!((x.1 - y.1).abs() <= 1e-12);
            }
            // Hence adjacency for alpha = 1, beta = 0 is unchanged.
            let w = ScoreWeights { alpha: 1.0, beta: 0.0 };
            let zero_burst = burstiness(&[a.clone()]).unwrap().remove(0);
            let ra = relevance(&a, &zero_burst, &w).unwrap();
            let zb = burstiness(&[b.clone()]).unwrap().remove(0);
            let rb = relevance(&b, &zb, &w).unwrap();
            let (ga, _) = threshold_adjacency(&ra, 75.0).unwrap();
            let (gb, _) = threshold_adjacency(&rb, 75.0).unwrap();
            prop_assert_eq!(ga.edges, gb.edges);
        }

        #[test]
        fn threshold_matches_sort_oracle(
            rel in arb_score(ScoreKind::Relevance),
            q in 0.0..100.0f64,
        ) {
            let (graph, _) = threshold_adjacency(&rel, q).unwrap();
            let mut values = densify(&rel);
            values.sort_by(f64::total_cmp);
            let universe = values.len();
            let k = ((q / 100.0 * universe as f64).floor() as usize + 1).min(universe);
            let threshold = values[k - 1];
            prop_assert_eq!(graph.threshold_value, threshold);
            let mut expected = Vec::new();
            for i in 0..rel.n_terms {
                for j in (i + 1)..rel.n_terms {
                    if rel.value(i, j) >= threshold {
                        expected.push((i, j));
                    }
                }
            }
            prop_assert_eq!(&graph.edges, &expected);
            // Edge-count bound implied by the nearest-rank definition.
            let ties = values.iter().filter(|&&v| v == threshold).count();
            let bound = ((1.0 - q / 100.0) * universe as f64).ceil() as usize + ties;
            prop_assert!(graph.edges.len() <= bound);
        }

        #[test]
        fn relevance_is_linear_in_the_weights(
            pop in arb_score(ScoreKind::Popularity),
            burst_values in proptest::collection::vec(-5.0..5.0f64, 0..30),
            a1 in 0.01..2.0f64, b1 in 0.01..2.0f64,
            a2 in 0.01..2.0f64, b2 in 0.01..2.0f64,
        ) {
            let n = pop.n_terms;
            let universe: Vec<(u32, u32)> =
                (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
            let devs: Vec<((u32, u32), f64)> = universe
                .into_iter()
                .zip(burst_values)
                .collect();
            let burst = ScoreMatrix::new(0, n, ScoreKind::Burstiness, 0.25, devs).unwrap();
            let r1 = relevance(&pop, &burst, &ScoreWeights { alpha: a1, beta: b1 }).unwrap();
            let r2 = relevance(&pop, &burst, &ScoreWeights { alpha: a2, beta: b2 }).unwrap();
            let r12 =
                relevance(&pop, &burst, &ScoreWeights { alpha: a1 + a2, beta: b1 + b2 }).unwrap();
            for i in 0..n {
                for j in (i + 1)..n {
                    let sum = r1.value(i, j) + r2.value(i, j);
                    prop_assert!((sum - r12.value(i, j)).abs() <= 1e-12);
                }
            }
        }

        #[test]
        fn burstiness_matches_per_pair_oracle(
            seed_matrices in proptest::collection::vec(arb_score(ScoreKind::Popularity), 1..5),
        ) {
            // Rebuild on a common shape: reuse the first matrix's n_terms.
            let n = seed_matrices[0].n_terms;
            let series: Vec<ScoreMatrix> = seed_matrices
                .iter()
                .enumerate()
                .map(|(t, m)| {
                    let devs: Vec<_> = m
                        .deviations()
                        .iter()
                        .filter(|&&((i, j), _)| i < n && j < n)
                        .copied()
                        .collect();
                    ScoreMatrix::new(t, n, ScoreKind::Popularity, m.baseline, devs).unwrap()
                })
                .collect();
            let out = burstiness(&series).unwrap();
            let t_count = series.len() as f64;
            for i in 0..n {
                for j in (i + 1)..n {
                    let vals: Vec<f64> = series.iter().map(|m| m.value(i, j)).collect();
                    let mean = vals.iter().sum::<f64>() / t_count;
                    let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / t_count;
                    let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
                    let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    for (t, m) in out.iter().enumerate() {
                        let expect = if min == max { 0.0 } else { (vals[t] - mean) / var.sqrt() };
                        prop_assert!(
                            (m.value(i, j) - expect).abs() <= 1e-12,
                            "pair ({i}, {j}) frame {t}: {} vs {expect}",
                            m.value(i, j)
                        );
                    }
                }
            }
        }
    }
}
