//! Topic clusters: connected components of a thresholded adjacency graph,
//! per-cluster metrics averaged over the cluster's edges, ranking, and the
//! CSV report files.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::classify::InfluenceClass;
use crate::error::{Error, Result};
use crate::graph::Vocabulary;
use crate::score::{AdjacencyGraph, ScoreKind, ScoreMatrix};

/// A connected set of >= 2 terms with its edge-averaged metrics.
/// `rel_*` fields divide the metric by cluster size.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicCluster {
    pub frame_id: usize,
    pub granularity_days: u32,
    pub user_class: InfluenceClass,
    /// Ascending vocabulary indices.
    pub term_ids: Vec<u32>,
    pub popularity: f64,
    pub burstiness: f64,
    pub score: f64,
    pub rel_popularity: f64,
    pub rel_burstiness: f64,
    pub rel_score: f64,
}

impl TopicCluster {
    pub fn size(&self) -> usize {
        self.term_ids.len()
    }

    fn smallest_term(&self) -> u32 {
        self.term_ids[0]
    }
}

struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    fn new(n: u32) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let grand = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grand;
            x = grand;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Anchor on the smaller root so component labels are stable.
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi as usize] = lo;
        }
    }
}

/// Maximal connected sets over the adjacency's edge-incident terms.
/// Isolated terms are excluded. Each component lists its terms ascending;
/// the list of components is ordered by smallest member.
pub fn connected_components(adj: &AdjacencyGraph) -> Vec<Vec<u32>> {
    let mut uf = UnionFind::new(adj.n_terms);
    let mut incident = vec![false; adj.n_terms as usize];
    for &(i, j) in &adj.edges {
        uf.union(i, j);
        incident[i as usize] = true;
        incident[j as usize] = true;
    }
    let mut by_root: HashMap<u32, Vec<u32>> = HashMap::new();
    for t in 0..adj.n_terms {
        if incident[t as usize] {
            by_root.entry(uf.find(t)).or_default().push(t);
        }
    }
    // Terms were visited ascending, so each component is sorted and its
    // first element is its smallest member.
    let mut components: Vec<Vec<u32>> = by_root.into_values().collect();
    components.sort_by_key(|c| c[0]);
    components
}

fn check_frame(adj: &AdjacencyGraph, m: &ScoreMatrix, kind: ScoreKind) -> Result<()> {
    if m.kind != kind {
        return Err(Error::usage(format!("expected a {} matrix, got {}", kind.as_str(), m.kind.as_str())));
    }
    if m.frame_id != adj.frame_id || m.n_terms != adj.n_terms {
        return Err(Error::ShapeMismatch {
            left: format!("adjacency frame {} with {} terms", adj.frame_id, adj.n_terms),
            right: format!("{} frame {} with {} terms", m.kind.as_str(), m.frame_id, m.n_terms),
        });
    }
    Ok(())
}

struct EdgeSums {
    edges: u64,
    popularity: f64,
    burstiness: f64,
    score: f64,
}

fn finish_cluster(
    terms: Vec<u32>,
    sums: &EdgeSums,
    frame_id: usize,
    granularity_days: u32,
    user_class: InfluenceClass,
) -> Result<TopicCluster> {
    if terms.len() < 2 {
        return Err(Error::ClusterTooSmall { size: terms.len() });
    }
    if sums.edges == 0 {
        return Err(Error::usage("component has no adjacency edges"));
    }
    let e = sums.edges as f64;
    let size = terms.len() as f64;
    let (popularity, burstiness, score) =
        (sums.popularity / e, sums.burstiness / e, sums.score / e);
    Ok(TopicCluster {
        frame_id,
        granularity_days,
        user_class,
        term_ids: terms,
        popularity,
        burstiness,
        score,
        rel_popularity: popularity / size,
        rel_burstiness: burstiness / size,
        rel_score: score / size,
    })
}

/// Metrics for one component: popularity, burstiness, and score are means
/// over the component's adjacency edges only, not over all intra-cluster
/// pairs; relative metrics divide by the term count.
pub fn cluster_metrics(
    component: &[u32],
    adj: &AdjacencyGraph,
    pop: &ScoreMatrix,
    burst: &ScoreMatrix,
    rel: &ScoreMatrix,
    granularity_days: u32,
    user_class: InfluenceClass,
) -> Result<TopicCluster> {
    if component.len() < 2 {
        return Err(Error::ClusterTooSmall { size: component.len() });
    }
    check_frame(adj, pop, ScoreKind::Popularity)?;
    check_frame(adj, burst, ScoreKind::Burstiness)?;
    check_frame(adj, rel, ScoreKind::Relevance)?;
    let members: std::collections::HashSet<u32> = component.iter().copied().collect();
    let mut sums = EdgeSums { edges: 0, popularity: 0.0, burstiness: 0.0, score: 0.0 };
    for &(i, j) in &adj.edges {
        if members.contains(&i) && members.contains(&j) {
            sums.edges += 1;
            sums.popularity += pop.value(i, j);
            sums.burstiness += burst.value(i, j);
            sums.score += rel.value(i, j);
        }
    }
    let mut terms: Vec<u32> = component.to_vec();
    terms.sort_unstable();
    finish_cluster(terms, &sums, adj.frame_id, granularity_days, user_class)
}

/// All clusters of one frame in a single pass over the edges: connected
/// components plus their metrics. Component order matches
/// [`connected_components`].
pub fn frame_clusters(
    adj: &AdjacencyGraph,
    pop: &ScoreMatrix,
    burst: &ScoreMatrix,
    rel: &ScoreMatrix,
    granularity_days: u32,
    user_class: InfluenceClass,
) -> Result<Vec<TopicCluster>> {
    check_frame(adj, pop, ScoreKind::Popularity)?;
    check_frame(adj, burst, ScoreKind::Burstiness)?;
    check_frame(adj, rel, ScoreKind::Relevance)?;
    let components = connected_components(adj);
    let mut of_term: HashMap<u32, usize> = HashMap::new();
    for (c, terms) in components.iter().enumerate() {
        for &t in terms {
            of_term.insert(t, c);
        }
    }
    let mut sums: Vec<EdgeSums> = components
        .iter()
        .map(|_| EdgeSums { edges: 0, popularity: 0.0, burstiness: 0.0, score: 0.0 })
        .collect();
    for &(i, j) in &adj.edges {
        // Both endpoints always land in the same component.
        let c = of_term[&i];
        let s = &mut sums[c];
        s.edges += 1;
        s.popularity += pop.value(i, j);
        s.burstiness += burst.value(i, j);
        s.score += rel.value(i, j);
    }
    components
        .into_iter()
        .zip(&sums)
        .map(|(terms, s)| finish_cluster(terms, s, adj.frame_id, granularity_days, user_class))
        .collect()
}

/// Ranks by rel_score descending, ties by size descending, then smallest
/// term id ascending; the sort is stable, so fully tied clusters keep their
/// input order. Truncates to `k`.
pub fn top_clusters(mut clusters: Vec<TopicCluster>, k: usize) -> Result<Vec<TopicCluster>> {
    if k < 1 {
        return Err(Error::usage("k must be at least 1"));
    }
    clusters.sort_by(|a, b| {
        b.rel_score
            .total_cmp(&a.rel_score)
            .then_with(|| b.size().cmp(&a.size()))
            .then_with(|| a.smallest_term().cmp(&b.smallest_term()))
    });
    clusters.truncate(k);
    Ok(clusters)
}

/// Report order: granularity ascending, then class label ascending
/// (IDI before MDI), preserving the within-group ranking.
fn report_sorted(clusters: &[TopicCluster]) -> Vec<&TopicCluster> {
    let mut rows: Vec<&TopicCluster> = clusters.iter().collect();
    rows.sort_by_key(|c| (c.granularity_days, c.user_class.as_str()));
    rows
}

/// Rank of each row within its (granularity, class) group, 1-based, in the
/// order the rows arrive.
fn group_ranks(rows: &[&TopicCluster]) -> Vec<usize> {
    let mut next: HashMap<(u32, &str), usize> = HashMap::new();
    rows.iter()
        .map(|c| {
            let slot = next.entry((c.granularity_days, c.user_class.as_str())).or_insert(0);
            *slot += 1;
            *slot
        })
        .collect()
}

/// Writes `clusters.csv` (one row per cluster with metrics and the
/// semicolon-joined member terms) and `scatter.csv` (log10-transformed
/// relative metrics for plotting; the positivity shift is recorded in a
/// leading `# shift=` comment). Clusters must arrive ranked within each
/// (granularity, class) group, as [`top_clusters`] returns them. Returns
/// the two file paths.
pub fn emit_report(
    clusters: &[TopicCluster],
    vocab: &Vocabulary,
    out_dir: &Path,
) -> Result<(PathBuf, PathBuf)> {
    let rows = report_sorted(clusters);
    let ranks = group_ranks(&rows);

    let mut clusters_csv = String::from(
        "granularity_days,frame_id,user_class,cluster_rank,size,popularity,burstiness,score,\
         rel_popularity,rel_burstiness,rel_score,terms\n",
    );
    for (c, rank) in rows.iter().zip(&ranks) {
        let terms: Vec<&str> = c.term_ids.iter().map(|&t| vocab.term(t)).collect();
        writeln!(
            clusters_csv,
            "{},{},{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{}",
            c.granularity_days,
            c.frame_id,
            c.user_class.as_str(),
            rank,
            c.size(),
            c.popularity,
            c.burstiness,
            c.score,
            c.rel_popularity,
            c.rel_burstiness,
            c.rel_score,
            terms.join(";")
        )
        .expect("string write");
    }

    // One shift covers both columns so the two axes stay comparable.
    let min = rows
        .iter()
        .flat_map(|c| [c.rel_popularity, c.rel_burstiness])
        .fold(f64::INFINITY, f64::min);
    let shift = if min.is_finite() && min <= 0.0 { 1.0 - min } else { 0.0 };
    let mut scatter_csv = format!("# shift={shift:.6}\n");
    scatter_csv.push_str("user_class,granularity,log10_rel_popularity,log10_rel_burstiness,size\n");
    for c in &rows {
        writeln!(
            scatter_csv,
            "{},{},{:.6},{:.6},{}",
            c.user_class.as_str(),
            c.granularity_days,
            (c.rel_popularity + shift).log10(),
            (c.rel_burstiness + shift).log10(),
            c.size()
        )
        .expect("string write");
    }

    let clusters_path = out_dir.join("clusters.csv");
    let scatter_path = out_dir.join("scatter.csv");
    std::fs::write(&clusters_path, clusters_csv).map_err(|e| Error::io(&clusters_path, e))?;
    std::fs::write(&scatter_path, scatter_csv).map_err(|e| Error::io(&scatter_path, e))?;
    Ok((clusters_path, scatter_path))
}
